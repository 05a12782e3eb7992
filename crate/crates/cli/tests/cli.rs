use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn carefree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carefree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_leaf_fixed_point_agrees() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "leaf.mso", "!exists y. E(x,y)\n");
    let o = carefree(&["check", "--formula", &f, "--max-nodes", "6", "--stage", "fixed-point"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("cases\t57384"), "{out}");
    assert!(out.contains("disagree\t0"));
    assert!(out.contains("neither\t0"));
}

#[test]
fn check_gml_final_agrees_without_warning() {
    let o = carefree(&["check", "--gml", "dia>=2 p", "--stage", "final", "--max-nodes", "6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("disagree\t0"));
    assert!(!stderr(&o).contains("graded modal"));
}

#[test]
fn final_stage_on_mso_input_warns() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "leaf.mso", "!exists y. E(x,y)");
    let o = carefree(&["compile", "--formula", &f, "--stage", "final"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("graded modal"));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("fixed-point\t")));
    assert!(out.lines().any(|l| l.starts_with("final\t")));
}

#[test]
fn swapped_verdicts_exit_1_with_counterexample() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "leaf.mso", "!exists y. E(x,y)");
    let out = dir.path().join("report");
    let o = carefree(&[
        "check",
        "--formula",
        &f,
        "--max-nodes",
        "3",
        "--swap-verdicts",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let line = stdout(&o).lines().find(|l| l.starts_with("counterexample")).unwrap().to_string();
    // the counterexample tree is replayable
    let tree = line.split('\t').nth(3).unwrap();
    let t = write(&dir, "cex.tree", tree);
    let replay = carefree(&["run", "--formula", &f, "--tree", &t]);
    assert!(replay.status.success(), "{}", stderr(&replay));
    assert!(Path::new(&out.join("report.tsv")).exists());
}

#[test]
fn syntax_error_exits_2_with_position() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.mso", "exists y.\n  (E(x,y) & )");
    let o = carefree(&["compile", "--formula", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn state_budget_exits_3() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "leaf.mso", "!exists y. E(x,y)");
    let o = carefree(&["check", "--formula", &f, "--max-nodes", "3", "--state-budget", "3", "--minimize-budget", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn atomic_trace_reaches_positive_state_in_round_1() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.tree", "({} ({P,y}))");
    let o = carefree(&["run", "--atomic", "P(y)", "--tree", &t]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("round\tnode\tstate_debug_name\n"));
    assert!(out.contains("\n0\t0\tq[!P(y)]\n"));
    assert!(out.contains("\n1\t0\tq[P(y)]\n"));

    let o = carefree(&["run", "--atomic", "P(y)", "--tree", &t, "--max-rounds", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().skip(1).all(|l| l.starts_with("0\t")));
}

#[test]
fn embedded_trace_has_one_hot_states() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.tree", "({} ({} ({p})) ({}))");
    let o = carefree(&["run", "--gml", "dia>=1 p", "--stage", "final", "--tree", &t, "--embed"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let plain = carefree(&["run", "--gml", "dia>=1 p", "--stage", "final", "--tree", &t]);
    let out = stdout(&o);
    assert!(out.starts_with("round\tnode\tvector\n"));
    // one row per (round, node) in both traces
    assert_eq!(out.lines().count(), stdout(&plain).lines().count());
}

#[test]
fn fuzz_is_reproducible() {
    let a = carefree(&["fuzz", "--seed", "3", "--cases", "100", "--max-nodes", "5"]);
    let b = carefree(&["fuzz", "--seed", "3", "--cases", "100", "--max-nodes", "5"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let o = carefree(&["fuzz", "--property", "run-set-equality", "--max-nodes", "5", "--cases", "30"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("run-set-equality\t30 cases\t0 failed"));
}

#[test]
fn gmsc_trace_and_check() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "prop.gmsc", "X(0) :- p; X :- dia>=1 X; appointed: X;");
    let t = write(&dir, "t.tree", "({} ({p}))");
    let o = carefree(&["gmsc", "--program", &p, "--tree", &t]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("\n1\t0\tX\n"));
    assert!(out.ends_with("accepts\ttrue\n"));
    let o = carefree(&["gmsc", "--program", &p, "--max-nodes", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("disagree\t0"));
}

#[test]
fn gnn_config_runs_and_warns_on_rounding() {
    let dir = TempDir::new().unwrap();
    let c = write(
        &dir,
        "reach.json",
        r#"{"system": [4, 2, 2], "dim": 1, "props": ["p"], "init": {"p": ["1"], "": [0.3]},
            "C": [[1]], "A": [["1"]], "b": ["0"], "accepting": [["1"]]}"#,
    );
    let t = write(&dir, "t.tree", "({} ({} ({p})))");
    let o = carefree(&["gnn", "--config", &c, "--tree", &t]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("rounded"));
    assert!(stdout(&o).ends_with("accepts\ttrue\n"));
}
