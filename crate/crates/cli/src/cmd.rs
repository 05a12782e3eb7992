//! Command implementations. Everything written to stdout or `--out` depends only on
//! the inputs and the seed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use carefree::automata::{Alphabet, Automaton, AutomatonError, Cmpa, Kripke, RunLimits, RunTrace, trace_tsv};
use carefree::compiler::{atomic_eq, atomic_py, atomic_ryz, compile_mso, properness, CompilationUnit, CompileOptions};
use carefree::gnnf::{embed_fcmpa, gnn_step, parse_rsimple, FloatSystem, GnnF, GnnTrace, Vector};
use carefree::harness::{
    check_gml, check_gmsc, check_mso, corpus_props, fuzz as run_fuzz, gml_corpus, gmsc_alphabet, mso_corpus,
    CheckOptions, CheckReport, FuzzConfig, HarnessError, Property, Stage, TreeSource,
};
use carefree::logic::{gmsc_accepts, gmsc_trace, gml_to_mso, parse_gml, parse_gmsc, parse_node_property, Gml, Mso, OracleConfig};
use carefree::model::{parse_tree, PropSymbol, RootedTree};
use carefree::par::Exec;
use tracing::{info, warn};

use crate::{FormulaArgs, Shared};

pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type Result<T> = std::result::Result<T, CliError>;

fn input(error: anyhow::Error) -> CliError {
    CliError { code: 2, error }
}

/// Exit 3 for budget and horizon failures, 2 for everything else.
fn lib<E: Into<HarnessError>>(e: E) -> CliError {
    let e = e.into();
    let code = if e.is_budget() { 3 } else { 2 };
    CliError {
        code,
        error: anyhow::Error::new(e),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)
}

fn parse_in<T, E: std::fmt::Display>(path: &Path, r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| input(anyhow!("{}: {e}", path.display())))
}

fn load_tree(path: &Path) -> Result<RootedTree> {
    let text = read(path)?;
    parse_in(path, parse_tree(&text))
}

/// Writes `files` under `--out` if given.
fn save(shared: &Shared, files: &[(&str, &str)]) -> Result<()> {
    let Some(dir) = &shared.out else { return Ok(()) };
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(input)?;
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(input)?;
        info!(path = %path.display(), "wrote");
    }
    Ok(())
}

enum Subject {
    Mso(String, Mso),
    Gml(String, Gml),
}

impl Subject {
    fn mso(&self) -> Mso {
        match self {
            Subject::Mso(_, f) => f.clone(),
            Subject::Gml(_, g) => gml_to_mso(g, "x"),
        }
    }

    fn props(&self) -> BTreeSet<PropSymbol> {
        match self {
            Subject::Mso(_, f) => f.props(),
            Subject::Gml(_, g) => g.props(),
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "formula".into(), |s| s.to_string_lossy().into_owned())
}

/// The formula named on the command line; `None` if there is none.
fn load_subject(f: &FormulaArgs) -> Result<Option<Subject>> {
    if let Some(text) = &f.gml {
        let g = parse_gml(text).map_err(|e| input(anyhow!("--gml: {e}")))?;
        return Ok(Some(Subject::Gml(text.clone(), g)));
    }
    let Some(path) = &f.formula else { return Ok(None) };
    let text = read(path)?;
    Ok(Some(if f.from_gml {
        Subject::Gml(stem(path), parse_in(path, parse_gml(&text))?)
    } else {
        Subject::Mso(stem(path), parse_in(path, parse_node_property(&text))?)
    }))
}

fn warn_final(f: &FormulaArgs, subject: Option<&Subject>) {
    if f.stage == Stage::Final && matches!(subject, Some(Subject::Mso(..))) {
        warn!(
            "the final stage is only correct for properties expressible in graded modal logic; \
             pass --from-gml or --gml when that holds by construction"
        );
    }
}

fn compile_opts(f: &FormulaArgs, shared: &Shared) -> CompileOptions {
    CompileOptions {
        budget: shared.state_budget,
        exec: Exec::available(),
        minimize: f.minimize_budget,
    }
}

fn limits(shared: &Shared) -> RunLimits {
    RunLimits {
        max_rounds: shared.max_rounds,
        ..RunLimits::default()
    }
}

fn build(f: &FormulaArgs, shared: &Shared, subject: &Subject) -> Result<CompilationUnit> {
    let opts = compile_opts(f, shared);
    let mut unit = compile_mso(&subject.mso(), &corpus_props(), opts).map_err(lib)?;
    if f.stage != Stage::FixedPoint {
        unit.complete(opts).map_err(lib)?;
    }
    Ok(unit)
}

fn stage_of(unit: &CompilationUnit, stage: Stage) -> Cmpa {
    match stage {
        Stage::FixedPoint => unit.fixed_point.clone(),
        Stage::Omnipresent => unit.omnipresent.clone().expect("built"),
        Stage::Final => unit.final_automaton.clone().expect("built"),
    }
}

pub fn compile(f: &FormulaArgs, shared: &Shared) -> Result<Outcome> {
    let subject = load_subject(f)?.ok_or_else(|| input(anyhow!("give --formula FILE or --gml TEXT")))?;
    warn_final(f, Some(&subject));
    let unit = build(f, shared, &subject)?;
    for (stage, t) in &unit.timings {
        info!(stage, ms = t.as_millis() as u64, "compiled");
    }
    let report = unit.report();
    print!("{report}");
    save(shared, &[("report.txt", &report)])?;
    Ok(Outcome::Pass)
}

pub fn check(
    f: &FormulaArgs,
    shared: &Shared,
    random: Option<usize>,
    oracle_cap: usize,
    swap_verdicts: bool,
) -> Result<Outcome> {
    let subject = load_subject(f)?;
    warn_final(f, subject.as_ref());
    let mut props: BTreeSet<PropSymbol> = corpus_props().into_iter().collect();
    if let Some(s) = &subject {
        props.extend(s.props());
    }
    let props: Vec<PropSymbol> = props.into_iter().collect();
    let source = match random {
        Some(count) => TreeSource::Random {
            seed: shared.seed,
            count,
            max_nodes: shared.max_nodes,
        },
        None => TreeSource::Exhaustive { max_nodes: shared.max_nodes },
    };
    let trees = source.trees(&props);
    info!(trees = trees.len(), stage = %f.stage, "checking");
    let opts = CheckOptions {
        stage: f.stage,
        limits: limits(shared),
        oracle: OracleConfig { max_nodes: oracle_cap },
        exec: Exec::available(),
        swap_verdicts,
    };
    let compile = compile_opts(f, shared);
    // without a formula: the built-in MSO corpus for stage 1, the GML corpus otherwise
    let subjects = match subject {
        Some(s) => vec![s],
        None if f.stage == Stage::FixedPoint => mso_corpus().into_iter().map(|(id, m)| Subject::Mso(id, m)).collect(),
        None => gml_corpus().into_iter().map(|(id, g)| Subject::Gml(id, g)).collect(),
    };
    let mut report = CheckReport::new(f.stage.to_string());
    for s in &subjects {
        let r = match s {
            Subject::Mso(id, m) => check_mso(id, m, &trees, compile, &opts),
            Subject::Gml(id, g) => check_gml(id, g, &trees, compile, &opts),
        }
        .map_err(lib)?;
        report.merge(r);
    }
    finish_report(shared, &report)
}

fn finish_report(shared: &Shared, report: &CheckReport) -> Result<Outcome> {
    let summary = report.summary();
    print!("{summary}");
    save(shared, &[("summary.txt", &summary), ("report.tsv", &report.to_tsv())])?;
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

/// An atomic automaton over plain symbols, so that `P(y)` reads the labels `P` and `y`.
fn atomic(text: &str) -> Result<(Cmpa, std::sync::Arc<Alphabet>)> {
    let bad = || input(anyhow!("--atomic {text:?}: expected P(y), E(y,z), y = z or proper y[,z]"));
    let sym = |s: &str| PropSymbol::new(s.trim()).map_err(|e| input(anyhow!("--atomic: {e}")));
    let alphabet = |names: &[&str]| -> Result<std::sync::Arc<Alphabet>> {
        let syms = names.iter().map(|n| sym(n)).collect::<Result<Vec<_>>>()?;
        Alphabet::new(syms).map_err(lib)
    };
    let t = text.trim();
    if let Some(rest) = t.strip_prefix("proper ") {
        let vars: Vec<&str> = rest.split(',').map(str::trim).collect();
        let al = alphabet(&vars)?;
        let bits: Vec<(u64, String)> = vars.iter().map(|v| (al.bit_of(v), v.to_string())).collect();
        return Ok((properness(&al, &bits), al));
    }
    if let Some((y, z)) = t.split_once('=') {
        let (y, z) = (y.trim(), z.trim());
        let al = alphabet(&[y, z])?;
        return Ok((atomic_eq(&al, al.bit_of(y), al.bit_of(z), t), al));
    }
    let (head, args) = t.strip_suffix(')').and_then(|s| s.split_once('(')).ok_or_else(bad)?;
    let args: Vec<&str> = args.split(',').map(str::trim).collect();
    match (head.trim(), args.as_slice()) {
        ("E", [y, z]) => {
            let al = alphabet(&[y, z])?;
            Ok((atomic_ryz(&al, al.bit_of(y), al.bit_of(z), t), al))
        }
        (p, [y]) => {
            let al = alphabet(&[p, y])?;
            Ok((atomic_py(&al, al.bit_of(p), al.bit_of(y), t), al))
        }
        _ => Err(bad()),
    }
}

/// A run cut off at `--max-rounds` is still a valid prefix; print it and say so.
fn run_prefix(a: &dyn Automaton, k: &Kripke, limits: &RunLimits) -> Result<RunTrace> {
    let choice: Option<Vec<_>> = if a.deterministic() {
        None
    } else {
        // first initial state everywhere
        Some((0..k.len()).map(|v| a.init(k.label(v)).map(|s| s[0])).collect::<std::result::Result<_, _>>().map_err(lib)?)
    };
    match carefree::automata::run(a, k, limits, choice.as_deref()) {
        Ok(t) => Ok(t),
        Err(AutomatonError::HorizonExceeded(t)) => {
            warn!(rounds = t.rounds.len(), "trace truncated by --max-rounds");
            Ok(*t)
        }
        Err(e) => Err(lib(e)),
    }
}

/// Rounds of `g` until the configuration repeats or `max_rounds` is passed.
fn gnn_prefix(g: &GnnF, k: &Kripke, max_rounds: usize) -> Result<GnnTrace> {
    let mut cur: Vec<Vector> = (0..k.len()).map(|w| g.init(k.label(w))).collect::<std::result::Result<_, _>>().map_err(lib)?;
    let mut rounds: Vec<Vec<Vector>> = Vec::new();
    loop {
        if let Some(start) = rounds.iter().position(|r| *r == cur) {
            return Ok(GnnTrace { rounds, cycle_start: start });
        }
        if rounds.len() > max_rounds {
            warn!(rounds = rounds.len(), "trace truncated by --max-rounds");
            return Ok(GnnTrace { cycle_start: rounds.len(), rounds });
        }
        let next = gnn_step(g, k, &cur, Exec::Sequential).map_err(lib)?;
        rounds.push(cur);
        cur = next;
    }
}

pub fn run(f: &FormulaArgs, shared: &Shared, atomic_text: Option<&str>, tree: &Path, embed: bool) -> Result<Outcome> {
    let tree = load_tree(tree)?;
    let (a, k) = match atomic_text {
        Some(text) => {
            let (a, al) = atomic(text)?;
            let k = Kripke::from_tree(&tree, &al);
            (a, k)
        }
        None => {
            let subject = load_subject(f)?
                .ok_or_else(|| input(anyhow!("give --formula FILE, --gml TEXT or --atomic TEXT")))?;
            warn_final(f, Some(&subject));
            let unit = build(f, shared, &subject)?;
            let k = unit.rooted(&tree);
            (stage_of(&unit, f.stage), k)
        }
    };
    let limits = limits(shared);
    let tsv = if embed {
        let system = FloatSystem::for_bound(a.bound()).map_err(lib)?;
        let e = embed_fcmpa(&a, system, shared.state_budget).map_err(lib)?;
        info!(dim = e.gnn.dim, system = %e.gnn.system, "embedded");
        gnn_prefix(&e.gnn, &k, shared.max_rounds)?.to_tsv(&e.gnn.system)
    } else {
        trace_tsv(&a, &run_prefix(&a, &k, &limits)?)
    };
    print!("{tsv}");
    save(shared, &[("trace.tsv", &tsv)])?;
    Ok(Outcome::Pass)
}

pub fn fuzz(shared: &Shared, cases: usize, properties: Vec<Property>) -> Result<Outcome> {
    let cfg = FuzzConfig {
        seed: shared.seed,
        cases,
        max_nodes: shared.max_nodes,
        properties,
        limits: limits(shared),
        exec: Exec::available(),
    };
    let report = run_fuzz(&cfg).map_err(lib)?;
    let summary = report.summary();
    print!("{summary}");
    save(shared, &[("summary.txt", &summary), ("fuzz.tsv", &report.to_tsv())])?;
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

pub fn gmsc(program: &Path, tree: Option<&Path>, random: Option<usize>, shared: &Shared, swap_verdicts: bool) -> Result<Outcome> {
    let text = read(program)?;
    let prog = parse_in(program, parse_gmsc(&text))?;
    if let Some(path) = tree {
        let t = load_tree(path)?;
        let tr = gmsc_trace(&t, &prog);
        let mut tsv = String::from("round\tnode\ttrue_variables\n");
        for (i, cfg) in tr.rounds.iter().enumerate() {
            for (v, set) in cfg.iter().enumerate() {
                let names: Vec<&str> = set.iter().map(String::as_str).collect();
                let _ = writeln!(tsv, "{i}\t{v}\t{}", names.join(","));
            }
        }
        print!("{tsv}");
        println!("accepts\t{}", gmsc_accepts(&t, 0, &prog));
        save(shared, &[("trace.tsv", &tsv)])?;
        return Ok(Outcome::Pass);
    }
    let props: Vec<PropSymbol> = gmsc_alphabet(&prog).map_err(lib)?.symbols().to_vec();
    let source = match random {
        Some(count) => TreeSource::Random {
            seed: shared.seed,
            count,
            max_nodes: shared.max_nodes,
        },
        None => TreeSource::Exhaustive { max_nodes: shared.max_nodes },
    };
    let trees = source.trees(&props);
    let opts = CheckOptions {
        stage: Stage::Final,
        limits: limits(shared),
        exec: Exec::available(),
        swap_verdicts,
        ..CheckOptions::default()
    };
    let report = check_gmsc(&stem(program), &prog, &trees, &opts).map_err(lib)?;
    finish_report(shared, &report)
}

pub fn gnn(config: &Path, tree: &Path, shared: &Shared) -> Result<Outcome> {
    let text = read(config)?;
    let (rs, al, warnings) = parse_in(config, parse_rsimple(&text))?;
    for w in &warnings {
        warn!("{}: {w}", config.display());
    }
    let g = rs.to_gnn().map_err(lib)?;
    let t = load_tree(tree)?;
    let k = Kripke::from_tree(&t, &al);
    let tr = gnn_prefix(&g, &k, shared.max_rounds)?;
    let tsv = tr.to_tsv(&g.system);
    print!("{tsv}");
    let accepts = tr.rounds.iter().any(|cfg| g.accepting(&cfg[0]));
    println!("accepts\t{accepts}");
    save(shared, &[("trace.tsv", &tsv)])?;
    Ok(Outcome::Pass)
}
