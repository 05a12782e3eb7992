//! Acceptance suite: prints one `PASS`/`FAIL` line per criterion and fails if any
//! criterion fails. Every comparison is exact (tolerance 0): verdicts, run sets,
//! traces and floating-point results are compared for equality.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use carefree::automata::{
    check_quasi_acyclic, decide, run, AcceptanceCondition, Alphabet, Automaton, Cmpa,
    Kripke, Powerset, RunLimits, SetAcceptance, Verdict, DEFAULT_STATE_BUDGET,
};
use carefree::compiler::{compile_gmsc, compile_mso, properness, CompilationUnit, CompileOptions};
use carefree::gnnf::{embed_fcmpa, gnn_run, FloatNum, FloatSystem};
use carefree::harness::{
    check_gml, check_gmsc, check_unit, corpus_props, gml_corpus, gmsc_alphabet, gmsc_corpus,
    late_stabilization, mso_corpus, run_set_equality, samples, CheckOptions, Stage, TreeSource,
};
use carefree::logic::{gml_eval, gml_to_mso, k_extendable_check, mso_check, OmegaGml, OracleConfig};
use carefree::model::{
    enumerate_trees, k_prefix, sample_extensions, ExtensionCaps, Interpretation, PropSymbol, RootedTree,
};
use carefree::par::Exec;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn opts(stage: Stage) -> CheckOptions {
    CheckOptions {
        stage,
        exec: Exec::available(),
        ..CheckOptions::default()
    }
}

/// The literal construction: no quotienting of intermediate automata.
fn literal() -> CompileOptions {
    CompileOptions {
        minimize: 0,
        ..CompileOptions::default()
    }
}

fn literal_units() -> Vec<(String, CompilationUnit)> {
    mso_corpus()
        .into_iter()
        .map(|(id, f)| {
            let unit = compile_mso(&f, &corpus_props(), literal()).expect("corpus compiles");
            (id, unit)
        })
        .collect()
}

fn criterion_1(units: &[(String, CompilationUnit)], trees: &[RootedTree]) -> Outcome {
    let at_root = Interpretation::at_root("x");
    let (mut cases, mut bad, mut neither) = (0, 0, 0);
    let mut first = None;
    for (id, unit) in units {
        let oracle = |t: &RootedTree| Ok(mso_check(t, &unit.formula, &at_root, &OracleConfig::default())?);
        let r = check_unit(id, unit, &oracle, trees, &opts(Stage::FixedPoint)).map_err(|e| e.to_string())?;
        cases += r.cases.len();
        bad += r.disagree();
        neither += r.neither();
        if first.is_none() {
            first = r.first_counterexample().map(|c| format!("{} on {}", c.formula, c.serialized));
        }
    }
    let detail = format!(
        "{} formulas, {} trees <= 6 nodes, {cases} cases, {bad} disagreements, {neither} neither",
        units.len(),
        trees.len()
    );
    match first {
        None if neither == 0 => Ok(detail),
        other => Err(format!("{detail}; first: {}", other.unwrap_or_default())),
    }
}

/// Occurrences of `bit` within distance `i` below `v`, by breadth-first search.
fn occurrences(tree: &RootedTree, v: usize, i: usize, sym: &PropSymbol) -> usize {
    let mut count = 0;
    let mut layer = vec![v];
    for d in 0..=i {
        count += layer.iter().filter(|&&w| tree.labels(w).contains(sym)).count();
        if d == i {
            break;
        }
        layer = layer.iter().flat_map(|&w| tree.children(w).iter().copied()).collect();
    }
    count
}

fn criterion_2() -> Outcome {
    let limits = RunLimits::default();
    let mut checked = 0usize;
    for names in [vec!["y"], vec!["y", "z"]] {
        let syms: Vec<PropSymbol> = names.iter().map(|n| PropSymbol::first_order(n)).collect();
        let al = Alphabet::new(syms.clone()).map_err(|e| e.to_string())?;
        let vars: Vec<(u64, String)> = syms
            .iter()
            .zip(&names)
            .map(|(s, n)| (al.bit(s).expect("declared"), n.to_string()))
            .collect();
        let a = properness(&al, &vars);
        for tree in enumerate_trees(6, &syms) {
            let k = Kripke::from_tree(&tree, &al);
            let tr = run(&a, &k, &limits, None).map_err(|e| e.to_string())?;
            let heights = tree.heights();
            for v in tree.nodes() {
                for i in 0..=heights[v] + 1 {
                    let s = tr.state_at(i, v);
                    let counts: Vec<usize> = syms.iter().map(|y| occurrences(&tree, v, i, y)).collect();
                    let singleton = counts.iter().all(|&c| c == 1);
                    let doubled = counts.iter().any(|&c| c >= 2);
                    if a.accepting(s) != singleton || a.rejecting(s) != doubled {
                        return Err(format!(
                            "{} variable(s): node {v} round {i} of {} has counts {counts:?} but state {}",
                            names.len(),
                            tree.canonical(),
                            a.state_name(s)
                        ));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} (tree, node, round) triples for 1 and 2 variables, trees <= 6 nodes"))
}

fn criterion_3(trees: &[RootedTree]) -> Outcome {
    let al = Alphabet::of(&["p", "q"]);
    let limits = RunLimits::default();
    let models: Vec<Kripke> = trees.iter().map(|t| Kripke::from_tree(t, &al)).collect();
    let mut parts = Vec::new();
    for a in samples(&al) {
        let det = std::sync::Arc::new(
            Powerset::new(&a, SetAcceptance::Existential, None, DEFAULT_STATE_BUDGET).map_err(|e| e.to_string())?,
        );
        let det_cmpa = Cmpa::from_arc(det.clone());
        let mut runs = 0;
        for (t, k) in trees.iter().zip(&models) {
            let r = run_set_equality(&a, &det, k, &limits).map_err(|e| e.to_string())?;
            if let Some((round, node)) = r.mismatch {
                return Err(format!("{}: run sets differ on {} at round {round} node {node}", a.name(), t.canonical()));
            }
            runs += r.runs;
            for cond in [AcceptanceCondition::Standard, AcceptanceCondition::FixedPoint] {
                let want = decide(&a, k, 0, cond, &limits).map_err(|e| e.to_string())?;
                let got = decide(&det_cmpa, k, 0, cond, &limits).map_err(|e| e.to_string())?;
                if want != got {
                    return Err(format!("{}: {cond:?} verdict {want:?} vs {got:?} on {}", a.name(), t.canonical()));
                }
            }
        }
        let quasi = check_quasi_acyclic(&a, &models, &limits).map_err(|e| e.to_string())?;
        let quasi_det = check_quasi_acyclic(&det_cmpa, &models, &limits).map_err(|e| e.to_string())?;
        if !quasi.passed() {
            return Err(format!("{} is not quasi-acyclic on the corpus: {:?}", a.name(), quasi.violation));
        }
        if !quasi_det.passed() {
            return Err(format!("det({}) lost quasi-acyclicity: {:?}", a.name(), quasi_det.violation));
        }
        let want = a.bound() * a.state_space();
        if det_cmpa.bound() != want {
            return Err(format!("{}: bound {} != k|Q| = {want}", a.name(), det_cmpa.bound()));
        }
        parts.push(format!("{} ({runs} runs, bound {want})", a.name()));
    }
    Ok(format!("{} trees <= 5 nodes: {}", trees.len(), parts.join(", ")))
}

fn criterion_4(trees6: &[RootedTree], trees5: &[RootedTree]) -> Outcome {
    let limits = RunLimits::default();
    let mut parts = Vec::new();
    for (id, g) in gml_corpus() {
        let r = check_gml(&id, &g, trees6, CompileOptions::default(), &opts(Stage::Final)).map_err(|e| e.to_string())?;
        if !r.passed() {
            return Err(format!("final stage: {}", r.summary().replace('\n', "; ")));
        }
        let mut unit = compile_mso(&gml_to_mso(&g, "x"), &corpus_props(), CompileOptions::default())
            .map_err(|e| e.to_string())?;
        unit.complete(CompileOptions::default()).map_err(|e| e.to_string())?;
        let omni = unit.omnipresent.clone().expect("built");
        let fin = unit.final_automaton.clone().expect("built");
        if fin.bound() != omni.bound().saturating_mul(omni.state_space()) {
            return Err(format!("{id}: final bound {} is not k|Q|", fin.bound()));
        }
        let (mut sat, mut runs) = (0, 0u128);
        for t in trees5 {
            let k = unit.rooted(t);
            let truth = gml_eval(t, 0, &g);
            runs += carefree::automata::choice_vectors(&omni, &k).map_err(|e| e.to_string())?.1;
            if truth {
                sat += 1;
                let v = decide(&omni, &k, 0, AcceptanceCondition::Omnipresent(None), &limits).map_err(|e| e.to_string())?;
                if v != Verdict::Accept {
                    return Err(format!("{id}: no omnipresent round on satisfied {}", t.canonical()));
                }
            }
        }
        parts.push(format!("{id} ({} final cases, {sat} satisfied, {runs} runs)", r.cases.len()));
    }
    Ok(parts.join(", "))
}

fn criterion_5(trees5: &[RootedTree]) -> Outcome {
    let caps = ExtensionCaps {
        max_extra_depth: 2,
        max_branch: 2,
        budget: 1_000_000,
    };
    let oracle = OracleConfig::default();
    let at_root = Interpretation::at_root("x");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut satisfied, mut prefixes, mut exhaustive, mut sampled) = (0usize, 0usize, 0usize, 0usize);
    for (id, g) in gml_corpus() {
        let f = gml_to_mso(&g, "x");
        let k = g.modal_depth();
        // the extensions of a tree depend only on its k-prefix
        let mut groups: BTreeMap<String, &RootedTree> = BTreeMap::new();
        for t in trees5.iter().filter(|t| gml_eval(t, 0, &g)) {
            satisfied += 1;
            groups.entry(k_prefix(t, k).canonical()).or_insert(t);
        }
        prefixes += groups.len();
        for t in groups.into_values() {
            // every unlabeled attachment, exhaustively
            let r = k_extendable_check(t, &f, k, &OmegaGml::single(g.clone()), &caps, &[], &oracle)
                .map_err(|e| format!("{id}: {e}"))?;
            if let Some(v) = r.violation {
                return Err(format!("{id}: extension {} of {} violates", v.canonical(), t.canonical()));
            }
            exhaustive += r.extensions;
            // labeled attachments over {p, q}, sampled
            for ext in sample_extensions(&mut rng, &k_prefix(t, k), k, &caps, &corpus_props(), 32) {
                if !mso_check(&ext, &f, &at_root, &oracle).map_err(|e| e.to_string())? {
                    return Err(format!("{id}: extension {} of {} violates", ext.canonical(), t.canonical()));
                }
                sampled += 1;
            }
        }
    }
    Ok(format!(
        "{satisfied} satisfied trees, {prefixes} distinct k-prefixes: {exhaustive} unlabeled extensions (all), \
         {sampled} labeled extensions (seeded sample), 0 violations"
    ))
}

fn criterion_6(trees5: &[RootedTree]) -> Outcome {
    let mut cases = 0;
    let programs = gmsc_corpus();
    for (id, p) in &programs {
        let r = check_gmsc(id, p, trees5, &opts(Stage::Final)).map_err(|e| e.to_string())?;
        if !r.passed() {
            return Err(r.summary().replace('\n', "; "));
        }
        cases += r.cases.len();
    }
    Ok(format!("{} programs, {cases} cases, 0 disagreements", programs.len()))
}

/// Nearest element of the sorted value list `f`: ties away from zero, saturating.
fn oracle_nearest(sys: &FloatSystem, f: &[FloatNum], r: &BigRational) -> FloatNum {
    let vals: Vec<BigRational> = f.iter().map(|&x| sys.decode(x)).collect();
    if r >= vals.last().expect("nonempty") {
        return *f.last().expect("nonempty");
    }
    if r <= &vals[0] {
        return f[0];
    }
    let i = vals.iter().position(|v| v >= r).expect("inside the range");
    if &vals[i] == r {
        return f[i];
    }
    let (lo, hi) = (&vals[i - 1], &vals[i]);
    let (dl, dh) = (r - lo, hi - r);
    if dl < dh || (dl == dh && lo.abs() > hi.abs()) {
        f[i - 1]
    } else {
        f[i]
    }
}

fn criterion_7(trees5: &[RootedTree]) -> Outcome {
    let sys = FloatSystem::new(2, 1, 2).map_err(|e| e.to_string())?;
    let f = sys.values();
    let one = BigRational::one();
    for &x in &f {
        if sys.nearest(&sys.decode(x)) != x {
            return Err(format!("nearest not idempotent at {}", sys.show(x)));
        }
        let r = sys.decode(x);
        let want = if r.is_negative() {
            BigRational::zero()
        } else if r > one {
            one.clone()
        } else {
            r
        };
        if sys.decode(sys.relu_star(x).map_err(|e| e.to_string())?) != want {
            return Err(format!("relu_star wrong at {}", sys.show(x)));
        }
        for &y in &f {
            let s = sys.add(x, y);
            if s != sys.add(y, x) {
                return Err(format!("fsum not commutative at {} + {}", sys.show(x), sys.show(y)));
            }
            if s != oracle_nearest(&sys, &f, &(sys.decode(x) + sys.decode(y))) {
                return Err(format!("fsum of {} and {} is not the nearest value", sys.show(x), sys.show(y)));
            }
        }
    }
    let (max, min) = (sys.max(), sys.neg(sys.max()));
    if sys.add(max, max) != max || sys.add(min, min) != min || sys.mul(max, max) != max {
        return Err("no saturation at +-max".into());
    }

    // embeddings of every deterministic corpus automaton
    let mut subjects: Vec<(String, Cmpa, std::sync::Arc<Alphabet>, bool)> = Vec::new();
    for (id, prog) in gmsc_corpus() {
        let al = gmsc_alphabet(&prog).map_err(|e| e.to_string())?;
        subjects.push((id, compile_gmsc(&prog, &al).map_err(|e| e.to_string())?, al, false));
    }
    for (id, g) in gml_corpus() {
        let mut unit = compile_mso(&gml_to_mso(&g, "x"), &corpus_props(), CompileOptions::default())
            .map_err(|e| e.to_string())?;
        unit.complete(CompileOptions::default()).map_err(|e| e.to_string())?;
        subjects.push((format!("final:{id}"), unit.final_automaton.clone().expect("built"), unit.alphabet.clone(), true));
    }
    for (id, f) in mso_corpus() {
        let unit = compile_mso(&f, &corpus_props(), CompileOptions::default()).map_err(|e| e.to_string())?;
        subjects.push((format!("stage1:{id}"), unit.fixed_point.clone(), unit.alphabet.clone(), true));
    }
    let limits = RunLimits::default();
    let mut traces = 0;
    for (name, a, al, rooted) in &subjects {
        let system = FloatSystem::for_bound(a.bound()).map_err(|e| e.to_string())?;
        let e = embed_fcmpa(a, system, 200_000).map_err(|e| format!("{name}: {e}"))?;
        let encode = |t: &RootedTree| -> Kripke {
            if *rooted {
                let t = carefree::model::apply_interpretation(t, &Interpretation::at_root("x")).expect("root exists");
                Kripke::from_tree(&t, al)
            } else {
                Kripke::from_tree(t, al)
            }
        };
        for t in trees5 {
            let k = encode(t);
            let want = run(a, &k, &limits, None).map_err(|e| e.to_string())?;
            let got = gnn_run(&e.gnn, &k, limits.max_rounds, Exec::Sequential).map_err(|e| e.to_string())?;
            let decoded: Option<Vec<Vec<u32>>> =
                got.rounds.iter().map(|cfg| cfg.iter().map(|v| e.decode(v)).collect()).collect();
            if decoded.as_ref() != Some(&want.rounds) {
                return Err(format!("{name}: GNN trace differs on {}", t.canonical()));
            }
            traces += 1;
        }
    }
    Ok(format!(
        "sys(2,1,2): {} values, {} sums checked; {} embedded automata, {traces} traces equal",
        f.len(),
        f.len() * f.len(),
        subjects.len()
    ))
}

fn criterion_8(units: &[(String, CompilationUnit)], trees: &[RootedTree]) -> Outcome {
    let limits = RunLimits::default();
    let mut runs = 0;
    for (id, unit) in units {
        let late: Vec<Option<String>> = carefree::par::map_slice(Exec::available(), trees, |t| {
            let k = unit.rooted(t);
            match late_stabilization(&unit.fixed_point, t, &k, &limits) {
                Ok(None) => None,
                Ok(Some((v, h, r))) => Some(format!("{id}: node {v} of height {h} changes in round {r} on {}", t.canonical())),
                Err(e) => Some(e.to_string()),
            }
        });
        if let Some(msg) = late.into_iter().flatten().next() {
            return Err(msg);
        }
        runs += trees.len();
    }
    Ok(format!("{runs} runs, every height-h node constant from round h+1"))
}

/// Straight to the stderr handle, which the test harness does not capture, so the
/// lines show up in plain `cargo test` output too.
fn report(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

#[test]
fn acceptance() {
    let props = corpus_props();
    let trees6 = TreeSource::Exhaustive { max_nodes: 6 }.trees(&props);
    let trees5 = TreeSource::Exhaustive { max_nodes: 5 }.trees(&props);
    let units = literal_units();

    let criteria: Vec<Criterion<'_>> = vec![
        ("stage-1 fixed-point soundness and completeness", Box::new(|| criterion_1(&units, &trees6))),
        ("properness", Box::new(criterion_2)),
        ("determinization", Box::new(|| criterion_3(&trees5))),
        ("full pipeline", Box::new(|| criterion_4(&trees6, &trees5))),
        ("k-extendability", Box::new(|| criterion_5(&trees5))),
        ("GMSC engine", Box::new(|| criterion_6(&trees5))),
        ("GNN[F] layer", Box::new(|| criterion_7(&trees5))),
        ("stabilization", Box::new(|| criterion_8(&units, &trees6))),
    ];
    let mut failed = BTreeSet::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => report(&format!("criterion {}: PASS  {name}: {detail} [{secs:.1}s]", i + 1)),
            Err(detail) => {
                report(&format!("criterion {}: FAIL  {name}: {detail} [{secs:.1}s]", i + 1));
                failed.insert(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
