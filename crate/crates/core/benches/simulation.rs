//! Parallel vs sequential execution of the two hot loops: one run on a wide
//! tree (nodes stepped concurrently) and a differential check over a corpus
//! (trees checked concurrently).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use carefree::automata::{run, Kripke, RunLimits};
use carefree::compiler::{compile_gmsc, compile_mso, CompileOptions};
use carefree::harness::{check_unit, corpus_props, gmsc_alphabet, CheckOptions, Stage, TreeSource};
use carefree::logic::{mso_check, parse_gmsc, parse_node_property, OracleConfig};
use carefree::model::{random_tree, Interpretation};
use carefree::par::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn wide_run(c: &mut Criterion) {
    let prog = parse_gmsc("X(0) :- p; X :- dia>=1 X; appointed: X;").unwrap();
    let al = gmsc_alphabet(&prog).unwrap();
    let a = compile_gmsc(&prog, &al).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tree = random_tree(&mut rng, 20_000, &corpus_props());
    let k = Kripke::from_tree(&tree, &al);
    let mut g = c.benchmark_group("gmsc-run");
    g.sample_size(10);
    for (name, exec) in MODES {
        let limits = RunLimits {
            exec,
            ..RunLimits::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &limits, |b, limits| {
            b.iter(|| run(&a, &k, limits, None).unwrap().rounds.len())
        });
    }
    g.finish();
}

fn corpus_check(c: &mut Criterion) {
    let f = parse_node_property("exists y. (E(x,y) & exists z. (E(y,z) & p(z)))").unwrap();
    let unit = compile_mso(&f, &corpus_props(), CompileOptions::default()).unwrap();
    let trees = TreeSource::Exhaustive { max_nodes: 5 }.trees(&corpus_props());
    let at_root = Interpretation::at_root("x");
    let oracle = |t: &_| Ok(mso_check(t, &f, &at_root, &OracleConfig::default())?);
    let mut g = c.benchmark_group("fixed-point-check");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = CheckOptions {
            stage: Stage::FixedPoint,
            exec,
            ..CheckOptions::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| check_unit("grandchild-p", &unit, &oracle, &trees, opts).unwrap().agree())
        });
    }
    g.finish();
}

criterion_group!(benches, wide_run, corpus_check);
criterion_main!(benches);
