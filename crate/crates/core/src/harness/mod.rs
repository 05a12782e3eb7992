//! Differential checking against brute-force oracles, and seeded property fuzzing.
//!
//! Cases are independent and may be evaluated concurrently; reports are always
//! sorted by case key so that their text is reproducible.

mod corpus;
mod fuzz;
mod samples;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::automata::{
    decide, run, run_all_choices, AcceptanceCondition, Alphabet, Automaton, AutomatonError, Cmpa,
    Kripke, Powerset, RunLimits, RunTrace, Verdict,
};
use crate::compiler::{compile_gmsc, compile_mso, CompilationUnit, CompileError, CompileOptions};
use crate::gnnf::GnnError;
use crate::logic::{gml_eval, gml_to_mso, gmsc_accepts, mso_check, Gml, GmscProgram, LogicError, Mso, OracleConfig};
use crate::model::{enumerate_trees, random_tree, serialize_tree, Interpretation, ModelError, PropSymbol, RootedTree};
use crate::par::{self, Exec};

pub use corpus::{
    corpus_props, gml_corpus, gmsc_corpus, mso_corpus, GML_CORPUS, GMSC_CORPUS, MSO_CORPUS,
};
pub use fuzz::{fuzz, FuzzConfig, FuzzOutcome, FuzzReport, Property};
pub use samples::{branch_p, reach_p, samples, triple_q, Hint};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error("{0}")]
    Input(String),
}

impl HarnessError {
    /// True for failures caused by a size, round or choice limit.
    pub fn is_budget(&self) -> bool {
        fn automaton(e: &AutomatonError) -> bool {
            matches!(
                e,
                AutomatonError::StateBudgetExceeded { .. }
                    | AutomatonError::ChoiceBudgetExceeded { .. }
                    | AutomatonError::HorizonExceeded(_)
            )
        }
        fn logic(e: &LogicError) -> bool {
            matches!(e, LogicError::SizeLimit { .. } | LogicError::Model(ModelError::BudgetExceeded { .. }))
        }
        match self {
            HarnessError::Automaton(e) => automaton(e),
            HarnessError::Compile(CompileError::Automaton(e)) => automaton(e),
            HarnessError::Compile(CompileError::Logic(e)) | HarnessError::Logic(e) => logic(e),
            HarnessError::Model(e) => matches!(e, ModelError::BudgetExceeded { .. }),
            HarnessError::Gnn(GnnError::HorizonExceeded(_)) => true,
            HarnessError::Gnn(GnnError::Automaton(e)) => automaton(e),
            _ => false,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Pipeline stage under test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    /// Stage 1, decided by fixed-point acceptance.
    FixedPoint,
    /// Stage 2, decided by omnipresent acceptance over every initial choice.
    Omnipresent,
    /// Stage 3, decided by standard acceptance.
    Final,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::FixedPoint => "fixed-point",
            Stage::Omnipresent => "omnipresent",
            Stage::Final => "final",
        })
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fixed-point" => Ok(Stage::FixedPoint),
            "omnipresent" => Ok(Stage::Omnipresent),
            "final" => Ok(Stage::Final),
            _ => Err(format!("unknown stage {s:?} (fixed-point, omnipresent, final)")),
        }
    }
}

/// Where the trees of a check come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeSource {
    /// Every tree up to `max_nodes` nodes with every labeling.
    Exhaustive { max_nodes: usize },
    /// `count` trees drawn from a ChaCha stream seeded with `seed`.
    Random { seed: u64, count: usize, max_nodes: usize },
}

impl TreeSource {
    pub fn trees(&self, props: &[PropSymbol]) -> Vec<RootedTree> {
        match *self {
            TreeSource::Exhaustive { max_nodes } => enumerate_trees(max_nodes, props).collect(),
            TreeSource::Random { seed, count, max_nodes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count).map(|_| random_tree(&mut rng, max_nodes, props)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckCase {
    /// Canonical form of the tree.
    pub tree: String,
    /// Replayable serialization of the tree.
    pub serialized: String,
    pub formula: String,
    pub oracle: bool,
    pub verdict: Verdict,
    /// Stage dependent: the stabilization round, the first accepting round, or
    /// the omnipresent round.
    pub rounds: usize,
    pub agrees: bool,
}

/// Outcome of a differential check, sorted by `(tree, formula)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub mode: String,
    pub cases: Vec<CheckCase>,
    /// Formula text per formula id.
    pub formulas: BTreeMap<String, String>,
}

impl CheckReport {
    pub fn new(mode: impl Into<String>) -> Self {
        Self {
            mode: mode.into(),
            ..Self::default()
        }
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.cases.extend(other.cases);
        self.formulas.extend(other.formulas);
        self.sort();
    }

    fn sort(&mut self) {
        self.cases
            .sort_by(|a, b| (&a.tree, &a.formula).cmp(&(&b.tree, &b.formula)));
    }

    pub fn agree(&self) -> usize {
        self.cases.iter().filter(|c| c.agrees).count()
    }

    pub fn disagree(&self) -> usize {
        self.cases.len() - self.agree()
    }

    pub fn neither(&self) -> usize {
        self.cases.iter().filter(|c| c.verdict == Verdict::Neither).count()
    }

    pub fn passed(&self) -> bool {
        self.disagree() == 0
    }

    pub fn first_counterexample(&self) -> Option<&CheckCase> {
        self.cases.iter().find(|c| !c.agrees)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode\t{}", self.mode);
        let _ = writeln!(s, "formulas\t{}", self.formulas.len());
        let _ = writeln!(s, "cases\t{}", self.cases.len());
        let _ = writeln!(s, "agree\t{}", self.agree());
        let _ = writeln!(s, "disagree\t{}", self.disagree());
        let _ = writeln!(s, "neither\t{}", self.neither());
        if let Some(c) = self.first_counterexample() {
            let text = self.formulas.get(&c.formula).map_or("", String::as_str);
            let _ = writeln!(
                s,
                "counterexample\t{}\t{}\t{}\toracle={}\tverdict={:?}",
                c.formula, text, c.serialized, c.oracle, c.verdict
            );
        }
        s
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("tree\tformula\toracle\tverdict\trounds\tagrees\n");
        for c in &self.cases {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:?}\t{}\t{}",
                c.tree, c.formula, c.oracle, c.verdict, c.rounds, c.agrees
            );
        }
        s
    }
}

/// Knobs shared by all checks.
#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub stage: Stage,
    pub limits: RunLimits,
    pub oracle: OracleConfig,
    /// Distributes trees over threads.
    pub exec: Exec,
    /// Decides with the negated automaton. Only useful to show that the harness
    /// notices a broken build.
    pub swap_verdicts: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            stage: Stage::FixedPoint,
            limits: RunLimits::default(),
            oracle: OracleConfig::default(),
            exec: Exec::Sequential,
            swap_verdicts: false,
        }
    }
}

fn stage_automaton(unit: &CompilationUnit, stage: Stage) -> Result<Cmpa> {
    let a = match stage {
        Stage::FixedPoint => Some(&unit.fixed_point),
        Stage::Omnipresent => unit.omnipresent.as_ref(),
        Stage::Final => unit.final_automaton.as_ref(),
    };
    a.cloned()
        .ok_or_else(|| HarnessError::Input(format!("stage {stage} has not been built")))
}

/// Runs the chosen stage of `unit` at the root of every tree (with the designated
/// variable there) and compares with `oracle`.
///
/// Fixed-point verdicts must match exactly; the later stages have no rejecting
/// states, so there anything but `Accept` counts as "false".
pub fn check_unit(
    id: &str,
    unit: &CompilationUnit,
    oracle: &(dyn Fn(&RootedTree) -> Result<bool> + Sync),
    trees: &[RootedTree],
    opts: &CheckOptions,
) -> Result<CheckReport> {
    let mut a = stage_automaton(unit, opts.stage)?;
    if opts.swap_verdicts {
        a = a.negate();
    }
    let inner = RunLimits {
        exec: Exec::Sequential,
        ..opts.limits
    };
    let cases = par::map_slice(opts.exec, trees, |tree| -> Result<CheckCase> {
        let truth = oracle(tree)?;
        let k = unit.rooted(tree);
        let (verdict, rounds) = match opts.stage {
            Stage::FixedPoint => {
                let tr = run(&a, &k, &inner, None)?;
                let v = decide(&a, &k, 0, AcceptanceCondition::FixedPoint, &inner)?;
                (v, tr.stabilized_at.unwrap_or(tr.horizon()))
            }
            Stage::Final => {
                let tr = run(&a, &k, &inner, None)?;
                let first = tr.rounds.iter().position(|r| a.accepting(r[0]));
                let v = if first.is_some() { Verdict::Accept } else { Verdict::Neither };
                (v, first.unwrap_or(tr.horizon()))
            }
            Stage::Omnipresent => {
                // the root is constant from round height + 1 on
                let max_round = tree.depth() + 1;
                match crate::automata::omnipresent_round(&a, tree, &k, max_round, &inner)? {
                    Some(r) => (Verdict::Accept, r),
                    None => (Verdict::Neither, 0),
                }
            }
        };
        let agrees = match opts.stage {
            Stage::FixedPoint => verdict == if truth { Verdict::Accept } else { Verdict::Reject },
            _ => (verdict == Verdict::Accept) == truth,
        };
        Ok(CheckCase {
            tree: tree.canonical(),
            serialized: serialize_tree(tree),
            formula: id.to_string(),
            oracle: truth,
            verdict,
            rounds,
            agrees,
        })
    });
    let mut report = CheckReport::new(opts.stage.to_string());
    report.cases = cases.into_iter().collect::<Result<_>>()?;
    report.formulas.insert(id.to_string(), unit.formula.to_string());
    report.sort();
    Ok(report)
}

/// Compiles a node property `φ(x)` and checks it against the MSO evaluator.
pub fn check_mso(
    id: &str,
    formula: &Mso,
    trees: &[RootedTree],
    compile: CompileOptions,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    let mut unit = compile_mso(formula, &corpus_props(), compile)?;
    if opts.stage != Stage::FixedPoint {
        unit.complete(compile)?;
    }
    let at_root = Interpretation::at_root("x");
    let cfg = opts.oracle;
    let oracle = move |t: &RootedTree| Ok(mso_check(t, formula, &at_root, &cfg)?);
    check_unit(id, &unit, &oracle, trees, opts)
}

/// Compiles the MSO translation of a graded modal formula and checks it against
/// direct GML evaluation.
pub fn check_gml(
    id: &str,
    formula: &Gml,
    trees: &[RootedTree],
    compile: CompileOptions,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    let mut unit = compile_mso(&gml_to_mso(formula, "x"), &corpus_props(), compile)?;
    if opts.stage != Stage::FixedPoint {
        unit.complete(compile)?;
    }
    let oracle = move |t: &RootedTree| Ok(gml_eval(t, 0, formula));
    let mut report = check_unit(id, &unit, &oracle, trees, opts)?;
    report.formulas.insert(id.to_string(), formula.to_string());
    Ok(report)
}

/// Alphabet of the corpus propositions plus everything `program` mentions.
pub fn gmsc_alphabet(program: &GmscProgram) -> Result<Arc<Alphabet>> {
    let mut symbols: std::collections::BTreeSet<PropSymbol> = corpus_props().into_iter().collect();
    for body in program.init.iter().chain(&program.rules) {
        symbols.extend(body.props());
    }
    Ok(Alphabet::new(symbols)?)
}

/// `gmsc_accepts` against the compiled automaton under standard acceptance.
pub fn check_gmsc(
    id: &str,
    program: &GmscProgram,
    trees: &[RootedTree],
    opts: &CheckOptions,
) -> Result<CheckReport> {
    let alphabet = gmsc_alphabet(program)?;
    let mut a = compile_gmsc(program, &alphabet)?;
    if opts.swap_verdicts {
        a = a.negate();
    }
    let inner = RunLimits {
        exec: Exec::Sequential,
        ..opts.limits
    };
    let cases = par::map_slice(opts.exec, trees, |tree| -> Result<CheckCase> {
        let truth = gmsc_accepts(tree, 0, program);
        let k = Kripke::from_tree(tree, &alphabet);
        let tr = run(&a, &k, &inner, None)?;
        let first = tr.rounds.iter().position(|r| a.accepting(r[0]));
        let verdict = decide(&a, &k, 0, AcceptanceCondition::Standard, &inner)?;
        Ok(CheckCase {
            tree: tree.canonical(),
            serialized: serialize_tree(tree),
            formula: id.to_string(),
            oracle: truth,
            verdict,
            rounds: first.unwrap_or(tr.horizon()),
            agrees: (verdict == Verdict::Accept) == truth,
        })
    });
    let mut report = CheckReport::new("gmsc");
    report.cases = cases.into_iter().collect::<Result<_>>()?;
    report.formulas.insert(id.to_string(), program_text(program));
    report.sort();
    Ok(report)
}

/// One-line rendering of a GMSC program.
pub fn program_text(p: &GmscProgram) -> String {
    let mut parts = Vec::new();
    for (i, v) in p.vars.iter().enumerate() {
        parts.push(format!("{v}(0) :- {}", p.init[i]));
    }
    for (i, v) in p.vars.iter().enumerate() {
        parts.push(format!("{v} :- {}", p.rules[i]));
    }
    let appointed: Vec<&str> = p.appointed.iter().map(String::as_str).collect();
    parts.push(format!("appointed: {}", appointed.join(", ")));
    parts.join("; ") + ";"
}

/// Comparison of the runs of a nondeterministic automaton with the single run of
/// its power-set automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSetCheck {
    pub runs: usize,
    /// Rounds compared, covering every joint behaviour of the runs.
    pub horizon: usize,
    /// First `(round, node)` where the set of states over all runs differs from
    /// the power-set state.
    pub mismatch: Option<(usize, usize)>,
}

fn joint_horizon(traces: &[&RunTrace]) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let start = traces.iter().map(|t| t.cycle_start.unwrap_or(0)).max().unwrap_or(0);
    let lcm = traces.iter().fold(1usize, |l, t| {
        let p = t.rounds.len() - t.cycle_start.unwrap_or(0);
        (l / gcd(l, p.max(1))).saturating_mul(p.max(1)).min(1 << 16)
    });
    start + lcm
}

/// For every round and node, the states reached over all initial choices of `a`
/// must be exactly the members of the state of `det`, the power-set automaton of
/// `a` (built without label guessing).
pub fn run_set_equality(a: &Cmpa, det: &Powerset, model: &Kripke, limits: &RunLimits) -> Result<RunSetCheck> {
    let runs = run_all_choices(a, model, limits)?;
    let single = run(det, model, limits, None)?;
    let all: Vec<&RunTrace> = runs.iter().chain(std::iter::once(&single)).collect();
    let horizon = joint_horizon(&all);
    for t in 0..horizon {
        for v in 0..model.len() {
            let mut got: Vec<u32> = runs.iter().map(|r| r.state_at(t, v)).collect();
            got.sort_unstable();
            got.dedup();
            if *det.members(single.state_at(t, v)) != got[..] {
                return Ok(RunSetCheck {
                    runs: runs.len(),
                    horizon,
                    mismatch: Some((t, v)),
                });
            }
        }
    }
    Ok(RunSetCheck {
        runs: runs.len(),
        horizon,
        mismatch: None,
    })
}

/// A node of height `h` whose state still changes after round `h + 1`:
/// `(node, height, last round with a change)`.
pub fn late_stabilization(
    a: &dyn Automaton,
    tree: &RootedTree,
    model: &Kripke,
    limits: &RunLimits,
) -> Result<Option<(usize, usize, usize)>> {
    let tr = run(a, model, limits, None)?;
    let period = tr.rounds.len() - tr.cycle_start.unwrap_or(0);
    let end = tr.rounds.len() + period;
    for (v, &h) in tree.heights().iter().enumerate() {
        let settled = tr.state_at(h + 1, v);
        if let Some(t) = (h + 2..end).rev().find(|&t| tr.state_at(t, v) != settled) {
            return Ok(Some((v, h, t)));
        }
    }
    Ok(None)
}
