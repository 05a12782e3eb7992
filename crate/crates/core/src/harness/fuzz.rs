use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automata::{
    decide, reachable_states, run, submasks, AcceptanceCondition, Alphabet, Automaton, Cmpa,
    Kripke, Powerset, RunLimits, SetAcceptance, StateId, Verdict, DEFAULT_STATE_BUDGET,
};
use crate::compiler::{compile_gmsc, compile_mso, CompileOptions};
use crate::gnnf::{embed_fcmpa, gnn_run, Embedding, FloatSystem};
use crate::logic::{gmsc_accepts, GmscProgram};
use crate::model::{apply_interpretation, random_tree, serialize_tree, Interpretation, Multiset, RootedTree};
use crate::par::{self, Exec};

use super::{corpus_props, gmsc_alphabet, gmsc_corpus, mso_corpus, run_set_equality, samples, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    /// `(M|k)|k = M|k` and `δ_P(M) = δ_P(M|k)` on multisets above the bound.
    CapIdempotence,
    /// Runs of a nondeterministic sample against its power-set automaton.
    RunSetEquality,
    /// Double negation changes no verdict; single negation swaps fixed-point ones.
    NegateInvolution,
    /// GMSC semantics against the compiled automaton.
    GmscAgreement,
    /// GNN traces of an embedded automaton decode to the automaton's traces.
    EmbeddingFaithfulness,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::CapIdempotence,
        Property::RunSetEquality,
        Property::NegateInvolution,
        Property::GmscAgreement,
        Property::EmbeddingFaithfulness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::CapIdempotence => "cap-idempotence",
            Property::RunSetEquality => "run-set-equality",
            Property::NegateInvolution => "negate-involution",
            Property::GmscAgreement => "gmsc-agreement",
            Property::EmbeddingFaithfulness => "embedding-faithfulness",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Property::ALL.iter().map(|p| p.name()).collect();
                format!("unknown property {s:?} ({})", names.join(", "))
            })
    }
}

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub seed: u64,
    pub cases: usize,
    pub max_nodes: usize,
    /// Exercised round-robin; empty means all.
    pub properties: Vec<Property>,
    pub limits: RunLimits,
    pub exec: Exec,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cases: 1000,
            max_nodes: 6,
            properties: Vec::new(),
            limits: RunLimits::default(),
            exec: Exec::Sequential,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuzzOutcome {
    pub case: usize,
    pub property: Property,
    /// The automaton or program exercised.
    pub subject: String,
    /// Serialized tree, empty for properties that need none.
    pub tree: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuzzReport {
    pub seed: u64,
    pub outcomes: Vec<FuzzOutcome>,
}

impl FuzzReport {
    pub fn failures(&self) -> impl Iterator<Item = &FuzzOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed\t{}", self.seed);
        let _ = writeln!(s, "cases\t{}", self.outcomes.len());
        for p in Property::ALL {
            let of: Vec<&FuzzOutcome> = self.outcomes.iter().filter(|o| o.property == p).collect();
            if !of.is_empty() {
                let failed = of.iter().filter(|o| !o.passed).count();
                let _ = writeln!(s, "{p}\t{} cases\t{failed} failed", of.len());
            }
        }
        if let Some(o) = self.failures().next() {
            let _ = writeln!(
                s,
                "first failure\tcase {}\t{}\t{}\t{}\t{}",
                o.case, o.property, o.subject, o.tree, o.detail
            );
        }
        s
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("case\tproperty\tsubject\ttree\tpassed\tdetail\n");
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}",
                o.case, o.property, o.subject, o.tree, o.passed, o.detail
            );
        }
        s
    }
}

/// A deterministic automaton plus how to encode a tree for it.
struct Subject {
    name: String,
    a: Cmpa,
    alphabet: Arc<Alphabet>,
    /// Place the designated variable `x` at the root.
    rooted: bool,
}

impl Subject {
    fn kripke(&self, tree: &RootedTree) -> Result<Kripke> {
        if self.rooted {
            let t = apply_interpretation(tree, &Interpretation::at_root("x"))?;
            Ok(Kripke::from_tree(&t, &self.alphabet))
        } else {
            Ok(Kripke::from_tree(tree, &self.alphabet))
        }
    }
}

/// Everything the properties draw from, built once per fuzz run.
struct Fixture {
    alphabet: Arc<Alphabet>,
    samples: Vec<(Cmpa, Arc<Powerset>)>,
    programs: Vec<(String, GmscProgram, Subject)>,
    deterministic: Vec<Subject>,
    /// Any automaton, with its reachable states, for multiset probing.
    probes: Vec<(String, Cmpa, Vec<StateId>)>,
    embeddings: Vec<(Subject, Embedding)>,
}

impl Fixture {
    fn new() -> Result<Self> {
        let alphabet = Alphabet::of(&["p", "q"]);
        let mut sample_pairs = Vec::new();
        let mut deterministic = Vec::new();
        for a in samples(&alphabet) {
            let det = Arc::new(Powerset::new(&a, SetAcceptance::Existential, None, DEFAULT_STATE_BUDGET)?);
            deterministic.push(Subject {
                name: format!("det({})", a.name()),
                a: Cmpa::from_arc(det.clone()),
                alphabet: Arc::clone(&alphabet),
                rooted: false,
            });
            sample_pairs.push((a, det));
        }
        let mut programs = Vec::new();
        for (id, prog) in gmsc_corpus() {
            let al = gmsc_alphabet(&prog)?;
            let a = compile_gmsc(&prog, &al)?;
            let subject = Subject {
                name: id.clone(),
                a,
                alphabet: al,
                rooted: false,
            };
            programs.push((id, prog, subject));
        }
        for (id, f) in mso_corpus() {
            let unit = compile_mso(&f, &corpus_props(), CompileOptions::default())?;
            deterministic.push(Subject {
                name: id,
                a: unit.fixed_point.clone(),
                alphabet: Arc::clone(&unit.alphabet),
                rooted: true,
            });
        }
        for (_, _, s) in &programs {
            deterministic.push(Subject {
                name: s.name.clone(),
                a: s.a.clone(),
                alphabet: Arc::clone(&s.alphabet),
                rooted: false,
            });
        }

        let mut probes = Vec::new();
        for (a, _) in &sample_pairs {
            probes.push((a.name(), a.clone(), reachable_states(a, DEFAULT_STATE_BUDGET)?));
        }
        for s in &deterministic {
            if let Ok(states) = reachable_states(&s.a, 20_000) {
                probes.push((s.name.clone(), s.a.clone(), states));
            }
        }

        let mut embeddings = Vec::new();
        for s in &deterministic {
            let system = FloatSystem::for_bound(s.a.bound())?;
            if let Ok(e) = embed_fcmpa(&s.a, system, 2_000) {
                embeddings.push((
                    Subject {
                        name: s.name.clone(),
                        a: s.a.clone(),
                        alphabet: Arc::clone(&s.alphabet),
                        rooted: s.rooted,
                    },
                    e,
                ));
            }
        }
        Ok(Self {
            alphabet,
            samples: sample_pairs,
            programs,
            deterministic,
            probes,
            embeddings,
        })
    }
}

fn swap(v: Verdict) -> Verdict {
    match v {
        Verdict::Accept => Verdict::Reject,
        Verdict::Reject => Verdict::Accept,
        Verdict::Neither => Verdict::Neither,
    }
}

/// Outcome of one property on one case: `(subject, tree, passed, detail)`.
type Probe = (String, String, bool, String);

fn cap_idempotence(fx: &Fixture, rng: &mut ChaCha8Rng) -> Result<Probe> {
    let (name, a, states) = fx.probes.choose(rng).expect("probes exist");
    let k = a.bound().min(8) as usize;
    let mut m = Multiset::new();
    for _ in 0..rng.gen_range(0..=3) {
        let s = *states.choose(rng).expect("reachable states exist");
        m.insert_n(s, rng.gen_range(0..=2 * k + 2));
    }
    let labels: Vec<u64> = submasks(a.signature()).collect();
    let label = *labels.choose(rng).expect("some label");
    let own = if a.forgetful() {
        None
    } else {
        Some(*states.choose(rng).expect("reachable states exist"))
    };
    let capped = m.cap(k);
    let raw = |ms: &Multiset<StateId>| -> Result<StateId> {
        let mut g = a.agg_empty();
        for (&s, n) in ms.iter() {
            for _ in 0..n {
                g = a.agg_add(g, s)?;
            }
        }
        Ok(a.finish(label, own, g)?)
    };
    let idem = capped.cap(k) == capped;
    let below = capped.iter().all(|(s, n)| n <= m.count(s) && n <= k);
    let (full, cut) = (raw(&m)?, raw(&capped)?);
    let detail = format!("k={k} |M|={} label={}", m.len(), a.alphabet().show(label));
    Ok((name.clone(), String::new(), idem && below && full == cut, detail))
}

fn run_sets(fx: &Fixture, rng: &mut ChaCha8Rng, tree: &RootedTree, limits: &RunLimits) -> Result<Probe> {
    let (a, det) = fx.samples.choose(rng).expect("samples exist");
    let k = Kripke::from_tree(tree, &fx.alphabet);
    let check = run_set_equality(a, det, &k, limits)?;
    let mut ok = check.mismatch.is_none();
    for cond in [AcceptanceCondition::Standard, AcceptanceCondition::FixedPoint] {
        ok &= decide(a, &k, 0, cond, limits)? == decide(det.as_ref(), &k, 0, cond, limits)?;
    }
    let detail = match check.mismatch {
        Some((t, v)) => format!("{} runs, mismatch at round {t} node {v}", check.runs),
        None => format!("{} runs over {} rounds", check.runs, check.horizon),
    };
    Ok((a.name(), serialize_tree(tree), ok, detail))
}

fn negation(fx: &Fixture, rng: &mut ChaCha8Rng, tree: &RootedTree, limits: &RunLimits) -> Result<Probe> {
    let s = fx.deterministic.choose(rng).expect("subjects exist");
    let k = s.kripke(tree)?;
    let twice = s.a.negate().negate();
    let once = s.a.negate();
    let mut ok = twice.is_negated() == s.a.is_negated() && twice.same_core(&s.a);
    let mut seen = Vec::new();
    for cond in [AcceptanceCondition::Standard, AcceptanceCondition::FixedPoint] {
        let v = decide(&s.a, &k, 0, cond, limits)?;
        ok &= decide(&twice, &k, 0, cond, limits)? == v;
        if cond == AcceptanceCondition::FixedPoint {
            ok &= decide(&once, &k, 0, cond, limits)? == swap(v);
        }
        seen.push(format!("{v:?}"));
    }
    Ok((s.name.clone(), serialize_tree(tree), ok, seen.join(",")))
}

fn gmsc(fx: &Fixture, rng: &mut ChaCha8Rng, tree: &RootedTree, limits: &RunLimits) -> Result<Probe> {
    let (id, prog, s) = fx.programs.choose(rng).expect("programs exist");
    let truth = gmsc_accepts(tree, 0, prog);
    let v = decide(&s.a, &s.kripke(tree)?, 0, AcceptanceCondition::Standard, limits)?;
    let ok = (v == Verdict::Accept) == truth;
    Ok((id.clone(), serialize_tree(tree), ok, format!("oracle={truth} verdict={v:?}")))
}

fn embedding(fx: &Fixture, rng: &mut ChaCha8Rng, tree: &RootedTree, limits: &RunLimits) -> Result<Probe> {
    let (s, e) = fx.embeddings.choose(rng).expect("embeddings exist");
    let k = s.kripke(tree)?;
    let want = run(&s.a, &k, limits, None)?;
    let got = gnn_run(&e.gnn, &k, limits.max_rounds, Exec::Sequential)?;
    let decoded: Option<Vec<Vec<StateId>>> = got
        .rounds
        .iter()
        .map(|cfg| cfg.iter().map(|v| e.decode(v)).collect())
        .collect();
    let same_trace = decoded.as_ref() == Some(&want.rounds);
    let same_accept = got.rounds.iter().all(|cfg| {
        let st = e.decode(&cfg[0]);
        st.is_some_and(|st| e.gnn.accepting(&cfg[0]) == s.a.accepting(st))
    });
    let detail = format!("dim={} rounds={}", e.gnn.dim, want.rounds.len());
    Ok((s.name.clone(), serialize_tree(tree), same_trace && same_accept, detail))
}

/// Runs `cfg.cases` cases. Case `i` exercises property `i mod |properties|` with
/// its own ChaCha stream, so outcomes do not depend on scheduling.
pub fn fuzz(cfg: &FuzzConfig) -> Result<FuzzReport> {
    let fx = Fixture::new()?;
    let props = if cfg.properties.is_empty() {
        Property::ALL.to_vec()
    } else {
        cfg.properties.clone()
    };
    let inner = RunLimits {
        exec: Exec::Sequential,
        ..cfg.limits
    };
    let alphabet = corpus_props();
    let outcomes = par::map_range(cfg.exec, cfg.cases, |i| -> Result<FuzzOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let property = props[i % props.len()];
        let tree = random_tree(&mut rng, cfg.max_nodes.max(1), &alphabet);
        let (subject, tree, passed, detail) = match property {
            Property::CapIdempotence => cap_idempotence(&fx, &mut rng)?,
            Property::RunSetEquality => run_sets(&fx, &mut rng, &tree, &inner)?,
            Property::NegateInvolution => negation(&fx, &mut rng, &tree, &inner)?,
            Property::GmscAgreement => gmsc(&fx, &mut rng, &tree, &inner)?,
            Property::EmbeddingFaithfulness => embedding(&fx, &mut rng, &tree, &inner)?,
        };
        Ok(FuzzOutcome {
            case: i,
            property,
            subject,
            tree,
            passed,
            detail,
        })
    });
    Ok(FuzzReport {
        seed: cfg.seed,
        outcomes: outcomes.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn property_names_parse() {
        for p in Property::ALL {
            assert_eq!(p.name().parse::<Property>().unwrap(), p);
        }
        assert!("nope".parse::<Property>().is_err());
    }

    #[test]
    fn small_run_passes_and_repeats() {
        let cfg = FuzzConfig {
            seed: 42,
            cases: 40,
            max_nodes: 4,
            ..FuzzConfig::default()
        };
        let a = fuzz(&cfg).unwrap();
        assert!(a.passed(), "{}", a.summary());
        let b = fuzz(&FuzzConfig {
            exec: Exec::Parallel,
            ..cfg
        })
        .unwrap();
        assert_eq!(a.to_tsv(), b.to_tsv());
    }
}
