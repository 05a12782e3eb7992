use std::collections::HashMap;

use crate::model::RootedTree;
use crate::par::{self, Exec};

use super::{Alphabet, Automaton, AutomatonError, Inits, Label, Result, StateId};

/// A finite Kripke model with encoded labels. Edges point to successors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Kripke {
    labels: Vec<Label>,
    succ: Vec<Vec<usize>>,
}

impl Kripke {
    pub fn new(labels: Vec<Label>, succ: Vec<Vec<usize>>) -> Self {
        assert_eq!(labels.len(), succ.len(), "one successor list per node");
        assert!(
            succ.iter().flatten().all(|&v| v < labels.len()),
            "successor out of range"
        );
        Self { labels, succ }
    }

    pub fn from_tree(tree: &RootedTree, alphabet: &Alphabet) -> Self {
        Self {
            labels: tree.nodes().map(|v| alphabet.encode(tree.labels(v))).collect(),
            succ: tree.nodes().map(|v| tree.children(v).to_vec()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> Label {
        self.labels[v]
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }
}

/// Global configurations of one run, until the first repeated configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunTrace {
    /// `rounds[t][v]` is the state of node `v` in round `t`.
    pub rounds: Vec<Vec<StateId>>,
    /// First round `t` with `rounds[t] == rounds[t + 1]`.
    pub stabilized_at: Option<usize>,
    /// If the run was followed to a repeat: the configuration after the last
    /// recorded round equals `rounds[cycle_start]`.
    pub cycle_start: Option<usize>,
    pub init_choice: Vec<StateId>,
}

impl RunTrace {
    /// State of `v` in round `t`, extending a completed trace periodically.
    pub fn state_at(&self, t: usize, v: usize) -> StateId {
        if t < self.rounds.len() {
            return self.rounds[t][v];
        }
        let start = self.cycle_start.expect("trace followed to a repeat");
        let period = self.rounds.len() - start;
        self.rounds[start + (t - start) % period][v]
    }

    /// Number of recorded rounds; every configuration of the run occurs among them.
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }
}

/// Round and choice limits for simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunLimits {
    pub max_rounds: usize,
    /// Cap on initial choice vectors enumerated for nondeterministic automata.
    pub max_choices: u128,
    pub exec: Exec,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self {
            max_rounds: 1_000,
            max_choices: 1_000_000,
            exec: Exec::Sequential,
        }
    }
}

/// One synchronous round: every node applies its transition to the multiset of
/// successor states. Aggregators cap counts internally.
pub fn step(a: &dyn Automaton, model: &Kripke, config: &[StateId], exec: Exec) -> Result<Vec<StateId>> {
    let node = |w: usize| -> Result<StateId> {
        let mut agg = a.agg_empty();
        for &v in model.successors(w) {
            agg = a.agg_add(agg, config[v])?;
        }
        a.finish(model.label(w), Some(config[w]), agg)
    };
    par::map_range(exec, model.len(), node).into_iter().collect()
}

/// Runs until the global configuration repeats (a fixed point is the special case
/// of a repeat after one round) or `max_rounds` rounds have been computed.
///
/// `init_choice` is required for nondeterministic automata and must pick an
/// initial state per node.
pub fn run(
    a: &dyn Automaton,
    model: &Kripke,
    limits: &RunLimits,
    init_choice: Option<&[StateId]>,
) -> Result<RunTrace> {
    let init = initial_config(a, model, init_choice)?;
    let mut trace = RunTrace {
        rounds: Vec::new(),
        stabilized_at: None,
        cycle_start: None,
        init_choice: init.clone(),
    };
    let mut seen: HashMap<Vec<StateId>, usize> = HashMap::new();
    let mut cur = init;
    loop {
        if let Some(&start) = seen.get(&cur) {
            trace.cycle_start = Some(start);
            if start + 1 == trace.rounds.len() {
                trace.stabilized_at = Some(start);
            }
            return Ok(trace);
        }
        if trace.rounds.len() > limits.max_rounds {
            return Err(AutomatonError::HorizonExceeded(Box::new(trace)));
        }
        seen.insert(cur.clone(), trace.rounds.len());
        let next = step(a, model, &cur, limits.exec)?;
        trace.rounds.push(cur);
        cur = next;
    }
}

fn initial_config(
    a: &dyn Automaton,
    model: &Kripke,
    init_choice: Option<&[StateId]>,
) -> Result<Vec<StateId>> {
    let mut out = Vec::with_capacity(model.len());
    for v in 0..model.len() {
        let inits = a.init(model.label(v))?;
        let s = match init_choice {
            Some(choice) => {
                let s = *choice.get(v).ok_or(AutomatonError::InvalidChoice(v))?;
                if !inits.contains(&s) {
                    return Err(AutomatonError::InvalidChoice(v));
                }
                s
            }
            None if inits.len() == 1 => inits[0],
            None => return Err(AutomatonError::NotDeterministic("run without a choice".into())),
        };
        out.push(s);
    }
    Ok(out)
}

/// Initial state sets per node and the number of choice vectors they span.
pub fn choice_vectors(a: &dyn Automaton, model: &Kripke) -> Result<(Vec<Inits>, u128)> {
    let sets: Vec<Inits> = (0..model.len())
        .map(|v| a.init(model.label(v)))
        .collect::<Result<_>>()?;
    let n = sets
        .iter()
        .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
    Ok((sets, n))
}

fn decode_choice(sets: &[Inits], mut code: u128) -> Vec<StateId> {
    sets.iter()
        .map(|s| {
            let i = (code % s.len() as u128) as usize;
            code /= s.len() as u128;
            s[i]
        })
        .collect()
}

/// Runs every initial choice vector. Exponential; for desk-scale models.
pub fn run_all_choices(a: &dyn Automaton, model: &Kripke, limits: &RunLimits) -> Result<Vec<RunTrace>> {
    let (sets, n) = choice_vectors(a, model)?;
    if n > limits.max_choices {
        return Err(AutomatonError::ChoiceBudgetExceeded {
            needed: n,
            budget: limits.max_choices,
        });
    }
    let inner = RunLimits {
        exec: Exec::Sequential,
        ..*limits
    };
    par::map_range(limits.exec, n as usize, |code| {
        run(a, model, &inner, Some(&decode_choice(&sets, code as u128)))
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AcceptanceCondition {
    /// Accepting state at the node in some round.
    Standard,
    /// The node's state eventually becomes constant, and that constant is accepting.
    FixedPoint,
    /// Every run is accepting at the node in round `k` (some `k` if `None`).
    Omnipresent(Option<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Accept,
    Reject,
    Neither,
}

#[derive(Clone, Copy)]
struct RunOutcome {
    accepts: bool,
    rejects: bool,
}

fn standard(a: &dyn Automaton, t: &RunTrace, root: usize) -> RunOutcome {
    let acc = t.rounds.iter().any(|r| a.accepting(r[root]));
    let rej = t.rounds.iter().any(|r| a.rejecting(r[root]));
    RunOutcome {
        accepts: acc,
        rejects: rej && !acc,
    }
}

fn fixed_point(a: &dyn Automaton, t: &RunTrace, root: usize) -> RunOutcome {
    let start = t.cycle_start.expect("completed trace");
    let s = t.rounds[start][root];
    let constant = t.rounds[start..].iter().all(|r| r[root] == s);
    RunOutcome {
        accepts: constant && a.accepting(s),
        rejects: constant && a.rejecting(s),
    }
}

/// Decides acceptance at `root`. Deterministic automata are simulated once;
/// nondeterministic ones over every initial choice vector.
pub fn decide(
    a: &dyn Automaton,
    model: &Kripke,
    root: usize,
    cond: AcceptanceCondition,
    limits: &RunLimits,
) -> Result<Verdict> {
    let traces = if a.deterministic() {
        vec![run(a, model, limits, None)?]
    } else {
        run_all_choices(a, model, limits)?
    };
    let verdict = |accept: bool, reject: bool| {
        if accept {
            Verdict::Accept
        } else if reject {
            Verdict::Reject
        } else {
            Verdict::Neither
        }
    };
    Ok(match cond {
        AcceptanceCondition::Standard | AcceptanceCondition::FixedPoint => {
            let f = if cond == AcceptanceCondition::Standard {
                standard
            } else {
                fixed_point
            };
            let outs: Vec<RunOutcome> = traces.iter().map(|t| f(a, t, root)).collect();
            let acc = outs.iter().any(|o| o.accepts);
            verdict(acc, !acc && outs.iter().any(|o| o.rejects))
        }
        AcceptanceCondition::Omnipresent(k) => {
            let horizon = omni_horizon(&traces);
            let rounds: Vec<usize> = match k {
                Some(k) => vec![k],
                None => (0..horizon).collect(),
            };
            let all = |pred: &dyn Fn(StateId) -> bool, t: usize| {
                traces.iter().all(|tr| pred(tr.state_at(t, root)))
            };
            let acc = rounds.iter().any(|&t| all(&|s| a.accepting(s), t));
            let rej = rounds.iter().any(|&t| all(&|s| a.rejecting(s), t));
            verdict(acc, !acc && rej)
        }
    })
}

/// Rounds `[0, h)` that cover every joint behaviour of all runs: the longest
/// prefix plus the least common multiple of the periods.
fn omni_horizon(traces: &[RunTrace]) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let start = traces
        .iter()
        .map(|t| t.cycle_start.unwrap_or(0))
        .max()
        .unwrap_or(0);
    let lcm = traces.iter().fold(1usize, |l, t| {
        let p = t.rounds.len() - t.cycle_start.unwrap_or(0);
        (l / gcd(l, p)).saturating_mul(p).min(1 << 20)
    });
    start + lcm
}

/// Smallest round `k ≤ max_round` at which every run of a forgetful automaton is
/// accepting at `root` of a tree.
///
/// For a forgetful automaton on a tree the state of the root in round `k` depends
/// only on the initial choices at depth exactly `k` (shallower nodes are
/// overwritten before their influence arrives, deeper ones arrive too late), so
/// only the choices at that depth are enumerated; all other nodes take their first
/// initial state. This is exact and much smaller than the full product.
pub fn omnipresent_round(
    a: &dyn Automaton,
    tree: &RootedTree,
    model: &Kripke,
    max_round: usize,
    limits: &RunLimits,
) -> Result<Option<usize>> {
    if !a.forgetful() {
        return Err(AutomatonError::NotForgetful("omnipresent_round".into()));
    }
    let (sets, _) = choice_vectors(a, model)?;
    let depths = tree.depths();
    let base: Vec<StateId> = sets.iter().map(|s| s[0]).collect();
    for k in 0..=max_round {
        let level: Vec<usize> = (0..model.len()).filter(|&v| depths[v] == k).collect();
        let n = level
            .iter()
            .fold(1u128, |acc, &v| acc.saturating_mul(sets[v].len() as u128));
        if n > limits.max_choices {
            return Err(AutomatonError::ChoiceBudgetExceeded {
                needed: n,
                budget: limits.max_choices,
            });
        }
        let level_sets: Vec<Inits> = level.iter().map(|&v| sets[v].clone()).collect();
        let all = par::map_range(limits.exec, n as usize, |code| -> Result<bool> {
            let picks = decode_choice(&level_sets, code as u128);
            let mut cfg = base.clone();
            for (&v, s) in level.iter().zip(picks) {
                cfg[v] = s;
            }
            for _ in 0..k {
                cfg = step(a, model, &cfg, Exec::Sequential)?;
            }
            Ok(a.accepting(cfg[0]))
        });
        let mut every = true;
        for r in all {
            every &= r?;
        }
        if every {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
