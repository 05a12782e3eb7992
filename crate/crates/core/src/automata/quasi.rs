use rustc_hash::FxHashSet;

use super::{run, run_all_choices, Automaton, Kripke, Result, RunLimits, RunTrace};

/// A node whose state sequence returns to a state it had left.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasiViolation {
    pub model: usize,
    pub node: usize,
    /// State names from round 0 up to and including the revisit.
    pub states: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasiReport {
    pub runs: usize,
    pub violation: Option<QuasiViolation>,
}

impl QuasiReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

fn scan(a: &dyn Automaton, t: &RunTrace, model: usize) -> Option<QuasiViolation> {
    // one extra round closes the cycle, so periodic behaviour shows up as a revisit
    let len = t.rounds.len() + usize::from(t.cycle_start.is_some());
    let nodes = t.rounds.first().map_or(0, Vec::len);
    for v in 0..nodes {
        let mut left = FxHashSet::default();
        let mut prev = t.state_at(0, v);
        for r in 1..len {
            let s = t.state_at(r, v);
            if s != prev {
                left.insert(prev);
                if left.contains(&s) {
                    return Some(QuasiViolation {
                        model,
                        node: v,
                        states: (0..=r).map(|i| a.state_name(t.state_at(i, v))).collect(),
                    });
                }
            }
            prev = s;
        }
    }
    None
}

/// Scans every run over the corpus for a node that revisits a state it left.
/// An empirical check, not a proof.
pub fn check_quasi_acyclic(
    a: &dyn Automaton,
    corpus: &[Kripke],
    limits: &RunLimits,
) -> Result<QuasiReport> {
    let mut runs = 0;
    for (i, m) in corpus.iter().enumerate() {
        let traces = if a.deterministic() {
            vec![run(a, m, limits, None)?]
        } else {
            run_all_choices(a, m, limits)?
        };
        for t in &traces {
            runs += 1;
            if let Some(v) = scan(a, t, i) {
                return Ok(QuasiReport {
                    runs,
                    violation: Some(v),
                });
            }
        }
    }
    Ok(QuasiReport {
        runs,
        violation: None,
    })
}
