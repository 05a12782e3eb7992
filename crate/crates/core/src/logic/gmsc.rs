use std::collections::{BTreeSet, HashMap};

use crate::model::{NodeId, RootedTree};

use super::Gml;

/// A GMSC program: one initial body and one rule body per schema variable,
/// plus the appointed variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GmscProgram {
    pub vars: Vec<String>,
    /// `X(0) :- φ`, one per variable, never mentioning schema variables.
    pub init: Vec<Gml>,
    /// `X :- ψ`, one per variable.
    pub rules: Vec<Gml>,
    pub appointed: BTreeSet<String>,
}

impl GmscProgram {
    pub fn index(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    pub(crate) fn appointed_mask(&self) -> u64 {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| self.appointed.contains(*v))
            .fold(0, |m, (i, _)| m | 1 << i)
    }
}

fn to_sets(program: &GmscProgram, masks: &[u64]) -> Vec<BTreeSet<String>> {
    masks
        .iter()
        .map(|&m| {
            program
                .vars
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, v)| v.clone())
                .collect()
        })
        .collect()
}

fn round_masks(tree: &RootedTree, program: &GmscProgram, prev: Option<&[u64]>) -> Vec<u64> {
    tree.nodes()
        .map(|w| {
            let mut m = 0u64;
            for i in 0..program.vars.len() {
                let holds = match prev {
                    None => program.init[i].eval_with(tree, w, &|_, _| false),
                    Some(prev) => program.rules[i].eval_with(tree, w, &|v, name| {
                        // rule bodies read every schema variable one round back
                        let j = program.index(name).expect("declared schema variable");
                        prev[v] >> j & 1 == 1
                    }),
                };
                if holds {
                    m |= 1 << i;
                }
            }
            m
        })
        .collect()
}

/// One synchronous round. `prev = None` computes round 0 from the initial bodies.
pub fn gmsc_eval_round(
    tree: &RootedTree,
    program: &GmscProgram,
    prev: Option<&[BTreeSet<String>]>,
) -> Vec<BTreeSet<String>> {
    assert!(program.vars.len() <= 64, "at most 64 schema variables");
    let prev_masks: Option<Vec<u64>> = prev.map(|p| {
        p.iter()
            .map(|set| {
                set.iter()
                    .filter_map(|v| program.index(v))
                    .fold(0, |m, i| m | 1 << i)
            })
            .collect()
    });
    to_sets(program, &round_masks(tree, program, prev_masks.as_deref()))
}

/// Truth configurations until the first repeat: `rounds[cycle_start..]` repeats forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GmscTrace {
    pub rounds: Vec<Vec<BTreeSet<String>>>,
    pub cycle_start: usize,
}

pub fn gmsc_trace(tree: &RootedTree, program: &GmscProgram) -> GmscTrace {
    let (rounds, cycle_start) = mask_trace(tree, program);
    GmscTrace {
        rounds: rounds.iter().map(|r| to_sets(program, r)).collect(),
        cycle_start,
    }
}

fn mask_trace(tree: &RootedTree, program: &GmscProgram) -> (Vec<Vec<u64>>, usize) {
    assert!(program.vars.len() <= 64, "at most 64 schema variables");
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut rounds = Vec::new();
    let mut cur = round_masks(tree, program, None);
    loop {
        if let Some(&start) = seen.get(&cur) {
            return (rounds, start);
        }
        seen.insert(cur.clone(), rounds.len());
        let next = round_masks(tree, program, Some(&cur));
        rounds.push(cur);
        cur = next;
    }
}

/// True iff some appointed variable holds at `node` in some round. The global
/// configuration space is finite, so iterating until a repeat sees every round
/// that will ever occur.
pub fn gmsc_accepts(tree: &RootedTree, node: NodeId, program: &GmscProgram) -> bool {
    let appointed = program.appointed_mask();
    if appointed == 0 {
        return false;
    }
    let (rounds, _) = mask_trace(tree, program);
    rounds.iter().any(|r| r[node] & appointed != 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_gmsc;
    use crate::model::parse_tree;

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn propagation_program() {
        let prog = parse_gmsc("X(0) :- p;\nX :- dia>=1 X;\nappointed: X;").unwrap();
        let t = parse_tree("({} ({p}))").unwrap();
        let r0 = gmsc_eval_round(&t, &prog, None);
        assert_eq!(r0, vec![set(&[]), set(&["X"])]);
        let r1 = gmsc_eval_round(&t, &prog, Some(&r0));
        assert_eq!(r1, vec![set(&["X"]), set(&[])]);
        assert!(gmsc_accepts(&t, 0, &prog));
    }

    #[test]
    fn tautological_init() {
        let prog = parse_gmsc("X(0) :- (p | !p); X :- X; appointed: X;").unwrap();
        let t = parse_tree("({} ({q}) ({}))").unwrap();
        assert!(gmsc_eval_round(&t, &prog, None)
            .iter()
            .all(|s| s.contains("X")));
    }

    #[test]
    fn empty_program() {
        let prog = parse_gmsc("appointed: ;").unwrap();
        let t = parse_tree("({} ({}))").unwrap();
        let tr = gmsc_trace(&t, &prog);
        assert!(tr.rounds.iter().flatten().all(|s| s.is_empty()));
        assert!(!gmsc_accepts(&t, 0, &prog));
    }

    #[test]
    fn nothing_appointed_or_no_witness() {
        let prog = parse_gmsc("X(0) :- p; X :- dia>=1 X; appointed: ;").unwrap();
        assert!(!gmsc_accepts(&parse_tree("({p})").unwrap(), 0, &prog));
        let prog = parse_gmsc("X(0) :- p; X :- X; appointed: X;").unwrap();
        let t = parse_tree("({})").unwrap();
        assert!(!gmsc_accepts(&t, 0, &prog));
        assert_eq!(gmsc_trace(&t, &prog).rounds.len(), 1);
    }

    #[test]
    fn trace_ends_in_cycle() {
        // X flips every round
        let prog = parse_gmsc("X(0) :- p; X :- !X; appointed: X;").unwrap();
        let t = parse_tree("({})").unwrap();
        let tr = gmsc_trace(&t, &prog);
        assert_eq!(tr.rounds.len(), 2);
        assert_eq!(tr.cycle_start, 0);
        assert!(gmsc_accepts(&t, 0, &prog));
    }
}
