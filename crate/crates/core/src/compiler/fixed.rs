use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashSet;
use smallvec::SmallVec;

use crate::automata::{
    determinize, submasks, AggId, Alphabet, Automaton, AutomatonError, Cmpa, Inits, Label,
    SetAcceptance, StateId,
};

use super::Result;

/// For every label `P`, the states `Q_P` that can be the fixed point of a
/// stage-1 automaton at a node labeled `P`.
///
/// Labels without the designated bit describe inner nodes (the designated
/// variable sits at the root, so it never occurs below); labels with it describe
/// the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPointSets {
    pub signature: Label,
    pub designated: Label,
    pub per_label: BTreeMap<Label, Vec<StateId>>,
    /// Number of distinct child-multiset summaries reached during saturation.
    pub aggregators: usize,
}

impl FixedPointSets {
    /// `Q_P` for a label; bits outside the signature are ignored.
    pub fn get(&self, label: Label) -> &[StateId] {
        self.per_label
            .get(&(label & self.signature))
            .map_or(&[], Vec::as_slice)
    }

    /// Union of `Q_P` over labels without the designated bit: every state a child
    /// can settle in.
    pub fn reachable(&self) -> Vec<StateId> {
        let all: BTreeSet<StateId> = self
            .per_label
            .iter()
            .filter(|(l, _)| *l & self.designated == 0)
            .flat_map(|(_, s)| s.iter().copied())
            .collect();
        all.into_iter().collect()
    }
}

/// Saturates the sets `Q_P` of achievable fixed points.
///
/// In a forgetful automaton that stabilizes, a node's fixed point is `δ_P` applied
/// to the multiset of its children's fixed points, and a leaf's is `δ_P(∅)`. So
/// the achievable fixed points over all finite trees are the least family closed
/// under `M ↦ δ_P(M)` for multisets `M` over achievable states. Rather than
/// enumerating multisets, the closure runs over the automaton's aggregators:
/// every summary reachable from the empty one by adding achievable states.
pub fn fixed_point_sets(a: &Cmpa, designated: Label) -> Result<FixedPointSets> {
    if !a.forgetful() {
        return Err(AutomatonError::NotForgetful("fixed-point saturation".into()).into());
    }
    if !a.deterministic() {
        return Err(AutomatonError::NotDeterministic("fixed-point saturation".into()).into());
    }
    let sig = a.signature();
    let designated = designated & sig;
    let inner: Vec<Label> = submasks(sig & !designated).collect();

    let mut per_label: BTreeMap<Label, BTreeSet<StateId>> = BTreeMap::new();
    let mut aggs: Vec<AggId> = vec![a.agg_empty()];
    let mut agg_seen: FxHashSet<AggId> = aggs.iter().copied().collect();
    // States only matter as children through the aggregator they produce from the
    // empty one: that summary determines their effect on every aggregator.
    let empty = a.agg_empty();
    let mut states: Vec<StateId> = Vec::new();
    let mut state_seen: FxHashSet<StateId> = FxHashSet::default();
    let mut unit_seen: FxHashSet<AggId> = FxHashSet::default();
    let (mut gi, mut si) = (0, 0);

    // Every (aggregator, state) pair is combined exactly once, by whichever of the
    // two is processed later.
    while gi < aggs.len() || si < states.len() {
        if gi < aggs.len() {
            let g = aggs[gi];
            gi += 1;
            for &p in &inner {
                let s = a.finish(p, None, g)?;
                per_label.entry(p).or_default().insert(s);
                if state_seen.insert(s) {
                    let unit = a.agg_add(empty, s)?;
                    if unit_seen.insert(unit) {
                        states.push(s);
                    }
                }
            }
            for &s in &states[..si] {
                let h = a.agg_add(g, s)?;
                if agg_seen.insert(h) {
                    aggs.push(h);
                }
            }
        } else {
            let s = states[si];
            si += 1;
            for idx in 0..gi {
                let h = a.agg_add(aggs[idx], s)?;
                if agg_seen.insert(h) {
                    aggs.push(h);
                }
            }
        }
    }

    if designated != 0 {
        for &p in &inner {
            let set = per_label.entry(p | designated).or_default();
            for &g in &aggs {
                set.insert(a.finish(p | designated, None, g)?);
            }
        }
    }
    Ok(FixedPointSets {
        signature: sig,
        designated,
        per_label: per_label
            .into_iter()
            .map(|(l, s)| (l, s.into_iter().collect()))
            .collect(),
        aggregators: aggs.len(),
    })
}

/// Re-checks closure directly: for every label and every multiset of at most
/// `max_children` reachable states, `δ_P(M)` lies in `Q_P`. Returns the first
/// offending label and multiset.
pub fn verify_closure(
    a: &Cmpa,
    sets: &FixedPointSets,
    max_children: usize,
) -> Result<Option<(Label, Vec<StateId>)>> {
    let reach = sets.reachable();
    let mut pick: Vec<usize> = Vec::new();
    loop {
        let children: Vec<StateId> = pick.iter().map(|&i| reach[i]).collect();
        let mut agg = a.agg_empty();
        for &c in &children {
            agg = a.agg_add(agg, c)?;
        }
        for (&label, q) in &sets.per_label {
            let s = a.finish(label, None, agg)?;
            if q.binary_search(&s).is_err() {
                return Ok(Some((label, children)));
            }
        }
        // next non-decreasing index sequence of length ≤ max_children
        if pick.len() < max_children && !reach.is_empty() {
            let last = pick.last().copied().unwrap_or(0);
            pick.push(last);
            continue;
        }
        loop {
            match pick.pop() {
                None => return Ok(None),
                Some(i) if i + 1 < reach.len() => {
                    pick.push(i + 1);
                    break;
                }
                Some(_) => {}
            }
        }
    }
}

/// Stage-1 transitions with nondeterministic initialization `π'(P) = Q_P` and no
/// rejecting states.
pub struct OmnipresentInit {
    inner: Cmpa,
    sets: FixedPointSets,
    deterministic: bool,
}

impl fmt::Debug for OmnipresentInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OmnipresentInit")
            .field("inner", &self.inner)
            .finish()
    }
}

/// Stage 2. Valid for node properties definable by a disjunction of graded modal
/// formulas; that precondition is the caller's to guarantee.
pub fn to_omnipresent_nondet(a: &Cmpa, sets: &FixedPointSets) -> Result<Cmpa> {
    for l in submasks(a.signature()) {
        if sets.get(l).is_empty() {
            return Err(AutomatonError::EmptyInit(a.alphabet().show(l)).into());
        }
    }
    let deterministic = sets.per_label.values().all(|q| q.len() == 1);
    Ok(Cmpa::new(OmnipresentInit {
        inner: a.clone(),
        sets: sets.clone(),
        deterministic,
    }))
}

/// Stage 3: power-set determinization under omnipresent acceptance. A set is
/// accepting iff every member is; no set is rejecting because stage 2 has no
/// rejecting states.
pub fn finalize(a: &Cmpa, budget: usize) -> Result<Cmpa> {
    Ok(determinize(a, SetAcceptance::Omnipresent, budget)?)
}

impl Automaton for OmnipresentInit {
    fn name(&self) -> String {
        format!("omni({})", self.inner.name())
    }

    fn alphabet(&self) -> &Arc<Alphabet> {
        self.inner.alphabet()
    }

    fn signature(&self) -> Label {
        self.inner.signature()
    }

    fn bound(&self) -> u64 {
        self.inner.bound()
    }

    fn state_space(&self) -> u64 {
        self.inner.state_space()
    }

    fn forgetful(&self) -> bool {
        self.inner.forgetful()
    }

    fn deterministic(&self) -> bool {
        self.deterministic
    }

    fn init(&self, label: Label) -> crate::automata::Result<Inits> {
        let q = self.sets.get(label);
        if q.is_empty() {
            return Err(AutomatonError::EmptyInit(self.alphabet().show(label)));
        }
        Ok(q.iter().copied().collect::<SmallVec<_>>())
    }

    fn agg_empty(&self) -> AggId {
        self.inner.agg_empty()
    }

    fn agg_add(&self, agg: AggId, child: StateId) -> crate::automata::Result<AggId> {
        self.inner.agg_add(agg, child)
    }

    fn finish(&self, label: Label, own: Option<StateId>, agg: AggId) -> crate::automata::Result<StateId> {
        self.inner.finish(label, own, agg)
    }

    fn accepting(&self, s: StateId) -> bool {
        self.inner.accepting(s)
    }

    fn rejecting(&self, _s: StateId) -> bool {
        false
    }

    fn state_name(&self, s: StateId) -> String {
        self.inner.state_name(s)
    }

    fn materialized(&self) -> usize {
        self.inner.materialized()
    }
}
