use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use smallvec::smallvec;

use super::{
    submasks, AggId, Alphabet, Automaton, AutomatonError, Cmpa, Fate, Inits, Label, Result,
    StateId,
};

/// The coarsest bisimulation quotient of a deterministic forgetful automaton,
/// tabulated over its reachable states and aggregators.
///
/// Two states are merged when they agree on acceptance and rejection and every
/// aggregator extended by either of them behaves alike; two aggregators are merged
/// when they finish into equivalent states under every label and stay equivalent
/// under every extension. Runs of the quotient are the class images of runs of the
/// original, so every verdict is preserved.
pub struct Quotient {
    inner: Cmpa,
    labels: FxHashMap<Label, usize>,
    init: Vec<StateId>,
    add: Vec<AggId>,
    finish: Vec<StateId>,
    flags: Vec<(bool, bool)>,
    fates: Vec<Fate>,
    agg_fates: Vec<Fate>,
    reps: Vec<StateId>,
    empty: AggId,
}

/// Minimizes `a`, failing with [`AutomatonError::StateBudgetExceeded`] when its
/// reachable states and aggregators together exceed `budget`.
pub fn minimize(a: &Cmpa, budget: usize) -> Result<Cmpa> {
    Ok(Cmpa::new(Quotient::new(a, budget)?))
}

/// Reachable part of a forgetful automaton: every pair of aggregator and state is
/// combined once.
struct Reach {
    states: Vec<StateId>,
    aggs: Vec<AggId>,
    add: FxHashMap<(usize, usize), usize>,
    /// `finish[g][l]`, state index.
    finish: Vec<Vec<usize>>,
    /// `init[l]`, state index.
    init: Vec<usize>,
}

fn reach(a: &Cmpa, labels: &[Label], budget: usize) -> Result<Reach> {
    let over = || AutomatonError::StateBudgetExceeded {
        what: format!("minimization of {}", a.name()),
        budget,
    };
    let mut state_ix: FxHashMap<StateId, usize> = FxHashMap::default();
    let mut agg_ix: FxHashMap<AggId, usize> = FxHashMap::default();
    let mut r = Reach {
        states: Vec::new(),
        aggs: Vec::new(),
        add: FxHashMap::default(),
        finish: Vec::new(),
        init: Vec::new(),
    };
    macro_rules! state {
        ($s:expr) => {{
            let s = $s;
            match state_ix.get(&s) {
                Some(&i) => i,
                None => {
                    if r.states.len() + r.aggs.len() >= budget {
                        return Err(over());
                    }
                    r.states.push(s);
                    state_ix.insert(s, r.states.len() - 1);
                    r.states.len() - 1
                }
            }
        }};
    }
    macro_rules! agg {
        ($g:expr) => {{
            let g = $g;
            match agg_ix.get(&g) {
                Some(&i) => i,
                None => {
                    if r.states.len() + r.aggs.len() >= budget {
                        return Err(over());
                    }
                    r.aggs.push(g);
                    agg_ix.insert(g, r.aggs.len() - 1);
                    r.aggs.len() - 1
                }
            }
        }};
    }
    for &l in labels {
        let init = a.init(l)?;
        let i = state!(init[0]);
        r.init.push(i);
    }
    agg!(a.agg_empty());
    let (mut gi, mut si) = (0, 0);
    while gi < r.aggs.len() || si < r.states.len() {
        if gi < r.aggs.len() {
            let g = r.aggs[gi];
            let mut fin = Vec::with_capacity(labels.len());
            for &l in labels {
                fin.push(state!(a.finish(l, None, g)?));
            }
            r.finish.push(fin);
            for s in 0..si {
                let h = agg!(a.agg_add(g, r.states[s])?);
                r.add.insert((gi, s), h);
            }
            gi += 1;
        } else {
            let s = r.states[si];
            for g in 0..gi {
                let h = agg!(a.agg_add(r.aggs[g], s)?);
                r.add.insert((g, si), h);
            }
            si += 1;
        }
    }
    Ok(r)
}

/// Renumbers keys into dense class ids in order of first appearance.
fn classes<K: Eq + std::hash::Hash>(keys: impl Iterator<Item = K>) -> (Vec<u32>, usize) {
    let mut ids: FxHashMap<K, u32> = FxHashMap::default();
    let out = keys
        .map(|k| {
            let n = ids.len() as u32;
            *ids.entry(k).or_insert(n)
        })
        .collect();
    (out, ids.len())
}

impl Quotient {
    pub fn new(a: &Cmpa, budget: usize) -> Result<Self> {
        if !a.forgetful() {
            return Err(AutomatonError::NotForgetful("minimization".into()));
        }
        if !a.deterministic() {
            return Err(AutomatonError::NotDeterministic("minimization".into()));
        }
        let labels: Vec<Label> = submasks(a.signature()).collect();
        let r = reach(a, &labels, budget)?;
        let (ns, ng) = (r.states.len(), r.aggs.len());
        let add = |g: usize, s: usize| r.add[&(g, s)];

        let (mut sc, mut n_sc) = classes(r.states.iter().map(|&s| (a.accepting(s), a.rejecting(s))));
        let mut gc = vec![0u32; ng];
        let mut n_gc = 1;
        loop {
            let (next_gc, next_n_gc) = classes((0..ng).map(|g| {
                let fin: Vec<u32> = r.finish[g].iter().map(|&s| sc[s]).collect();
                let ext: Vec<u32> = (0..ns).map(|s| gc[add(g, s)]).collect();
                (fin, ext)
            }));
            let (next_sc, next_n_sc) = classes((0..ns).map(|s| {
                let ext: Vec<u32> = (0..ng).map(|g| next_gc[add(g, s)]).collect();
                (sc[s], ext)
            }));
            let stable = next_n_gc == n_gc && next_n_sc == n_sc;
            (gc, n_gc, sc, n_sc) = (next_gc, next_n_gc, next_sc, next_n_sc);
            if stable {
                break;
            }
        }

        let mut rep_s = vec![usize::MAX; n_sc];
        for (s, &c) in sc.iter().enumerate() {
            if rep_s[c as usize] == usize::MAX {
                rep_s[c as usize] = s;
            }
        }
        let mut rep_g = vec![usize::MAX; n_gc];
        for (g, &c) in gc.iter().enumerate() {
            if rep_g[c as usize] == usize::MAX {
                rep_g[c as usize] = g;
            }
        }
        let mut fates = vec![Fate::default(); n_sc];
        for (s, &c) in sc.iter().enumerate() {
            let f = a.fate(r.states[s]);
            let e = &mut fates[c as usize];
            e.never_accepts |= f.never_accepts;
            e.never_rejects |= f.never_rejects;
        }
        let mut agg_fates = vec![Fate::default(); n_gc];
        for (g, &c) in gc.iter().enumerate() {
            let f = a.agg_fate(r.aggs[g]);
            let e = &mut agg_fates[c as usize];
            e.never_accepts |= f.never_accepts;
            e.never_rejects |= f.never_rejects;
        }
        let add_tab = (0..n_gc)
            .flat_map(|g| (0..n_sc).map(move |s| (g, s)))
            .map(|(g, s)| gc[add(rep_g[g], rep_s[s])])
            .collect();
        let finish_tab = (0..n_gc)
            .flat_map(|g| r.finish[rep_g[g]].iter().map(|&s| sc[s]))
            .collect();
        Ok(Self {
            inner: a.clone(),
            labels: labels.iter().enumerate().map(|(i, &l)| (l, i)).collect(),
            init: r.init.iter().map(|&s| sc[s]).collect(),
            add: add_tab,
            finish: finish_tab,
            flags: rep_s
                .iter()
                .map(|&s| (a.accepting(r.states[s]), a.rejecting(r.states[s])))
                .collect(),
            fates,
            agg_fates,
            reps: rep_s.iter().map(|&s| r.states[s]).collect(),
            empty: gc[0],
        })
    }

    /// Number of state classes.
    pub fn classes(&self) -> usize {
        self.reps.len()
    }

    fn label(&self, label: Label) -> usize {
        self.labels[&(label & self.inner.signature())]
    }
}

impl fmt::Debug for Quotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Quotient")
            .field("inner", &self.inner)
            .field("classes", &self.reps.len())
            .field("aggregators", &self.agg_fates.len())
            .finish()
    }
}

impl Automaton for Quotient {
    fn name(&self) -> String {
        format!("min({})", self.inner.name())
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
        self.reps.len() as u64
    }

    fn forgetful(&self) -> bool {
        true
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn init(&self, label: Label) -> Result<Inits> {
        Ok(smallvec![self.init[self.label(label)]])
    }

    fn agg_empty(&self) -> AggId {
        self.empty
    }

    fn agg_add(&self, agg: AggId, child: StateId) -> Result<AggId> {
        Ok(self.add[agg as usize * self.reps.len() + child as usize])
    }

    fn finish(&self, label: Label, _own: Option<StateId>, agg: AggId) -> Result<StateId> {
        Ok(self.finish[agg as usize * self.labels.len() + self.label(label)])
    }

    fn accepting(&self, s: StateId) -> bool {
        self.flags[s as usize].0
    }

    fn rejecting(&self, s: StateId) -> bool {
        self.flags[s as usize].1
    }

    fn fate(&self, s: StateId) -> Fate {
        self.fates[s as usize]
    }

    fn agg_fate(&self, agg: AggId) -> Fate {
        self.agg_fates[agg as usize]
    }

    fn state_name(&self, s: StateId) -> String {
        self.inner.state_name(self.reps[s as usize])
    }

    fn materialized(&self) -> usize {
        self.reps.len()
    }
}

/// Every state reachable in some run of `a` on some model, in order of discovery.
/// Works for non-forgetful and nondeterministic automata as well; fails once more
/// than `budget` states and aggregators have been found.
pub fn reachable_states(a: &dyn Automaton, budget: usize) -> Result<Vec<StateId>> {
    let over = || AutomatonError::StateBudgetExceeded {
        what: format!("state enumeration of {}", a.name()),
        budget,
    };
    let labels: Vec<Label> = submasks(a.signature()).collect();
    let mut states: Vec<StateId> = Vec::new();
    let mut seen = rustc_hash::FxHashSet::default();
    for &l in &labels {
        for s in a.init(l)? {
            if seen.insert(s) {
                states.push(s);
            }
        }
    }
    let mut aggs = vec![a.agg_empty()];
    let mut agg_seen: rustc_hash::FxHashSet<AggId> = aggs.iter().copied().collect();
    loop {
        let (ns, ng) = (states.len(), aggs.len());
        for g in 0..ng {
            for &s in &states[..ns] {
                let h = a.agg_add(aggs[g], s)?;
                if agg_seen.insert(h) {
                    aggs.push(h);
                }
            }
        }
        let owns: Vec<Option<StateId>> = if a.forgetful() {
            vec![None]
        } else {
            states[..ns].iter().map(|&s| Some(s)).collect()
        };
        for &g in &aggs {
            for &l in &labels {
                for &own in &owns {
                    let s = a.finish(l, own, g)?;
                    if seen.insert(s) {
                        states.push(s);
                    }
                }
            }
        }
        if states.len() + aggs.len() > budget {
            return Err(over());
        }
        if states.len() == ns && aggs.len() == ng {
            return Ok(states);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{decide, AcceptanceCondition, CountingAutomaton, Kripke, RunLimits};
    use crate::compiler::{compile_mso, CompileOptions};
    use crate::harness::{corpus_props, mso_corpus};
    use crate::model::enumerate_trees;

    /// "p somewhere below", with a useless tag recording whether the node has `q`.
    fn tagged(al: &Arc<Alphabet>) -> Cmpa {
        let (p, q) = (al.bit_of("p"), al.bit_of("q"));
        let a = CountingAutomaton::builder("tagged", al, p | q, 1)
            .state_space(4)
            .init(move |l| vec![(l & p != 0, l & q != 0)])
            .delta(move |l, _, kids| Some((l & p != 0 || kids.count(|s| s.0) > 0, l & q != 0)))
            .accepting(|s| s.0)
            .build();
        Cmpa::new(a)
    }

    #[test]
    fn merges_states_that_differ_only_in_a_tag() {
        let al = Alphabet::of(&["p", "q"]);
        let a = tagged(&al);
        assert_eq!(reachable_states(&a, 100).unwrap().len(), 4);
        let m = minimize(&a, 100).unwrap();
        assert_eq!(reachable_states(&m, 100).unwrap().len(), 2);
        for t in enumerate_trees(4, &corpus_props()) {
            let k = Kripke::from_tree(&t, &al);
            let limits = RunLimits::default();
            for c in [AcceptanceCondition::Standard, AcceptanceCondition::FixedPoint] {
                assert_eq!(decide(&a, &k, 0, c, &limits).unwrap(), decide(&m, &k, 0, c, &limits).unwrap());
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let al = Alphabet::of(&["p", "q"]);
        assert!(matches!(
            minimize(&tagged(&al), 3),
            Err(AutomatonError::StateBudgetExceeded { .. })
        ));
    }

    #[test]
    fn quotienting_during_compilation_keeps_verdicts() {
        let literal = CompileOptions {
            minimize: 0,
            ..CompileOptions::default()
        };
        let trees: Vec<_> = enumerate_trees(4, &corpus_props()).collect();
        for (id, f) in mso_corpus() {
            let plain = compile_mso(&f, &corpus_props(), literal).unwrap();
            let small = compile_mso(&f, &corpus_props(), CompileOptions::default()).unwrap();
            for t in &trees {
                let v = |u: &crate::compiler::CompilationUnit| {
                    decide(&u.fixed_point, &u.rooted(t), 0, AcceptanceCondition::FixedPoint, &RunLimits::default())
                        .unwrap()
                };
                assert_eq!(v(&plain), v(&small), "{id} on {}", t.canonical());
            }
        }
    }
}
