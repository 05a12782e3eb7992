use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use smallvec::SmallVec;

use super::intern::{cached, memo, Interner, Memo};
use super::{
    AggId, Alphabet, Automaton, AutomatonError, Fate, Inits, Label, Result, StateId,
    DEFAULT_STATE_BUDGET,
};

/// Capped multiset of child states handed to a transition rule.
pub struct Children<K> {
    entries: Vec<(K, usize)>,
}

impl<K> Children<K> {
    /// Capped number of children whose state satisfies `pred`.
    pub fn count(&self, pred: impl Fn(&K) -> bool) -> usize {
        self.entries
            .iter()
            .filter(|(k, _)| pred(k))
            .map(|(_, n)| n)
            .sum()
    }

    pub fn any(&self, pred: impl Fn(&K) -> bool) -> bool {
        self.entries.iter().any(|(k, _)| pred(k))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, usize)> {
        self.entries.iter().map(|(k, n)| (k, *n))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

type InitFn<K> = dyn Fn(Label) -> Vec<K> + Send + Sync;
type DeltaFn<K> = dyn Fn(Label, Option<&K>, &Children<K>) -> Option<K> + Send + Sync;
type SumDeltaFn<K> = dyn Fn(Label, Option<&K>, &[u32]) -> Option<K> + Send + Sync;
type ContribFn<K> = dyn Fn(&K) -> SmallVec<[u32; 4]> + Send + Sync;
type FateFn<K> = dyn Fn(&K) -> Fate + Send + Sync;
type SumFateFn = dyn Fn(&[u32]) -> Fate + Send + Sync;

/// How child states are summarized before the transition sees them.
enum Rule<K> {
    /// Capped count per child state.
    Counts(Box<DeltaFn<K>>),
    /// Each child contributes a vector; contributions are added element-wise,
    /// each entry capped at the bound.
    Sums {
        width: usize,
        contrib: Box<ContribFn<K>>,
        delta: Box<SumDeltaFn<K>>,
    },
}
type PredFn<K> = dyn Fn(&K) -> bool + Send + Sync;
type NameFn<K> = dyn Fn(&K) -> String + Send + Sync;

const ACCEPT: u8 = 1;
const REJECT: u8 = 2;
const NEVER_ACCEPTS: u8 = 4;
const NEVER_REJECTS: u8 = 8;

/// An explicitly specified automaton: states are values of `K`, interned lazily,
/// and transitions are rules over capped child counts.
pub struct CountingAutomaton<K> {
    name: String,
    alphabet: Arc<Alphabet>,
    signature: Label,
    bound: u64,
    state_space: u64,
    forgetful: bool,
    deterministic: bool,
    init_fn: Box<InitFn<K>>,
    rule: Rule<K>,
    accept_fn: Box<PredFn<K>>,
    reject_fn: Box<PredFn<K>>,
    fate_fn: Option<Box<FateFn<K>>>,
    sum_fate_fn: Option<Box<SumFateFn>>,
    name_fn: Box<NameFn<K>>,
    states: Interner<K, u8>,
    /// Sparse capped vectors sorted by index: counts per state id, or sums.
    aggs: Interner<Arc<[(StateId, u32)]>>,
    init_memo: Memo<Label, Inits>,
    add_memo: Memo<(AggId, StateId), AggId>,
    finish_memo: Memo<(Label, StateId, AggId), StateId>,
}

pub struct CountingBuilder<K> {
    name: String,
    alphabet: Arc<Alphabet>,
    signature: Label,
    bound: u64,
    state_space: u64,
    forgetful: bool,
    budget: usize,
    init_fn: Option<Box<InitFn<K>>>,
    rule: Option<Rule<K>>,
    accept_fn: Box<PredFn<K>>,
    reject_fn: Box<PredFn<K>>,
    fate_fn: Option<Box<FateFn<K>>>,
    sum_fate_fn: Option<Box<SumFateFn>>,
    name_fn: Option<Box<NameFn<K>>>,
}

impl<K> CountingBuilder<K>
where
    K: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static,
{
    /// Size of the full state space (used for bound bookkeeping of power sets).
    pub fn state_space(mut self, n: u64) -> Self {
        self.state_space = n;
        self
    }

    /// Declares that transitions read the node's own current state.
    pub fn with_memory(mut self) -> Self {
        self.forgetful = false;
        self
    }

    pub fn budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    /// Initial states for a (signature-masked) label. More than one makes the
    /// automaton nondeterministic.
    pub fn init(mut self, f: impl Fn(Label) -> Vec<K> + Send + Sync + 'static) -> Self {
        self.init_fn = Some(Box::new(f));
        self
    }

    /// Transition rule: masked label, own state (`None` when forgetful) and the
    /// capped child counts. `None` means no transition is defined.
    pub fn delta(
        mut self,
        f: impl Fn(Label, Option<&K>, &Children<K>) -> Option<K> + Send + Sync + 'static,
    ) -> Self {
        self.rule = Some(Rule::Counts(Box::new(f)));
        self
    }

    /// Transition over summed child contributions: every child contributes a
    /// vector of length `width`, and the rule sees the element-wise sum with each
    /// entry capped at the bound. Coarser than counts, hence fewer aggregators.
    pub fn summed(
        mut self,
        width: usize,
        contrib: impl Fn(&K) -> SmallVec<[u32; 4]> + Send + Sync + 'static,
        f: impl Fn(Label, Option<&K>, &[u32]) -> Option<K> + Send + Sync + 'static,
    ) -> Self {
        self.rule = Some(Rule::Sums {
            width,
            contrib: Box::new(contrib),
            delta: Box::new(f),
        });
        self
    }

    /// Declares states whose ancestors can never accept, or never reject.
    pub fn fate(mut self, f: impl Fn(&K) -> Fate + Send + Sync + 'static) -> Self {
        self.fate_fn = Some(Box::new(f));
        self
    }

    /// For summed transitions: fate of every state finished from a sum or
    /// from any larger sum.
    pub fn sum_fate(mut self, f: impl Fn(&[u32]) -> Fate + Send + Sync + 'static) -> Self {
        self.sum_fate_fn = Some(Box::new(f));
        self
    }

    pub fn accepting(mut self, f: impl Fn(&K) -> bool + Send + Sync + 'static) -> Self {
        self.accept_fn = Box::new(f);
        self
    }

    pub fn rejecting(mut self, f: impl Fn(&K) -> bool + Send + Sync + 'static) -> Self {
        self.reject_fn = Box::new(f);
        self
    }

    pub fn names(mut self, f: impl Fn(&K) -> String + Send + Sync + 'static) -> Self {
        self.name_fn = Some(Box::new(f));
        self
    }

    /// Panics if `init` or `delta` is missing.
    pub fn build(self) -> CountingAutomaton<K> {
        let init_fn = self.init_fn.expect("init rule");
        // determinism is a property of the init rule; sample every label
        let deterministic = super::alphabet::submasks(self.signature).all(|l| init_fn(l).len() == 1);
        CountingAutomaton {
            name: self.name.clone(),
            alphabet: self.alphabet,
            signature: self.signature,
            bound: self.bound,
            state_space: self.state_space,
            forgetful: self.forgetful,
            deterministic,
            init_fn,
            rule: self.rule.expect("delta rule"),
            accept_fn: self.accept_fn,
            reject_fn: self.reject_fn,
            fate_fn: self.fate_fn,
            sum_fate_fn: self.sum_fate_fn,
            name_fn: self.name_fn.unwrap_or_else(|| Box::new(|k: &K| format!("{k:?}"))),
            states: Interner::new(format!("{} states", self.name), self.budget),
            aggs: Interner::new(format!("{} aggregators", self.name), self.budget),
            init_memo: memo(),
            add_memo: memo(),
            finish_memo: memo(),
        }
    }
}

impl<K> CountingAutomaton<K>
where
    K: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static,
{
    /// Starts a forgetful automaton over `signature` (a mask of `alphabet`) with
    /// counting bound `bound`.
    pub fn builder(
        name: impl Into<String>,
        alphabet: &Arc<Alphabet>,
        signature: Label,
        bound: u64,
    ) -> CountingBuilder<K> {
        CountingBuilder {
            name: name.into(),
            alphabet: Arc::clone(alphabet),
            signature,
            bound,
            state_space: u64::MAX,
            forgetful: true,
            budget: DEFAULT_STATE_BUDGET,
            init_fn: None,
            rule: None,
            accept_fn: Box::new(|_| false),
            reject_fn: Box::new(|_| false),
            fate_fn: None,
            sum_fate_fn: None,
            name_fn: None,
        }
    }

    fn intern(&self, k: K) -> Result<StateId> {
        self.states.intern_with(k, |k| {
            let mut f = 0;
            if (self.accept_fn)(k) {
                f |= ACCEPT;
            }
            if (self.reject_fn)(k) {
                f |= REJECT;
            }
            if let Some(fate) = &self.fate_fn {
                let fate = fate(k);
                if fate.never_accepts {
                    f |= NEVER_ACCEPTS;
                }
                if fate.never_rejects {
                    f |= NEVER_REJECTS;
                }
            }
            f
        })
    }

    /// The state value behind an id.
    pub fn state(&self, s: StateId) -> K {
        self.states.get(s)
    }

    /// Interns a state value, e.g. to build an initial choice by hand.
    pub fn state_id(&self, k: K) -> Result<StateId> {
        self.intern(k)
    }
}

impl<K> fmt::Debug for CountingAutomaton<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CountingAutomaton")
            .field("name", &self.name)
            .field("bound", &self.bound)
            .finish()
    }
}

impl<K> Automaton for CountingAutomaton<K>
where
    K: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    fn signature(&self) -> Label {
        self.signature
    }

    fn bound(&self) -> u64 {
        self.bound
    }

    fn state_space(&self) -> u64 {
        self.state_space
    }

    fn forgetful(&self) -> bool {
        self.forgetful
    }

    fn deterministic(&self) -> bool {
        self.deterministic
    }

    fn init(&self, label: Label) -> Result<Inits> {
        let label = label & self.signature;
        if let Some(v) = self.init_memo.get(&label) {
            return Ok(v.clone());
        }
        let mut out: Inits = SmallVec::new();
        for k in (self.init_fn)(label) {
            let id = self.intern(k)?;
            if !out.contains(&id) {
                out.push(id);
            }
        }
        if out.is_empty() {
            return Err(AutomatonError::EmptyInit(self.alphabet.show(label)));
        }
        out.sort_unstable();
        self.init_memo.insert(label, out.clone());
        Ok(out)
    }

    fn agg_empty(&self) -> AggId {
        self.aggs
            .intern(Arc::from(Vec::new()))
            .expect("budget admits the empty aggregator")
    }

    fn agg_add(&self, agg: AggId, child: StateId) -> Result<AggId> {
        cached(&self.add_memo, (agg, child), || {
            let cur = self.aggs.get(agg);
            let mut v: Vec<(u32, u32)> = cur.to_vec();
            let cap = u32::try_from(self.bound).unwrap_or(u32::MAX);
            let bump = |v: &mut Vec<(u32, u32)>, i: u32, by: u32| {
                if by == 0 || cap == 0 {
                    return;
                }
                match v.binary_search_by_key(&i, |&(s, _)| s) {
                    Ok(j) => v[j].1 = v[j].1.saturating_add(by).min(cap),
                    Err(j) => v.insert(j, (i, by.min(cap))),
                }
            };
            match &self.rule {
                Rule::Counts(_) => bump(&mut v, child, 1),
                Rule::Sums { width, contrib, .. } => {
                    let c = contrib(&self.states.get(child));
                    debug_assert_eq!(c.len(), *width);
                    for (i, &by) in c.iter().enumerate() {
                        bump(&mut v, i as u32, by);
                    }
                }
            }
            if *v == *cur {
                return Ok(agg);
            }
            self.aggs.intern(Arc::from(v))
        })
    }

    fn finish(&self, label: Label, own: Option<StateId>, agg: AggId) -> Result<StateId> {
        let label = label & self.signature;
        let own = if self.forgetful { None } else { own };
        let own_key = own.unwrap_or(StateId::MAX);
        cached(&self.finish_memo, (label, own_key, agg), || {
            let own_state = own.map(|s| self.states.get(s));
            let next = match &self.rule {
                Rule::Counts(delta) => {
                    let children = Children {
                        entries: self
                            .aggs
                            .get(agg)
                            .iter()
                            .map(|&(s, n)| (self.states.get(s), n as usize))
                            .collect(),
                    };
                    delta(label, own_state.as_ref(), &children)
                }
                Rule::Sums { width, delta, .. } => {
                    let mut dense = vec![0u32; *width];
                    for &(i, n) in self.aggs.get(agg).iter() {
                        dense[i as usize] = n;
                    }
                    delta(label, own_state.as_ref(), &dense)
                }
            };
            match next {
                Some(k) => self.intern(k),
                None => Err(AutomatonError::MissingTransition {
                    label: self.alphabet.show(label),
                    state: own_state.map_or_else(|| "-".into(), |k| (self.name_fn)(&k)),
                }),
            }
        })
    }

    fn accepting(&self, s: StateId) -> bool {
        self.states.extra(s) & ACCEPT != 0
    }

    fn rejecting(&self, s: StateId) -> bool {
        self.states.extra(s) & REJECT != 0
    }

    fn fate(&self, s: StateId) -> Fate {
        let f = self.states.extra(s);
        Fate {
            never_accepts: f & NEVER_ACCEPTS != 0,
            never_rejects: f & NEVER_REJECTS != 0,
        }
    }

    fn agg_fate(&self, agg: AggId) -> Fate {
        match (&self.rule, &self.sum_fate_fn) {
            (Rule::Sums { width, .. }, Some(f)) => {
                let mut dense = vec![0u32; *width];
                for &(i, n) in self.aggs.get(agg).iter() {
                    dense[i as usize] = n;
                }
                f(&dense)
            }
            _ => Fate::default(),
        }
    }

    fn state_name(&self, s: StateId) -> String {
        (self.name_fn)(&self.states.get(s))
    }

    fn materialized(&self) -> usize {
        self.states.len()
    }
}
