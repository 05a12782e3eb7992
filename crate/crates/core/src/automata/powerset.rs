use std::fmt;
use std::sync::Arc;

use smallvec::smallvec;

use super::intern::{cached, memo, Interner, Memo};
use super::{
    AggId, Alphabet, Automaton, AutomatonError, Cmpa, Fate, Inits, Label, Result, StateId,
    DEFAULT_STATE_BUDGET,
};

/// Acceptance of a set of inner states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetAcceptance {
    /// Accept if some member accepts; reject if none accepts and some rejects.
    Existential,
    /// Accept if every member accepts; reject if every member rejects.
    Omnipresent,
}

const ACCEPT: u8 = 1;
const REJECT: u8 = 2;

/// Power-set automaton over a forgetful inner automaton. A state is the set of
/// inner states over all choices: initial choices, and optionally a per-round
/// guess of one label bit.
pub struct Powerset {
    inner: Cmpa,
    acceptance: SetAcceptance,
    /// Bit guessed afresh at every node in every round; removed from the signature.
    guess: Option<Label>,
    states: Interner<Arc<[StateId]>, (u8, Fate)>,
    aggs: Interner<Arc<[AggId]>>,
    init_memo: Memo<Label, StateId>,
    add_memo: Memo<(AggId, StateId), AggId>,
    finish_memo: Memo<(Label, AggId), StateId>,
}

/// Power-set determinization of a nondeterministic forgetful automaton.
pub fn determinize(a: &Cmpa, acceptance: SetAcceptance, budget: usize) -> Result<Cmpa> {
    Ok(Cmpa::new(Powerset::new(a, acceptance, None, budget)?))
}

/// Deterministic automaton that guesses the label `bit` at every node in every
/// round and tracks all outcomes of `a`.
pub fn guess_label(a: &Cmpa, bit: Label, budget: usize) -> Result<Cmpa> {
    Ok(Cmpa::new(Powerset::new(
        a,
        SetAcceptance::Existential,
        Some(bit),
        budget,
    )?))
}

fn sorted(mut v: Vec<u32>) -> Arc<[u32]> {
    v.sort_unstable();
    v.dedup();
    Arc::from(v)
}

impl Powerset {
    pub fn new(
        inner: &Cmpa,
        acceptance: SetAcceptance,
        guess: Option<Label>,
        budget: usize,
    ) -> Result<Self> {
        if !inner.forgetful() {
            return Err(AutomatonError::NotForgetful("power-set construction".into()));
        }
        let name = inner.name();
        Ok(Self {
            inner: inner.clone(),
            acceptance,
            guess,
            states: Interner::new(format!("power set of {name}"), budget),
            aggs: Interner::new(format!("power set aggregators of {name}"), budget),
            init_memo: memo(),
            add_memo: memo(),
            finish_memo: memo(),
        })
    }

    pub fn with_default_budget(inner: &Cmpa, acceptance: SetAcceptance) -> Result<Self> {
        Self::new(inner, acceptance, None, DEFAULT_STATE_BUDGET)
    }

    /// Inner states making up a power-set state.
    pub fn members(&self, s: StateId) -> Arc<[StateId]> {
        self.states.get(s)
    }

    fn intern(&self, mut set: Vec<StateId>) -> Result<StateId> {
        set.sort_unstable();
        set.dedup();
        if self.acceptance == SetAcceptance::Existential {
            // dead members cannot affect acceptance here or at any ancestor, and
            // everything derived from them is dead as well
            set.retain(|&q| !self.inner.fate(q).dead());
        }
        self.states.intern_with(Arc::from(set), |set| {
            let acc = |q: &StateId| self.inner.accepting(*q);
            let rej = |q: &StateId| self.inner.rejecting(*q);
            let (a, r) = match self.acceptance {
                SetAcceptance::Existential => {
                    let a = set.iter().any(acc);
                    (a, !a && set.iter().any(rej))
                }
                SetAcceptance::Omnipresent => (set.iter().all(acc), set.iter().all(rej)),
            };
            let fates = set.iter().map(|&q| self.inner.fate(q));
            let fate = match self.acceptance {
                SetAcceptance::Existential => Fate {
                    never_accepts: fates.clone().all(|f| f.never_accepts),
                    never_rejects: fates.clone().all(|f| f.never_rejects),
                },
                SetAcceptance::Omnipresent => Fate {
                    never_accepts: fates.clone().any(|f| f.never_accepts),
                    never_rejects: fates.clone().any(|f| f.never_rejects),
                },
            };
            ((u8::from(a) * ACCEPT) | (u8::from(r) * REJECT), fate)
        })
    }

    /// Label variants the inner automaton is run under.
    fn variants(&self, label: Label) -> smallvec::SmallVec<[Label; 2]> {
        match self.guess {
            None => smallvec![label],
            Some(bit) => smallvec![label & !bit, label | bit],
        }
    }
}

impl fmt::Debug for Powerset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Powerset")
            .field("inner", &self.inner)
            .field("acceptance", &self.acceptance)
            .field("guess", &self.guess)
            .finish()
    }
}

impl Automaton for Powerset {
    fn name(&self) -> String {
        match self.guess {
            Some(bit) => format!(
                "guess[{}]({})",
                self.alphabet().show(bit).trim_matches(|c| c == '{' || c == '}'),
                self.inner.name()
            ),
            None => format!("det[{:?}]({})", self.acceptance, self.inner.name()),
        }
    }

    fn alphabet(&self) -> &Arc<Alphabet> {
        self.inner.alphabet()
    }

    fn signature(&self) -> Label {
        self.inner.signature() & !self.guess.unwrap_or(0)
    }

    /// `k·|Q|` for an inner `k`-bounded automaton with state set `Q`.
    fn bound(&self) -> u64 {
        self.inner.bound().saturating_mul(self.inner.state_space())
    }

    fn state_space(&self) -> u64 {
        let n = self.inner.state_space();
        if n >= 64 {
            u64::MAX
        } else {
            1 << n
        }
    }

    fn forgetful(&self) -> bool {
        true
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn init(&self, label: Label) -> Result<Inits> {
        let label = label & self.signature();
        let s = cached(&self.init_memo, label, || {
            let mut set = Vec::new();
            for v in self.variants(label) {
                set.extend(self.inner.init(v)?);
            }
            self.intern(set)
        })?;
        Ok(smallvec![s])
    }

    fn agg_empty(&self) -> AggId {
        self.aggs
            .intern(Arc::from(vec![self.inner.agg_empty()]))
            .expect("budget admits the empty aggregator")
    }

    fn agg_add(&self, agg: AggId, child: StateId) -> Result<AggId> {
        cached(&self.add_memo, (agg, child), || {
            let gs = self.aggs.get(agg);
            let qs = self.states.get(child);
            let mut out = Vec::with_capacity(gs.len() * qs.len());
            for &g in gs.iter() {
                for &q in qs.iter() {
                    let h = self.inner.agg_add(g, q)?;
                    // only dead states can be finished from a dead aggregator
                    if self.acceptance == SetAcceptance::Omnipresent || !self.inner.agg_fate(h).dead() {
                        out.push(h);
                    }
                }
            }
            self.aggs.intern(sorted(out))
        })
    }

    fn finish(&self, label: Label, _own: Option<StateId>, agg: AggId) -> Result<StateId> {
        let label = label & self.signature();
        cached(&self.finish_memo, (label, agg), || {
            let gs = self.aggs.get(agg);
            let mut out = Vec::with_capacity(gs.len() * 2);
            for v in self.variants(label) {
                for &g in gs.iter() {
                    out.push(self.inner.finish(v, None, g)?);
                }
            }
            self.intern(out)
        })
    }

    fn accepting(&self, s: StateId) -> bool {
        self.states.extra(s).0 & ACCEPT != 0
    }

    fn rejecting(&self, s: StateId) -> bool {
        self.states.extra(s).0 & REJECT != 0
    }

    fn fate(&self, s: StateId) -> Fate {
        self.states.extra(s).1
    }

    fn agg_fate(&self, agg: AggId) -> Fate {
        let fates: Vec<Fate> = self.aggs.get(agg).iter().map(|&g| self.inner.agg_fate(g)).collect();
        match self.acceptance {
            SetAcceptance::Existential => Fate {
                never_accepts: fates.iter().all(|f| f.never_accepts),
                never_rejects: fates.iter().all(|f| f.never_rejects),
            },
            SetAcceptance::Omnipresent if fates.is_empty() => Fate::default(),
            SetAcceptance::Omnipresent => Fate {
                never_accepts: fates.iter().any(|f| f.never_accepts),
                never_rejects: fates.iter().any(|f| f.never_rejects),
            },
        }
    }

    fn state_name(&self, s: StateId) -> String {
        let names: Vec<String> = self
            .states
            .get(s)
            .iter()
            .map(|&q| self.inner.state_name(q))
            .collect();
        format!("{{{}}}", names.join(","))
    }

    fn materialized(&self) -> usize {
        self.states.len()
    }
}
