//! Counting message-passing automata: the execution engine and the structural
//! combinators (negation, product, power set).
//!
//! Transition functions are evaluated incrementally. Every automaton exposes an
//! *aggregator*: an interned summary of the multiset of child states received so far,
//! folded one child at a time with [`Automaton::agg_add`] and consumed by
//! [`Automaton::finish`]. For explicit automata the aggregator is the capped count
//! vector; products pair the component aggregators; power sets keep the set of inner
//! aggregators reachable by picking one state from every child set. This keeps power
//! sets exact without ever enumerating selections explicitly.

mod alphabet;
mod dump;
mod intern;
mod minimize;
mod powerset;
mod product;
mod quasi;
mod run;
mod table;

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::model::Multiset;

pub use alphabet::{submasks, Alphabet, Label};
pub use dump::{describe, trace_tsv};
pub use minimize::{minimize, reachable_states, Quotient};
pub use powerset::{determinize, guess_label, Powerset, SetAcceptance};
pub use product::{product, Product, ProductMode};
pub use quasi::{check_quasi_acyclic, QuasiReport, QuasiViolation};
pub use run::{
    choice_vectors, decide, omnipresent_round, run, run_all_choices, step, AcceptanceCondition,
    Kripke, RunLimits, RunTrace, Verdict,
};
pub use table::{Children, CountingAutomaton, CountingBuilder};

pub type StateId = u32;
pub type AggId = u32;
pub type Inits = SmallVec<[StateId; 4]>;

/// Default cap on interned states (and aggregators) per automaton.
pub const DEFAULT_STATE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Error)]
pub enum AutomatonError {
    #[error("no transition for label {label} in state {state}")]
    MissingTransition { label: String, state: String },
    #[error("no initial state for label {0}")]
    EmptyInit(String),
    #[error("{what}: more than {budget} states")]
    StateBudgetExceeded { what: String, budget: usize },
    #[error("no stabilization or cycle within {} rounds", .0.rounds.len().saturating_sub(1))]
    HorizonExceeded(Box<RunTrace>),
    #[error("{needed} initial choice vectors exceed the budget of {budget}")]
    ChoiceBudgetExceeded { needed: u128, budget: u128 },
    #[error("initial choice for node {0} is not an initial state")]
    InvalidChoice(usize),
    #[error("{0} symbols do not fit in one label word (max 64)")]
    TooManySymbols(usize),
    #[error("automata over different alphabets cannot be combined")]
    AlphabetMismatch,
    #[error("{0} requires a forgetful automaton")]
    NotForgetful(String),
    #[error("{0} requires a deterministic automaton")]
    NotDeterministic(String),
}

pub type Result<T, E = AutomatonError> = std::result::Result<T, E>;

/// What a state guarantees about every state later computed at its ancestors,
/// i.e. from any multiset containing it, under any label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Fate {
    pub never_accepts: bool,
    pub never_rejects: bool,
}

impl Fate {
    /// Neither accepting nor rejecting, now or at any ancestor.
    pub fn dead(self) -> bool {
        self.never_accepts && self.never_rejects
    }

    fn swapped(self) -> Self {
        Self {
            never_accepts: self.never_rejects,
            never_rejects: self.never_accepts,
        }
    }
}

/// A bounded counting message-passing automaton.
///
/// Labels are bit sets over a shared [`Alphabet`]; every automaton only looks at
/// the bits in its [`signature`](Automaton::signature). Nondeterminism lives in
/// initialization only.
pub trait Automaton: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn alphabet(&self) -> &Arc<Alphabet>;
    fn signature(&self) -> Label;
    /// The counting bound `k`: transitions cannot tell `M` from `M|k`.
    fn bound(&self) -> u64;
    /// Size of the full (not just materialized) state space, saturating.
    fn state_space(&self) -> u64;
    fn forgetful(&self) -> bool;
    fn deterministic(&self) -> bool;

    fn init(&self, label: Label) -> Result<Inits>;
    fn agg_empty(&self) -> AggId;
    fn agg_add(&self, agg: AggId, child: StateId) -> Result<AggId>;
    /// The transition `δ_P(own, M)` where `agg` summarizes `M`. Forgetful automata
    /// ignore `own` and accept `None`.
    fn finish(&self, label: Label, own: Option<StateId>, agg: AggId) -> Result<StateId>;

    fn accepting(&self, s: StateId) -> bool;
    fn rejecting(&self, s: StateId) -> bool;
    /// Conservative: the default promises nothing.
    fn fate(&self, _s: StateId) -> Fate {
        Fate::default()
    }
    /// Fate shared by every state finished from `agg` or from any extension of it.
    fn agg_fate(&self, _agg: AggId) -> Fate {
        Fate::default()
    }
    fn state_name(&self, s: StateId) -> String;
    /// Number of states materialized so far.
    fn materialized(&self) -> usize;
}

/// A shared automaton handle. Negation flips the roles of accepting and
/// rejecting states and shares everything else.
#[derive(Clone)]
pub struct Cmpa {
    inner: Arc<dyn Automaton>,
    flipped: bool,
}

impl Cmpa {
    pub fn new(a: impl Automaton + 'static) -> Self {
        Self {
            inner: Arc::new(a),
            flipped: false,
        }
    }

    pub fn from_arc(inner: Arc<dyn Automaton>) -> Self {
        Self {
            inner,
            flipped: false,
        }
    }

    pub fn negate(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
            flipped: !self.flipped,
        }
    }

    pub fn is_negated(&self) -> bool {
        self.flipped
    }

    /// True if both handles share the same underlying automaton.
    pub fn same_core(&self, other: &Cmpa) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    /// `δ_P(own, M)` applied to an explicit multiset, capped at the bound first.
    pub fn delta(
        &self,
        label: Label,
        own: Option<StateId>,
        children: &Multiset<StateId>,
    ) -> Result<StateId> {
        let k = usize::try_from(self.bound()).unwrap_or(usize::MAX);
        let mut agg = self.agg_empty();
        for (&s, n) in children.cap(k).iter() {
            for _ in 0..n {
                agg = self.agg_add(agg, s)?;
            }
        }
        self.finish(label, own, agg)
    }
}

impl fmt::Debug for Cmpa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cmpa")
            .field("name", &self.name())
            .field("negated", &self.flipped)
            .finish()
    }
}

impl Automaton for Cmpa {
    fn name(&self) -> String {
        if self.flipped {
            format!("not({})", self.inner.name())
        } else {
            self.inner.name()
        }
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
        self.inner.deterministic()
    }

    fn init(&self, label: Label) -> Result<Inits> {
        self.inner.init(label)
    }

    fn agg_empty(&self) -> AggId {
        self.inner.agg_empty()
    }

    fn agg_add(&self, agg: AggId, child: StateId) -> Result<AggId> {
        self.inner.agg_add(agg, child)
    }

    fn finish(&self, label: Label, own: Option<StateId>, agg: AggId) -> Result<StateId> {
        self.inner.finish(label, own, agg)
    }

    fn accepting(&self, s: StateId) -> bool {
        if self.flipped {
            self.inner.rejecting(s)
        } else {
            self.inner.accepting(s)
        }
    }

    fn rejecting(&self, s: StateId) -> bool {
        if self.flipped {
            self.inner.accepting(s)
        } else {
            self.inner.rejecting(s)
        }
    }

    fn fate(&self, s: StateId) -> Fate {
        let f = self.inner.fate(s);
        if self.flipped {
            f.swapped()
        } else {
            f
        }
    }

    fn agg_fate(&self, agg: AggId) -> Fate {
        let f = self.inner.agg_fate(agg);
        if self.flipped {
            f.swapped()
        } else {
            f
        }
    }

    fn state_name(&self, s: StateId) -> String {
        self.inner.state_name(s)
    }

    fn materialized(&self) -> usize {
        self.inner.materialized()
    }
}

/// Swaps accepting and rejecting states; states, transitions and bound are shared.
pub fn negate(a: &Cmpa) -> Cmpa {
    a.negate()
}

/// `M|k`.
pub fn cap_multiset<E: Ord + Clone>(m: &Multiset<E>, k: usize) -> Multiset<E> {
    m.cap(k)
}
