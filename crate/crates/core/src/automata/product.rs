use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use super::intern::{cached, memo, Interner, Memo};
use super::{
    AggId, Alphabet, Automaton, AutomatonError, Cmpa, Fate, Inits, Label, Result, StateId,
    DEFAULT_STATE_BUDGET,
};

/// How accepting and rejecting states of a product are formed from the components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductMode {
    /// `F = F_a × F_b`, `F' = (F'_a × Q_b) ∪ (Q_a × F'_b)`.
    Conjunction,
    /// `F = F_a × F_b`, `F' = F'_a × F_b`: `b` only vets the input (properness).
    Guarded,
}

const ACCEPT: u8 = 1;
const REJECT: u8 = 2;

/// Synchronous product; each component sees the label restricted to its own signature.
pub struct Product {
    a: Cmpa,
    b: Cmpa,
    mode: ProductMode,
    states: Interner<(StateId, StateId), (u8, Fate)>,
    aggs: Interner<(AggId, AggId)>,
    init_memo: Memo<Label, Inits>,
    add_memo: Memo<(AggId, StateId), AggId>,
    finish_memo: Memo<(Label, StateId, AggId), StateId>,
}

pub fn product(a: &Cmpa, b: &Cmpa, mode: ProductMode) -> Result<Cmpa> {
    Ok(Cmpa::new(Product::new(a, b, mode, DEFAULT_STATE_BUDGET)?))
}

impl Product {
    pub fn new(a: &Cmpa, b: &Cmpa, mode: ProductMode, budget: usize) -> Result<Self> {
        if a.alphabet() != b.alphabet() {
            return Err(AutomatonError::AlphabetMismatch);
        }
        if a.forgetful() != b.forgetful() {
            return Err(AutomatonError::NotForgetful("product".into()));
        }
        let name = format!("({} x {})", a.name(), b.name());
        Ok(Self {
            a: a.clone(),
            b: b.clone(),
            mode,
            states: Interner::new(format!("{name} states"), budget),
            aggs: Interner::new(format!("{name} aggregators"), budget),
            init_memo: memo(),
            add_memo: memo(),
            finish_memo: memo(),
        })
    }

    fn intern(&self, s: (StateId, StateId)) -> Result<StateId> {
        self.states.intern_with(s, |&(x, y)| {
            let acc = self.a.accepting(x) && self.b.accepting(y);
            let rej = match self.mode {
                ProductMode::Conjunction => self.a.rejecting(x) || self.b.rejecting(y),
                ProductMode::Guarded => self.a.rejecting(x) && self.b.accepting(y),
            };
            let mut f = 0;
            if acc {
                f |= ACCEPT;
            }
            if rej {
                f |= REJECT;
            }
            (f, self.combine(self.a.fate(x), self.b.fate(y)))
        })
    }

    fn combine(&self, fa: Fate, fb: Fate) -> Fate {
        let never_accepts = fa.never_accepts || fb.never_accepts;
        match self.mode {
            ProductMode::Conjunction => Fate {
                never_accepts,
                never_rejects: fa.never_rejects && fb.never_rejects,
            },
            ProductMode::Guarded => Fate {
                never_accepts,
                never_rejects: fa.never_rejects || fb.never_accepts,
            },
        }
    }

    /// Component states of a product state.
    pub fn split(&self, s: StateId) -> (StateId, StateId) {
        self.states.get(s)
    }
}

impl fmt::Debug for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Product")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("mode", &self.mode)
            .finish()
    }
}

impl Automaton for Product {
    fn name(&self) -> String {
        format!("({} x {})", self.a.name(), self.b.name())
    }

    fn alphabet(&self) -> &Arc<Alphabet> {
        self.a.alphabet()
    }

    fn signature(&self) -> Label {
        self.a.signature() | self.b.signature()
    }

    fn bound(&self) -> u64 {
        self.a.bound().max(self.b.bound())
    }

    fn state_space(&self) -> u64 {
        self.a.state_space().saturating_mul(self.b.state_space())
    }

    fn forgetful(&self) -> bool {
        self.a.forgetful()
    }

    fn deterministic(&self) -> bool {
        self.a.deterministic() && self.b.deterministic()
    }

    fn init(&self, label: Label) -> Result<Inits> {
        let label = label & self.signature();
        if let Some(v) = self.init_memo.get(&label) {
            return Ok(v.clone());
        }
        let (ia, ib) = (self.a.init(label)?, self.b.init(label)?);
        let mut out: Inits = SmallVec::new();
        for &x in &ia {
            for &y in &ib {
                out.push(self.intern((x, y))?);
            }
        }
        out.sort_unstable();
        out.dedup();
        self.init_memo.insert(label, out.clone());
        Ok(out)
    }

    fn agg_empty(&self) -> AggId {
        self.aggs
            .intern((self.a.agg_empty(), self.b.agg_empty()))
            .expect("budget admits the empty aggregator")
    }

    fn agg_add(&self, agg: AggId, child: StateId) -> Result<AggId> {
        cached(&self.add_memo, (agg, child), || {
            let (ga, gb) = self.aggs.get(agg);
            let (x, y) = self.states.get(child);
            let na = self.a.agg_add(ga, x)?;
            let nb = self.b.agg_add(gb, y)?;
            self.aggs.intern((na, nb))
        })
    }

    fn finish(&self, label: Label, own: Option<StateId>, agg: AggId) -> Result<StateId> {
        let label = label & self.signature();
        let own = if self.forgetful() { None } else { own };
        cached(
            &self.finish_memo,
            (label, own.unwrap_or(StateId::MAX), agg),
            || {
                let (ga, gb) = self.aggs.get(agg);
                let (oa, ob) = match own {
                    Some(s) => {
                        let (x, y) = self.states.get(s);
                        (Some(x), Some(y))
                    }
                    None => (None, None),
                };
                let x = self.a.finish(label, oa, ga)?;
                let y = self.b.finish(label, ob, gb)?;
                self.intern((x, y))
            },
        )
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
        let (ga, gb) = self.aggs.get(agg);
        self.combine(self.a.agg_fate(ga), self.b.agg_fate(gb))
    }

    fn state_name(&self, s: StateId) -> String {
        let (x, y) = self.states.get(s);
        format!("({},{})", self.a.state_name(x), self.b.state_name(y))
    }

    fn materialized(&self) -> usize {
        self.states.len()
    }
}
