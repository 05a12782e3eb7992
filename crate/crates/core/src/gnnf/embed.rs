use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::automata::{reachable_states, Automaton, AutomatonError, Cmpa, Label, StateId};

use super::{sorted_sum, FloatNum, FloatSystem, GnnError, GnnF, Result};

/// A deterministic bounded automaton as a GNN[F].
///
/// A feature vector is a one-hot block over the automaton's reachable states
/// followed by one coordinate per signature symbol holding the node's label (a GNN
/// only sees its own vector, so the label has to travel with the state). `AGG` is
/// the sorted saturating sum clamped at `k`; `COM` reads the own state, own label
/// and the clamped child counts and looks up the transition.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub gnn: GnnF,
    /// Automaton state of each one-hot position.
    pub states: Vec<StateId>,
    /// Signature bits in label-block order.
    pub bits: Vec<Label>,
}

impl Embedding {
    /// The automaton state a feature vector encodes, if it is a one-hot state block.
    pub fn decode(&self, v: &[FloatNum]) -> Option<StateId> {
        let mut hot = v[..self.states.len()].iter().enumerate().filter(|(_, x)| !x.is_zero());
        match (hot.next(), hot.next()) {
            (Some((i, _)), None) => Some(self.states[i]),
            _ => None,
        }
    }
}

/// Builds the embedding of `a` over `system`, which must represent the integers
/// `0..=k` exactly.
pub fn embed_fcmpa(a: &Cmpa, system: FloatSystem, budget: usize) -> Result<Embedding> {
    if !a.deterministic() {
        return Err(AutomatonError::NotDeterministic("GNN embedding".into()).into());
    }
    let k = usize::try_from(a.bound()).unwrap_or(usize::MAX);
    let ints: Vec<FloatNum> = (0..=k.min(1 << 20) as i64)
        .map_while(|i| system.int(i))
        .collect();
    if ints.len() != k + 1 {
        return Err(GnnError::SystemTooSmall(format!(
            "{system} does not represent every integer up to the bound {k}"
        )));
    }
    let states = reachable_states(a, budget)?;
    let n = states.len();
    let index: FxHashMap<StateId, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let sig = a.signature();
    let bits: Vec<Label> = (0..64).map(|i| 1u64 << i).filter(|b| sig & b != 0).collect();
    let dim = n + bits.len();
    let (zero, one) = (system.zero(), ints[1]);

    let encode = {
        let (index, bits) = (index.clone(), bits.clone());
        move |s: StateId, label: Label| -> Result<Vec<FloatNum>> {
            let i = *index
                .get(&s)
                .ok_or_else(|| GnnError::Config(format!("state {s} was not enumerated")))?;
            let mut v = vec![zero; dim];
            v[i] = one;
            for (j, &b) in bits.iter().enumerate() {
                if label & b != 0 {
                    v[n + j] = one;
                }
            }
            Ok(v)
        }
    };
    let states = Arc::new(states);
    let auto = a.clone();
    let init = {
        let encode = encode.clone();
        let a = a.clone();
        move |label: Label| -> Result<Vec<FloatNum>> {
            let s = a.init(label)?[0];
            encode(s, label & sig)
        }
    };
    let kk = ints[k];
    let agg = move |m: &crate::model::Multiset<Vec<FloatNum>>| -> Result<Vec<FloatNum>> {
        Ok(sorted_sum(&system, dim, m)
            .into_iter()
            .map(|x| if x > kk { kk } else { x })
            .collect())
    };
    let com = {
        let (states, bits, ints) = (Arc::clone(&states), bits.clone(), ints.clone());
        move |own: &[FloatNum], counts: &[FloatNum]| -> Result<Vec<FloatNum>> {
            let state_of = |v: &[FloatNum]| v[..n].iter().position(|x| !x.is_zero()).map(|i| states[i]);
            let own_state = state_of(own).ok_or_else(|| GnnError::Config("feature is not one-hot".into()))?;
            let label = bits
                .iter()
                .enumerate()
                .filter(|(j, _)| !own[n + j].is_zero())
                .fold(0, |l, (_, &b)| l | b);
            let mut g = auto.agg_empty();
            for (i, c) in counts[..n].iter().enumerate() {
                let times = ints.iter().position(|x| x == c).ok_or_else(|| {
                    GnnError::Config(format!("count {} is not an integer up to {k}", system.show(*c)))
                })?;
                for _ in 0..times {
                    g = auto.agg_add(g, states[i])?;
                }
            }
            let own = if auto.forgetful() { None } else { Some(own_state) };
            encode(auto.finish(label, own, g)?, label)
        }
    };
    let accepting = {
        let (states, a) = (Arc::clone(&states), a.clone());
        move |v: &[FloatNum]| {
            v[..n]
                .iter()
                .position(|x| !x.is_zero())
                .is_some_and(|i| a.accepting(states[i]))
        }
    };
    Ok(Embedding {
        gnn: GnnF::new(system, dim, k, init, agg, com, accepting),
        states: states.to_vec(),
        bits,
    })
}
