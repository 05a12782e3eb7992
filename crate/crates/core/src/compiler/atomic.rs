use std::sync::Arc;

use smallvec::{smallvec, SmallVec};

use crate::automata::{Alphabet, Cmpa, CountingAutomaton, Fate, Label};

/// `P(y)`: does the subtree contain a node carrying both `P` and `y`?
///
/// `pred` and `var` are label bits. A second-order atom `Y(y)` is the same
/// automaton with the bit of `Y` as `pred`.
pub fn atomic_py(alphabet: &Arc<Alphabet>, pred: Label, var: Label, text: &str) -> Cmpa {
    let both = pred | var;
    let pos = format!("q[{text}]");
    let neg = format!("q[!{text}]");
    let a = CountingAutomaton::builder(format!("A[{text}]"), alphabet, both, 1)
        .state_space(2)
        .init(move |l| vec![l & both == both])
        .summed(
            1,
            |&s| smallvec![u32::from(s)],
            move |l, _, sum| Some(l & both == both || sum[0] > 0),
        )
        .accepting(|&s| s)
        .rejecting(|&s| !s)
        .fate(|&s| Fate {
            never_accepts: false,
            never_rejects: s,
        })
        .sum_fate(|sum| Fate {
            never_accepts: false,
            never_rejects: sum[0] > 0,
        })
        .names(move |&s| if s { pos.clone() } else { neg.clone() })
        .build();
    Cmpa::new(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Ryz {
    Edge,
    NoEdge,
    Y,
    Z,
}

fn ryz_init(l: Label, y: Label, z: Label) -> Ryz {
    match (l & y != 0, l & z != 0) {
        (false, true) => Ryz::Z,
        (true, false) => Ryz::Y,
        _ => Ryz::NoEdge,
    }
}

/// `E(y,z)`: `z` is a child of `y`.
///
/// A `y`-node that sees a `z`-child enters `q[E]`, which then climbs to the root.
/// The clauses are applied in order: `q_z` is absorbing, `q_y` stays put unless a
/// `q_z` arrives, and everything else falls through to `q[!E]`. In particular a
/// `q_y` node receiving `q[E]` from below stays `q_y`. A node carrying both `y`
/// and `z` starts in `q[!E]` (edges are irreflexive).
pub fn atomic_ryz(alphabet: &Arc<Alphabet>, y: Label, z: Label, text: &str) -> Cmpa {
    let names: [String; 4] = [
        format!("q[{text}]"),
        format!("q[!{text}]"),
        "q_y".into(),
        "q_z".into(),
    ];
    let a = CountingAutomaton::builder(format!("A[{text}]"), alphabet, y | z, 1)
        .state_space(4)
        .init(move |l| vec![ryz_init(l, y, z)])
        .summed(
            2,
            |&s| smallvec![u32::from(s == Ryz::Z), u32::from(s == Ryz::Edge)],
            move |l, _, got| {
                Some(match ryz_init(l, y, z) {
                    Ryz::Z => Ryz::Z,
                    Ryz::Y if got[0] == 0 => Ryz::Y,
                    Ryz::Y => Ryz::Edge,
                    Ryz::NoEdge if got[1] > 0 => Ryz::Edge,
                    _ => Ryz::NoEdge,
                })
            },
        )
        .accepting(|&s| s == Ryz::Edge)
        .rejecting(|&s| s != Ryz::Edge)
        .names(move |s| {
            match s {
                Ryz::Edge => &names[0],
                Ryz::NoEdge => &names[1],
                Ryz::Y => &names[2],
                Ryz::Z => &names[3],
            }
            .clone()
        })
        .build();
    Cmpa::new(a)
}

/// `y = z`: some node carries both variables.
pub fn atomic_eq(alphabet: &Arc<Alphabet>, y: Label, z: Label, text: &str) -> Cmpa {
    let both = y | z;
    let pos = format!("q[{text}]");
    let neg = format!("q[!{text}]");
    let a = CountingAutomaton::builder(format!("A[{text}]"), alphabet, both, 1)
        .state_space(2)
        .init(move |l| vec![l & both == both])
        .summed(
            1,
            |&s| smallvec![u32::from(s)],
            move |l, _, sum| Some(l & both == both || sum[0] > 0),
        )
        .accepting(|&s| s)
        .rejecting(|&s| !s)
        .fate(|&s| Fate {
            never_accepts: false,
            never_rejects: s,
        })
        .sum_fate(|sum| Fate {
            never_accepts: false,
            never_rejects: sum[0] > 0,
        })
        .names(move |&s| if s { pos.clone() } else { neg.clone() })
        .build();
    Cmpa::new(a)
}

/// Properness of first-order variables: per variable, the number of occurrences
/// within distance `i` below the node in round `i`, clipped at 2.
///
/// Accepting when every count is exactly 1, rejecting when some count is 2. With
/// a count still at 0 the state is neither. `vars` are `(bit, name)` pairs.
pub fn properness(alphabet: &Arc<Alphabet>, vars: &[(Label, String)]) -> Cmpa {
    assert!(!vars.is_empty(), "properness needs at least one variable");
    let bits: SmallVec<[Label; 4]> = vars.iter().map(|(b, _)| *b).collect();
    let names: Vec<String> = vars.iter().map(|(_, n)| n.clone()).collect();
    let signature = bits.iter().fold(0, |m, b| m | b);
    let space = 3u64.saturating_pow(bits.len() as u32);
    let title = format!("proper[{}]", names.join(","));
    let init_bits = bits.clone();
    let width = bits.len();
    let a = CountingAutomaton::builder(title, alphabet, signature, 2)
        .state_space(space)
        .init(move |l| {
            vec![init_bits
                .iter()
                .map(|&b| u8::from(l & b != 0))
                .collect::<SmallVec<[u8; 4]>>()]
        })
        .summed(
            width,
            |s| s.iter().map(|&c| u32::from(c)).collect(),
            move |l, _, below| {
                let counts = bits
                    .iter()
                    .zip(below)
                    .map(|(&b, &n)| (u32::from(l & b != 0) + n).min(2) as u8)
                    .collect::<SmallVec<[u8; 4]>>();
                Some(counts)
            },
        )
        .accepting(|s| s.iter().all(|&c| c == 1))
        .rejecting(|s| s.contains(&2))
        // a doubled variable stays doubled all the way up
        .fate(|s| Fate {
            never_accepts: s.contains(&2),
            never_rejects: false,
        })
        .sum_fate(|below| Fate {
            never_accepts: below.iter().any(|&n| n >= 2),
            never_rejects: false,
        })
        .names(move |s| {
            let parts: Vec<String> = names
                .iter()
                .zip(s.iter())
                .map(|(n, c)| format!("{n}>={c}"))
                .collect();
            format!("q[{}]", parts.join(","))
        })
        .build();
    Cmpa::new(a)
}
