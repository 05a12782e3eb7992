//! Small hand-built nondeterministic forgetful automata.
//!
//! Each one detects a property bottom-up and may start a node labeled with the
//! property's witness in a `hint` state that announces the witness one round
//! early. Hints only appear where the witness really is, so after round 0 every
//! node is `no` for a while and then `yes` for good.

use std::sync::Arc;

use crate::automata::{Alphabet, Cmpa, CountingAutomaton, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Hint {
    Bot,
    Hint,
    No,
    Yes,
}

fn hinted(
    name: &str,
    alphabet: &Arc<Alphabet>,
    witness: Label,
    need: usize,
    with_bot: bool,
) -> Cmpa {
    let states = if with_bot { 4 } else { 3 };
    let a = CountingAutomaton::builder(name, alphabet, witness, need as u64)
        .state_space(states)
        .init(move |l| match (l & witness != 0, with_bot) {
            (true, true) => vec![Hint::Bot, Hint::Hint],
            (false, true) => vec![Hint::Bot],
            (true, false) => vec![Hint::Hint, Hint::Yes],
            (false, false) => vec![Hint::No],
        })
        .delta(move |l, _, kids| {
            let seen = kids.count(|s| matches!(s, Hint::Hint | Hint::Yes));
            Some(if l & witness != 0 || seen >= need {
                Hint::Yes
            } else {
                Hint::No
            })
        })
        .accepting(|s| *s == Hint::Yes)
        .rejecting(|s| *s == Hint::No)
        .names(|s| format!("{s:?}").to_lowercase())
        .build();
    Cmpa::new(a)
}

/// `p` somewhere below or at the node; 4 states, bound 1.
pub fn reach_p(alphabet: &Arc<Alphabet>) -> Cmpa {
    hinted("reach-p", alphabet, alphabet.bit_of("p"), 1, true)
}

/// `p` at the node, or two children that satisfy this recursively; 4 states, bound 2.
pub fn branch_p(alphabet: &Arc<Alphabet>) -> Cmpa {
    hinted("branch-p", alphabet, alphabet.bit_of("p"), 2, true)
}

/// `q` at the node, or three children that satisfy this recursively; 3 states,
/// bound 3. A `q` node starts in `hint` or `yes`.
pub fn triple_q(alphabet: &Arc<Alphabet>) -> Cmpa {
    hinted("triple-q", alphabet, alphabet.bit_of("q"), 3, false)
}

/// All samples over `alphabet`, which must contain `p` and `q`.
pub fn samples(alphabet: &Arc<Alphabet>) -> Vec<Cmpa> {
    vec![reach_p(alphabet), branch_p(alphabet), triple_q(alphabet)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::Automaton;

    #[test]
    fn shapes() {
        let al = Alphabet::of(&["p", "q"]);
        for a in samples(&al) {
            assert!(!a.deterministic(), "{}", a.name());
            assert!(a.forgetful());
            assert!(a.state_space() <= 4);
        }
        assert_eq!(triple_q(&al).bound(), 3);
    }
}
