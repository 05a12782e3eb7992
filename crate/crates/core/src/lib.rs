//! Compiles MSO node properties over finite labeled trees into bounded, forgetful
//! counting message-passing automata, simulates them (alongside GMSC programs and
//! floating-point GNNs), and checks every construction against brute-force oracles.

pub mod logic;
pub mod model;
pub mod automata;
pub mod compiler;
pub mod gnnf;
pub mod par;
pub mod harness;
