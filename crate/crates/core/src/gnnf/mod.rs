//! Floating-point systems with exact saturating arithmetic, recurrent GNNs over
//! them, and the embedding of bounded automata into such GNNs.
//!
//! All arithmetic goes through exact rationals and rounds once per operation; no
//! host floating point is involved. `nearest` breaks ties away from zero.

mod config;
mod embed;
mod float;
mod net;

use thiserror::Error;

use crate::automata::AutomatonError;

pub use config::{parse_rsimple, RSimpleFile};
pub use embed::{embed_fcmpa, Embedding};
pub use float::{parse_rational, FloatNum, FloatSystem};
pub use net::{gnn_accepts, gnn_run, gnn_step, sorted_sum, GnnF, GnnTrace, RSimple, RSimpleParams, Vector};

#[derive(Debug, Clone, Error)]
pub enum GnnError {
    #[error("invalid floating-point system {0}")]
    InvalidSystem(String),
    #[error("{0}")]
    SystemTooSmall(String),
    #[error("feature vector of length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("no repeated configuration within {0} rounds")]
    HorizonExceeded(usize),
    #[error("not a number literal: {0:?}")]
    Literal(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

pub type Result<T, E = GnnError> = std::result::Result<T, E>;
