//! MSO node properties to automata, in three stages:
//!
//! 1. [`compile_mso`]: a deterministic, forgetful, quasi-acyclic bounded automaton
//!    whose fixed point at the root decides the formula (built by structural
//!    recursion from atomic automata, negation, products and power sets).
//! 2. [`to_omnipresent_nondet`]: the same transitions, initialized nondeterministically
//!    with every state that can be a fixed point at a node with the given label.
//! 3. [`finalize`]: power-set determinization under omnipresent acceptance, giving a
//!    deterministic automaton with ordinary acceptance and no rejecting states.
//!
//! Stages 2 and 3 are only sound for formulas equivalent to a (possibly infinite)
//! disjunction of graded modal formulas; formulas obtained from GML satisfy this by
//! construction. Stage 1 is correct for every MSO formula.

mod atomic;
mod fixed;
mod gmsc;
mod mso;

use thiserror::Error;

use crate::automata::AutomatonError;
use crate::logic::LogicError;

pub use atomic::{atomic_eq, atomic_py, atomic_ryz, properness};
pub use fixed::{
    finalize, fixed_point_sets, to_omnipresent_nondet, verify_closure, FixedPointSets,
    OmnipresentInit,
};
pub use gmsc::compile_gmsc;
pub use mso::{
    compile_mso, exists_fo, exists_so, CompilationUnit, CompileOptions, StageStats,
    DEFAULT_MINIMIZE_BUDGET,
};

/// The designated free variable of a node property.
pub const DESIGNATED: &str = "x";

#[derive(Debug, Clone, Error)]
pub enum CompileError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("free variables {0:?} besides the designated one; later stages need a node property")]
    FreeVariables(Vec<String>),
    #[error("rule body for {var} nests diamonds; only modal depth 1 is supported in rule bodies")]
    UnsupportedNesting { var: String },
    #[error("{0} diamonds in initial bodies exceed the supported 64")]
    TooManyDiamonds(usize),
    #[error("{0}")]
    Precondition(String),
}

pub type Result<T, E = CompileError> = std::result::Result<T, E>;
