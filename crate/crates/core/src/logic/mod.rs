//! Logic ASTs, parsers and brute-force evaluators. These are the ground truth
//! every compiled automaton is compared against.

mod extend;
mod gml;
mod gmsc;
mod mso;
mod parse;

use thiserror::Error;

use crate::model::{ModelError, NodeId, SyntaxError};

pub use extend::{k_extendable_check, ExtensionCheck};
pub use gml::{gml_eval, gml_to_mso, Gml, OmegaGml};
pub use gmsc::{gmsc_accepts, gmsc_eval_round, gmsc_trace, GmscProgram, GmscTrace};
pub use mso::{mso_check, Mso, OracleConfig, Pred};
pub use parse::{parse_gml, parse_gmsc, parse_mso, parse_node_property};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("variable {0} is not bound")]
    UnboundVariable(String),
    #[error("variable {0} is used both as a node and as a set variable")]
    VariableKind(String),
    #[error("tree has {nodes} nodes, oracle cap for set quantifiers is {cap}")]
    SizeLimit { nodes: usize, cap: usize },
    #[error("node {0} is not in the tree")]
    UnknownNode(NodeId),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
