use crate::model::{enumerate_extensions, k_prefix, ExtensionCaps, Interpretation, PropSymbol, RootedTree};

use super::{mso_check, LogicError, Mso, OmegaGml, OracleConfig};

/// Outcome of checking every enumerated extension of a prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionCheck {
    pub extensions: usize,
    /// First extension where the formula fails at the root.
    pub violation: Option<RootedTree>,
}

impl ExtensionCheck {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks that `φ(x)` holds at the root of every extension of the `k`-prefix of
/// `tree` generated within `caps` over `alphabet`. The witness disjunct must hold
/// at the root and have modal depth at most `k`; this is a sampled check of the
/// universally quantified claim, not a proof.
pub fn k_extendable_check(
    tree: &RootedTree,
    formula: &Mso,
    k: usize,
    witness: &OmegaGml,
    caps: &ExtensionCaps,
    alphabet: &[PropSymbol],
    oracle: &OracleConfig,
) -> Result<ExtensionCheck, LogicError> {
    let at_root = Interpretation::at_root("x");
    if !mso_check(tree, formula, &at_root, oracle)? {
        return Err(LogicError::Precondition(format!(
            "formula does not hold at the root of {}",
            tree.canonical()
        )));
    }
    match witness.true_disjunct(tree, 0) {
        Some(d) if d.modal_depth() <= k => {}
        Some(d) => {
            return Err(LogicError::Precondition(format!(
                "true disjunct has modal depth {} > k = {k}",
                d.modal_depth()
            )))
        }
        None => {
            return Err(LogicError::Precondition(
                "no witness disjunct holds at the root".into(),
            ))
        }
    }
    let prefix = k_prefix(tree, k);
    let mut extensions = 0;
    for ext in enumerate_extensions(&prefix, k, caps, alphabet)? {
        extensions += 1;
        if !mso_check(&ext, formula, &at_root, oracle)? {
            return Ok(ExtensionCheck {
                extensions,
                violation: Some(ext),
            });
        }
    }
    Ok(ExtensionCheck {
        extensions,
        violation: None,
    })
}
