use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use crate::automata::Alphabet;
use crate::model::PropSymbol;

use super::{FloatNum, FloatSystem, GnnError, RSimple, RSimpleParams, Result, Vector};

/// JSON description of an R-simple GNN. Numbers may be JSON numbers or strings
/// holding decimal or fraction literals; `init` keys are comma-separated label
/// sets (`""` for the empty label).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RSimpleFile {
    /// `[p, q, β]`.
    pub system: [u32; 3],
    pub dim: usize,
    #[serde(default = "one")]
    pub bound: usize,
    pub props: Vec<String>,
    #[serde(default)]
    pub init: BTreeMap<String, Vec<Value>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<Value>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Value>>,
    pub b: Vec<Value>,
    #[serde(default)]
    pub accepting: Vec<Vec<Value>>,
}

fn one() -> usize {
    1
}

/// Parses an R-simple GNN. Returns the network, its alphabet, and a warning for
/// every literal that had to be rounded.
pub fn parse_rsimple(text: &str) -> Result<(RSimple, Arc<Alphabet>, Vec<String>)> {
    let file: RSimpleFile = serde_json::from_str(text).map_err(|e| GnnError::Config(e.to_string()))?;
    let [p, q, beta] = file.system;
    let system = FloatSystem::new(p, q, beta)?;
    let mut warnings = Vec::new();
    let mut num = |v: &Value| -> Result<FloatNum> {
        let lit = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => return Err(GnnError::Literal(other.to_string())),
        };
        let (f, exact) = system.parse(&lit)?;
        if !exact {
            warnings.push(format!("{lit} rounded to {} in {system}", system.show(f)));
        }
        Ok(f)
    };
    let mut vector = |vs: &[Value]| -> Result<Vector> { vs.iter().map(&mut num).collect() };

    let symbols = file
        .props
        .iter()
        .map(PropSymbol::new)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| GnnError::Config(e.to_string()))?;
    let alphabet = Alphabet::new(symbols)?;
    let mut init = std::collections::HashMap::new();
    for (key, v) in &file.init {
        let mut label = 0;
        for name in key.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let sym = PropSymbol::new(name).map_err(|e| GnnError::Config(e.to_string()))?;
            label |= alphabet
                .bit(&sym)
                .ok_or_else(|| GnnError::Config(format!("init label uses undeclared symbol {name}")))?;
        }
        init.insert(label, vector(v)?);
    }
    let c = file.c.iter().map(|r| vector(r)).collect::<Result<_>>()?;
    let a = file.a.iter().map(|r| vector(r)).collect::<Result<_>>()?;
    let b = vector(&file.b)?;
    let accepting = file.accepting.iter().map(|r| vector(r)).collect::<Result<_>>()?;
    let net = RSimple {
        system,
        dim: file.dim,
        bound: file.bound,
        params: RSimpleParams { c, a, b },
        init,
        signature: alphabet.full(),
        accepting,
    };
    net.validate()?;
    Ok((net, alphabet, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_warns() {
        let text = r#"{"system": [4, 2, 2], "dim": 1, "props": ["p"],
            "init": {"p": ["1"], "": [0.3]},
            "C": [[1]], "A": [["0"]], "b": ["0"], "accepting": [["1"]]}"#;
        let (net, alpha, warnings) = parse_rsimple(text).unwrap();
        assert_eq!(net.init.len(), 2);
        assert_eq!(alpha.len(), 1);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].starts_with("0.3 rounded to"));
    }

    #[test]
    fn rejects_bad_shapes() {
        let text = r#"{"system": [4, 2, 2], "dim": 2, "props": [],
            "C": [[1]], "A": [["0"]], "b": ["0"]}"#;
        assert!(matches!(parse_rsimple(text), Err(GnnError::Config(_))));
        assert!(parse_rsimple("{").is_err());
    }
}
