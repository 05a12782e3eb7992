use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::model::{LabelSet, PropSymbol};

use super::{AutomatonError, Result};

/// A label: bit `i` set iff the `i`-th alphabet symbol is true.
pub type Label = u64;

/// Finite, ordered symbol set shared by all automata of one compilation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<PropSymbol>,
    index: FxHashMap<PropSymbol, u32>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = PropSymbol>) -> Result<Arc<Self>> {
        let mut symbols: Vec<PropSymbol> = symbols.into_iter().collect();
        symbols.sort();
        symbols.dedup();
        if symbols.len() > 64 {
            return Err(AutomatonError::TooManySymbols(symbols.len()));
        }
        let index = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Ok(Arc::new(Self { symbols, index }))
    }

    /// Convenience for tests and examples. Panics on invalid names.
    pub fn of(names: &[&str]) -> Arc<Self> {
        Self::new(names.iter().map(|n| PropSymbol::new(*n).expect("valid symbol")))
            .expect("small alphabet")
    }

    pub fn symbols(&self) -> &[PropSymbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn bit(&self, sym: &PropSymbol) -> Option<Label> {
        self.index.get(sym).map(|&i| 1 << i)
    }

    /// Bit of a symbol that must be present. Panics otherwise.
    pub fn bit_of(&self, name: &str) -> Label {
        self.bit(&PropSymbol::new(name).expect("valid symbol"))
            .unwrap_or_else(|| panic!("{name} is not in the alphabet"))
    }

    pub fn full(&self) -> Label {
        if self.symbols.len() == 64 {
            u64::MAX
        } else {
            (1 << self.symbols.len()) - 1
        }
    }

    /// Encodes a label set; symbols outside the alphabet are dropped.
    pub fn encode(&self, labels: &LabelSet) -> Label {
        labels.iter().filter_map(|s| self.bit(s)).fold(0, |m, b| m | b)
    }

    pub fn decode(&self, label: Label) -> LabelSet {
        self.symbols
            .iter()
            .enumerate()
            .filter(|(i, _)| label >> i & 1 == 1)
            .map(|(_, s)| s.clone())
            .collect()
    }

    /// `{a,b}` rendering of a label.
    pub fn show(&self, label: Label) -> String {
        let names: Vec<&str> = self
            .symbols
            .iter()
            .enumerate()
            .filter(|(i, _)| label >> i & 1 == 1)
            .map(|(_, s)| s.as_str())
            .collect();
        format!("{{{}}}", names.join(","))
    }
}

/// All subsets of `mask`, in increasing numeric order.
pub fn submasks(mask: Label) -> impl Iterator<Item = Label> {
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        // standard trick: enumerate submasks upward via (cur - mask) & mask
        next = if cur == mask {
            None
        } else {
            Some(cur.wrapping_sub(mask) & mask)
        };
        Some(cur)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::labels;

    #[test]
    fn encode_decode() {
        let a = Alphabet::of(&["q", "p", "x:x"]);
        assert_eq!(a.symbols()[0].as_str(), "p");
        let l = a.encode(&labels(["p", "x:x", "zzz"]));
        assert_eq!(a.decode(l), labels(["p", "x:x"]));
        assert_eq!(a.show(l), "{p,x:x}");
        assert_eq!(a.full(), 0b111);
    }

    #[test]
    fn submask_enumeration() {
        let subs: Vec<u64> = submasks(0b101).collect();
        assert_eq!(subs, vec![0, 1, 4, 5]);
        assert_eq!(submasks(0).collect::<Vec<_>>(), vec![0]);
    }
}
