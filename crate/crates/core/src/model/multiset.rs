use std::collections::BTreeMap;
use std::fmt;

/// Finitely supported multiset. Elements with count zero are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset<E: Ord> {
    counts: BTreeMap<E, usize>,
}

impl<E: Ord> Default for Multiset<E> {
    fn default() -> Self {
        Self {
            counts: BTreeMap::new(),
        }
    }
}

impl<E: Ord> Multiset<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, e: E) {
        self.insert_n(e, 1);
    }

    pub fn insert_n(&mut self, e: E, n: usize) {
        if n > 0 {
            *self.counts.entry(e).or_insert(0) += n;
        }
    }

    pub fn count(&self, e: &E) -> usize {
        self.counts.get(e).copied().unwrap_or(0)
    }

    /// Total number of elements, with multiplicity.
    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Distinct elements with their counts, in ascending element order.
    pub fn iter(&self) -> impl Iterator<Item = (&E, usize)> {
        self.counts.iter().map(|(e, &c)| (e, c))
    }

    pub fn support(&self) -> impl Iterator<Item = &E> {
        self.counts.keys()
    }

    /// `M|k`: every count clipped at `k`.
    pub fn cap(&self, k: usize) -> Self
    where
        E: Clone,
    {
        Self {
            counts: self
                .counts
                .iter()
                .filter(|_| k > 0)
                .map(|(e, &c)| (e.clone(), c.min(k)))
                .collect(),
        }
    }
}

impl<E: Ord> FromIterator<E> for Multiset<E> {
    fn from_iter<I: IntoIterator<Item = E>>(iter: I) -> Self {
        let mut m = Self::new();
        for e in iter {
            m.insert(e);
        }
        m
    }
}

impl<E: Ord> FromIterator<(E, usize)> for Multiset<E> {
    fn from_iter<I: IntoIterator<Item = (E, usize)>>(iter: I) -> Self {
        let mut m = Self::new();
        for (e, n) in iter {
            m.insert_n(e, n);
        }
        m
    }
}

impl<E: Ord + fmt::Debug> fmt::Debug for Multiset<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{{")?;
        for (i, (e, c)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e:?}:{c}")?;
        }
        f.write_str("}}")
    }
}
