use std::hash::Hash;

use dashmap::DashMap;
use parking_lot::RwLock;
use rustc_hash::{FxBuildHasher, FxHashMap};

use super::{AutomatonError, Result};

/// Thread-safe interner with a hard budget. Each value carries a small payload
/// computed once on insertion (acceptance flags, for instance).
pub(crate) struct Interner<T, E = ()> {
    inner: RwLock<Table<T, E>>,
    budget: usize,
    what: String,
}

struct Table<T, E> {
    ids: FxHashMap<T, u32>,
    values: Vec<(T, E)>,
}

impl<T: Clone + Eq + Hash, E: Copy> Interner<T, E> {
    pub fn new(what: impl Into<String>, budget: usize) -> Self {
        Self {
            inner: RwLock::new(Table {
                ids: FxHashMap::default(),
                values: Vec::new(),
            }),
            budget,
            what: what.into(),
        }
    }

    pub fn intern_with(&self, value: T, extra: impl FnOnce(&T) -> E) -> Result<u32> {
        if let Some(&id) = self.inner.read().ids.get(&value) {
            return Ok(id);
        }
        let payload = extra(&value);
        let mut t = self.inner.write();
        if let Some(&id) = t.ids.get(&value) {
            return Ok(id);
        }
        if t.values.len() >= self.budget {
            return Err(AutomatonError::StateBudgetExceeded {
                what: self.what.clone(),
                budget: self.budget,
            });
        }
        let id = t.values.len() as u32;
        t.ids.insert(value.clone(), id);
        t.values.push((value, payload));
        Ok(id)
    }

    pub fn get(&self, id: u32) -> T {
        self.inner.read().values[id as usize].0.clone()
    }

    pub fn extra(&self, id: u32) -> E {
        self.inner.read().values[id as usize].1
    }

    pub fn len(&self) -> usize {
        self.inner.read().values.len()
    }
}

impl<T: Clone + Eq + Hash> Interner<T, ()> {
    pub fn intern(&self, value: T) -> Result<u32> {
        self.intern_with(value, |_| ())
    }
}

/// Concurrent memo table: identical queries always yield identical answers, so a
/// lost race merely recomputes the same value.
pub(crate) type Memo<K, V> = DashMap<K, V, FxBuildHasher>;

pub(crate) fn memo<K: Eq + Hash, V>() -> Memo<K, V> {
    DashMap::with_hasher(FxBuildHasher)
}

/// Looks `key` up in `memo`, computing and storing it on a miss.
pub(crate) fn cached<K: Eq + Hash + Copy, V: Copy>(
    memo: &Memo<K, V>,
    key: K,
    compute: impl FnOnce() -> Result<V>,
) -> Result<V> {
    if let Some(v) = memo.get(&key) {
        return Ok(*v);
    }
    let v = compute()?;
    memo.insert(key, v);
    Ok(v)
}
