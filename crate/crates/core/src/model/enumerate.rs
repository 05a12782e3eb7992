//! Exhaustive generation of small trees and of k-extensions of prefixes.

use std::sync::Arc;

use super::{LabelSet, ModelError, PropSymbol, RootedTree};

/// A tree shape: a label plus a multiset of child shapes (indices into a shape table,
/// kept non-increasing so each multiset is produced once).
#[derive(Clone, Debug)]
struct Shape {
    size: usize,
    label: usize,
    children: Vec<usize>,
}

fn all_labelsets(alphabet: &[PropSymbol]) -> Vec<LabelSet> {
    let n = alphabet.len();
    assert!(n < 16, "alphabet too large for exhaustive labeling");
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| alphabet[i].clone())
                .collect()
        })
        .collect()
}

fn build(shapes: &[Shape], labels: &[LabelSet], idx: usize) -> RootedTree {
    let s = &shapes[idx];
    RootedTree::node(
        labels[s.label].clone(),
        s.children.iter().map(|&c| build(shapes, labels, c)).collect(),
    )
}

/// Non-increasing index sequences over `pool` whose weights sum exactly to `target`.
fn multisets_by_weight(
    pool: &[usize],
    weight: &dyn Fn(usize) -> usize,
    target: usize,
    max_len: usize,
    out: &mut Vec<Vec<usize>>,
) {
    fn go(
        pool: &[usize],
        weight: &dyn Fn(usize) -> usize,
        remaining: usize,
        max_len: usize,
        upto: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if remaining == 0 {
            out.push(cur.clone());
            return;
        }
        if cur.len() == max_len {
            return;
        }
        for i in (0..upto).rev() {
            let w = weight(pool[i]);
            if w <= remaining {
                cur.push(pool[i]);
                go(pool, weight, remaining - w, max_len, i + 1, cur, out);
                cur.pop();
            }
        }
    }
    go(pool, weight, target, max_len, pool.len(), &mut Vec::new(), out);
}

/// Every rooted tree with at most `max_nodes` nodes and labels drawn from `alphabet`,
/// exactly once up to reordering of children. Ordered by size.
pub fn enumerate_trees(
    max_nodes: usize,
    alphabet: &[PropSymbol],
) -> impl Iterator<Item = RootedTree> {
    assert!(max_nodes >= 1, "max_nodes must be positive");
    let labels = all_labelsets(alphabet);
    let mut shapes: Vec<Shape> = Vec::new();
    for size in 1..=max_nodes {
        let pool: Vec<usize> = (0..shapes.len()).collect();
        let mut kid_sets = Vec::new();
        let sizes: Vec<usize> = shapes.iter().map(|s| s.size).collect();
        multisets_by_weight(&pool, &|i| sizes[i], size - 1, usize::MAX, &mut kid_sets);
        for label in 0..labels.len() {
            for kids in &kid_sets {
                shapes.push(Shape {
                    size,
                    label,
                    children: kids.clone(),
                });
            }
        }
    }
    let shapes = Arc::new(shapes);
    (0..shapes.len()).map(move |i| build(&shapes, &labels, i))
}

/// A random tree with `1..=max_nodes` nodes: each node after the root picks its
/// parent uniformly among the earlier ones, and every symbol is present with
/// probability 1/2.
pub fn random_tree<R: rand::Rng + ?Sized>(rng: &mut R, max_nodes: usize, alphabet: &[PropSymbol]) -> RootedTree {
    assert!(max_nodes >= 1, "max_nodes must be positive");
    let n = rng.gen_range(1..=max_nodes);
    let parents: Vec<usize> = (1..n).map(|i| rng.gen_range(0..i)).collect();
    let labels: Vec<LabelSet> = (0..n)
        .map(|_| alphabet.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect())
        .collect();
    fn grow(v: usize, parents: &[usize], labels: &[LabelSet]) -> RootedTree {
        let kids = (1..labels.len())
            .filter(|&c| parents[c - 1] == v)
            .map(|c| grow(c, parents, labels))
            .collect();
        RootedTree::node(labels[v].clone(), kids)
    }
    grow(0, &parents, &labels)
}

/// Size caps for attaching subtrees below a prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtensionCaps {
    /// Maximum distance of an attached node below its attachment point.
    pub max_extra_depth: usize,
    /// Maximum number of children added to any node.
    pub max_branch: usize,
    /// Refuse enumerations producing more trees than this.
    pub budget: u128,
}

impl Default for ExtensionCaps {
    fn default() -> Self {
        Self {
            max_extra_depth: 2,
            max_branch: 2,
            budget: 1_000_000,
        }
    }
}

struct Forests {
    shapes: Vec<Shape>,
    forests: Vec<Vec<usize>>,
    labels: Vec<LabelSet>,
}

fn attachable_forests(caps: &ExtensionCaps, alphabet: &[PropSymbol]) -> Forests {
    let labels = all_labelsets(alphabet);
    if caps.max_extra_depth == 0 || caps.max_branch == 0 {
        return Forests {
            shapes: Vec::new(),
            forests: vec![Vec::new()],
            labels,
        };
    }
    // Shapes of depth <= max_extra_depth - 1 with branching <= max_branch.
    let mut shapes: Vec<Shape> = Vec::new();
    let mut prev: Vec<usize> = Vec::new();
    for depth in 0..caps.max_extra_depth {
        let mut kid_sets = Vec::new();
        for len in 0..=caps.max_branch {
            multisets_by_weight(&prev, &|_| 1, len, len, &mut kid_sets);
        }
        let mut layer = Vec::new();
        for label in 0..labels.len() {
            for kids in &kid_sets {
                // depth-d shapes must not repeat shallower ones
                if depth > 0 && kids.is_empty() {
                    continue;
                }
                layer.push(shapes.len());
                shapes.push(Shape {
                    size: 0,
                    label,
                    children: kids.clone(),
                });
            }
        }
        prev.extend(layer);
        prev.sort_unstable();
    }
    let all: Vec<usize> = (0..shapes.len()).collect();
    let mut forests = Vec::new();
    for len in 0..=caps.max_branch {
        multisets_by_weight(&all, &|_| 1, len, len, &mut forests);
    }
    Forests {
        shapes,
        forests,
        labels,
    }
}

fn frontier(prefix: &RootedTree, k: usize) -> Vec<usize> {
    let depths = prefix.depths();
    prefix.nodes().filter(|&v| depths[v] == k).collect()
}

/// Number of trees [`enumerate_extensions`] would yield.
pub fn extension_count(
    prefix: &RootedTree,
    k: usize,
    caps: &ExtensionCaps,
    alphabet: &[PropSymbol],
) -> u128 {
    let per = attachable_forests(caps, alphabet).forests.len() as u128;
    frontier(prefix, k)
        .iter()
        .fold(1u128, |acc, _| acc.saturating_mul(per))
}

/// All extensions of a `k`-prefix within the caps: subtrees are attached only below
/// nodes at distance exactly `k` from the root. Every yielded tree has `prefix` as its
/// `k`-prefix.
pub fn enumerate_extensions(
    prefix: &RootedTree,
    k: usize,
    caps: &ExtensionCaps,
    alphabet: &[PropSymbol],
) -> Result<impl Iterator<Item = RootedTree>, ModelError> {
    debug_assert!(prefix.depth() <= k, "prefix deeper than k");
    let needed = extension_count(prefix, k, caps, alphabet);
    if needed > caps.budget {
        return Err(ModelError::BudgetExceeded {
            needed,
            budget: caps.budget,
        });
    }
    let ext = Extender::new(prefix, k, caps, alphabet);
    Ok((0..needed).map(move |code| ext.nth(code)))
}

/// `count` extensions drawn uniformly (with repetition) from the ones
/// [`enumerate_extensions`] would yield, without the budget check.
pub fn sample_extensions<R: rand::Rng + ?Sized>(
    rng: &mut R,
    prefix: &RootedTree,
    k: usize,
    caps: &ExtensionCaps,
    alphabet: &[PropSymbol],
    count: usize,
) -> Vec<RootedTree> {
    let ext = Extender::new(prefix, k, caps, alphabet);
    (0..count)
        .map(|_| {
            let picks: Vec<usize> = ext.front.iter().map(|_| rng.gen_range(0..ext.built.len())).collect();
            ext.with(&picks)
        })
        .collect()
}

struct Extender {
    prefix: RootedTree,
    front: Vec<usize>,
    built: Vec<Vec<RootedTree>>,
}

impl Extender {
    fn new(prefix: &RootedTree, k: usize, caps: &ExtensionCaps, alphabet: &[PropSymbol]) -> Self {
        let f = attachable_forests(caps, alphabet);
        let built = f
            .forests
            .iter()
            .map(|forest| forest.iter().map(|&s| build(&f.shapes, &f.labels, s)).collect())
            .collect();
        Self {
            prefix: prefix.clone(),
            front: frontier(prefix, k),
            built,
        }
    }

    fn nth(&self, mut code: u128) -> RootedTree {
        let radix = self.built.len() as u128;
        let picks: Vec<usize> = self
            .front
            .iter()
            .map(|_| {
                let c = (code % radix) as usize;
                code /= radix;
                c
            })
            .collect();
        self.with(&picks)
    }

    /// The prefix with forest `picks[i]` attached below the `i`-th frontier node.
    fn with(&self, picks: &[usize]) -> RootedTree {
        let mut tree = self.prefix.clone();
        for (&v, &c) in self.front.iter().zip(picks) {
            for sub in &self.built[c] {
                tree.attach(v, sub);
            }
        }
        tree.renumber()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{k_prefix, labels, parse_tree};
    use std::collections::HashSet;

    fn syms(names: &[&str]) -> Vec<PropSymbol> {
        names.iter().map(|n| PropSymbol::new(*n).unwrap()).collect()
    }

    #[test]
    fn tree_counts_by_hand() {
        assert_eq!(enumerate_trees(1, &syms(&["p"])).count(), 2);
        assert_eq!(enumerate_trees(2, &[]).count(), 2);
        let shapes: Vec<String> = enumerate_trees(3, &[]).map(|t| t.canonical()).collect();
        assert_eq!(shapes.len(), 4);
        assert!(shapes.contains(&"({} ({}) ({}))".to_string()));
        assert!(shapes.contains(&"({} ({} ({})))".to_string()));
    }

    #[test]
    fn unlabeled_counts_match_oeis() {
        // A000081: 1, 1, 2, 4, 9, 20, 48
        let counts: Vec<usize> = (1..=7)
            .map(|n| enumerate_trees(n, &[]).filter(|t| t.len() == n).count())
            .collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 9, 20, 48]);
    }

    #[test]
    fn no_isomorphic_duplicates() {
        let mut seen = HashSet::new();
        for t in enumerate_trees(5, &syms(&["p", "q"])) {
            assert!(seen.insert(t.canonical()), "duplicate {}", t.canonical());
        }
        // brute force: count labeled unordered trees of size <= 3 over 4 labels by hand:
        // 4 + 16 + (64 + 4 * 10)
        assert_eq!(
            enumerate_trees(3, &syms(&["p", "q"])).count(),
            4 + 16 + 64 + 40
        );
    }

    #[test]
    fn extensions_of_single_node() {
        let root = parse_tree("({})").unwrap();
        let caps = ExtensionCaps {
            max_extra_depth: 1,
            max_branch: 1,
            budget: 100,
        };
        let got: Vec<String> = enumerate_extensions(&root, 0, &caps, &syms(&["p"]))
            .unwrap()
            .map(|t| t.canonical())
            .collect();
        assert_eq!(got.len(), 3);
        assert!(got.contains(&"({})".to_string()));
        assert!(got.contains(&"({} ({}))".to_string()));
        assert!(got.contains(&"({} ({p}))".to_string()));
    }

    #[test]
    fn zero_depth_yields_prefix() {
        let t = parse_tree("({p} ({q}))").unwrap();
        let caps = ExtensionCaps {
            max_extra_depth: 0,
            ..Default::default()
        };
        let got: Vec<RootedTree> = enumerate_extensions(&t, 1, &caps, &syms(&["p"]))
            .unwrap()
            .collect();
        assert_eq!(got, vec![t]);
    }

    #[test]
    fn extensions_preserve_prefix() {
        let t = parse_tree("({p} ({q} ({})) ({} ({p})))").unwrap();
        let caps = ExtensionCaps::default();
        let mut n = 0;
        for ext in enumerate_extensions(&t, 2, &caps, &syms(&[])).unwrap() {
            assert_eq!(k_prefix(&ext, 2).canonical(), t.canonical());
            n += 1;
        }
        assert_eq!(n as u128, extension_count(&t, 2, &caps, &[]));
        // unlabeled forests of depth <= 2, branching <= 2: 10 per frontier node
        assert_eq!(n, 100);
    }

    #[test]
    fn budget_is_enforced() {
        let t = parse_tree("({} ({}) ({}) ({}))").unwrap();
        let caps = ExtensionCaps {
            budget: 10,
            ..Default::default()
        };
        assert!(matches!(
            enumerate_extensions(&t, 1, &caps, &syms(&["p"])),
            Err(ModelError::BudgetExceeded { .. })
        ));
        let _ = labels(["p"]);
    }

    #[test]
    fn sampled_extensions_preserve_prefix() {
        use rand::SeedableRng;
        let t = parse_tree("({p} ({q}) ({}))").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let got = sample_extensions(&mut rng, &t, 1, &ExtensionCaps::default(), &syms(&["p", "q"]), 50);
        assert_eq!(got.len(), 50);
        assert!(got.iter().all(|e| k_prefix(e, 1).canonical() == t.canonical()));
        assert!(got.iter().any(|e| e.len() > t.len()));
    }
}
