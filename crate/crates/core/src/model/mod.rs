//! Finite rooted labeled trees, prefixes, extensions and variable interpretations.

mod enumerate;
mod multiset;
mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub use enumerate::{
    enumerate_extensions, enumerate_trees, extension_count, random_tree, sample_extensions,
    ExtensionCaps,
};
pub use multiset::Multiset;
pub use text::{parse_tree, serialize_tree, SyntaxError};

/// Node identifier: dense, assigned in preorder, root is always `0`.
pub type NodeId = usize;

/// A set of proposition symbols true at a node.
pub type LabelSet = BTreeSet<PropSymbol>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid proposition symbol {0:?}")]
    InvalidSymbol(String),
    #[error("no root: every node has a parent")]
    NoRoot,
    #[error("multiple roots: nodes {0:?} have no parent")]
    MultipleRoots(Vec<u64>),
    #[error("cycle through nodes {0:?}")]
    Cycle(Vec<u64>),
    #[error("nodes {0:?} are not reachable from the root")]
    Unreachable(Vec<u64>),
    #[error("node {child} has more than one parent ({first} and {second})")]
    DuplicateParent { child: u64, first: u64, second: u64 },
    #[error("duplicate node id {0}")]
    DuplicateNode(u64),
    #[error("unknown node {0}")]
    UnknownNode(u64),
    #[error("enumeration would produce {needed} trees, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Kind of variable that induced a label symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    FirstOrder,
    SecondOrder,
}

/// A proposition symbol. Plain symbols are identifiers; symbols induced by
/// variables live in the disjoint `x:NAME` / `X:NAME` namespaces.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropSymbol(String);

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl PropSymbol {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        let ok = match name.split_once(':') {
            Some(("x", var)) | Some(("X", var)) => is_ident(var),
            Some(_) => false,
            None => is_ident(&name),
        };
        if ok {
            Ok(Self(name))
        } else {
            Err(ModelError::InvalidSymbol(name))
        }
    }

    /// The symbol `p_x` marking the node a first-order variable denotes.
    pub fn first_order(var: &str) -> Self {
        Self(format!("x:{var}"))
    }

    /// The symbol `p_X` marking the members of a second-order variable.
    pub fn second_order(var: &str) -> Self {
        Self(format!("X:{var}"))
    }

    pub fn variable(kind: VarKind, var: &str) -> Self {
        match kind {
            VarKind::FirstOrder => Self::first_order(var),
            VarKind::SecondOrder => Self::second_order(var),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `Some((kind, name))` if this symbol was induced by a variable.
    pub fn as_variable(&self) -> Option<(VarKind, &str)> {
        match self.0.split_once(':') {
            Some(("x", v)) => Some((VarKind::FirstOrder, v)),
            Some(("X", v)) => Some((VarKind::SecondOrder, v)),
            _ => None,
        }
    }
}

impl fmt::Debug for PropSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for PropSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Convenience constructor for label sets in tests and examples.
/// Panics on invalid symbol names.
pub fn labels<'a>(names: impl IntoIterator<Item = &'a str>) -> LabelSet {
    names
        .into_iter()
        .map(|n| PropSymbol::new(n).expect("valid symbol"))
        .collect()
}

/// A finite rooted tree with edges directed from parents to children.
///
/// Nodes are numbered in preorder; node `0` is the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RootedTree {
    labels: Vec<LabelSet>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
}

/// Unvalidated node/edge table, the input of [`validate_tree`].
#[derive(Clone, Debug, Default)]
pub struct TreeTable {
    pub nodes: Vec<(u64, LabelSet)>,
    /// `(parent, child)` pairs. Child order follows edge order.
    pub edges: Vec<(u64, u64)>,
}

/// Checks the rooted-tree invariants and renumbers nodes in preorder.
pub fn validate_tree(table: &TreeTable) -> Result<RootedTree, ModelError> {
    let mut index: HashMap<u64, usize> = HashMap::new();
    for (i, (id, _)) in table.nodes.iter().enumerate() {
        if index.insert(*id, i).is_some() {
            return Err(ModelError::DuplicateNode(*id));
        }
    }
    let n = table.nodes.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(p, c) in &table.edges {
        let pi = *index.get(&p).ok_or(ModelError::UnknownNode(p))?;
        let ci = *index.get(&c).ok_or(ModelError::UnknownNode(c))?;
        if let Some(prev) = parent[ci] {
            return Err(ModelError::DuplicateParent {
                child: c,
                first: table.nodes[prev].0,
                second: p,
            });
        }
        parent[ci] = Some(pi);
        kids[pi].push(ci);
    }
    let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    let ids = |v: &[usize]| v.iter().map(|&i| table.nodes[i].0).collect::<Vec<_>>();
    if roots.len() > 1 {
        return Err(ModelError::MultipleRoots(ids(&roots)));
    }
    // Walk parent pointers from every node: a repeat before reaching a root is a cycle.
    for start in 0..n {
        let mut seen = BTreeSet::new();
        let mut cur = start;
        while let Some(p) = parent[cur] {
            if !seen.insert(cur) {
                let mut cyc = vec![cur];
                let mut c = parent[cur].unwrap();
                while c != cur {
                    cyc.push(c);
                    c = parent[c].unwrap();
                }
                cyc.sort_unstable();
                return Err(ModelError::Cycle(ids(&cyc)));
            }
            cur = p;
        }
    }
    let Some(&root) = roots.first() else {
        return Err(ModelError::NoRoot);
    };
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(kids[v].iter().rev());
    }
    if order.len() != n {
        let reached: BTreeSet<usize> = order.iter().copied().collect();
        let missing: Vec<usize> = (0..n).filter(|i| !reached.contains(i)).collect();
        return Err(ModelError::Unreachable(ids(&missing)));
    }
    let mut renum = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        renum[old] = new;
    }
    let mut tree = RootedTree {
        labels: vec![LabelSet::new(); n],
        parent: vec![None; n],
        children: vec![Vec::new(); n],
    };
    for &old in &order {
        let new = renum[old];
        tree.labels[new] = table.nodes[old].1.clone();
        tree.parent[new] = parent[old].map(|p| renum[p]);
        tree.children[new] = kids[old].iter().map(|&c| renum[c]).collect();
    }
    Ok(tree)
}

impl RootedTree {
    /// A single node with the given labels.
    pub fn leaf(labels: LabelSet) -> Self {
        Self {
            labels: vec![labels],
            parent: vec![None],
            children: vec![Vec::new()],
        }
    }

    /// Builds a tree from a root label and already-built child subtrees.
    pub fn node(labels: LabelSet, children: Vec<RootedTree>) -> Self {
        let mut tree = Self::leaf(labels);
        for child in children {
            tree.attach(0, &child);
        }
        tree.renumber()
    }

    pub(crate) fn attach(&mut self, at: NodeId, sub: &RootedTree) {
        let offset = self.labels.len();
        for v in 0..sub.len() {
            self.labels.push(sub.labels[v].clone());
            self.parent.push(sub.parent[v].map(|p| p + offset));
            self.children
                .push(sub.children[v].iter().map(|c| c + offset).collect());
        }
        self.parent[offset] = Some(at);
        self.children[at].push(offset);
    }

    /// Restores preorder numbering after structural edits.
    pub(crate) fn renumber(&self) -> Self {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        let mut renum = vec![0; self.len()];
        for (new, &old) in order.iter().enumerate() {
            renum[old] = new;
        }
        let mut out = Self {
            labels: vec![LabelSet::new(); order.len()],
            parent: vec![None; order.len()],
            children: vec![Vec::new(); order.len()],
        };
        for &old in &order {
            let new = renum[old];
            out.labels[new] = self.labels[old].clone();
            out.parent[new] = self.parent[old].map(|p| renum[p]);
            out.children[new] = self.children[old].iter().map(|&c| renum[c]).collect();
        }
        out
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.len()
    }

    pub fn labels(&self, v: NodeId) -> &LabelSet {
        &self.labels[v]
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.parent[to] == Some(from)
    }

    /// Distance of every node from the root.
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0; self.len()];
        // preorder: parents precede children
        for v in 1..self.len() {
            d[v] = d[self.parent[v].expect("non-root has parent")] + 1;
        }
        d
    }

    /// Height of every node (leaves have height 0).
    pub fn heights(&self) -> Vec<usize> {
        let mut h = vec![0; self.len()];
        for v in (0..self.len()).rev() {
            h[v] = self.children[v].iter().map(|&c| h[c] + 1).max().unwrap_or(0);
        }
        h
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// All symbols occurring anywhere in the tree.
    pub fn symbols(&self) -> LabelSet {
        self.labels.iter().flatten().cloned().collect()
    }

    pub fn set_labels(&mut self, v: NodeId, labels: LabelSet) {
        self.labels[v] = labels;
    }

    /// Subtree rooted at `v`, renumbered.
    pub fn subtree(&self, v: NodeId) -> RootedTree {
        let mut out = RootedTree::leaf(self.labels[v].clone());
        let mut stack = vec![(v, 0)];
        while let Some((src, dst)) = stack.pop() {
            for &c in &self.children[src] {
                let id = out.len();
                out.labels.push(self.labels[c].clone());
                out.parent.push(Some(dst));
                out.children.push(Vec::new());
                out.children[dst].push(id);
                stack.push((c, id));
            }
        }
        out.renumber()
    }

    /// Canonical text form: labels sorted, children sorted by their own canonical form.
    /// Two trees are isomorphic (as unordered labeled trees) iff their canonical forms agree.
    pub fn canonical(&self) -> String {
        serialize_tree(self)
    }
}

/// The `k`-prefix: all nodes at distance at most `k` from the root.
pub fn k_prefix(tree: &RootedTree, k: usize) -> RootedTree {
    let depths = tree.depths();
    let keep: Vec<bool> = depths.iter().map(|&d| d <= k).collect();
    let mut renum = vec![usize::MAX; tree.len()];
    let mut out = RootedTree {
        labels: Vec::new(),
        parent: Vec::new(),
        children: Vec::new(),
    };
    // preorder restricted to kept nodes stays a preorder
    for v in tree.nodes().filter(|&v| keep[v]) {
        renum[v] = out.labels.len();
        out.labels.push(tree.labels[v].clone());
        out.parent.push(tree.parent[v].map(|p| renum[p]));
        out.children.push(Vec::new());
        if let Some(p) = tree.parent[v] {
            out.children[renum[p]].push(renum[v]);
        }
    }
    out
}

/// Assignment of tree nodes to first- and second-order variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interpretation {
    pub first_order: BTreeMap<String, NodeId>,
    pub second_order: BTreeMap<String, BTreeSet<NodeId>>,
}

impl Interpretation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interpretation mapping the single variable `var` to the root.
    pub fn at_root(var: &str) -> Self {
        let mut i = Self::new();
        i.first_order.insert(var.to_string(), 0);
        i
    }

    pub fn with_first(mut self, var: &str, v: NodeId) -> Self {
        self.first_order.insert(var.to_string(), v);
        self
    }

    pub fn with_second(mut self, var: &str, set: impl IntoIterator<Item = NodeId>) -> Self {
        self.second_order
            .insert(var.to_string(), set.into_iter().collect());
        self
    }
}

/// Labels the tree with the variable symbols of `interp`; original labels are kept.
pub fn apply_interpretation(
    tree: &RootedTree,
    interp: &Interpretation,
) -> Result<RootedTree, ModelError> {
    let mut out = tree.clone();
    for (var, &v) in &interp.first_order {
        if v >= tree.len() {
            return Err(ModelError::UnknownNode(v as u64));
        }
        out.labels[v].insert(PropSymbol::first_order(var));
    }
    for (var, set) in &interp.second_order {
        for &v in set {
            if v >= tree.len() {
                return Err(ModelError::UnknownNode(v as u64));
            }
            out.labels[v].insert(PropSymbol::second_order(var));
        }
    }
    Ok(out)
}

/// Breadth-first node order, used for level-by-level processing.
pub fn bfs_order(tree: &RootedTree) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(tree.len());
    let mut q = VecDeque::from([0]);
    while let Some(v) = q.pop_front() {
        out.push(v);
        q.extend(tree.children(v).iter().copied());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> RootedTree {
        let mut t = RootedTree::leaf(LabelSet::new());
        for _ in 1..n {
            t = RootedTree::node(LabelSet::new(), vec![t]);
        }
        t
    }

    #[test]
    fn validate_single_node() {
        let t = validate_tree(&TreeTable {
            nodes: vec![(7, labels(["p"]))],
            edges: vec![],
        })
        .unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn validate_errors() {
        let two_roots = TreeTable {
            nodes: vec![(1, LabelSet::new()), (2, LabelSet::new())],
            edges: vec![],
        };
        assert_eq!(
            validate_tree(&two_roots),
            Err(ModelError::MultipleRoots(vec![1, 2]))
        );
        let cyc = TreeTable {
            nodes: vec![(1, LabelSet::new()), (2, LabelSet::new())],
            edges: vec![(1, 2), (2, 1)],
        };
        assert_eq!(validate_tree(&cyc), Err(ModelError::Cycle(vec![1, 2])));
        let dup = TreeTable {
            nodes: vec![(1, LabelSet::new()), (2, LabelSet::new()), (3, LabelSet::new())],
            edges: vec![(1, 3), (2, 3)],
        };
        assert!(matches!(
            validate_tree(&dup),
            Err(ModelError::DuplicateParent { child: 3, .. })
        ));
        // root plus a detached 2-cycle
        let detached = TreeTable {
            nodes: vec![(1, LabelSet::new()), (2, LabelSet::new()), (3, LabelSet::new())],
            edges: vec![(2, 3), (3, 2)],
        };
        assert_eq!(validate_tree(&detached), Err(ModelError::Cycle(vec![2, 3])));
    }

    #[test]
    fn validate_renumbers_preorder() {
        let t = validate_tree(&TreeTable {
            nodes: vec![
                (10, labels(["c"])),
                (20, labels(["r"])),
                (30, labels(["b"])),
            ],
            edges: vec![(20, 30), (30, 10)],
        })
        .unwrap();
        assert_eq!(t.labels(0), &labels(["r"]));
        assert_eq!(t.labels(1), &labels(["b"]));
        assert_eq!(t.labels(2), &labels(["c"]));
        assert_eq!(t.children(1), &[2]);
    }

    #[test]
    fn prefix_examples() {
        let c4 = chain(4);
        assert_eq!(k_prefix(&c4, 1), chain(2));
        assert_eq!(k_prefix(&c4, 0).len(), 1);
        assert_eq!(k_prefix(&c4, 3), c4);
        assert_eq!(k_prefix(&c4, 10), c4);
    }

    #[test]
    fn interpretation_examples() {
        let t = RootedTree::node(LabelSet::new(), vec![RootedTree::leaf(LabelSet::new())]);
        let i = Interpretation::new().with_first("x", 1);
        let out = apply_interpretation(&t, &i).unwrap();
        assert!(out.labels(0).is_empty());
        assert_eq!(out.labels(1), &labels(["x:x"]));
        assert_eq!(apply_interpretation(&t, &Interpretation::new()).unwrap(), t);
        let out = apply_interpretation(&t, &Interpretation::new().with_second("Y", [0, 1])).unwrap();
        assert_eq!(out.labels(0), &labels(["X:Y"]));
        assert_eq!(out.labels(1), &labels(["X:Y"]));
        assert_eq!(
            apply_interpretation(&t, &Interpretation::new().with_first("x", 5)),
            Err(ModelError::UnknownNode(5))
        );
    }

    #[test]
    fn symbol_namespaces() {
        assert!(PropSymbol::new("p_1").is_ok());
        assert!(PropSymbol::new("x:y").is_ok());
        assert!(PropSymbol::new("X:Y").is_ok());
        assert!(PropSymbol::new("z:y").is_err());
        assert!(PropSymbol::new("1p").is_err());
        assert_eq!(
            PropSymbol::first_order("y").as_variable(),
            Some((VarKind::FirstOrder, "y"))
        );
        assert_eq!(PropSymbol::new("p").unwrap().as_variable(), None);
    }

    #[test]
    fn heights_and_depths() {
        let t = RootedTree::node(
            LabelSet::new(),
            vec![chain(3), RootedTree::leaf(LabelSet::new())],
        );
        assert_eq!(t.heights()[0], 3);
        assert_eq!(t.depth(), 3);
        assert_eq!(t.subtree(1), chain(3));
    }
}
