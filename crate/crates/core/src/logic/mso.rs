use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{Interpretation, NodeId, PropSymbol, RootedTree, VarKind};

use super::LogicError;

/// MSO over labeled trees. Disjunction and universal quantification are
/// sugar and are desugared by the parser and the constructors below.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mso {
    /// `P(y)`: `pred` is a proposition symbol or a second-order variable.
    Atom { pred: Pred, var: String },
    /// `E(y, z)`: `z` is a child of `y`.
    Edge(String, String),
    Eq(String, String),
    Not(Box<Mso>),
    And(Box<Mso>, Box<Mso>),
    ExistsFo(String, Box<Mso>),
    ExistsSo(String, Box<Mso>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Prop(PropSymbol),
    SetVar(String),
}

impl Mso {
    pub fn prop(p: &str, var: &str) -> Self {
        Mso::Atom {
            pred: Pred::Prop(PropSymbol::new(p).expect("valid proposition")),
            var: var.into(),
        }
    }

    pub fn member(set: &str, var: &str) -> Self {
        Mso::Atom {
            pred: Pred::SetVar(set.into()),
            var: var.into(),
        }
    }

    pub fn edge(y: &str, z: &str) -> Self {
        Mso::Edge(y.into(), z.into())
    }

    pub fn eq(y: &str, z: &str) -> Self {
        Mso::Eq(y.into(), z.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Mso) -> Self {
        Mso::Not(Box::new(f))
    }

    pub fn and(a: Mso, b: Mso) -> Self {
        Mso::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Mso, b: Mso) -> Self {
        Mso::not(Mso::and(Mso::not(a), Mso::not(b)))
    }

    pub fn exists(y: &str, f: Mso) -> Self {
        Mso::ExistsFo(y.into(), Box::new(f))
    }

    pub fn forall(y: &str, f: Mso) -> Self {
        Mso::not(Mso::exists(y, Mso::not(f)))
    }

    pub fn exists_set(y: &str, f: Mso) -> Self {
        Mso::ExistsSo(y.into(), Box::new(f))
    }

    /// Conjunction of a nonempty list.
    pub fn all(mut parts: Vec<Mso>) -> Self {
        let last = parts.pop().expect("nonempty conjunction");
        parts.into_iter().rev().fold(last, |acc, p| Mso::and(p, acc))
    }

    /// Free variables with their kinds.
    pub fn free_vars(&self) -> BTreeMap<String, VarKind> {
        let mut out = BTreeMap::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeMap<String, VarKind>) {
        let fo = |v: &String, out: &mut BTreeMap<String, VarKind>| {
            if !bound.contains(v) {
                out.insert(v.clone(), VarKind::FirstOrder);
            }
        };
        match self {
            Mso::Atom { pred, var } => {
                fo(var, out);
                if let Pred::SetVar(s) = pred {
                    if !bound.contains(s) {
                        out.insert(s.clone(), VarKind::SecondOrder);
                    }
                }
            }
            Mso::Edge(a, b) | Mso::Eq(a, b) => {
                fo(a, out);
                fo(b, out);
            }
            Mso::Not(f) => f.collect_free(bound, out),
            Mso::And(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Mso::ExistsFo(v, f) | Mso::ExistsSo(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// All variable names with their kinds, bound or free.
    pub fn all_vars(&self) -> BTreeSet<(VarKind, String)> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Mso::Atom { pred, var } => {
                out.insert((VarKind::FirstOrder, var.clone()));
                if let Pred::SetVar(s) = pred {
                    out.insert((VarKind::SecondOrder, s.clone()));
                }
            }
            Mso::Edge(a, b) | Mso::Eq(a, b) => {
                out.insert((VarKind::FirstOrder, a.clone()));
                out.insert((VarKind::FirstOrder, b.clone()));
            }
            Mso::ExistsFo(v, _) => {
                out.insert((VarKind::FirstOrder, v.clone()));
            }
            Mso::ExistsSo(v, _) => {
                out.insert((VarKind::SecondOrder, v.clone()));
            }
            _ => {}
        });
        out
    }

    /// Proposition symbols mentioned by atoms.
    pub fn props(&self) -> BTreeSet<PropSymbol> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Mso::Atom {
                pred: Pred::Prop(p),
                ..
            } = f
            {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Mso)) {
        f(self);
        match self {
            Mso::Not(a) | Mso::ExistsFo(_, a) | Mso::ExistsSo(_, a) => a.visit(f),
            Mso::And(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Maximum nesting depth of quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Mso::Atom { .. } | Mso::Edge(..) | Mso::Eq(..) => 0,
            Mso::Not(a) => a.quantifier_depth(),
            Mso::And(a, b) => a.quantifier_depth().max(b.quantifier_depth()),
            Mso::ExistsFo(_, a) | Mso::ExistsSo(_, a) => 1 + a.quantifier_depth(),
        }
    }

    pub fn has_set_quantifier(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Mso::ExistsSo(..)));
        found
    }
}

impl fmt::Display for Mso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mso::Atom { pred, var } => match pred {
                Pred::Prop(p) => write!(f, "{p}({var})"),
                Pred::SetVar(s) => write!(f, "{s}({var})"),
            },
            Mso::Edge(a, b) => write!(f, "E({a},{b})"),
            Mso::Eq(a, b) => write!(f, "{a} = {b}"),
            Mso::Not(a) => match **a {
                Mso::Eq(..) => write!(f, "!({a})"),
                _ => write!(f, "!{a}"),
            },
            Mso::And(a, b) => write!(f, "({a} & {b})"),
            Mso::ExistsFo(v, a) => write!(f, "(exists {v}. {a})"),
            Mso::ExistsSo(v, a) => write!(f, "(exists2 {v}. {a})"),
        }
    }
}

/// Limits for the brute-force MSO evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest tree on which set quantifiers are enumerated (2^n subsets each).
    pub max_nodes: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_nodes: 12 }
    }
}

struct Env<'a> {
    tree: &'a RootedTree,
    fo: Vec<(String, NodeId)>,
    so: Vec<(String, u64)>,
}

impl Env<'_> {
    fn fo(&self, v: &str) -> Result<NodeId, LogicError> {
        self.fo
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|&(_, node)| node)
            .ok_or_else(|| LogicError::UnboundVariable(v.to_string()))
    }

    fn so(&self, v: &str) -> Result<u64, LogicError> {
        self.so
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|&(_, set)| set)
            .ok_or_else(|| LogicError::UnboundVariable(v.to_string()))
    }

    fn eval(&mut self, f: &Mso) -> Result<bool, LogicError> {
        Ok(match f {
            Mso::Atom { pred, var } => {
                let v = self.fo(var)?;
                match pred {
                    Pred::Prop(p) => self.tree.labels(v).contains(p),
                    Pred::SetVar(s) => self.so(s)? >> v & 1 == 1,
                }
            }
            Mso::Edge(a, b) => {
                let (a, b) = (self.fo(a)?, self.fo(b)?);
                self.tree.has_edge(a, b)
            }
            Mso::Eq(a, b) => self.fo(a)? == self.fo(b)?,
            Mso::Not(a) => !self.eval(a)?,
            Mso::And(a, b) => self.eval(a)? && self.eval(b)?,
            Mso::ExistsFo(y, body) => {
                let mut found = false;
                for v in self.tree.nodes() {
                    self.fo.push((y.clone(), v));
                    let r = self.eval(body);
                    self.fo.pop();
                    if r? {
                        found = true;
                        break;
                    }
                }
                found
            }
            Mso::ExistsSo(y, body) => {
                let n = self.tree.len();
                let mut found = false;
                for set in 0..(1u64 << n) {
                    self.so.push((y.clone(), set));
                    let r = self.eval(body);
                    self.so.pop();
                    if r? {
                        found = true;
                        break;
                    }
                }
                found
            }
        })
    }
}

/// Brute-force satisfaction check: first-order quantifiers range over all nodes,
/// set quantifiers over all `2^|W|` subsets. The edge relation runs parent to child.
pub fn mso_check(
    tree: &RootedTree,
    formula: &Mso,
    interp: &Interpretation,
    config: &OracleConfig,
) -> Result<bool, LogicError> {
    if formula.has_set_quantifier() && tree.len() > config.max_nodes.min(63) {
        return Err(LogicError::SizeLimit {
            nodes: tree.len(),
            cap: config.max_nodes.min(63),
        });
    }
    let mut so = Vec::new();
    for (name, set) in &interp.second_order {
        let mut mask = 0u64;
        for &v in set {
            if v >= 64 || v >= tree.len() {
                return Err(LogicError::UnknownNode(v));
            }
            mask |= 1 << v;
        }
        so.push((name.clone(), mask));
    }
    for &v in interp.first_order.values() {
        if v >= tree.len() {
            return Err(LogicError::UnknownNode(v));
        }
    }
    let mut env = Env {
        tree,
        fo: interp
            .first_order
            .iter()
            .map(|(k, &v)| (k.clone(), v))
            .collect(),
        so,
    };
    env.eval(formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_mso;
    use crate::model::{enumerate_trees, parse_tree};

    fn check(tree: &str, f: &str) -> bool {
        let t = parse_tree(tree).unwrap();
        let f = parse_mso(f).unwrap();
        mso_check(&t, &f, &Interpretation::at_root("x"), &OracleConfig::default()).unwrap()
    }

    #[test]
    fn oracle_examples() {
        assert!(check("({} ({p}))", "exists y. (E(x,y) & p(y))"));
        assert!(!check("({p} ({}))", "exists y. (E(x,y) & p(y))"));
        assert!(check("({} ({}))", "x = x"));
        assert!(check("({} ({}))", "exists2 Y. Y(x)"));
        assert!(!check("({})", "exists2 Y. (Y(x) & !Y(x))"));
        assert!(check("({})", "!exists y. E(x,y)"));
        assert!(!check("({} ({}))", "!exists y. E(x,y)"));
    }

    #[test]
    fn size_limit_applies_to_set_quantifiers_only() {
        let big = parse_tree(&format!("({{}}{})", " ({})".repeat(13))).unwrap();
        let so = parse_mso("exists2 Y. Y(x)").unwrap();
        let fo = parse_mso("exists y. E(x,y)").unwrap();
        let cfg = OracleConfig::default();
        let i = Interpretation::at_root("x");
        assert!(matches!(
            mso_check(&big, &so, &i, &cfg),
            Err(LogicError::SizeLimit { nodes: 14, cap: 12 })
        ));
        assert!(mso_check(&big, &fo, &i, &cfg).unwrap());
    }

    #[test]
    fn negation_coherence_over_corpus() {
        let p = PropSymbol::new("p").unwrap();
        let formulas = [
            "exists y. (E(x,y) & p(y))",
            "exists2 Y. (Y(x) & forall y. (Y(y) | !p(y)))",
            "forall y. (!E(x,y) | exists z. E(y,z))",
        ];
        for t in enumerate_trees(4, &[p]) {
            for f in formulas {
                let f = parse_mso(f).unwrap();
                let nf = Mso::not(f.clone());
                let i = Interpretation::at_root("x");
                let cfg = OracleConfig::default();
                assert_eq!(
                    mso_check(&t, &nf, &i, &cfg).unwrap(),
                    !mso_check(&t, &f, &i, &cfg).unwrap()
                );
            }
        }
    }

    #[test]
    fn child_order_does_not_matter() {
        let f = "exists y. exists z. (E(x,y) & (E(y,z) & (p(z) & !p(y))))";
        assert_eq!(
            check("({} ({p} ({})) ({} ({p})))", f),
            check("({} ({} ({p})) ({p} ({})))", f)
        );
    }

    #[test]
    fn free_vars() {
        let f = Mso::exists("y", Mso::and(Mso::edge("x", "y"), Mso::member("Z", "y")));
        let fv = f.free_vars();
        assert_eq!(fv.get("x"), Some(&VarKind::FirstOrder));
        assert_eq!(fv.get("Z"), Some(&VarKind::SecondOrder));
        assert_eq!(fv.len(), 2);
    }
}
