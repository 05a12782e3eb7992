use std::collections::BTreeSet;
use std::fmt;

use crate::model::{NodeId, PropSymbol, RootedTree};

use super::Mso;

/// Graded modal formulas. `Var` only occurs inside GMSC rule bodies (schemata);
/// plain GML formulas never contain it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Gml {
    Prop(PropSymbol),
    Var(String),
    Not(Box<Gml>),
    Or(Box<Gml>, Box<Gml>),
    /// `dia>=k f`: at least `k` children satisfy `f`.
    Diamond(usize, Box<Gml>),
}

impl Gml {
    pub fn prop(p: &str) -> Self {
        Gml::Prop(PropSymbol::new(p).expect("valid proposition"))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Gml) -> Self {
        Gml::Not(Box::new(f))
    }

    pub fn or(a: Gml, b: Gml) -> Self {
        Gml::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Gml, b: Gml) -> Self {
        Gml::not(Gml::or(Gml::not(a), Gml::not(b)))
    }

    pub fn dia(k: usize, f: Gml) -> Self {
        Gml::Diamond(k, Box::new(f))
    }

    /// `p | !p`, the usual encoding of truth.
    pub fn top(p: &str) -> Self {
        Gml::or(Gml::prop(p), Gml::not(Gml::prop(p)))
    }

    pub fn modal_depth(&self) -> usize {
        match self {
            Gml::Prop(_) | Gml::Var(_) => 0,
            Gml::Not(a) => a.modal_depth(),
            Gml::Or(a, b) => a.modal_depth().max(b.modal_depth()),
            Gml::Diamond(_, a) => 1 + a.modal_depth(),
        }
    }

    /// Largest grade among the diamonds (0 if there are none).
    pub fn max_grade(&self) -> usize {
        match self {
            Gml::Prop(_) | Gml::Var(_) => 0,
            Gml::Not(a) => a.max_grade(),
            Gml::Or(a, b) => a.max_grade().max(b.max_grade()),
            Gml::Diamond(k, a) => (*k).max(a.max_grade()),
        }
    }

    pub fn props(&self) -> BTreeSet<PropSymbol> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<PropSymbol>) {
        match self {
            Gml::Prop(p) => {
                out.insert(p.clone());
            }
            Gml::Var(_) => {}
            Gml::Not(a) | Gml::Diamond(_, a) => a.collect_props(out),
            Gml::Or(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Gml::Var(v) => {
                out.insert(v.clone());
            }
            Gml::Prop(_) => {}
            Gml::Not(a) | Gml::Diamond(_, a) => a.collect_vars(out),
            Gml::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Generic evaluator; `var` resolves schema variables at a node.
    pub(crate) fn eval_with(
        &self,
        tree: &RootedTree,
        node: NodeId,
        var: &dyn Fn(NodeId, &str) -> bool,
    ) -> bool {
        match self {
            Gml::Prop(p) => tree.labels(node).contains(p),
            Gml::Var(v) => var(node, v),
            Gml::Not(a) => !a.eval_with(tree, node, var),
            Gml::Or(a, b) => a.eval_with(tree, node, var) || b.eval_with(tree, node, var),
            Gml::Diamond(k, a) => {
                *k == 0
                    || tree
                        .children(node)
                        .iter()
                        .filter(|&&c| a.eval_with(tree, c, var))
                        .count()
                        >= *k
            }
        }
    }
}

impl fmt::Display for Gml {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gml::Prop(p) => write!(f, "{p}"),
            Gml::Var(v) => write!(f, "{v}"),
            Gml::Not(a) => write!(f, "!{a}"),
            Gml::Or(a, b) => write!(f, "({a} | {b})"),
            Gml::Diamond(k, a) => write!(f, "dia>={k} {a}"),
        }
    }
}

/// A finite disjunction of GML formulas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaGml {
    disjuncts: Vec<Gml>,
}

impl OmegaGml {
    pub fn new(disjuncts: Vec<Gml>) -> Option<Self> {
        (!disjuncts.is_empty()).then_some(Self { disjuncts })
    }

    pub fn single(f: Gml) -> Self {
        Self { disjuncts: vec![f] }
    }

    pub fn disjuncts(&self) -> &[Gml] {
        &self.disjuncts
    }

    /// First disjunct true at `node`.
    pub fn true_disjunct(&self, tree: &RootedTree, node: NodeId) -> Option<&Gml> {
        self.disjuncts.iter().find(|d| gml_eval(tree, node, d))
    }
}

/// GML truth at `node`. Schema variables evaluate to false.
pub fn gml_eval(tree: &RootedTree, node: NodeId, formula: &Gml) -> bool {
    formula.eval_with(tree, node, &|_, _| false)
}

/// Standard translation into MSO with free variable `x`. Bound variables are
/// named `{x}_{n}` with a fresh counter so nested diamonds never clash.
pub fn gml_to_mso(formula: &Gml, x: &str) -> Mso {
    fn go(f: &Gml, x: &str, fresh: &mut usize) -> Mso {
        match f {
            Gml::Prop(p) => Mso::Atom {
                pred: super::Pred::Prop(p.clone()),
                var: x.to_string(),
            },
            Gml::Var(v) => panic!("schema variable {v} has no MSO translation"),
            Gml::Not(a) => Mso::not(go(a, x, fresh)),
            Gml::Or(a, b) => Mso::or(go(a, x, fresh), go(b, x, fresh)),
            Gml::Diamond(0, _) => Mso::eq(x, x),
            Gml::Diamond(k, a) => {
                let ys: Vec<String> = (0..*k)
                    .map(|_| {
                        *fresh += 1;
                        format!("y{}", *fresh)
                    })
                    .collect();
                let mut parts = Vec::new();
                for (i, y) in ys.iter().enumerate() {
                    for z in &ys[..i] {
                        parts.push(Mso::not(Mso::eq(z, y)));
                    }
                    parts.push(Mso::edge(x, y));
                    parts.push(go(a, y, fresh));
                }
                ys.iter()
                    .rev()
                    .fold(Mso::all(parts), |acc, y| Mso::exists(y, acc))
            }
        }
    }
    go(formula, x, &mut 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{mso_check, parse_gml, parse_mso, OracleConfig};
    use crate::model::{enumerate_trees, parse_tree, Interpretation};

    #[test]
    fn eval_examples() {
        let t = parse_tree("({} ({p}) ({p}) ({}))").unwrap();
        assert!(gml_eval(&t, 0, &parse_gml("dia>=2 p").unwrap()));
        assert!(!gml_eval(&t, 0, &parse_gml("dia>=3 p").unwrap()));
        assert!(gml_eval(&t, 3, &parse_gml("dia>=0 p").unwrap()));
        assert!(!gml_eval(&t, 0, &parse_gml("p").unwrap()));
    }

    #[test]
    fn translation_shapes() {
        assert_eq!(gml_to_mso(&Gml::prop("p"), "x"), Mso::prop("p", "x"));
        assert_eq!(
            gml_to_mso(&Gml::dia(1, Gml::prop("p")), "x"),
            parse_mso("exists y1. (E(x,y1) & p(y1))").unwrap()
        );
        let t = parse_tree("({} ({p}) ({p}) ({}))").unwrap();
        let f = Gml::dia(2, Gml::prop("p"));
        let m = gml_to_mso(&f, "x");
        let i = Interpretation::at_root("x");
        assert!(mso_check(&t, &m, &i, &OracleConfig::default()).unwrap());
        assert!(gml_eval(&t, 0, &f));
    }

    #[test]
    fn translation_agrees_with_eval() {
        let corpus = [
            "p",
            "!p",
            "dia>=1 p",
            "dia>=2 p",
            "dia>=0 q",
            "dia>=1 (p & dia>=1 q)",
            "!dia>=1 p",
            "(p | dia>=2 !q)",
            "dia>=1 dia>=1 p",
        ];
        let alphabet = [PropSymbol::new("p").unwrap(), PropSymbol::new("q").unwrap()];
        let i = Interpretation::at_root("x");
        for src in corpus {
            let f = parse_gml(src).unwrap();
            let m = gml_to_mso(&f, "x");
            for t in enumerate_trees(4, &alphabet) {
                assert_eq!(
                    mso_check(&t, &m, &i, &OracleConfig::default()).unwrap(),
                    gml_eval(&t, 0, &f),
                    "{src} on {}",
                    t.canonical()
                );
            }
        }
    }

    #[test]
    fn depth_and_grade() {
        let f = parse_gml("dia>=1 (p & dia>=3 q)").unwrap();
        assert_eq!(f.modal_depth(), 2);
        assert_eq!(f.max_grade(), 3);
        assert_eq!(Gml::prop("p").modal_depth(), 0);
    }
}
