//! Fixed formula and program corpora over the propositions `p` and `q`.

use crate::logic::{parse_gml, parse_gmsc, parse_node_property, Gml, GmscProgram, Mso};
use crate::model::PropSymbol;

/// Node properties `φ(x)` with at most two nested quantifiers.
pub const MSO_CORPUS: &[(&str, &str)] = &[
    ("p-here", "p(x)"),
    ("p-and-not-q", "p(x) & !q(x)"),
    ("leaf", "!exists y. E(x,y)"),
    ("child-p", "exists y. (E(x,y) & p(y))"),
    ("children-q", "forall y. (!E(x,y) | q(y))"),
    ("two-children", "exists y. exists z. (E(x,y) & E(x,z) & !(y = z))"),
    ("grandchild-p", "exists y. (E(x,y) & exists z. (E(y,z) & p(z)))"),
    ("self-q", "exists y. (y = x & q(y))"),
    ("somewhere-pq", "exists y. (p(y) & q(y))"),
    ("set-root", "exists2 Y. Y(x)"),
    ("set-avoids-p", "exists2 Y. (Y(x) & !exists y. (Y(y) & p(y)))"),
    ("unique-p", "exists y. (p(y) & forall z. (!p(z) | z = y))"),
];

/// Graded modal formulas of modal depth at most two.
pub const GML_CORPUS: &[(&str, &str)] = &[
    ("p", "p"),
    ("dia1-p", "dia>=1 p"),
    ("dia2-p", "dia>=2 p"),
    ("dia1-p-dia1-q", "dia>=1 (p & dia>=1 q)"),
    ("not-dia1-p", "!dia>=1 p"),
];

/// GMSC programs; the first propagates `p` upwards.
pub const GMSC_CORPUS: &[(&str, &str)] = &[
    ("propagate-p", "X(0) :- p; X :- dia>=1 X; appointed: X;"),
    (
        "alternate",
        "A(0) :- p; B(0) :- q; A :- dia>=1 B; B :- !A; appointed: A, B;",
    ),
    ("two-below", "X(0) :- q; X :- X | dia>=2 X; appointed: X;"),
    ("toggle", "X(0) :- p; X :- !X & !q; appointed: X;"),
    (
        "guarded",
        "X(0) :- !q; Y(0) :- q; X :- X & !dia>=1 Y; Y :- Y | dia>=1 Y; appointed: X;",
    ),
    ("silent", "X(0) :- p; X :- dia>=1 X; appointed: ;"),
];

/// `{p, q}`.
pub fn corpus_props() -> Vec<PropSymbol> {
    vec![PropSymbol::new("p").expect("valid"), PropSymbol::new("q").expect("valid")]
}

pub fn mso_corpus() -> Vec<(String, Mso)> {
    MSO_CORPUS
        .iter()
        .map(|(id, text)| (id.to_string(), parse_node_property(text).expect("corpus formula parses")))
        .collect()
}

pub fn gml_corpus() -> Vec<(String, Gml)> {
    GML_CORPUS
        .iter()
        .map(|(id, text)| (id.to_string(), parse_gml(text).expect("corpus formula parses")))
        .collect()
}

pub fn gmsc_corpus() -> Vec<(String, GmscProgram)> {
    GMSC_CORPUS
        .iter()
        .map(|(id, text)| (id.to_string(), parse_gmsc(text).expect("corpus program parses")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Mso;

    #[test]
    fn corpora_parse_and_cover_the_required_shapes() {
        let mso = mso_corpus();
        assert!(mso.len() >= 10);
        assert!(mso.iter().all(|(_, f)| f.quantifier_depth() <= 2));
        let mut edge = false;
        let mut eq = false;
        let mut neg_exists = false;
        for (_, f) in &mso {
            f.visit(&mut |g| match g {
                Mso::Edge(..) => edge = true,
                Mso::Eq(..) => eq = true,
                Mso::Not(inner) if matches!(**inner, Mso::ExistsFo(..)) => neg_exists = true,
                _ => {}
            });
        }
        assert!(edge && eq && neg_exists);
        assert!(mso.iter().any(|(_, f)| f.has_set_quantifier()));
        assert!(gml_corpus().iter().all(|(_, g)| g.modal_depth() <= 2));
        assert!(gmsc_corpus().len() >= 5);
    }
}
