use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::automata::{
    guess_label, minimize, product, Alphabet, Automaton, Cmpa, Kripke, Product, ProductMode,
    DEFAULT_STATE_BUDGET,
};
use crate::logic::{Mso, Pred};
use crate::model::{apply_interpretation, Interpretation, PropSymbol, RootedTree, VarKind};
use crate::par::{self, Exec};

use super::{
    atomic_eq, atomic_py, atomic_ryz, finalize, fixed_point_sets, properness,
    to_omnipresent_nondet, CompileError, FixedPointSets, Result, DESIGNATED,
};

/// Default size limit for minimizing intermediate automata.
pub const DEFAULT_MINIMIZE_BUDGET: usize = 40_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompileOptions {
    /// Cap on interned states and aggregators per constructed automaton.
    pub budget: usize,
    /// Compile sibling subformulas concurrently.
    pub exec: Exec,
    /// Replace quantifier bodies and results by their bisimulation quotients when
    /// their reachable part has at most this many states and aggregators combined
    /// (0 disables).
    pub minimize: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_STATE_BUDGET,
            exec: Exec::Sequential,
            minimize: DEFAULT_MINIMIZE_BUDGET,
        }
    }
}

/// Size figures of one pipeline stage, read at the time of the call (states are
/// materialized lazily, so counts grow as the automaton is run).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageStats {
    pub stage: &'static str,
    pub materialized: usize,
    pub bound: u64,
    pub state_space: u64,
    pub deterministic: bool,
}

/// A formula together with every pipeline stage built for it so far.
#[derive(Clone, Debug)]
pub struct CompilationUnit {
    pub formula: Mso,
    pub alphabet: Arc<Alphabet>,
    /// Proposition symbols (`Π`).
    pub props: BTreeSet<PropSymbol>,
    /// Free variables; their symbols are part of the input signature.
    pub free: BTreeMap<String, VarKind>,
    pub fixed_point: Cmpa,
    pub fixed_sets: Option<FixedPointSets>,
    pub omnipresent: Option<Cmpa>,
    pub final_automaton: Option<Cmpa>,
    pub timings: Vec<(&'static str, Duration)>,
}

/// Existential first-order quantification: pair `a` with the properness check for
/// `y`, then guess the `y` label everywhere in every round and keep all outcomes.
pub fn exists_fo(a: &Cmpa, y: &str, budget: usize) -> Result<Cmpa> {
    let alphabet = a.alphabet();
    let bit = var_bit(alphabet, VarKind::FirstOrder, y)?;
    let proper = properness(alphabet, &[(bit, y.to_string())]);
    let paired = Cmpa::new(Product::new(a, &proper, ProductMode::Guarded, budget)?);
    Ok(guess_label(&paired, bit, budget)?)
}

/// Existential set quantification: guess membership in `Y` everywhere in every round.
pub fn exists_so(a: &Cmpa, y: &str, budget: usize) -> Result<Cmpa> {
    let bit = var_bit(a.alphabet(), VarKind::SecondOrder, y)?;
    Ok(guess_label(a, bit, budget)?)
}

fn var_bit(alphabet: &Alphabet, kind: VarKind, var: &str) -> Result<u64> {
    alphabet
        .bit(&PropSymbol::variable(kind, var))
        .ok_or_else(|| CompileError::Precondition(format!("variable {var} is not in the alphabet")))
}

struct Ctx<'a> {
    alphabet: &'a Arc<Alphabet>,
    opts: CompileOptions,
}

impl Ctx<'_> {
    /// The quotient of `a` if it is small enough to tabulate, else `a` itself.
    fn shrink(&self, a: Cmpa) -> Cmpa {
        if self.opts.minimize == 0 {
            return a;
        }
        minimize(&a, self.opts.minimize).unwrap_or(a)
    }

    fn bit(&self, kind: VarKind, var: &str) -> Result<u64> {
        var_bit(self.alphabet, kind, var)
    }

    fn compile(&self, f: &Mso) -> Result<Cmpa> {
        let text = f.to_string();
        Ok(match f {
            Mso::Atom { pred, var } => {
                let p = match pred {
                    Pred::Prop(p) => self.alphabet.bit(p).expect("formula props are in the alphabet"),
                    Pred::SetVar(s) => self.bit(VarKind::SecondOrder, s)?,
                };
                atomic_py(self.alphabet, p, self.bit(VarKind::FirstOrder, var)?, &text)
            }
            Mso::Edge(y, z) => atomic_ryz(
                self.alphabet,
                self.bit(VarKind::FirstOrder, y)?,
                self.bit(VarKind::FirstOrder, z)?,
                &text,
            ),
            Mso::Eq(y, z) => atomic_eq(
                self.alphabet,
                self.bit(VarKind::FirstOrder, y)?,
                self.bit(VarKind::FirstOrder, z)?,
                &text,
            ),
            Mso::Not(a) => self.compile(a)?.negate(),
            Mso::And(a, b) => {
                let (ra, rb) = par::join(self.opts.exec, || self.compile(a), || self.compile(b));
                product(&ra?, &rb?, ProductMode::Conjunction)?
            }
            Mso::ExistsFo(y, body) => {
                let inner = self.compile(body)?;
                // a vacuous quantifier over a nonempty domain changes nothing
                if !body.free_vars().contains_key(y) {
                    return Ok(inner);
                }
                let bit = self.bit(VarKind::FirstOrder, y)?;
                let proper = properness(self.alphabet, &[(bit, y.clone())]);
                let paired = Cmpa::new(Product::new(&inner, &proper, ProductMode::Guarded, self.opts.budget)?);
                self.shrink(guess_label(&self.shrink(paired), bit, self.opts.budget)?)
            }
            Mso::ExistsSo(y, body) => {
                let inner = self.compile(body)?;
                if !body.free_vars().contains_key(y) {
                    return Ok(inner);
                }
                let bit = self.bit(VarKind::SecondOrder, y)?;
                self.shrink(guess_label(&self.shrink(inner), bit, self.opts.budget)?)
            }
        })
    }
}

/// Stage 1: the deterministic fixed-point automaton for `formula`.
///
/// The alphabet is `props ∪ props(formula)` plus one symbol per variable
/// occurring in the formula, plus the designated `x:x`. A free variable `v` is
/// read from the symbol `x:v` (or `X:v`) in the input.
pub fn compile_mso(
    formula: &Mso,
    props: &[PropSymbol],
    opts: CompileOptions,
) -> Result<CompilationUnit> {
    let start = Instant::now();
    let mut pi: BTreeSet<PropSymbol> = props.iter().cloned().collect();
    pi.extend(formula.props());
    let mut symbols: Vec<PropSymbol> = pi.iter().cloned().collect();
    symbols.push(PropSymbol::first_order(DESIGNATED));
    for (kind, v) in formula.all_vars() {
        symbols.push(PropSymbol::variable(kind, &v));
    }
    let alphabet = Alphabet::new(symbols)?;
    let fixed_point = Ctx {
        alphabet: &alphabet,
        opts,
    }
    .compile(formula)?;
    Ok(CompilationUnit {
        formula: formula.clone(),
        alphabet,
        props: pi,
        free: formula.free_vars(),
        fixed_point,
        fixed_sets: None,
        omnipresent: None,
        final_automaton: None,
        timings: vec![("fixed-point", start.elapsed())],
    })
}

impl CompilationUnit {
    /// Label bit of the designated variable.
    pub fn designated_bit(&self) -> u64 {
        self.alphabet.bit_of(&format!("x:{DESIGNATED}"))
    }

    /// Symbols induced by the free variables.
    pub fn variable_symbols(&self) -> Vec<PropSymbol> {
        self.free
            .iter()
            .map(|(v, &k)| PropSymbol::variable(k, v))
            .collect()
    }

    /// Encodes `tree` under `interp` for this unit's automata.
    pub fn kripke(&self, tree: &RootedTree, interp: &Interpretation) -> Result<Kripke> {
        let t = apply_interpretation(tree, interp).map_err(crate::logic::LogicError::from)?;
        Ok(Kripke::from_tree(&t, &self.alphabet))
    }

    /// Encodes `tree` with the designated variable at its root.
    pub fn rooted(&self, tree: &RootedTree) -> Kripke {
        self.kripke(tree, &Interpretation::at_root(DESIGNATED))
            .expect("the root always exists")
    }

    /// Builds stages 2 and 3. The formula must be a node property (no free
    /// variables besides the designated one).
    pub fn complete(&mut self, opts: CompileOptions) -> Result<()> {
        let extra: Vec<String> = self
            .free
            .keys()
            .filter(|v| v.as_str() != DESIGNATED)
            .cloned()
            .collect();
        if !extra.is_empty() {
            return Err(CompileError::FreeVariables(extra));
        }
        if self.final_automaton.is_some() {
            return Ok(());
        }
        let start = Instant::now();
        let sets = fixed_point_sets(&self.fixed_point, self.designated_bit())?;
        let omni = to_omnipresent_nondet(&self.fixed_point, &sets)?;
        self.timings.push(("omnipresent", start.elapsed()));
        let start = Instant::now();
        let fin = finalize(&omni, opts.budget)?;
        self.timings.push(("final", start.elapsed()));
        self.fixed_sets = Some(sets);
        self.omnipresent = Some(omni);
        self.final_automaton = Some(fin);
        Ok(())
    }

    pub fn stats(&self) -> Vec<StageStats> {
        let mut out = Vec::new();
        let mut push = |stage, a: &Cmpa| {
            out.push(StageStats {
                stage,
                materialized: a.materialized(),
                bound: a.bound(),
                state_space: a.state_space(),
                deterministic: a.deterministic(),
            })
        };
        push("fixed-point", &self.fixed_point);
        if let Some(a) = &self.omnipresent {
            push("omnipresent", a);
        }
        if let Some(a) = &self.final_automaton {
            push("final", a);
        }
        out
    }

    /// Plain-text report. Contains no timings, so it is reproducible.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "formula\t{}", self.formula);
        let _ = writeln!(s, "alphabet\t{}", self.alphabet.show(self.alphabet.full()));
        let free: Vec<&str> = self.free.keys().map(String::as_str).collect();
        let _ = writeln!(s, "free\t{}", free.join(","));
        if let Some(sets) = &self.fixed_sets {
            let _ = writeln!(
                s,
                "fixed-point sets\t{} labels, {} states, {} aggregators",
                sets.per_label.len(),
                sets.reachable().len(),
                sets.aggregators
            );
        }
        let _ = writeln!(s, "stage\tmaterialized\tbound\tstate_space\tdeterministic");
        for st in self.stats() {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                st.stage, st.materialized, st.bound, st.state_space, st.deterministic
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{decide, AcceptanceCondition, RunLimits, Verdict};
    use crate::logic::{mso_check, parse_mso, OracleConfig};
    use crate::model::{enumerate_trees, parse_tree};

    fn fp(unit: &CompilationUnit, tree: &RootedTree) -> Verdict {
        decide(
            &unit.fixed_point,
            &unit.rooted(tree),
            0,
            AcceptanceCondition::FixedPoint,
            &RunLimits::default(),
        )
        .unwrap()
    }

    fn agrees_everywhere(src: &str, max_nodes: usize) {
        let f = parse_mso(src).unwrap();
        let unit = compile_mso(&f, &[], CompileOptions::default()).unwrap();
        let alphabet: Vec<PropSymbol> = f.props().into_iter().collect();
        for t in enumerate_trees(max_nodes, &alphabet) {
            let want = mso_check(&t, &f, &Interpretation::at_root("x"), &OracleConfig::default())
                .unwrap();
            let got = fp(&unit, &t);
            let expect = if want { Verdict::Accept } else { Verdict::Reject };
            assert_eq!(got, expect, "{src} on {}", t.canonical());
        }
    }

    #[test]
    fn exists_child_with_p() {
        let f = parse_mso("exists y. E(x,y) & p(y)").unwrap();
        let unit = compile_mso(&f, &[], CompileOptions::default()).unwrap();
        assert_eq!(fp(&unit, &parse_tree("({} ({p}))").unwrap()), Verdict::Accept);
        assert_eq!(fp(&unit, &parse_tree("({})").unwrap()), Verdict::Reject);
        assert_eq!(fp(&unit, &parse_tree("({} ({} ({p})))").unwrap()), Verdict::Reject);
    }

    #[test]
    fn trivial_quantifiers() {
        for (src, want) in [
            ("exists y. y = y", Verdict::Accept),
            ("exists2 Y. Y(x)", Verdict::Accept),
            ("exists2 Y. !Y(x)", Verdict::Accept),
            ("exists2 Y. Y(x) & !Y(x)", Verdict::Reject),
        ] {
            let f = parse_mso(src).unwrap();
            let unit = compile_mso(&f, &[], CompileOptions::default()).unwrap();
            for t in ["({})", "({} ({}) ({}))", "({} ({} ({})))"] {
                assert_eq!(fp(&unit, &parse_tree(t).unwrap()), want, "{src} on {t}");
            }
        }
    }

    #[test]
    fn small_differentials() {
        agrees_everywhere("p(x)", 4);
        agrees_everywhere("!exists y. E(x,y)", 4);
        agrees_everywhere("exists y. E(x,y) & p(y)", 4);
    }

    #[test]
    fn free_variable_is_read_from_input() {
        let f = parse_mso("E(x,y)").unwrap();
        let unit = compile_mso(&f, &[], CompileOptions::default()).unwrap();
        assert_eq!(unit.variable_symbols().len(), 2);
        let t = parse_tree("({} ({}))").unwrap();
        let k = unit
            .kripke(&t, &Interpretation::at_root("x").with_first("y", 1))
            .unwrap();
        let v = decide(
            &unit.fixed_point,
            &k,
            0,
            AcceptanceCondition::FixedPoint,
            &RunLimits::default(),
        )
        .unwrap();
        assert_eq!(v, Verdict::Accept);
        let mut unit = unit;
        assert!(matches!(
            unit.complete(CompileOptions::default()),
            Err(CompileError::FreeVariables(_))
        ));
    }
}
