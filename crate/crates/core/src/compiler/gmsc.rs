use std::sync::Arc;

use crate::automata::{Alphabet, Cmpa, CountingAutomaton, Label};
use crate::logic::{Gml, GmscProgram};

use super::{CompileError, Result};

/// Flattened GML: children precede parents.
#[derive(Clone, Debug)]
enum Gate {
    Const(bool),
    Prop(Label),
    Var(usize),
    Not(usize),
    Or(usize, usize),
    /// Grade, operand, and the slot of this diamond in the stored bit vector.
    Dia(usize, usize, usize),
}

#[derive(Clone, Debug, Default)]
struct Circuit {
    gates: Vec<Gate>,
    diamonds: usize,
}

impl Circuit {
    fn add(&mut self, f: &Gml, alphabet: &Alphabet, vars: &[String]) -> usize {
        let g = match f {
            Gml::Prop(p) => match alphabet.bit(p) {
                Some(b) => Gate::Prop(b),
                None => Gate::Const(false),
            },
            Gml::Var(v) => Gate::Var(vars.iter().position(|w| w == v).expect("declared schema variable")),
            Gml::Not(a) => Gate::Not(self.add(a, alphabet, vars)),
            Gml::Or(a, b) => {
                let i = self.add(a, alphabet, vars);
                Gate::Or(i, self.add(b, alphabet, vars))
            }
            Gml::Diamond(k, a) => {
                let i = self.add(a, alphabet, vars);
                self.diamonds += 1;
                Gate::Dia(*k, i, self.diamonds - 1)
            }
        };
        self.gates.push(g);
        self.gates.len() - 1
    }

    /// Evaluates every gate at a node. `dia` supplies diamond values by slot.
    fn eval(&self, label: Label, assign: u64, dia: &dyn Fn(usize, usize, usize) -> bool) -> Vec<bool> {
        let mut v: Vec<bool> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let b = match *g {
                Gate::Const(b) => b,
                Gate::Prop(bit) => label & bit != 0,
                Gate::Var(j) => assign >> j & 1 == 1,
                Gate::Not(i) => !v[i],
                Gate::Or(i, j) => v[i] || v[j],
                Gate::Dia(k, i, slot) => dia(k, i, slot),
            };
            v.push(b);
        }
        v
    }
}

/// Node state of a compiled program. Until `phase` reaches the depth of the
/// initial bodies, `dias` holds the diamonds of those bodies evaluated so far;
/// afterwards `assign` holds the truth values of the schema variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Node {
    phase: u8,
    dias: u64,
    assign: u64,
    label: Label,
}

/// Compiles a GMSC program into a deterministic, non-forgetful automaton with
/// ordinary acceptance.
///
/// The first `D` rounds (`D` the modal depth of the initial bodies) evaluate the
/// initial bodies bottom-up; round `D + t` then carries the program's round `t`.
/// Each node remembers its own label so parents can read it. Rule bodies may use
/// diamonds only at depth 1: their operands are evaluated from a child's stored
/// label and assignment. Symbols outside `alphabet` are false.
pub fn compile_gmsc(program: &GmscProgram, alphabet: &Arc<Alphabet>) -> Result<Cmpa> {
    let n = program.vars.len();
    if n > 64 {
        return Err(CompileError::Precondition(format!("{n} schema variables exceed 64")));
    }
    for (v, r) in program.vars.iter().zip(&program.rules) {
        if r.modal_depth() > 1 {
            return Err(CompileError::UnsupportedNesting { var: v.clone() });
        }
    }
    let mut init = Circuit::default();
    let init_roots: Vec<usize> = program
        .init
        .iter()
        .map(|f| init.add(f, alphabet, &program.vars))
        .collect();
    if init.diamonds > 64 {
        return Err(CompileError::TooManyDiamonds(init.diamonds));
    }
    let mut rules = Circuit::default();
    let rule_roots: Vec<usize> = program
        .rules
        .iter()
        .map(|f| rules.add(f, alphabet, &program.vars))
        .collect();

    let depth = program.init.iter().map(Gml::modal_depth).max().unwrap_or(0);
    if depth > u8::MAX as usize {
        return Err(CompileError::Precondition("initial bodies nest too deeply".into()));
    }
    let depth = depth as u8;
    let bound = program
        .init
        .iter()
        .chain(&program.rules)
        .map(Gml::max_grade)
        .max()
        .unwrap_or(0)
        .max(1) as u64;
    let signature = program
        .init
        .iter()
        .chain(&program.rules)
        .flat_map(Gml::props)
        .filter_map(|p| alphabet.bit(&p))
        .fold(0, |m, b| m | b);
    let appointed = program.appointed_mask();
    let vars = program.vars.clone();

    let init = Arc::new(init);
    let init_roots = Arc::new(init_roots);
    let assign_from = {
        let (init, init_roots) = (Arc::clone(&init), Arc::clone(&init_roots));
        move |label: Label, dias: u64| -> u64 {
            let v = init.eval(label, 0, &|_, _, slot| dias >> slot & 1 == 1);
            init_roots
                .iter()
                .enumerate()
                .fold(0, |m, (j, &r)| m | u64::from(v[r]) << j)
        }
    };
    let assign_init = assign_from.clone();

    let a = CountingAutomaton::builder("gmsc", alphabet, signature, bound)
        .with_memory()
        .init(move |label| {
            let assign = if depth == 0 { assign_init(label, 0) } else { 0 };
            vec![Node {
                phase: 0,
                dias: 0,
                assign,
                label,
            }]
        })
        .delta(move |label, own, children| {
            let own = own?;
            if own.phase < depth {
                let vals: Vec<(Vec<bool>, usize)> = children
                    .iter()
                    .map(|(c, m)| (init.eval(c.label, 0, &|_, _, s| c.dias >> s & 1 == 1), m))
                    .collect();
                let v = init.eval(label, 0, &|k, i, _| {
                    vals.iter().filter(|(cv, _)| cv[i]).map(|(_, m)| m).sum::<usize>() >= k
                });
                let dias = init
                    .gates
                    .iter()
                    .enumerate()
                    .filter_map(|(g, gate)| match gate {
                        Gate::Dia(_, _, slot) => Some(u64::from(v[g]) << slot),
                        _ => None,
                    })
                    .fold(0, |m, b| m | b);
                let phase = own.phase + 1;
                return Some(if phase == depth {
                    Node {
                        phase,
                        dias: 0,
                        assign: assign_from(label, dias),
                        label,
                    }
                } else {
                    Node {
                        phase,
                        dias,
                        assign: 0,
                        label,
                    }
                });
            }
            let vals: Vec<(Vec<bool>, usize)> = children
                .iter()
                .map(|(c, m)| (rules.eval(c.label, c.assign, &|_, _, _| false), m))
                .collect();
            let v = rules.eval(label, own.assign, &|k, i, _| {
                vals.iter().filter(|(cv, _)| cv[i]).map(|(_, m)| m).sum::<usize>() >= k
            });
            let assign = rule_roots
                .iter()
                .enumerate()
                .fold(0, |m, (j, &r)| m | u64::from(v[r]) << j);
            Some(Node {
                phase: depth,
                dias: 0,
                assign,
                label,
            })
        })
        .accepting(move |s| s.phase == depth && s.assign & appointed != 0)
        .names(move |s| {
            let on: Vec<&str> = vars
                .iter()
                .enumerate()
                .filter(|(j, _)| s.assign >> j & 1 == 1)
                .map(|(_, v)| v.as_str())
                .collect();
            if s.phase < depth {
                format!("warmup{}[{:b}]", s.phase, s.dias)
            } else {
                format!("{{{}}}", on.join(","))
            }
        })
        .build();
    Ok(Cmpa::new(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{decide, AcceptanceCondition, Automaton, Kripke, RunLimits, Verdict};
    use crate::logic::{gmsc_accepts, parse_gmsc};
    use crate::model::{enumerate_trees, parse_tree, PropSymbol};

    fn agree(src: &str, max_nodes: usize) {
        let prog = parse_gmsc(src).unwrap();
        let alpha = Alphabet::of(&["p", "q"]);
        let a = compile_gmsc(&prog, &alpha).unwrap();
        let props = [PropSymbol::new("p").unwrap(), PropSymbol::new("q").unwrap()];
        for t in enumerate_trees(max_nodes, &props) {
            let k = Kripke::from_tree(&t, &alpha);
            let got = decide(&a, &k, 0, AcceptanceCondition::Standard, &RunLimits::default())
                .unwrap()
                == Verdict::Accept;
            assert_eq!(got, gmsc_accepts(&t, 0, &prog), "{src} on {}", t.canonical());
        }
    }

    #[test]
    fn propagation_program() {
        let prog = parse_gmsc("X(0) :- p; X :- dia>=1 X; appointed: X;").unwrap();
        let alpha = Alphabet::of(&["p"]);
        let a = compile_gmsc(&prog, &alpha).unwrap();
        let t = parse_tree("({} ({p}))").unwrap();
        let tr = crate::automata::run(&a, &Kripke::from_tree(&t, &alpha), &RunLimits::default(), None)
            .unwrap();
        assert!(!a.accepting(tr.rounds[0][0]));
        assert!(a.accepting(tr.rounds[1][0]));
        assert!(!a.forgetful());
        assert!(a.deterministic());
    }

    #[test]
    fn nothing_appointed_accepts_nothing() {
        agree("X(0) :- p; X :- X; appointed: ;", 3);
    }

    #[test]
    fn agrees_with_engine() {
        agree("X(0) :- p; X :- dia>=1 X; appointed: X;", 4);
        agree("X(0) :- dia>=2 (p & dia>=1 q); X :- X | dia>=1 X; appointed: X;", 4);
        agree(
            "X(0) :- p; Y(0) :- q; X :- Y; Y :- !X & dia>=2 p; appointed: Y;",
            4,
        );
    }

    #[test]
    fn nested_rules_are_rejected() {
        let prog = parse_gmsc("X(0) :- p; X :- dia>=1 dia>=1 X; appointed: X;").unwrap();
        assert!(matches!(
            compile_gmsc(&prog, &Alphabet::of(&["p"])),
            Err(CompileError::UnsupportedNesting { .. })
        ));
    }
}
