use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::automata::{Kripke, Label};
use crate::model::Multiset;
use crate::par::{self, Exec};

use super::{FloatNum, FloatSystem, GnnError, Result};

pub type Vector = Vec<FloatNum>;

type InitFn = dyn Fn(Label) -> Result<Vector> + Send + Sync;
type AggFn = dyn Fn(&Multiset<Vector>) -> Result<Vector> + Send + Sync;
type ComFn = dyn Fn(&[FloatNum], &[FloatNum]) -> Result<Vector> + Send + Sync;
type AcceptFn = dyn Fn(&[FloatNum]) -> bool + Send + Sync;

/// A recurrent GNN over a floating-point system: `x⁰_w = π(label)` and
/// `xᵗ_w = COM(xᵗ⁻¹_w, AGG({{xᵗ⁻¹_v | v successor of w}}))`.
///
/// Aggregation always sees `M|k`, so `AGG(M) = AGG(M|k)` holds by construction.
#[derive(Clone)]
pub struct GnnF {
    pub system: FloatSystem,
    pub dim: usize,
    pub bound: usize,
    init: Arc<InitFn>,
    agg: Arc<AggFn>,
    com: Arc<ComFn>,
    accepting: Arc<AcceptFn>,
}

impl fmt::Debug for GnnF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GnnF")
            .field("system", &self.system)
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl GnnF {
    pub fn new(
        system: FloatSystem,
        dim: usize,
        bound: usize,
        init: impl Fn(Label) -> Result<Vector> + Send + Sync + 'static,
        agg: impl Fn(&Multiset<Vector>) -> Result<Vector> + Send + Sync + 'static,
        com: impl Fn(&[FloatNum], &[FloatNum]) -> Result<Vector> + Send + Sync + 'static,
        accepting: impl Fn(&[FloatNum]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            system,
            dim,
            bound,
            init: Arc::new(init),
            agg: Arc::new(agg),
            com: Arc::new(com),
            accepting: Arc::new(accepting),
        }
    }

    fn check(&self, v: Vector) -> Result<Vector> {
        if v.len() != self.dim {
            return Err(GnnError::Dimension {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(v)
    }

    pub fn init(&self, label: Label) -> Result<Vector> {
        self.check((self.init)(label)?)
    }

    pub fn aggregate(&self, m: &Multiset<Vector>) -> Result<Vector> {
        self.check((self.agg)(&m.cap(self.bound))?)
    }

    pub fn combine(&self, own: &[FloatNum], agg: &[FloatNum]) -> Result<Vector> {
        self.check((self.com)(own, agg)?)
    }

    pub fn transition(&self, own: &[FloatNum], m: &Multiset<Vector>) -> Result<Vector> {
        self.combine(own, &self.aggregate(m)?)
    }

    pub fn accepting(&self, v: &[FloatNum]) -> bool {
        (self.accepting)(v)
    }
}

/// Element-wise saturating sum; each coordinate is folded in increasing order of
/// its values, starting from `+0`.
pub fn sorted_sum(system: &FloatSystem, dim: usize, m: &Multiset<Vector>) -> Vector {
    (0..dim)
        .map(|j| {
            let mut col: Vec<FloatNum> = m
                .iter()
                .flat_map(|(v, n)| std::iter::repeat_n(v[j], n))
                .collect();
            col.sort();
            col.into_iter().fold(system.zero(), |acc, x| system.add(acc, x))
        })
        .collect()
}

/// Parameters of an R-simple GNN: `COM(q, a) = ReLU*(qC + aA + b)` with `AGG` the
/// sorted element-wise sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RSimpleParams {
    pub c: Vec<Vector>,
    pub a: Vec<Vector>,
    pub b: Vector,
}

/// An R-simple GNN with explicit initialization table and accepting vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RSimple {
    pub system: FloatSystem,
    pub dim: usize,
    pub bound: usize,
    pub params: RSimpleParams,
    /// Initial vectors per label (masked to `signature`); other labels start at 0.
    pub init: HashMap<Label, Vector>,
    pub signature: Label,
    pub accepting: Vec<Vector>,
}

impl RSimple {
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        let square = |m: &[Vector]| m.len() == d && m.iter().all(|r| r.len() == d);
        if !square(&self.params.c) || !square(&self.params.a) || self.params.b.len() != d {
            return Err(GnnError::Config(format!("C and A must be {d}x{d} and b of length {d}")));
        }
        if self.init.values().chain(&self.accepting).any(|v| v.len() != d) {
            return Err(GnnError::Config(format!("vectors must have length {d}")));
        }
        if self.system.one().is_none() {
            return Err(GnnError::SystemTooSmall(format!("{} cannot represent 1", self.system)));
        }
        Ok(())
    }

    /// `ReLU*(qC + aA + b)`. Each coordinate sums its terms in increasing order,
    /// like the aggregation.
    pub fn combine(&self, q: &[FloatNum], a: &[FloatNum]) -> Result<Vector> {
        let s = &self.system;
        (0..self.dim)
            .map(|j| {
                let mut terms: Vec<FloatNum> = (0..self.dim)
                    .map(|i| s.mul(q[i], self.params.c[i][j]))
                    .chain((0..self.dim).map(|i| s.mul(a[i], self.params.a[i][j])))
                    .collect();
                terms.push(self.params.b[j]);
                terms.sort();
                s.relu_star(terms.into_iter().fold(s.zero(), |acc, x| s.add(acc, x)))
            })
            .collect()
    }

    pub fn to_gnn(&self) -> Result<GnnF> {
        self.validate()?;
        let (sys, dim) = (self.system, self.dim);
        let me = Arc::new(self.clone());
        let (m1, m2) = (Arc::clone(&me), Arc::clone(&me));
        Ok(GnnF::new(
            sys,
            dim,
            self.bound,
            move |l| {
                Ok(m1
                    .init
                    .get(&(l & m1.signature))
                    .cloned()
                    .unwrap_or_else(|| vec![sys.zero(); dim]))
            },
            move |m| Ok(sorted_sum(&sys, dim, m)),
            move |q, a| me.combine(q, a),
            move |v| m2.accepting.iter().any(|f| f.as_slice() == v),
        ))
    }
}

/// Feature vectors of every node, round by round, until the global configuration
/// repeats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GnnTrace {
    /// `rounds[t][w]`.
    pub rounds: Vec<Vec<Vector>>,
    /// The configuration after the last recorded round equals `rounds[cycle_start]`.
    pub cycle_start: usize,
}

impl GnnTrace {
    pub fn to_tsv(&self, system: &FloatSystem) -> String {
        let mut out = String::from("round\tnode\tvector\n");
        for (t, cfg) in self.rounds.iter().enumerate() {
            for (w, v) in cfg.iter().enumerate() {
                let parts: Vec<String> = v.iter().map(|&x| system.show(x)).collect();
                out.push_str(&format!("{t}\t{w}\t{}\n", parts.join(",")));
            }
        }
        out
    }
}

/// One synchronous round.
pub fn gnn_step(g: &GnnF, model: &Kripke, cur: &[Vector], exec: Exec) -> Result<Vec<Vector>> {
    par::map_range(exec, model.len(), |w| {
        let mut m = Multiset::new();
        for &v in model.successors(w) {
            m.insert(cur[v].clone());
        }
        g.transition(&cur[w], &m)
    })
    .into_iter()
    .collect()
}

/// Runs `g` until the configuration repeats. Fails if that takes more than
/// `max_rounds` rounds.
pub fn gnn_run(g: &GnnF, model: &Kripke, max_rounds: usize, exec: Exec) -> Result<GnnTrace> {
    let mut cur: Vec<Vector> = (0..model.len())
        .map(|w| g.init(model.label(w)))
        .collect::<Result<_>>()?;
    let mut rounds = Vec::new();
    let mut seen: HashMap<Vec<Vector>, usize> = HashMap::new();
    loop {
        if let Some(&start) = seen.get(&cur) {
            return Ok(GnnTrace {
                rounds,
                cycle_start: start,
            });
        }
        if rounds.len() > max_rounds {
            return Err(GnnError::HorizonExceeded(max_rounds));
        }
        seen.insert(cur.clone(), rounds.len());
        let next = gnn_step(g, model, &cur, exec)?;
        rounds.push(cur);
        cur = next;
    }
}

/// Whether `root` visits an accepting vector in some round. The trace covers every
/// configuration of the run, so this is exact.
pub fn gnn_accepts(g: &GnnF, model: &Kripke, root: usize, max_rounds: usize, exec: Exec) -> Result<bool> {
    let tr = gnn_run(g, model, max_rounds, exec)?;
    Ok(tr.rounds.iter().any(|cfg| g.accepting(&cfg[root])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::Alphabet;
    use crate::model::parse_tree;

    fn simple(c: &str, init_p: &str) -> RSimple {
        let sys = FloatSystem::new(4, 2, 2).unwrap();
        let v = |t: &str| sys.parse(t).unwrap().0;
        let alpha = Alphabet::of(&["p"]);
        RSimple {
            system: sys,
            dim: 1,
            bound: 1,
            params: RSimpleParams {
                c: vec![vec![v(c)]],
                a: vec![vec![v("0")]],
                b: vec![v("0")],
            },
            init: [(alpha.bit_of("p"), vec![v(init_p)])].into_iter().collect(),
            signature: alpha.bit_of("p"),
            accepting: vec![vec![v("1")]],
        }
    }

    #[test]
    fn zero_map_clears_features() {
        let g = simple("0", "1").to_gnn().unwrap();
        let alpha = Alphabet::of(&["p"]);
        let k = Kripke::from_tree(&parse_tree("({p} ({p}) ({}))").unwrap(), &alpha);
        let tr = gnn_run(&g, &k, 10, Exec::Sequential).unwrap();
        assert!(tr.rounds[1].iter().all(|v| v[0].is_zero()));
        assert!(gnn_accepts(&g, &k, 0, 10, Exec::Sequential).unwrap());
    }

    #[test]
    fn identity_probe_keeps_one() {
        let g = simple("1", "1").to_gnn().unwrap();
        let alpha = Alphabet::of(&["p"]);
        let k = Kripke::from_tree(&parse_tree("({p} ({}))").unwrap(), &alpha);
        let tr = gnn_run(&g, &k, 10, Exec::Sequential).unwrap();
        assert_eq!(tr.rounds.len(), 1);
        assert_eq!(g.system.show(tr.rounds[0][0][0]), "1");
        assert!(tr.rounds[0][1][0].is_zero());
        assert_eq!(tr.to_tsv(&g.system), "round\tnode\tvector\n0\t0\t1\n0\t1\t0\n");
    }

    #[test]
    fn aggregation_is_capped_and_order_free() {
        let sys = FloatSystem::new(2, 1, 2).unwrap();
        let v = |t: &str| sys.parse(t).unwrap().0;
        let g = GnnF::new(
            sys,
            1,
            2,
            move |_| Ok(vec![sys.zero()]),
            move |m| Ok(sorted_sum(&sys, 1, m)),
            |_, a| Ok(a.to_vec()),
            |_| false,
        );
        let mut m = Multiset::new();
        m.insert_n(vec![v("0.5")], 5);
        m.insert(vec![v("-0.25")]);
        let capped = g.aggregate(&m).unwrap();
        assert_eq!(capped, g.aggregate(&m.cap(2)).unwrap());
        assert_eq!(sys.show(capped[0]), "3/4");
    }
}
