use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formal::{FormalPolynomial, FormalSymbol};
use crate::linalg::{dot, orthonormalize_against};
use crate::polyjet::Jet;

/// Product of unit spheres in `ℝ^ambient`, each factor optionally required
/// to be orthogonal to some earlier factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifold {
    ambient: usize,
    orthogonal_to: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Layout {
    Product,
    Frame,
    Other,
}

impl Manifold {
    /// Factors with explicit orthogonality relations; each relation must
    /// point to an earlier factor.
    pub fn new(ambient: usize, orthogonal_to: Vec<Vec<usize>>) -> Result<Self> {
        for (i, rel) in orthogonal_to.iter().enumerate() {
            if rel.iter().any(|&j| j >= i) {
                return Err(Error::InvalidSystem {
                    n: ambient,
                    m: orthogonal_to.len(),
                    r: 0,
                    reason: format!("factor {i} declares orthogonality to a later factor"),
                });
            }
            if rel.len() >= ambient {
                return Err(Error::DimensionMismatch {
                    expected: ambient,
                    got: rel.len() + 1,
                });
            }
        }
        Ok(Manifold {
            ambient,
            orthogonal_to,
        })
    }

    pub fn sphere(ambient: usize) -> Self {
        Manifold {
            ambient,
            orthogonal_to: vec![Vec::new()],
        }
    }

    /// `count` mutually orthogonal unit vectors (a Stiefel manifold).
    pub fn frame(ambient: usize, count: usize) -> Self {
        assert!(count <= ambient, "frame larger than ambient space");
        Manifold {
            ambient,
            orthogonal_to: (0..count).map(|i| (0..i).collect()).collect(),
        }
    }

    /// `count` independent unit spheres.
    pub fn product(ambient: usize, count: usize) -> Self {
        Manifold {
            ambient,
            orthogonal_to: vec![Vec::new(); count],
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn factors(&self) -> usize {
        self.orthogonal_to.len()
    }

    pub fn relations(&self, factor: usize) -> &[usize] {
        &self.orthogonal_to[factor]
    }

    pub fn dim(&self) -> usize {
        self.orthogonal_to
            .iter()
            .map(|r| self.ambient - 1 - r.len())
            .sum()
    }

    pub(crate) fn layout(&self) -> Layout {
        if self.orthogonal_to.iter().all(Vec::is_empty) {
            Layout::Product
        } else if self
            .orthogonal_to
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().copied().eq(0..i))
        {
            Layout::Frame
        } else {
            Layout::Other
        }
    }

    /// Projects a tuple of ambient vectors back onto the manifold, factor
    /// by factor (Gram-Schmidt against declared partners, then normalize).
    pub fn retract(&self, point: &mut [Vec<f64>]) -> Option<()> {
        for i in 0..point.len() {
            let (done, rest) = point.split_at_mut(i);
            let against: Vec<&[f64]> = self.orthogonal_to[i]
                .iter()
                .map(|&j| done[j].as_slice())
                .collect();
            orthonormalize_against(&mut rest[0], &against)?;
        }
        Some(())
    }

    /// Largest violation of the unit-norm and orthogonality constraints.
    pub fn constraint_violation(&self, point: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, x) in point.iter().enumerate() {
            worst = worst.max((dot(x, x).sqrt() - 1.0).abs());
            for &j in &self.orthogonal_to[i] {
                worst = worst.max(dot(x, &point[j]).abs());
            }
        }
        worst
    }
}

/// One form evaluation `h^k[slot_1, …, slot_k]` (0-based slots: variables
/// first, then fixed vectors).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Atom {
    pub order: usize,
    pub slots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Term {
    pub coeff: f64,
    pub factors: Vec<(usize, u32)>,
}

/// Residual `Σ_e e(x)²` over a [`Manifold`], with each equation `e` a
/// polynomial in jet forms evaluated on the manifold point.
///
/// Equations are [`FormalPolynomial`]s whose `JetForm` arguments are 1-based
/// slots: `1..=factors` name the manifold factors, larger indices name the
/// fixed vectors in order.
#[derive(Debug, Clone)]
pub struct SearchProblem {
    jet: Jet,
    manifold: Manifold,
    fixed: Vec<Vec<f64>>,
    equations: Vec<FormalPolynomial>,
    pub(crate) atoms: Vec<Atom>,
    pub(crate) compiled: Vec<Vec<Term>>,
    sign_symmetric: bool,
    form_bounds: Vec<f64>,
    span_tail: usize,
}

pub(crate) struct Evaluation {
    pub values: Vec<f64>,
    pub atoms: Vec<f64>,
    /// `jac[e][f * ambient + c]`: derivative of equation `e` along
    /// coordinate `c` of factor `f`.
    pub jac: Option<Vec<Vec<f64>>>,
}

impl SearchProblem {
    pub fn new(
        jet: Jet,
        manifold: Manifold,
        fixed: Vec<Vec<f64>>,
        equations: Vec<FormalPolynomial>,
    ) -> Result<Self> {
        if jet.n() != manifold.ambient() {
            return Err(Error::DimensionMismatch {
                expected: manifold.ambient(),
                got: jet.n(),
            });
        }
        for f in &fixed {
            if f.len() != manifold.ambient() {
                return Err(Error::DimensionMismatch {
                    expected: manifold.ambient(),
                    got: f.len(),
                });
            }
        }
        let slots = manifold.factors() + fixed.len();
        let mut atoms: Vec<Atom> = Vec::new();
        let mut compiled = Vec::with_capacity(equations.len());
        for eq in &equations {
            let mut terms = Vec::new();
            for (mono, c) in eq.terms() {
                let mut factors = Vec::new();
                for (sym, e) in mono.factors() {
                    let FormalSymbol::JetForm { order, args } = sym else {
                        return Err(Error::InvalidSystem {
                            n: manifold.ambient(),
                            m: manifold.factors(),
                            r: jet.order(),
                            reason: format!("search equations cannot contain curve symbol {sym}"),
                        });
                    };
                    if *order > jet.order() {
                        return Err(Error::OrderTooLow {
                            needed: *order,
                            got: jet.order(),
                        });
                    }
                    if let Some(&bad) = args.iter().find(|&&a| a == 0 || a > slots) {
                        return Err(Error::VariableOutOfRange {
                            index: bad,
                            n: slots,
                        });
                    }
                    let atom = Atom {
                        order: *order,
                        slots: args.iter().map(|a| a - 1).collect(),
                    };
                    let idx = match atoms.iter().position(|a| *a == atom) {
                        Some(i) => i,
                        None => {
                            atoms.push(atom);
                            atoms.len() - 1
                        }
                    };
                    factors.push((idx, e));
                }
                terms.push(Term {
                    coeff: num::ToPrimitive::to_f64(c).unwrap_or(f64::NAN),
                    factors,
                });
            }
            compiled.push(terms);
        }
        let sign_symmetric = (0..manifold.factors()).all(|s| {
            compiled.iter().all(|terms| {
                let parities: Vec<u32> = terms
                    .iter()
                    .map(|t| {
                        t.factors
                            .iter()
                            .map(|&(a, e)| {
                                atoms[a].slots.iter().filter(|&&x| x == s).count() as u32 * e
                            })
                            .sum::<u32>()
                            % 2
                    })
                    .collect();
                parities.windows(2).all(|w| w[0] == w[1])
            })
        });
        let form_bounds = (1..=jet.order()).map(|k| jet.norm_bound(k)).collect();
        Ok(SearchProblem {
            jet,
            manifold,
            fixed,
            equations,
            atoms,
            compiled,
            sign_symmetric,
            form_bounds,
            span_tail: 0,
        })
    }

    pub fn jet(&self) -> &Jet {
        &self.jet
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn fixed(&self) -> &[Vec<f64>] {
        &self.fixed
    }

    pub fn equations(&self) -> &[FormalPolynomial] {
        &self.equations
    }

    /// Whether flipping the sign of any single factor leaves the residual unchanged.
    pub fn sign_symmetric(&self) -> bool {
        self.sign_symmetric
    }

    /// Declares that the residual depends on the last `t` factors of a frame
    /// only through their span, i.e. it is invariant under `O(t)` acting on
    /// them. The certifier then parametrizes that span by its complement.
    /// The caller vouches for the invariance.
    pub fn with_span_invariant_tail(mut self, t: usize) -> SearchProblem {
        self.span_tail = t.min(self.manifold.factors());
        self
    }

    pub fn span_tail(&self) -> usize {
        self.span_tail
    }

    /// Upper bound on `|h^k[a¹…aᵏ]|` for unit arguments.
    pub(crate) fn form_bound(&self, k: usize) -> f64 {
        self.form_bounds[k - 1]
    }

    fn slot<'a>(&'a self, point: &'a [Vec<f64>], s: usize) -> &'a [f64] {
        if s < point.len() {
            &point[s]
        } else {
            &self.fixed[s - point.len()]
        }
    }

    pub(crate) fn fixed_norm(&self, s: usize) -> Option<f64> {
        let p = self.manifold.factors();
        (s >= p).then(|| dot(&self.fixed[s - p], &self.fixed[s - p]).sqrt())
    }

    pub(crate) fn evaluate(&self, point: &[Vec<f64>], with_jac: bool) -> Evaluation {
        let d = self.manifold.ambient();
        let p = self.manifold.factors();
        let atom_vals: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| {
                let args: Vec<&[f64]> = a.slots.iter().map(|&s| self.slot(point, s)).collect();
                self.jet.contract(a.order, &args)[0]
            })
            .collect();
        let values: Vec<f64> = self
            .compiled
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| {
                        t.factors
                            .iter()
                            .fold(t.coeff, |acc, &(a, e)| acc * atom_vals[a].powi(e as i32))
                    })
                    .sum()
            })
            .collect();
        if !with_jac {
            return Evaluation {
                values,
                atoms: atom_vals,
                jac: None,
            };
        }
        // gradient of each atom with respect to every variable factor
        let atom_grads: Vec<Vec<(usize, Vec<f64>)>> = self
            .atoms
            .iter()
            .map(|a| {
                let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
                let mut seen = Vec::new();
                for &s in &a.slots {
                    if s >= p || seen.contains(&s) {
                        continue;
                    }
                    seen.push(s);
                    let mult = a.slots.iter().filter(|&&x| x == s).count() as f64;
                    let mut rest = a.slots.clone();
                    let pos = rest.iter().position(|&x| x == s).expect("present");
                    rest.remove(pos);
                    let args: Vec<&[f64]> = rest.iter().map(|&r| self.slot(point, r)).collect();
                    let mut cov = self.jet.contract(a.order, &args);
                    cov.iter_mut().for_each(|c| *c *= mult);
                    out.push((s, cov));
                }
                out
            })
            .collect();
        let mut jac = vec![vec![0.0; p * d]; self.compiled.len()];
        for (e, terms) in self.compiled.iter().enumerate() {
            for t in terms {
                for (j, &(a, pow)) in t.factors.iter().enumerate() {
                    let mut w = t.coeff * pow as f64 * atom_vals[a].powi(pow as i32 - 1);
                    for (l, &(b, q)) in t.factors.iter().enumerate() {
                        if l != j {
                            w *= atom_vals[b].powi(q as i32);
                        }
                    }
                    if w == 0.0 {
                        continue;
                    }
                    for (s, cov) in &atom_grads[a] {
                        let row = &mut jac[e][s * d..(s + 1) * d];
                        for (r, c) in row.iter_mut().zip(cov) {
                            *r += w * c;
                        }
                    }
                }
            }
        }
        Evaluation {
            values,
            atoms: atom_vals,
            jac: Some(jac),
        }
    }

    /// `Σ_e e(point)²`.
    pub fn residual(&self, point: &[Vec<f64>]) -> f64 {
        self.evaluate(point, false)
            .values
            .iter()
            .map(|v| v * v)
            .sum()
    }

    /// Individual equation values at a point.
    pub fn equation_values(&self, point: &[Vec<f64>]) -> Vec<f64> {
        self.evaluate(point, false).values
    }

    /// Euclidean gradient of the residual in ambient coordinates, one vector per factor.
    pub fn residual_gradient(&self, point: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let d = self.manifold.ambient();
        let ev = self.evaluate(point, true);
        let jac = ev.jac.expect("requested");
        let mut g = vec![vec![0.0; d]; self.manifold.factors()];
        for (e, row) in jac.iter().enumerate() {
            for (f, gf) in g.iter_mut().enumerate() {
                for (c, x) in gf.iter_mut().enumerate() {
                    *x += 2.0 * ev.values[e] * row[f * d + c];
                }
            }
        }
        g
    }
}

/// Tuning for witness search and certification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub starts: usize,
    pub max_iters: usize,
    /// Stop a start once its step is below this in tangent norm.
    pub step_tol: f64,
    pub witness_tol: f64,
    pub margin_tol: f64,
    /// Initial intervals per half-turn of every angle in certification.
    pub grid_cells: usize,
    pub eval_budget: u64,
    pub dim_ceiling: usize,
    pub seed: u64,
    pub mode: Mode,
    pub gradient_tol: f64,
    pub eig_tol: f64,
    pub rank_tol: f64,
    pub cluster_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Heuristic,
    Certify,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            starts: 256,
            max_iters: 200,
            step_tol: 1e-15,
            witness_tol: 1e-9,
            margin_tol: 1e-6,
            grid_cells: 4,
            eval_budget: 10_000_000,
            dim_ceiling: 8,
            seed: 42,
            mode: Mode::Certify,
            gradient_tol: 1e-10,
            eig_tol: 1e-9,
            rank_tol: 1e-6,
            cluster_tol: 1e-3,
        }
    }
}

impl SearchConfig {
    /// Whether any tolerance differs from the documented defaults.
    pub fn is_default_tolerances(&self) -> bool {
        let d = SearchConfig::default();
        self.witness_tol == d.witness_tol
            && self.margin_tol == d.margin_tol
            && self.gradient_tol == d.gradient_tol
            && self.eig_tol == d.eig_tol
            && self.rank_tol == d.rank_tol
            && self.cluster_tol == d.cluster_tol
    }
}
