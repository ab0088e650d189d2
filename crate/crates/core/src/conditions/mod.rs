//! Executable steepness conditions: jet non-degeneracy, the per-dimension
//! condition checks for `n = 2..5`, rank tests and the index table.
//!
//! Every universally quantified condition is decided by looking for a
//! full-rank counterexample. A counterexample makes it `Violated`; a
//! certificate that the residual stays above the margin makes it `Holds`;
//! anything else is `Unknown`.

mod sets;
mod table;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use rayon::prelude::*;

pub use sets::PsiSet;
pub use table::{alpha_bar, beta, index_table, IndexRow, IndexTable};

use crate::error::{Error, Result};
use crate::linalg::{norm, orthonormal_complement, singular_values};
use crate::polyjet::Jet;
use crate::search::{
    certify_positive, cluster_witnesses, minimize, Certificate, Mode, SearchConfig, SearchProblem,
};

pub const SEMANTICS_NOTE: &str =
    "sufficient conditions only: NotCertified does not imply non-steep";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Violated,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SteepCertified,
    NotCertified,
    DegenerateGradient,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedVector {
    pub name: String,
    pub vector: Vec<f64>,
}

/// Evidence for one condition (or one set-membership query).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRecord {
    pub id: String,
    pub set: String,
    pub description: String,
    pub status: Status,
    pub best_residual: f64,
    /// Full-space unit vectors of the best counterexample, when `Violated`.
    pub witness: Option<Vec<NamedVector>>,
    pub starts: usize,
    pub hits: usize,
    pub iterations: usize,
    pub certified_lower_bound: Option<f64>,
    pub cells: Option<u64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub n: usize,
    pub r: usize,
    pub point: Vec<f64>,
    pub gradient_norm: f64,
    pub conditions: Vec<ConditionRecord>,
    pub config: SearchConfig,
    pub seed: u64,
    pub note: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyStatus {
    NonDegenerate,
    Degenerate,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyResult {
    pub order: usize,
    pub status: DegeneracyStatus,
    /// Clustered unit witnesses in full coordinates, sign-normalized.
    pub witnesses: Vec<Vec<f64>>,
    pub best_residual: f64,
    pub certified_lower_bound: Option<f64>,
    pub starts: usize,
}

/// The jet restricted to `∇h(I)^⊥` in an orthonormal basis, rescaled so that
/// its largest entry is one.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub basis: Vec<Vec<f64>>,
    pub jet: Jet,
    pub scale: f64,
}

impl Reduction {
    pub fn new(j: &Jet, gradient_tol: f64) -> Result<Reduction> {
        let g = j.gradient();
        let gn = norm(&g);
        if gn <= gradient_tol {
            return Err(Error::DegenerateGradient(gn));
        }
        let basis = orthonormal_complement(&[&g], j.n());
        let restricted = j.restrict(&basis)?;
        let scale = restricted.max_abs();
        let jet = if scale > 0.0 {
            restricted.scaled(1.0 / scale)
        } else {
            restricted
        };
        Ok(Reduction { basis, jet, scale })
    }

    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let n = self.basis.first().map_or(0, Vec::len);
        let mut x = vec![0.0; n];
        for (c, b) in y.iter().zip(&self.basis) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += c * bi;
            }
        }
        x
    }
}

/// True iff the smallest singular value of the matrix with columns `vectors`
/// is at most `threshold` times the largest.
pub fn rank_deficient(vectors: &[Vec<f64>], threshold: f64) -> bool {
    let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
    let s = singular_values(&refs);
    if s.len() < vectors.len() {
        return true;
    }
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) => hi == 0.0 || lo <= threshold * hi,
        _ => true,
    }
}

struct Decision {
    status: Status,
    best_value: f64,
    witness: Option<Vec<Vec<f64>>>,
    all_hits: Vec<Vec<Vec<f64>>>,
    starts: usize,
    hits: usize,
    iterations: usize,
    lower_bound: Option<f64>,
    cells: Option<u64>,
    note: Option<String>,
}

/// Heuristic search, then (in certify mode) a positivity certificate.
fn decide(problem: &SearchProblem, cfg: &SearchConfig) -> Decision {
    let out = minimize(problem, cfg);
    let mut d = Decision {
        status: Status::Unknown,
        best_value: out.best_value,
        witness: None,
        all_hits: out.witnesses.clone(),
        starts: out.starts,
        hits: out.hits,
        iterations: out.iterations,
        lower_bound: None,
        cells: None,
        note: None,
    };
    if out.best_value < cfg.witness_tol {
        d.status = Status::Violated;
        d.witness = Some(out.best_point);
        return d;
    }
    if cfg.mode == Mode::Heuristic {
        d.note = Some("heuristic mode: no witness found, no certificate attempted".into());
        return d;
    }
    match certify_positive(problem, cfg) {
        Ok(Certificate::Positive { lower_bound, cells }) => {
            d.status = Status::Holds;
            d.lower_bound = Some(lower_bound);
            d.cells = Some(cells);
        }
        Ok(Certificate::NearZero { value, point }) => {
            d.status = Status::Violated;
            d.best_value = value;
            d.all_hits.insert(0, point.clone());
            d.hits += 1;
            d.witness = Some(point);
            d.note = Some("witness found by the covering, not by descent".into());
        }
        Ok(Certificate::Exhausted { cells, best_value }) => {
            d.cells = Some(cells);
            d.best_value = d.best_value.min(best_value);
            d.note = Some(format!(
                "certification budget exhausted after {cells} cells"
            ));
        }
        Err(e) => d.note = Some(format!("certification unavailable: {e}")),
    }
    d
}

/// Completes the reduced witness of a set to its full named tuple.
fn complete_witness(set: PsiSet, point: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    match set {
        PsiSet::Psi3_4 | PsiSet::Psi4_5 => {
            let v = &point[0];
            let mut out = vec![v.clone()];
            out.extend(orthonormal_complement(&[v], d));
            out
        }
        _ => point.to_vec(),
    }
}

fn record(set: PsiSet, id: String, red: &Reduction, d: Decision, cfg: &SearchConfig) -> ConditionRecord {
    let mut status = d.status;
    let mut note = d.note;
    let witness = d.witness.map(|w| {
        let full: Vec<Vec<f64>> = complete_witness(set, &w, red.jet.n())
            .iter()
            .map(|y| red.lift(y))
            .collect();
        if rank_deficient(&full, cfg.rank_tol) {
            status = Status::Unknown;
            note = Some("witness failed the rank test".into());
        }
        set.witness_names()
            .iter()
            .zip(full)
            .map(|(n, v)| NamedVector {
                name: (*n).to_owned(),
                vector: v,
            })
            .collect()
    });
    ConditionRecord {
        id,
        set: set.to_string(),
        description: set.description(),
        status,
        best_residual: d.best_value,
        witness,
        starts: d.starts,
        hits: d.hits,
        iterations: d.iterations,
        certified_lower_bound: d.lower_bound,
        cells: d.cells,
        note,
    }
}

fn evaluate_set(set: PsiSet, id: String, red: &Reduction, cfg: &SearchConfig) -> Result<ConditionRecord> {
    if let Some(k) = set.domain_order() {
        // a condition over k-jet-degenerate directions is vacuous without any
        let pre = PsiSet::JetDegenerate { n: set.n(), r: k }.problem(&red.jet)?;
        let d = decide(&pre, cfg);
        if d.status == Status::Holds {
            let mut rec = record(set, id, red, d, cfg);
            rec.note = Some(format!("vacuous: no {k}-jet-degenerate direction"));
            return Ok(rec);
        }
    }
    let problem = set.problem(&red.jet)?;
    Ok(record(set, id, red, decide(&problem, cfg), cfg))
}

/// Whether the jet lies in the named set (`Violated` means it does).
pub fn psi_membership(j: &Jet, set: PsiSet, cfg: &SearchConfig) -> Result<ConditionRecord> {
    if j.n() != set.n() {
        return Err(Error::DimensionMismatch {
            expected: set.n(),
            got: j.n(),
        });
    }
    let red = Reduction::new(j, cfg.gradient_tol)?;
    let problem = set.problem(&red.jet)?;
    Ok(record(set, set.to_string(), &red, decide(&problem, cfg), cfg))
}

/// Runs the gradient gate and the dimension-specific conditions.
pub fn check_steepness(j: &Jet, cfg: &SearchConfig) -> Result<ConditionReport> {
    let n = j.n();
    let sets = PsiSet::conditions_for(n)?;
    if j.order() < 5 {
        return Err(Error::OrderTooLow {
            needed: 5,
            got: j.order(),
        });
    }
    let gradient_norm = norm(&j.gradient());
    let mut report = ConditionReport {
        verdict: Verdict::Inconclusive,
        reason: None,
        n,
        r: j.order(),
        point: j.point().to_vec(),
        gradient_norm,
        conditions: Vec::new(),
        config: *cfg,
        seed: cfg.seed,
        note: SEMANTICS_NOTE,
    };
    let red = match Reduction::new(j, cfg.gradient_tol) {
        Ok(r) => r,
        Err(Error::DegenerateGradient(g)) => {
            report.verdict = Verdict::DegenerateGradient;
            report.reason = Some(format!("gradient norm {g:e} at or below tolerance"));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    for (i, set) in sets.into_iter().enumerate() {
        let id = format!("n{n}.cond{}", i + 1);
        report.conditions.push(evaluate_set(set, id, &red, cfg)?);
    }
    let violated: Vec<&str> = report
        .conditions
        .iter()
        .filter(|c| c.status == Status::Violated)
        .map(|c| c.id.as_str())
        .collect();
    if !violated.is_empty() {
        report.verdict = Verdict::NotCertified;
        report.reason = Some(format!("violated: {}", violated.join(", ")));
    } else if report.conditions.iter().all(|c| c.status == Status::Holds) {
        report.verdict = Verdict::SteepCertified;
    } else {
        let open: Vec<String> = report
            .conditions
            .iter()
            .filter(|c| c.status == Status::Unknown)
            .map(|c| format!("{} (best residual {:.3e})", c.id, c.best_residual))
            .collect();
        report.reason = Some(format!("undecided: {}", open.join(", ")));
    }
    Ok(report)
}

/// Searches unit `v` with `h^k[v,…,v] = 0` for every `1 ≤ k ≤ r`.
pub fn r_jet_degeneracy(j: &Jet, r: usize, cfg: &SearchConfig) -> Result<DegeneracyResult> {
    if r == 0 || r > j.order() {
        return Err(Error::OrderOutOfRange {
            order: r,
            max: j.order(),
        });
    }
    let n = j.n();
    // with a nonzero gradient the h¹ equation is solved by restriction;
    // otherwise search the whole sphere
    let (work, basis): (Jet, Vec<Vec<f64>>) = match Reduction::new(j, cfg.gradient_tol) {
        Ok(red) => (red.jet, red.basis),
        Err(Error::DegenerateGradient(_)) => {
            let s = j.max_abs();
            let jet = if s > 0.0 { j.scaled(1.0 / s) } else { j.clone() };
            let basis = (0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect();
            (jet, basis)
        }
        Err(e) => return Err(e),
    };
    let d = work.n();
    let first = if d < n { 2 } else { 1 };
    let eqs = (first..=r)
        .map(|k| crate::formal::FormalPolynomial::form(k, vec![1; k]))
        .collect();
    let red = Reduction {
        basis,
        jet: work.clone(),
        scale: 1.0,
    };
    let problem = SearchProblem::new(work, crate::search::Manifold::sphere(d), vec![], eqs)?;
    let dec = decide(&problem, cfg);
    let status = match dec.status {
        Status::Holds => DegeneracyStatus::NonDegenerate,
        Status::Violated => DegeneracyStatus::Degenerate,
        Status::Unknown => DegeneracyStatus::Unknown,
    };
    // degenerate zeros sit in flat valleys: polish hits to the rounding floor
    // so that one family does not look like many
    let polish = SearchConfig {
        witness_tol: 0.0,
        max_iters: 1000,
        ..*cfg
    };
    let mut polished: Vec<(f64, Vec<f64>)> = dec
        .all_hits
        .par_iter()
        .map(|p| {
            let (x, v, _) = crate::search::descend(&problem, p.clone(), &polish);
            (v, x.into_iter().next().expect("one factor"))
        })
        .collect();
    polished.sort_by(|a, b| a.0.total_cmp(&b.0));
    let hits: Vec<Vec<f64>> = polished.into_iter().map(|(_, x)| x).collect();
    let families = crate::search::cluster_connected(&problem, &hits, cfg);
    let lifted: Vec<Vec<f64>> = families.iter().map(|p| red.lift(p)).collect();
    Ok(DegeneracyResult {
        order: r,
        status,
        witnesses: cluster_witnesses(&lifted, cfg.cluster_tol),
        best_residual: dec.best_value,
        certified_lower_bound: dec.lower_bound,
        starts: dec.starts,
    })
}

/// Eigenvalues of the Hessian restricted to `∇h(I)^⊥`, ascending.
pub fn restricted_hessian_eigenvalues(j: &Jet, gradient_tol: f64) -> Result<Vec<f64>> {
    if j.order() < 2 {
        return Err(Error::OrderTooLow {
            needed: 2,
            got: j.order(),
        });
    }
    let red = Reduction::new(j, gradient_tol)?;
    let h = red.jet.hessian();
    let d = h.len();
    let m = DMatrix::from_fn(d, d, |a, b| h[a][b]);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Quasi-convexity test: the restricted Hessian is definite.
///
/// Eigenvalues are compared against `cfg.eig_tol` after the same
/// normalization used by the searches.
pub fn two_jet_oracle(j: &Jet, cfg: &SearchConfig) -> Result<bool> {
    let ev = restricted_hessian_eigenvalues(j, cfg.gradient_tol)?;
    Ok(ev.iter().all(|&l| l > cfg.eig_tol) || ev.iter().all(|&l| l < -cfg.eig_tol))
}

/// Residuals of the non-starred two-plane system in three variables for an
/// explicit witness `(u, v, α, β)`:
/// `h¹[u], h¹[v], h²[v,v], h²[v,u], h³[v,v,v], 6αh³[u,v,v] + h⁴[v⁴],
/// 2αh²[u,u] + h³[u,v,v], 6βh²[u,u] + 6αh³[u,u,v] + h⁴[v³,u]`.
pub fn psi2_3_direct_residuals(
    j: &Jet,
    u: &[f64],
    v: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    if j.n() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: j.n(),
        });
    }
    let h = |k: usize, args: &[&[f64]]| j.multilinear(k, args);
    Ok(vec![
        h(1, &[u])?,
        h(1, &[v])?,
        h(2, &[v, v])?,
        h(2, &[v, u])?,
        h(3, &[v, v, v])?,
        6.0 * alpha * h(3, &[u, v, v])? + h(4, &[v, v, v, v])?,
        2.0 * alpha * h(2, &[u, u])? + h(3, &[u, v, v])?,
        6.0 * beta * h(2, &[u, u])? + 6.0 * alpha * h(3, &[u, u, v])? + h(4, &[v, v, v, u])?,
    ])
}
