//! Numerical check that solutions of `Ξ_m` satisfy the eliminated systems.
//!
//! For a random orthonormal basis and random curve coefficients every
//! equation of `Ξ_m` (and every orthogonality condition) is linear in the
//! jet entries. Projecting a random jet onto the null space of that linear
//! map gives a jet for which the chosen basis and curve solve `Ξ_m`; the
//! eliminated equations must then vanish at the identified vectors.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::conditions::PsiSet;
use crate::error::{Error, Result};
use crate::formal::{FormalPolynomial, FormalSymbol};
use crate::polyjet::{Jet, MultiIndex};

use super::{build_xi, evaluate, CurveValues, FormalSystem};

const ORDER: usize = 5;
/// Residual below which a projected sample counts as a solution of `Ξ_m`.
const SOLVE_TOL: f64 = 1e-9;
/// Residual below which an eliminated equation counts as satisfied.
const CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetCheck {
    pub set: String,
    pub passed: usize,
    pub failed: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EliminationReport {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Samples that solve `Ξ_m` and were checked.
    pub accepted: usize,
    /// Samples dropped because they do not solve `Ξ_m` or the gradient vanishes.
    pub precondition_failures: usize,
    pub checks: Vec<SetCheck>,
}

impl EliminationReport {
    pub fn all_pass(&self) -> bool {
        self.accepted > 0 && self.checks.iter().all(|c| c.failed == 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleOutcome {
    /// The sample does not solve `Ξ_m`; `residual` is the largest violation.
    Excluded { residual: f64 },
    /// Largest eliminated-equation residual for each checked set.
    Checked(Vec<(PsiSet, f64)>),
}

/// The eliminated sets that a solution of `Ξ_m(n)` must satisfy.
fn target_sets(n: usize, m: usize) -> Result<Vec<PsiSet>> {
    Ok(match (n, m) {
        (3, 2) => vec![PsiSet::Psi2_3],
        (4, 2) => vec![PsiSet::Psi2_4],
        (4, 3) => vec![PsiSet::Psi3_4],
        (5, 2) => vec![PsiSet::Psi2_5],
        (5, 3) => vec![PsiSet::Psi3_5, PsiSet::Psi3_5Literal],
        (5, 4) => vec![PsiSet::Psi4_5],
        _ => {
            return Err(Error::InvalidSystem {
                n,
                m,
                r: ORDER,
                reason: "no eliminated system is known for this pair".into(),
            })
        }
    })
}

/// Evaluates the eliminated equations of `set` at the vectors identified
/// from a solution: `v = A¹ + Σ b_i1 A^i`, `u = A²`, `w = A³`, and
/// the basis itself for the sets quantified against one.
fn eliminated_residual(set: PsiSet, jet: &Jet, basis: &[Vec<f64>], b: &CurveValues) -> f64 {
    let n = jet.n();
    let mut v = basis[0].clone();
    for (i, a) in basis.iter().enumerate().skip(1) {
        let c = b.get(&(i + 1, 1)).copied().unwrap_or(0.0);
        v.iter_mut().zip(a).for_each(|(x, y)| *x += c * y);
    }
    let mut slots = vec![v];
    if set.uses_fixed_basis() {
        slots.extend(basis.iter().cloned());
    } else {
        slots.extend(basis.iter().skip(1).take(set.m() - 1).cloned());
    }
    let eqs = set.equations(if set.uses_fixed_basis() { basis.len() } else { n - 1 });
    let none = CurveValues::new();
    eqs.iter()
        .map(|e| evaluate(e, jet, &slots, &none).abs())
        .fold(0.0, f64::max)
}

/// Checks one concrete sample; used by [`validate_elimination`] and exposed
/// for direct experiments.
pub fn check_sample(
    sys: &FormalSystem,
    jet: &Jet,
    basis: &[Vec<f64>],
    b: &CurveValues,
) -> Result<SampleOutcome> {
    let sets = target_sets(sys.n, sys.m)?;
    let mut worst = sys
        .instantiate(jet, basis, b)?
        .into_iter()
        .chain(sys.orthogonality_residuals(jet, basis)?)
        .fold(0.0, |acc: f64, x| acc.max(x.abs()));
    let grad = jet.gradient().iter().map(|x| x * x).sum::<f64>().sqrt();
    if grad < 1e-6 {
        worst = worst.max(f64::INFINITY);
    }
    if worst >= SOLVE_TOL {
        return Ok(SampleOutcome::Excluded { residual: worst });
    }
    Ok(SampleOutcome::Checked(
        sets.into_iter()
            .map(|s| (s, eliminated_residual(s, jet, basis, b)))
            .collect(),
    ))
}

/// Coordinates of a jet of order `ORDER` in `n` variables.
fn coordinates(n: usize) -> Vec<MultiIndex> {
    (1..=ORDER).flat_map(|k| MultiIndex::all_of_degree(n, k)).collect()
}

/// Coefficients of `h^k[A^{i₁}, …, A^{i_k}]` as a linear form in the jet entries.
fn form_row(
    args: &[usize],
    basis: &[Vec<f64>],
    index: &BTreeMap<MultiIndex, usize>,
    n: usize,
) -> Vec<f64> {
    let k = args.len();
    let mut row = vec![0.0; index.len()];
    let mut tuple = vec![0usize; k];
    loop {
        let w: f64 = args.iter().zip(&tuple).map(|(&a, &c)| basis[a - 1][c]).product();
        if w != 0.0 {
            row[index[&MultiIndex::from_axes(n, &tuple)]] += w;
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return row;
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

/// Row of a jet-linear polynomial; `None` if some term is not linear in the jet.
fn linear_row(
    poly: &FormalPolynomial,
    basis: &[Vec<f64>],
    b: &CurveValues,
    index: &BTreeMap<MultiIndex, usize>,
    n: usize,
    cache: &mut HashMap<Vec<usize>, Vec<f64>>,
) -> Option<Vec<f64>> {
    let mut row = vec![0.0; index.len()];
    for (mono, c) in poly.terms() {
        let mut scalar = num::ToPrimitive::to_f64(c)?;
        let mut form = None;
        for (s, e) in mono.factors() {
            match s {
                FormalSymbol::CurveCoeff { i, j } => {
                    scalar *= b.get(&(*i, *j)).copied().unwrap_or(0.0).powi(e as i32);
                }
                FormalSymbol::JetForm { args, .. } => {
                    if e != 1 || form.is_some() {
                        return None;
                    }
                    form = Some(args.clone());
                }
            }
        }
        let args = form?;
        let r = cache
            .entry(args.clone())
            .or_insert_with(|| form_row(&args, basis, index, n));
        row.iter_mut().zip(r.iter()).for_each(|(x, y)| *x += scalar * y);
    }
    Some(row)
}

fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    loop {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(m);
        for _ in 0..m {
            let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let refs: Vec<&[f64]> = out.iter().map(Vec::as_slice).collect();
            if crate::linalg::orthonormalize_against(&mut x, &refs).is_none() {
                break;
            }
            out.push(x);
        }
        if out.len() == m {
            return out;
        }
    }
}

/// Projects `x` onto the null space of the matrix with the given rows.
fn project_to_kernel(rows: &[Vec<f64>], x: Vec<f64>) -> Vec<f64> {
    let cols = x.len();
    // columns of mt span the row space
    let mt = DMatrix::from_fn(cols, rows.len(), |i, j| rows[j][i]);
    let svd = mt.svd(true, false);
    let u = svd.u.expect("requested");
    let top = svd.singular_values.max();
    let mut y = DVector::from_vec(x);
    for (c, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-12 * top {
            let col = u.column(c);
            let d = col.dot(&y);
            y.axpy(-d, &col, 1.0);
        }
    }
    y.iter().copied().collect()
}

/// Draws `samples` random solutions of `Ξ_m(n)` at order 5 and checks the
/// eliminated equations on each. Gives up after `4·samples` attempts.
pub fn validate_elimination(n: usize, m: usize, samples: usize, seed: u64) -> Result<EliminationReport> {
    let sets = target_sets(n, m)?;
    let sys = build_xi(n, ORDER, m)?;
    let coords = coordinates(n);
    let index: BTreeMap<MultiIndex, usize> =
        coords.iter().cloned().enumerate().map(|(i, mu)| (mu, i)).collect();
    let mut checks: Vec<SetCheck> = sets
        .iter()
        .map(|s| SetCheck {
            set: s.to_string(),
            passed: 0,
            failed: 0,
            max_residual: 0.0,
        })
        .collect();
    let mut accepted = 0;
    let mut precondition_failures = 0;
    for attempt in 0..samples.saturating_mul(4) {
        if accepted == samples {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let basis = random_orthonormal(&mut rng, n, m);
        let mut b = CurveValues::new();
        for i in 2..=m {
            for j in 1..sys.beta {
                b.insert((i, j), rng.random_range(-1.0..1.0));
            }
        }
        let mut cache = HashMap::new();
        let rows: Option<Vec<Vec<f64>>> = sys
            .equations
            .iter()
            .map(|e| &e.poly)
            .chain(&sys.side.orthogonality)
            .map(|p| linear_row(p, &basis, &b, &index, n, &mut cache))
            .collect();
        let Some(rows) = rows else {
            precondition_failures += 1;
            continue;
        };
        let x: Vec<f64> = (0..coords.len()).map(|_| rng.sample(StandardNormal)).collect();
        let y = project_to_kernel(&rows, x);
        let scale = y.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        if scale == 0.0 {
            precondition_failures += 1;
            continue;
        }
        let jet = Jet::from_coeffs(n, ORDER, vec![0.0; n], coords.iter().cloned().zip(y.iter().map(|v| v / scale)))?;
        match check_sample(&sys, &jet, &basis, &b)? {
            SampleOutcome::Excluded { .. } => precondition_failures += 1,
            SampleOutcome::Checked(res) => {
                accepted += 1;
                for (c, (_, r)) in checks.iter_mut().zip(res) {
                    c.max_residual = c.max_residual.max(r);
                    if r < CHECK_TOL {
                        c.passed += 1;
                    } else {
                        c.failed += 1;
                    }
                }
            }
        }
    }
    Ok(EliminationReport {
        n,
        m,
        seed,
        accepted,
        precondition_failures,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projected_jets_solve_the_system() {
        let rep = validate_elimination(3, 2, 20, 1).unwrap();
        assert_eq!(rep.accepted, 20);
        assert!(rep.all_pass(), "{rep:?}");
    }

    #[test]
    fn random_tuples_are_excluded() {
        let sys = build_xi(3, 5, 2).unwrap();
        let coords = coordinates(3);
        let jet = Jet::from_coeffs(3, 5, vec![0.0; 3], coords.into_iter().enumerate().map(|(i, mu)| (mu, 1.0 + i as f64 * 0.1))).unwrap();
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let out = check_sample(&sys, &jet, &basis, &CurveValues::new()).unwrap();
        assert!(matches!(out, SampleOutcome::Excluded { .. }));
    }

    #[test]
    fn unknown_pairs_are_rejected() {
        assert!(validate_elimination(5, 1, 1, 0).is_err());
    }
}
