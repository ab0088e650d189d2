use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::problem::{SearchConfig, SearchProblem};
use crate::linalg::{dot, orthonormal_complement, solve_damped};

/// Result of one local descent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartResult {
    pub start: usize,
    pub value: f64,
    pub point: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// Result of a multistart search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub best_value: f64,
    pub best_point: Vec<Vec<f64>>,
    pub starts: usize,
    /// Number of starts that reached a residual below `witness_tol`.
    pub hits: usize,
    /// Final points of the hitting starts, best first.
    pub witnesses: Vec<Vec<Vec<f64>>>,
    pub iterations: usize,
}

/// Random point on the manifold for start `index`; the stream depends only
/// on `(seed, index)`, never on scheduling.
pub fn random_point(problem: &SearchProblem, seed: u64, index: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let m = problem.manifold();
    loop {
        let mut pt: Vec<Vec<f64>> = (0..m.factors())
            .map(|_| {
                (0..m.ambient())
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect()
            })
            .collect();
        if m.retract(&mut pt).is_some() {
            return pt;
        }
    }
}

/// Orthonormal basis of the tangent space at `point`, as flattened ambient
/// directions (`factors * ambient` long).
fn tangent_basis(problem: &SearchProblem, point: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = problem.manifold();
    let d = m.ambient();
    let big = d * m.factors();
    let mut normals: Vec<Vec<f64>> = Vec::new();
    for (i, x) in point.iter().enumerate() {
        let mut g = vec![0.0; big];
        g[i * d..(i + 1) * d].copy_from_slice(x);
        normals.push(g);
        for &j in m.relations(i) {
            let mut g = vec![0.0; big];
            g[i * d..(i + 1) * d].copy_from_slice(&point[j]);
            g[j * d..(j + 1) * d].copy_from_slice(x);
            normals.push(g);
        }
    }
    let refs: Vec<&[f64]> = normals.iter().map(Vec::as_slice).collect();
    orthonormal_complement(&refs, big)
}

/// Levenberg-Marquardt in tangent coordinates with a Gram-Schmidt retraction.
pub fn descend(
    problem: &SearchProblem,
    start: Vec<Vec<f64>>,
    cfg: &SearchConfig,
) -> (Vec<Vec<f64>>, f64, usize) {
    let m = problem.manifold();
    let d = m.ambient();
    let mut x = start;
    let mut ev = problem.evaluate(&x, true);
    let mut value: f64 = ev.values.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let target = cfg.witness_tol * 1e-6;
    let mut iters = 0;
    while iters < cfg.max_iters && value > target {
        iters += 1;
        let basis = tangent_basis(problem, &x);
        let t = basis.len();
        if t == 0 {
            break;
        }
        let jac = ev.jac.as_ref().expect("requested");
        let e = ev.values.len();
        let jt = DMatrix::from_fn(e, t, |r, c| dot(&jac[r], &basis[c]));
        let res = DVector::from_column_slice(&ev.values);
        let h = jt.transpose() * &jt;
        let g = jt.transpose() * &res;
        let scale = h.diagonal().max().max(1e-300);
        let mut accepted = false;
        for _ in 0..30 {
            let Some(delta) = solve_damped(&h, &(-&g), lambda * scale) else {
                lambda *= 10.0;
                continue;
            };
            let step = delta.norm();
            if step < cfg.step_tol {
                break;
            }
            let mut trial = x.clone();
            for (c, b) in basis.iter().enumerate() {
                for (f, tf) in trial.iter_mut().enumerate() {
                    for (k, v) in tf.iter_mut().enumerate() {
                        *v += delta[c] * b[f * d + k];
                    }
                }
            }
            if m.retract(&mut trial).is_none() {
                lambda *= 4.0;
                continue;
            }
            let tev = problem.evaluate(&trial, true);
            let tval: f64 = tev.values.iter().map(|v| v * v).sum();
            if tval < value {
                x = trial;
                ev = tev;
                value = tval;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    (x, value, iters)
}

/// Multistart minimization of the residual over the manifold.
///
/// Starts run in parallel, but the outcome depends only on the configuration
/// and seed: results are reduced by `(value, start index)`.
pub fn minimize(problem: &SearchProblem, cfg: &SearchConfig) -> SearchOutcome {
    let mut results: Vec<StartResult> = (0..cfg.starts.max(1))
        .into_par_iter()
        .map(|i| {
            let p0 = random_point(problem, cfg.seed, i);
            let (point, value, iterations) = descend(problem, p0, cfg);
            StartResult {
                start: i,
                value,
                point,
                iterations,
            }
        })
        .collect();
    results.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.start.cmp(&b.start)));
    let iterations = results.iter().map(|r| r.iterations).sum();
    let witnesses: Vec<Vec<Vec<f64>>> = results
        .iter()
        .filter(|r| r.value < cfg.witness_tol)
        .map(|r| r.point.clone())
        .collect();
    let best = &results[0];
    SearchOutcome {
        best_value: best.value,
        best_point: best.point.clone(),
        starts: results.len(),
        hits: witnesses.len(),
        witnesses,
        iterations,
    }
}

/// Groups single-vector hits into connected families of the near-zero set.
///
/// Degenerate zeros leave wide, curved valleys, so hits far apart in angle
/// can belong to one family. Two hits are linked when their angle is below
/// `cluster_tol` or the great-circle arc between them stays below
/// `witness_tol`; families are the connected components of that graph.
/// Hits should come best first; each family is represented by its best hit.
pub fn cluster_connected(problem: &SearchProblem, hits: &[Vec<f64>], cfg: &SearchConfig) -> Vec<Vec<f64>> {
    const ARC_SAMPLES: usize = 16;
    let linked = |r: &[f64], p: &[f64]| {
        let c = dot(r, p);
        if c.abs().min(1.0).acos() < cfg.cluster_tol {
            return true;
        }
        (1..ARC_SAMPLES).all(|k| {
            let t = k as f64 / ARC_SAMPLES as f64;
            let mut x: Vec<f64> = r.iter().zip(p).map(|(a, b)| (1.0 - t) * a + t * c.signum() * b).collect();
            let n = dot(&x, &x).sqrt();
            if n < 1e-12 {
                return false;
            }
            x.iter_mut().for_each(|v| *v /= n);
            problem.residual(&[x]) < cfg.witness_tol
        })
    };
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut parent: Vec<usize> = (0..hits.len()).collect();
    for i in 0..hits.len() {
        for k in i + 1..hits.len() {
            let (a, b) = (root(&mut parent, i), root(&mut parent, k));
            if a != b && linked(&hits[i], &hits[k]) {
                // keep the better (lower-index) hit as the root
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..hits.len())
        .filter(|&i| root(&mut parent, i) == i)
        .map(|i| hits[i].clone())
        .collect()
}

/// Groups unit vectors into lines (`v ~ -v`) whose mutual angle is below
/// `angle_tol` radians. The first member of each group represents it,
/// sign-normalized so its first clearly nonzero coordinate is positive.
pub fn cluster_witnesses(points: &[Vec<f64>], angle_tol: f64) -> Vec<Vec<f64>> {
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for p in points {
        let nrm = dot(p, p).sqrt();
        if nrm == 0.0 {
            continue;
        }
        let u: Vec<f64> = p.iter().map(|x| x / nrm).collect();
        let close = reps.iter().any(|r| {
            let c = dot(r, &u).abs().min(1.0);
            c.acos() < angle_tol
        });
        if !close {
            reps.push(sign_normalized(u));
        }
    }
    reps
}

pub(crate) fn sign_normalized(mut u: Vec<f64>) -> Vec<f64> {
    if let Some(first) = u.iter().find(|x| x.abs() > 1e-9) {
        if *first < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }
    u
}
