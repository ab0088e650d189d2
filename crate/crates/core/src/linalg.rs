//! Small dense vector helpers.

use nalgebra::{DMatrix, DVector};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Removes from `v` its components along the (orthonormal) `against` vectors
/// and normalizes; two passes for stability. `None` if nothing is left.
pub(crate) fn orthonormalize_against(v: &mut [f64], against: &[&[f64]]) -> Option<()> {
    for _ in 0..2 {
        for a in against {
            let c = dot(v, a);
            axpy(-c, a, v);
        }
    }
    let nv = norm(v);
    if nv < 1e-13 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    Some(())
}

/// Orthonormal basis of the complement of `span(vs)` in `ℝ^n`, built from
/// the standard basis so that coordinate-aligned inputs give coordinate
/// vectors back. `vs` need not be orthonormal.
pub(crate) fn orthonormal_complement(vs: &[&[f64]], n: usize) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = v.to_vec();
        let refs: Vec<&[f64]> = frame.iter().map(Vec::as_slice).collect();
        if orthonormalize_against(&mut w, &refs).is_some() {
            frame.push(w);
        }
    }
    let k = frame.len();
    // standard basis vectors in order of least overlap with the frame
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|i| (frame.iter().map(|f| f[i] * f[i]).sum::<f64>(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = Vec::new();
    for (_, i) in order {
        if out.len() + k == n {
            break;
        }
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let refs: Vec<&[f64]> = frame.iter().chain(out.iter()).map(Vec::as_slice).collect();
        if orthonormalize_against(&mut e, &refs).is_some() {
            out.push(e);
        }
    }
    // keep coordinate order for readability
    out.sort_by(|a, b| {
        let ia = a.iter().position(|x| x.abs() > 0.5).unwrap_or(n);
        let ib = b.iter().position(|x| x.abs() > 0.5).unwrap_or(n);
        ia.cmp(&ib)
    });
    out
}

/// Singular values of the matrix whose columns are `vs`, descending.
pub(crate) fn singular_values(vs: &[&[f64]]) -> Vec<f64> {
    if vs.is_empty() {
        return Vec::new();
    }
    let rows = vs[0].len();
    let m = DMatrix::from_fn(rows, vs.len(), |i, j| vs[j][i]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Solves `(A + λ·I) x = b` for symmetric positive semi-definite `A`.
pub(crate) fn solve_damped(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let n = a.nrows();
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] += lambda;
    }
    m.cholesky().map(|c| c.solve(b))
}
