//! Jets of smooth functions and the multilinear forms they define.
//!
//! A [`Jet`] stores the raw partial derivatives `D_μ = ∂^μ h(I)` for
//! `1 ≤ |μ| ≤ r`. The Taylor coefficient of `x^μ` is `D_μ / μ!`; conversion
//! between the two conventions is a bijection, and only the raw form is kept.
//!
//! For evaluation each order `k` is also expanded into a dense row-major
//! tensor of `n^k` entries, with the entry at `(i_1, …, i_k)` equal to `D_μ`
//! where `μ` counts index occurrences.

use std::collections::BTreeMap;

use num::{BigRational, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{MultiIndex, Polynomial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    n: usize,
    order: usize,
    point: Vec<f64>,
    derivs: BTreeMap<MultiIndex, f64>,
    exact: Option<BTreeMap<MultiIndex, BigRational>>,
    tensors: Vec<Vec<f64>>,
}

/// Calls `f` with every index tuple in `{0..n}^k`, in row-major order.
fn for_each_tuple(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; k];
    if n == 0 && k > 0 {
        return;
    }
    loop {
        f(&idx);
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn contract_last(data: &[f64], n: usize, v: &[f64]) -> Vec<f64> {
    data.chunks_exact(n)
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

impl Jet {
    fn build(
        n: usize,
        order: usize,
        point: Vec<f64>,
        derivs: BTreeMap<MultiIndex, f64>,
        exact: Option<BTreeMap<MultiIndex, BigRational>>,
    ) -> Jet {
        let mut tensors = Vec::with_capacity(order);
        for k in 1..=order {
            let mut t = Vec::with_capacity(n.pow(k as u32));
            for_each_tuple(n, k, |tuple| {
                let mu = MultiIndex::from_axes(n, tuple);
                t.push(derivs.get(&mu).copied().unwrap_or(0.0));
            });
            tensors.push(t);
        }
        Jet {
            n,
            order,
            point,
            derivs,
            exact,
            tensors,
        }
    }

    fn from_dense(n: usize, order: usize, point: Vec<f64>, tensors: Vec<Vec<f64>>) -> Jet {
        let mut derivs = BTreeMap::new();
        for k in 1..=order {
            for mu in MultiIndex::all_of_degree(n, k) {
                let axes = mu.axes();
                let flat = axes.iter().fold(0usize, |acc, &i| acc * n + i);
                derivs.insert(mu, tensors[k - 1][flat]);
            }
        }
        Jet {
            n,
            order,
            point,
            derivs,
            exact: None,
            tensors,
        }
    }

    /// Jet of order `r` built from raw derivative entries; absent entries are zero.
    pub fn from_coeffs(
        n: usize,
        r: usize,
        point: Vec<f64>,
        entries: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Jet> {
        if r == 0 {
            return Err(Error::OrderOutOfRange { order: 0, max: usize::MAX });
        }
        if point.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: point.len(),
            });
        }
        let mut given = BTreeMap::new();
        for (mu, v) in entries {
            if mu.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: mu.dim(),
                });
            }
            let d = mu.degree();
            if d == 0 || d > r {
                return Err(Error::IndexDegreeOutOfRange {
                    mu: mu.0.clone(),
                    degree: d,
                    max: r,
                });
            }
            if given.insert(mu.clone(), v).is_some() {
                return Err(Error::DuplicateIndex(mu.0));
            }
        }
        let mut derivs = BTreeMap::new();
        for k in 1..=r {
            for mu in MultiIndex::all_of_degree(n, k) {
                let v = given.get(&mu).copied().unwrap_or(0.0);
                derivs.insert(mu, v);
            }
        }
        Ok(Jet::build(n, r, point, derivs, None))
    }

    /// Exact jet of a polynomial at a rational point.
    pub fn of_polynomial(p: &Polynomial, point: &[BigRational], r: usize) -> Result<Jet> {
        if r == 0 {
            return Err(Error::OrderOutOfRange { order: 0, max: usize::MAX });
        }
        let n = p.n();
        let shifted = p.shift(point)?;
        let mut exact = BTreeMap::new();
        let mut derivs = BTreeMap::new();
        for k in 1..=r {
            for mu in MultiIndex::all_of_degree(n, k) {
                let c = shifted.coefficient(&mu);
                let d = c * BigRational::from_integer(mu.factorial());
                derivs.insert(mu.clone(), d.to_f64().unwrap_or(f64::NAN));
                exact.insert(mu, d);
            }
        }
        let point_f = point
            .iter()
            .map(|x| x.to_f64().unwrap_or(f64::NAN))
            .collect();
        Ok(Jet::build(n, r, point_f, derivs, Some(exact)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// `D_μ`; zero for any multi-index of degree in range that was not given.
    pub fn deriv(&self, mu: &MultiIndex) -> f64 {
        self.derivs.get(mu).copied().unwrap_or(0.0)
    }

    pub fn deriv_exact(&self, mu: &MultiIndex) -> Result<BigRational> {
        let ex = self.exact.as_ref().ok_or(Error::NotExact)?;
        Ok(ex.get(mu).cloned().unwrap_or_else(BigRational::zero))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.derivs.iter()
    }

    /// Dense symmetric tensor of order `k` (row-major, `n^k` entries).
    pub fn tensor(&self, k: usize) -> &[f64] {
        &self.tensors[k - 1]
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.tensors[0].clone()
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        assert!(self.order >= 2, "jet order too low for a Hessian");
        self.tensors[1].chunks_exact(self.n).map(<[f64]>::to_vec).collect()
    }

    fn check_args(&self, k: usize, count: usize, expected: usize) -> Result<()> {
        if k == 0 || k > self.order {
            return Err(Error::OrderOutOfRange {
                order: k,
                max: self.order,
            });
        }
        if count != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: count,
            });
        }
        Ok(())
    }

    /// `h^k[v¹, …, vᵏ]`.
    pub fn multilinear(&self, k: usize, vs: &[&[f64]]) -> Result<f64> {
        self.check_args(k, vs.len(), k)?;
        for v in vs {
            if v.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: v.len(),
                });
            }
        }
        Ok(self.contract(k, vs)[0])
    }

    /// The covector `h^k[v¹, …, v^{k-1}, ·]`.
    pub fn covector(&self, k: usize, vs: &[&[f64]]) -> Result<Vec<f64>> {
        self.check_args(k, vs.len(), k - 1)?;
        Ok(self.contract(k, vs))
    }

    /// Contracts the trailing `vs.len()` slots of the order-`k` tensor.
    /// Dimensions are not checked.
    pub(crate) fn contract(&self, k: usize, vs: &[&[f64]]) -> Vec<f64> {
        let mut it = vs.iter().rev();
        let Some(first) = it.next() else {
            return self.tensors[k - 1].clone();
        };
        let mut cur = contract_last(&self.tensors[k - 1], self.n, first);
        for v in it {
            cur = contract_last(&cur, self.n, v);
        }
        cur
    }

    /// Exact `h^k[v¹, …, vᵏ]` for a jet built from a polynomial at a rational point.
    pub fn multilinear_exact(&self, k: usize, vs: &[Vec<BigRational>]) -> Result<BigRational> {
        self.check_args(k, vs.len(), k)?;
        let ex = self.exact.as_ref().ok_or(Error::NotExact)?;
        for v in vs {
            if v.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: v.len(),
                });
            }
        }
        let mut acc = BigRational::zero();
        for_each_tuple(self.n, k, |tuple| {
            let mu = MultiIndex::from_axes(self.n, tuple);
            let d = &ex[&mu];
            if d.is_zero() {
                return;
            }
            let mut t = d.clone();
            for (v, &i) in vs.iter().zip(tuple) {
                t *= &v[i];
            }
            acc += t;
        });
        Ok(acc)
    }

    /// Jet of `y ↦ h(I + Σ y_j b_j)` at `y = 0`, for the given basis vectors.
    pub fn restrict(&self, basis: &[Vec<f64>]) -> Result<Jet> {
        let p = basis.len();
        for b in basis {
            if b.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: b.len(),
                });
            }
        }
        let n = self.n;
        let mut tensors = Vec::with_capacity(self.order);
        for k in 1..=self.order {
            // transform the last mode, then rotate it to the front; k rounds
            let mut data = self.tensors[k - 1].clone();
            let mut dims = vec![n; k];
            for _ in 0..k {
                let last = *dims.last().expect("k >= 1");
                let rows = data.len() / last;
                let mut out = vec![0.0; rows * p];
                for r in 0..rows {
                    let row = &data[r * last..(r + 1) * last];
                    for (j, bj) in basis.iter().enumerate() {
                        out[j * rows + r] = row.iter().zip(bj).map(|(a, b)| a * b).sum();
                    }
                }
                dims.pop();
                dims.insert(0, p);
                data = out;
            }
            tensors.push(data);
        }
        Ok(Jet::from_dense(p, self.order, vec![0.0; p], tensors))
    }

    /// Same jet with every derivative multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Jet {
        let derivs = self
            .derivs
            .iter()
            .map(|(k, v)| (k.clone(), v * lambda))
            .collect();
        Jet::build(self.n, self.order, self.point.clone(), derivs, None)
    }

    /// Largest `|D_μ|` over the whole jet.
    pub fn max_abs(&self) -> f64 {
        self.derivs.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm of the order-`k` tensor; bounds `|h^k[a¹…aᵏ]| / Π‖aⁱ‖`.
    pub fn frobenius(&self, k: usize) -> f64 {
        self.tensors[k - 1].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Upper bound on `|h^k[a¹…aᵏ]|` for unit `aⁱ`: the largest singular
    /// value of the square-ish unfolding, which never exceeds the Frobenius norm.
    pub fn norm_bound(&self, k: usize) -> f64 {
        let t = &self.tensors[k - 1];
        let rows = self.n.pow((k / 2) as u32);
        let cols = t.len() / rows;
        let m = nalgebra::DMatrix::from_row_slice(rows, cols, t);
        let sigma = m.singular_values().max();
        // slack for rounding in the decomposition
        (sigma * (1.0 + 1e-9) + 1e-300).min(self.frobenius(k))
    }

    /// Jet truncated to a lower order.
    pub fn truncated(&self, r: usize) -> Result<Jet> {
        if r == 0 || r > self.order {
            return Err(Error::OrderOutOfRange {
                order: r,
                max: self.order,
            });
        }
        let mut j = self.clone();
        j.order = r;
        j.derivs.retain(|mu, _| mu.degree() <= r);
        if let Some(ex) = j.exact.as_mut() {
            ex.retain(|mu, _| mu.degree() <= r);
        }
        j.tensors.truncate(r);
        Ok(j)
    }

    pub fn to_file(&self) -> JetFile {
        JetFile {
            n: self.n,
            order: self.order,
            point: self.point.clone(),
            terms: self
                .derivs
                .iter()
                .filter(|(_, v)| **v != 0.0)
                .map(|(mu, v)| JetTerm {
                    mu: mu.0.clone(),
                    value: *v,
                })
                .collect(),
        }
    }

    pub fn from_file(file: &JetFile) -> Result<Jet> {
        Jet::from_coeffs(
            file.n,
            file.order,
            file.point.clone(),
            file.terms
                .iter()
                .map(|t| (MultiIndex(t.mu.clone()), t.value)),
        )
    }

    pub fn from_json(text: &str) -> Result<Jet> {
        let file: JetFile =
            serde_json::from_str(text).map_err(|e| Error::JetFile(e.to_string()))?;
        Jet::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("jet serializes")
    }
}

/// On-disk jet: `{"n":4,"order":5,"point":[…],"terms":[{"mu":[0,5,0,0],"value":24.0}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetFile {
    pub n: usize,
    pub order: usize,
    pub point: Vec<f64>,
    #[serde(default)]
    pub terms: Vec<JetTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetTerm {
    pub mu: Vec<u32>,
    pub value: f64,
}

/// Exact jet of `p` at `point` up to order `r`.
pub fn jet_at(p: &Polynomial, point: &[BigRational], r: usize) -> Result<Jet> {
    Jet::of_polynomial(p, point, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyjet::parse_polynomial;

    const EXAMPLE1: &str = "I2^5/5 + I1^3/3 - I1^2/2 + I1*I2/2 - I3^2/2 - I4";
    const EXAMPLE2: &str = "I4^4/4 + I5^4/4 + I3^3/3 + I3*I2^2/2 - I1^2/2 - I3^2/2 - I5^2/2 + I3*I4 + I2";

    fn origin(n: usize) -> Vec<BigRational> {
        vec![BigRational::zero(); n]
    }

    fn mu(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn example1_fifth_derivative() {
        let p = parse_polynomial(EXAMPLE1, 4).unwrap();
        let j = jet_at(&p, &origin(4), 5).unwrap();
        assert_eq!(j.deriv(&mu(&[0, 5, 0, 0])), 24.0);
        assert_eq!(j.gradient(), vec![0.0, 0.0, 0.0, -1.0]);
        let e1 = [1.0, 0.0, 0.0, 0.0];
        let e2 = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(j.multilinear(2, &[&e1, &e2]).unwrap(), 1.0 / 2.0);
    }

    #[test]
    fn product_jet_is_sparse() {
        let p = parse_polynomial("I1*I2", 2).unwrap();
        let j = jet_at(&p, &origin(2), 2).unwrap();
        for (m, v) in j.entries() {
            let want = if m.0 == [1, 1] { 1.0 } else { 0.0 };
            assert_eq!(*v, want, "{m:?}");
        }
    }

    #[test]
    fn example2_hessian_and_gradient() {
        let p = parse_polynomial(EXAMPLE2, 5).unwrap();
        let j = jet_at(&p, &origin(5), 2).unwrap();
        let mut want = BTreeMap::new();
        want.insert(vec![2, 0, 0, 0, 0], -1.0);
        want.insert(vec![0, 0, 1, 1, 0], 1.0);
        want.insert(vec![0, 0, 2, 0, 0], -1.0);
        want.insert(vec![0, 0, 0, 0, 2], -1.0);
        for m in MultiIndex::all_of_degree(5, 2) {
            assert_eq!(j.deriv(&m), want.get(&m.0).copied().unwrap_or(0.0), "{m:?}");
        }
        assert_eq!(j.gradient(), vec![0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn cubic_form_symmetry_examples() {
        let p = parse_polynomial("I1^2*I2", 2).unwrap();
        let j = jet_at(&p, &origin(2), 3).unwrap();
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        assert_eq!(j.multilinear(3, &[&e1, &e1, &e2]).unwrap(), 2.0);
        assert_eq!(j.multilinear(3, &[&e1, &e2, &e1]).unwrap(), 2.0);
        assert!(j.multilinear(4, &[&e1, &e1, &e1, &e1]).is_err());
    }

    #[test]
    fn quadratic_without_linear_part_has_zero_gradient() {
        let p = parse_polynomial("I1^2", 2).unwrap();
        let j = jet_at(&p, &origin(2), 2).unwrap();
        assert_eq!(j.gradient(), vec![0.0, 0.0]);
    }

    #[test]
    fn raw_coefficient_input() {
        let j = Jet::from_coeffs(2, 5, vec![0.0, 0.0], [(mu(&[1, 0]), 1.0)]).unwrap();
        assert_eq!(j.gradient(), vec![1.0, 0.0]);
        assert_eq!(j.deriv(&mu(&[0, 5])), 0.0);
        let empty = Jet::from_coeffs(2, 5, vec![0.0, 0.0], []).unwrap();
        assert_eq!(empty.gradient(), vec![0.0, 0.0]);
        let dup = Jet::from_coeffs(
            2,
            5,
            vec![0.0, 0.0],
            [(mu(&[2, 0]), 1.0), (mu(&[2, 0]), 3.0)],
        );
        assert!(matches!(dup, Err(Error::DuplicateIndex(_))));
        let hi = Jet::from_coeffs(2, 2, vec![0.0, 0.0], [(mu(&[2, 1]), 1.0)]);
        assert!(matches!(hi, Err(Error::IndexDegreeOutOfRange { .. })));
    }

    #[test]
    fn json_round_trip() {
        let p = parse_polynomial(EXAMPLE1, 4).unwrap();
        let j = jet_at(&p, &origin(4), 5).unwrap();
        let back = Jet::from_json(&j.to_json()).unwrap();
        for (m, v) in j.entries() {
            assert_eq!(back.deriv(m), *v);
        }
        let text = r#"{"n":2,"order":3,"point":[0,0]}"#;
        assert_eq!(Jet::from_json(text).unwrap().gradient(), vec![0.0, 0.0]);
    }

    #[test]
    fn restriction_to_coordinate_plane() {
        let p = parse_polynomial(EXAMPLE1, 4).unwrap();
        let j = jet_at(&p, &origin(4), 5).unwrap();
        let basis = vec![vec![0.0, 1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]];
        let r = j.restrict(&basis).unwrap();
        assert_eq!(r.n(), 2);
        // y1 is I2, y2 is I1
        assert_eq!(r.deriv(&mu(&[5, 0])), 24.0);
        assert_eq!(r.deriv(&mu(&[1, 1])), 0.5);
        assert_eq!(r.deriv(&mu(&[0, 3])), 2.0);
        let a = [0.3, -0.7];
        let b = [1.1, 0.2];
        let lift = |y: &[f64]| -> Vec<f64> {
            (0..4).map(|i| basis[0][i] * y[0] + basis[1][i] * y[1]).collect()
        };
        let (la, lb) = (lift(&a), lift(&b));
        let lhs = r.multilinear(3, &[&a, &a, &b]).unwrap();
        let rhs = j.multilinear(3, &[&la, &la, &lb]).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
