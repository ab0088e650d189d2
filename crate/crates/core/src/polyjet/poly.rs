//! Exact multivariate polynomials over the rationals.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exponent vector `μ = (μ_1, …, μ_n)`; ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, axis: usize) -> Self {
        let mut e = vec![0; n];
        e[axis] = 1;
        MultiIndex(e)
    }

    /// Counts of each axis in a list of axes, e.g. `[0, 0, 2]` -> `(2, 0, 1)`.
    pub fn from_axes(n: usize, axes: &[usize]) -> Self {
        let mut e = vec![0; n];
        for &a in axes {
            e[a] += 1;
        }
        MultiIndex(e)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Sorted list of axes with multiplicity; inverse of [`MultiIndex::from_axes`].
    pub fn axes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.degree());
        for (i, &e) in self.0.iter().enumerate() {
            out.extend(std::iter::repeat_n(i, e as usize));
        }
        out
    }

    /// `μ! = Π μ_i!`
    pub fn factorial(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::one(), |acc, &e| acc * factorial(e as usize))
    }

    /// All multi-indices in `n` variables with `|μ| = degree`, in lexicographic order.
    pub fn all_of_degree(n: usize, degree: usize) -> Vec<MultiIndex> {
        fn rec(n: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if cur.len() + 1 == n {
                cur.push(left as u32);
                out.push(MultiIndex(cur.clone()));
                cur.pop();
                return;
            }
            for e in 0..=left {
                cur.push(e as u32);
                rec(n, left - e, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        rec(n, degree, &mut Vec::with_capacity(n), &mut out);
        out.sort();
        out
    }
}

pub(crate) fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Polynomial in `n` variables with exact rational coefficients. Zero
/// coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<MultiIndex, BigRational>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        let mut p = Polynomial::zero(n);
        p.add_term(MultiIndex::zero(n), c);
        p
    }

    pub fn variable(n: usize, axis: usize) -> Result<Self> {
        if axis >= n {
            return Err(Error::VariableOutOfRange { index: axis + 1, n });
        }
        let mut p = Polynomial::zero(n);
        p.add_term(MultiIndex::unit(n, axis), BigRational::one());
        Ok(p)
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, BigRational)>,
    {
        let mut p = Polynomial::zero(n);
        for (mu, c) in terms {
            if mu.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: mu.dim(),
                });
            }
            p.add_term(mu, c);
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mu: &MultiIndex) -> BigRational {
        self.terms.get(mu).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    fn add_term(&mut self, mu: MultiIndex, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mu) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_same(&self, other: &Polynomial) {
        assert_eq!(self.n, other.n, "polynomials live in different rings");
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        self.check_same(other);
        let mut out = self.clone();
        for (mu, c) in &other.terms {
            out.add_term(mu.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(&-BigRational::one())
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.n);
        }
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(mu, v)| (mu.clone(), v * c))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        self.check_same(other);
        let mut out = Polynomial::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mu = MultiIndex(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                out.add_term(mu, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.n, BigRational::one());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Exact partial derivative with respect to variable `axis` (0-based).
    pub fn differentiate(&self, axis: usize) -> Result<Polynomial> {
        if axis >= self.n {
            return Err(Error::VariableOutOfRange {
                index: axis + 1,
                n: self.n,
            });
        }
        let mut out = Polynomial::zero(self.n);
        for (mu, c) in &self.terms {
            let e = mu.0[axis];
            if e == 0 {
                continue;
            }
            let mut nu = mu.clone();
            nu.0[axis] -= 1;
            out.add_term(nu, c * BigRational::from_integer(BigInt::from(e)));
        }
        Ok(out)
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, point: &[BigRational]) -> Result<BigRational> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: point.len(),
            });
        }
        let mut acc = BigRational::zero();
        for (mu, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&mu.0) {
                if e > 0 {
                    t *= num::pow(x.clone(), e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(mu, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (x, &e) in point.iter().zip(&mu.0) {
                    t *= x.powi(e as i32);
                }
                t
            })
            .sum())
    }

    /// The polynomial `x ↦ p(point + x)`.
    pub fn shift(&self, point: &[BigRational]) -> Result<Polynomial> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: point.len(),
            });
        }
        let shifted_vars: Vec<Polynomial> = (0..self.n)
            .map(|i| {
                Polynomial::variable(self.n, i)
                    .expect("axis in range")
                    .add(&Polynomial::constant(self.n, point[i].clone()))
            })
            .collect();
        let mut out = Polynomial::zero(self.n);
        for (mu, c) in &self.terms {
            let mut t = Polynomial::constant(self.n, c.clone());
            for (i, &e) in mu.0.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&shifted_vars[i].pow(e));
                }
            }
            out = out.add(&t);
        }
        Ok(out)
    }
}

impl fmt::Display for Polynomial {
    /// Prints in a form accepted by [`crate::polyjet::parse_polynomial`],
    /// highest-degree terms first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then_with(|| b.0.cmp(a.0)));
        for (k, (mu, c)) in ordered.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let mut factors = Vec::new();
            if !mag.is_one() || mu.degree() == 0 {
                factors.push(if mag.is_integer() {
                    mag.numer().to_string()
                } else {
                    format!("{}/{}", mag.numer(), mag.denom())
                });
            }
            for (i, &e) in mu.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("I{}", i + 1)),
                    _ => factors.push(format!("I{}^{}", i + 1, e)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}
