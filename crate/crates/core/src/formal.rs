//! Polynomials over formal symbols `h^k[A^{i_1}, …, A^{i_k}]` and `b_{ij}`.
//!
//! A [`FormalPolynomial`] is kept in canonical form: symbol arguments sorted,
//! monomials ordered, zero coefficients dropped. Structural equality is
//! equality of these canonical forms.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FormalSymbol {
    /// `b_{ij}`, coefficient of `t^j` in the `i`-th curve coordinate.
    CurveCoeff { i: usize, j: usize },
    /// `h^k[A^{i_1}, …, A^{i_k}]`; `args` are 1-based basis indices, sorted.
    JetForm { order: usize, args: Vec<usize> },
}

impl FormalSymbol {
    pub fn jet_form(order: usize, mut args: Vec<usize>) -> Self {
        assert_eq!(order, args.len(), "form order must match argument count");
        args.sort_unstable();
        FormalSymbol::JetForm { order, args }
    }

    pub fn curve(i: usize, j: usize) -> Self {
        FormalSymbol::CurveCoeff { i, j }
    }
}

impl fmt::Display for FormalSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormalSymbol::CurveCoeff { i, j } if *i < 10 && *j < 10 => write!(f, "b{i}{j}"),
            FormalSymbol::CurveCoeff { i, j } => write!(f, "b{i}_{j}"),
            FormalSymbol::JetForm { order, args } => {
                let list: Vec<String> = args.iter().map(ToString::to_string).collect();
                write!(f, "h{order}[{}]", list.join(","))
            }
        }
    }
}

/// Product of symbol powers.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<FormalSymbol, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn symbol(s: FormalSymbol) -> Self {
        let mut m = BTreeMap::new();
        m.insert(s, 1);
        Monomial(m)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (s, e) in &other.0 {
            *out.entry(s.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    pub fn factors(&self) -> impl Iterator<Item = (&FormalSymbol, u32)> {
        self.0.iter().map(|(s, e)| (s, *e))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of powers of jet-form symbols.
    pub fn jet_degree(&self) -> u32 {
        self.0
            .iter()
            .filter(|(s, _)| matches!(s, FormalSymbol::JetForm { .. }))
            .map(|(_, e)| e)
            .sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormalPolynomial(BTreeMap<Monomial, BigRational>);

impl FormalPolynomial {
    pub fn zero() -> Self {
        FormalPolynomial::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = FormalPolynomial::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(c: i64) -> Self {
        FormalPolynomial::constant(BigRational::from_integer(c.into()))
    }

    pub fn symbol(s: FormalSymbol) -> Self {
        let mut p = FormalPolynomial::zero();
        p.add_term(Monomial::symbol(s), BigRational::one());
        p
    }

    pub fn form(order: usize, args: Vec<usize>) -> Self {
        FormalPolynomial::symbol(FormalSymbol::jet_form(order, args))
    }

    pub fn curve(i: usize, j: usize) -> Self {
        FormalPolynomial::symbol(FormalSymbol::curve(i, j))
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.0.entry(m.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.0.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.0.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &FormalPolynomial) -> FormalPolynomial {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &FormalPolynomial) -> FormalPolynomial {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> FormalPolynomial {
        let mut out = FormalPolynomial::zero();
        for (m, v) in &self.0 {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn scale_int(&self, c: i64) -> FormalPolynomial {
        self.scale(&BigRational::from_integer(c.into()))
    }

    pub fn mul(&self, other: &FormalPolynomial) -> FormalPolynomial {
        let mut out = FormalPolynomial::zero();
        for (a, ca) in &self.0 {
            for (b, cb) in &other.0 {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> FormalPolynomial {
        (0..e).fold(FormalPolynomial::int(1), |acc, _| acc.mul(self))
    }

    /// Largest order of any jet form appearing.
    pub fn max_form_order(&self) -> usize {
        self.symbols()
            .filter_map(|s| match s {
                FormalSymbol::JetForm { order, .. } => Some(*order),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &FormalSymbol> {
        self.0.keys().flat_map(|m| m.0.keys())
    }

    /// `Some(c)` with `self = c · other`, `c ≠ 0`, if such a scalar exists.
    pub fn scalar_multiple_of(&self, other: &FormalPolynomial) -> Option<BigRational> {
        if self.0.len() != other.0.len() || self.is_zero() {
            return None;
        }
        let mut ratio: Option<BigRational> = None;
        for ((ma, ca), (mb, cb)) in self.0.iter().zip(&other.0) {
            if ma != mb {
                return None;
            }
            let r = ca / cb;
            match &ratio {
                None => ratio = Some(r),
                Some(prev) if *prev != r => return None,
                _ => {}
            }
        }
        ratio
    }

    /// Numeric evaluation with a symbol valuation.
    pub fn eval(&self, value: &mut impl FnMut(&FormalSymbol) -> f64) -> f64 {
        self.0
            .iter()
            .map(|(m, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (s, e) in &m.0 {
                    t *= value(s).powi(*e as i32);
                }
                t
            })
            .sum()
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .0
            .iter()
            .map(|(m, c)| {
                let mut symbols = Vec::new();
                for (s, e) in &m.0 {
                    for _ in 0..*e {
                        symbols.push(match s {
                            FormalSymbol::CurveCoeff { i, j } => json!(["b", i, j]),
                            FormalSymbol::JetForm { order, args } => json!(["h", order, args]),
                        });
                    }
                }
                json!({ "coeff": c.to_string(), "symbols": symbols })
            })
            .collect();
        json!({ "terms": terms })
    }
}

/// Linear combination `Σ c_i A^i` of basis vectors with formal coefficients.
#[derive(Debug, Clone, Default)]
pub struct VecExpr(pub Vec<(usize, FormalPolynomial)>);

impl VecExpr {
    pub fn basis(i: usize) -> Self {
        VecExpr(vec![(i, FormalPolynomial::int(1))])
    }

    pub fn plus(mut self, i: usize, c: FormalPolynomial) -> Self {
        self.0.push((i, c));
        self
    }
}

/// Expands `h^k[e_1, …, e_k]` multilinearly over the basis.
pub fn expand_form(args: &[VecExpr]) -> FormalPolynomial {
    let order = args.len();
    let mut out = FormalPolynomial::zero();
    let mut choice = vec![0usize; order];
    if args.iter().any(|a| a.0.is_empty()) {
        return out;
    }
    loop {
        let mut coeff = FormalPolynomial::int(1);
        let mut idx = Vec::with_capacity(order);
        for (a, &c) in args.iter().zip(&choice) {
            let (i, ref k) = a.0[c];
            coeff = coeff.mul(k);
            idx.push(i);
        }
        out = out.add(&coeff.mul(&FormalPolynomial::form(order, idx)));
        let mut pos = order;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < args[pos].0.len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

impl fmt::Display for FormalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.0.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let mut parts = Vec::new();
            if !mag.is_one() || m.is_one() {
                parts.push(mag.to_string());
            }
            for (s, e) in &m.0 {
                if *e == 1 {
                    parts.push(s.to_string());
                } else {
                    parts.push(format!("{s}^{e}"));
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}
