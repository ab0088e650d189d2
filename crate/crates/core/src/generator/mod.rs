//! Formal construction of the bad-set defining systems `Ξ_m(h, I, n)`.
//!
//! Restrict the Taylor polynomial of `h` to the span `Λ_m` of a basis
//! `A¹…Aᵐ`, substitute the curve `x₁ = t`, `x_i = Σ_j b_ij t^j`, and ask the
//! restricted gradient to vanish to order `β_m − 1` at `t = 0`.

mod golden;
mod validate;

use std::collections::BTreeMap;

use num::{BigInt, BigRational};
use serde_json::{json, Value};

use crate::conditions::beta;
use crate::error::{Error, Result};
use crate::formal::{expand_form, FormalPolynomial, FormalSymbol, VecExpr};
use crate::polyjet::Jet;

pub use golden::{compare_with_golden, golden_system, GoldenComparison, GoldenSystem};
pub use validate::{
    check_sample, validate_elimination, EliminationReport, SampleOutcome, SetCheck,
};

/// Values of the curve coefficients `b_ij`; absent ones are zero.
pub type CurveValues = BTreeMap<(usize, usize), f64>;

/// One coefficient equation: the `t^power` coefficient of gradient
/// component `component` (both 1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemEquation {
    pub component: usize,
    pub power: usize,
    pub poly: FormalPolynomial,
}

/// The non-polynomial side conditions of the system, kept as data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideConditions {
    /// `∇h(I) ≠ 0`.
    pub gradient_nonzero: bool,
    /// `A¹…Aᵐ` are linearly independent.
    pub rank: usize,
    /// `h¹[A^i] = 0`: the basis lies in the gradient's orthogonal complement.
    /// These are the `t⁰` coefficients of the restricted gradient.
    pub orthogonality: Vec<FormalPolynomial>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalSystem {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub beta: usize,
    /// Ordered by power, then component.
    pub equations: Vec<SystemEquation>,
    pub side: SideConditions,
}

fn invalid(n: usize, m: usize, r: usize, reason: &str) -> Error {
    Error::InvalidSystem {
        n,
        m,
        r,
        reason: reason.into(),
    }
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::from(1), |acc, i| acc * BigInt::from(i))
}

/// Compositions of `total` into `parts` positive parts, each at most `max`.
fn compositions(total: usize, parts: usize, max: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for l in 1..=left.min(max) {
            if left - l < parts - 1 {
                break;
            }
            cur.push(l);
            rec(left - l, parts - 1, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, max, &mut Vec::new(), &mut out);
    out
}

/// `V_l`, the `t^l` coefficient of the curve in `Λ_m`: `V₁ = A¹ + Σ b_i1 A^i`
/// and `V_l = Σ_{i≥2} b_il A^i`.
fn curve_coefficients(m: usize, beta: usize) -> Vec<VecExpr> {
    (1..beta)
        .map(|l| {
            let mut v = if l == 1 { VecExpr::basis(1) } else { VecExpr::default() };
            for i in 2..=m {
                v = v.plus(i, FormalPolynomial::curve(i, l));
            }
            v
        })
        .collect()
}

/// Builds `Ξ_m` for `n` variables and jet order `r`.
///
/// The restricted Taylor polynomial is `P(x) = Σ_k h^k[x^k]/k!` with
/// `x = Σ x_i A^i`, so `∂P/∂x_j = Σ_k h^k[x^{k−1}, A^j]/(k−1)!`. Along the
/// curve, the `t^q` coefficient collects every `h^k[V_{l₁}, …, V_{l_{k−1}}, A^j]`
/// with `l₁ + … + l_{k−1} = q`. The equations are the coefficients
/// `q = 1..β_m−1`; `q = 0` is the orthogonality side condition.
pub fn build_xi(n: usize, r: usize, m: usize) -> Result<FormalSystem> {
    if n < 2 {
        return Err(invalid(n, m, r, "need n >= 2"));
    }
    if m == 0 || m >= n {
        return Err(invalid(n, m, r, "need 1 <= m <= n-1"));
    }
    if r < 2 {
        return Err(invalid(n, m, r, "need r >= 2"));
    }
    let b = beta(n, r, m) as usize;
    if b > r {
        return Err(invalid(n, m, r, "curve degree beta exceeds the jet order"));
    }
    let v = curve_coefficients(m, b);
    let mut equations = Vec::with_capacity(m * (b - 1));
    for q in 1..b {
        for j in 1..=m {
            let mut poly = FormalPolynomial::zero();
            for k in 2..=(q + 1).min(b) {
                let weight = BigRational::new(1.into(), factorial(k - 1));
                let mut sum = FormalPolynomial::zero();
                for comp in compositions(q, k - 1, b - 1) {
                    let mut args: Vec<VecExpr> = comp.iter().map(|&l| v[l - 1].clone()).collect();
                    args.push(VecExpr::basis(j));
                    sum = sum.add(&expand_form(&args));
                }
                poly = poly.add(&sum.scale(&weight));
            }
            equations.push(SystemEquation {
                component: j,
                power: q,
                poly,
            });
        }
    }
    let orthogonality = (1..=m).map(|i| FormalPolynomial::form(1, vec![i])).collect();
    Ok(FormalSystem {
        n,
        r,
        m,
        beta: b,
        equations,
        side: SideConditions {
            gradient_nonzero: true,
            rank: m,
            orthogonality,
        },
    })
}

/// Evaluates a polynomial in jet symbols and curve coefficients.
pub(crate) fn evaluate(
    poly: &FormalPolynomial,
    jet: &Jet,
    basis: &[Vec<f64>],
    b: &CurveValues,
) -> f64 {
    poly.eval(&mut |s| match s {
        FormalSymbol::CurveCoeff { i, j } => b.get(&(*i, *j)).copied().unwrap_or(0.0),
        FormalSymbol::JetForm { order, args } => {
            let vs: Vec<&[f64]> = args.iter().map(|&a| basis[a - 1].as_slice()).collect();
            jet.contract(*order, &vs)[0]
        }
    })
}

impl FormalSystem {
    fn check_inputs(&self, jet: &Jet, basis: &[Vec<f64>]) -> Result<()> {
        if basis.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: basis.len(),
            });
        }
        if jet.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: jet.n(),
            });
        }
        if let Some(a) = basis.iter().find(|a| a.len() != self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: a.len(),
            });
        }
        if jet.order() < self.beta {
            return Err(Error::OrderTooLow {
                needed: self.beta,
                got: jet.order(),
            });
        }
        let refs: Vec<&[f64]> = basis.iter().map(Vec::as_slice).collect();
        let sv = crate::linalg::singular_values(&refs);
        let top = sv.iter().cloned().fold(0.0, f64::max);
        let low = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(low > 1e-12 * top) {
            return Err(invalid(self.n, self.m, self.r, "basis vectors are linearly dependent"));
        }
        Ok(())
    }

    /// Residual of every equation at a concrete jet, basis and curve.
    pub fn instantiate(&self, jet: &Jet, basis: &[Vec<f64>], b: &CurveValues) -> Result<Vec<f64>> {
        self.check_inputs(jet, basis)?;
        Ok(self
            .equations
            .iter()
            .map(|e| evaluate(&e.poly, jet, basis, b))
            .collect())
    }

    /// Residuals of the orthogonality side conditions `h¹[A^i]`.
    pub fn orthogonality_residuals(&self, jet: &Jet, basis: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_inputs(jet, basis)?;
        let none = CurveValues::new();
        Ok(self
            .side
            .orthogonality
            .iter()
            .map(|p| evaluate(p, jet, basis, &none))
            .collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# n={} r={} m={} beta={} ({} equations)\n# side conditions: grad h != 0, rank(A^1..A^{}) = {}, ",
            self.n,
            self.r,
            self.m,
            self.beta,
            self.equations.len(),
            self.m,
            self.side.rank
        );
        let orth: Vec<String> = self.side.orthogonality.iter().map(|p| format!("{p} = 0")).collect();
        out.push_str(&orth.join(", "));
        out.push('\n');
        for e in &self.equations {
            out.push_str(&format!("[d{} t^{}] {} = 0\n", e.component, e.power, e.poly));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let equations: Vec<Value> = self
            .equations
            .iter()
            .map(|e| {
                let mut v = e.poly.to_json();
                v["component"] = json!(e.component);
                v["power"] = json!(e.power);
                v
            })
            .collect();
        let orth: Vec<Value> = self.side.orthogonality.iter().map(|p| p.to_json()).collect();
        json!({
            "n": self.n,
            "r": self.r,
            "m": self.m,
            "beta": self.beta,
            "equations": equations,
            "side_conditions": {
                "gradient_nonzero": self.side.gradient_nonzero,
                "rank": self.side.rank,
                "orthogonality": orth,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_count() {
        // C(q-1, k-1)
        assert_eq!(compositions(4, 2, 10).len(), 3);
        assert_eq!(compositions(4, 4, 10).len(), 1);
        assert_eq!(compositions(4, 2, 2).len(), 1);
        assert!(compositions(2, 3, 10).is_empty());
    }

    #[test]
    fn equation_counts() {
        for n in 2..=7 {
            for m in 1..n {
                let Ok(sys) = build_xi(n, 5, m) else { continue };
                assert_eq!(sys.equations.len(), m * (sys.beta - 1));
                assert!(sys.equations.iter().all(|e| e.poly.max_form_order() <= sys.beta));
            }
        }
    }

    #[test]
    fn rejects_bad_triples() {
        assert!(build_xi(5, 5, 5).is_err());
        assert!(build_xi(5, 5, 0).is_err());
        assert!(build_xi(1, 5, 1).is_err());
        assert!(build_xi(3, 1, 1).is_err());
        // the curve degree never exceeds the jet order
        for n in 2..9 {
            for r in 2..9 {
                for m in 1..n {
                    assert!(build_xi(n, r, m).unwrap().beta <= r);
                }
            }
        }
    }

    #[test]
    fn text_export_names_components() {
        let sys = build_xi(5, 5, 4).unwrap();
        let text = sys.to_text();
        assert_eq!(text.lines().filter(|l| l.starts_with("[d")).count(), 4);
        assert!(text.contains("h2[1,4]"));
        let js = sys.to_json();
        assert_eq!(js["beta"], 2);
        assert_eq!(js["equations"].as_array().unwrap().len(), 4);
    }
}
