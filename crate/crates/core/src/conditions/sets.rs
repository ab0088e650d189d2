//! The closed jet sets whose complements are the steepness conditions, each
//! written as a residual over orthonormal tuples in the reduced space
//! `∇h(I)^⊥` (so every `h¹` equation holds by construction).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::formal::FormalPolynomial;
use crate::polyjet::Jet;
use crate::search::{Manifold, SearchProblem};

/// A named closed set of five-jets, identified as `psi<m>_<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PsiSet {
    /// `m = 1`: the `r`-jet is degenerate in some direction.
    JetDegenerate { n: usize, r: usize },
    /// `(u, v)` system in three variables.
    Psi2_3,
    /// `(u, v)` system with the extra fifth-order equation, four variables.
    Psi2_4,
    Psi2_5,
    /// Restricted Hessian annihilates a three-jet-degenerate `v`, four variables.
    Psi3_4,
    /// `(u, v, w)` system in five variables with the quartic consequence
    /// re-derived from the curve construction.
    Psi3_5,
    /// Same as [`PsiSet::Psi3_5`] but with the quartic transcribed literally
    /// from its reference form; kept to document the discrepancy.
    Psi3_5Literal,
    /// Restricted Hessian is singular, five variables.
    Psi4_5,
}

impl PsiSet {
    pub fn n(&self) -> usize {
        match self {
            PsiSet::JetDegenerate { n, .. } => *n,
            PsiSet::Psi2_3 => 3,
            PsiSet::Psi2_4 | PsiSet::Psi3_4 => 4,
            PsiSet::Psi2_5 | PsiSet::Psi3_5 | PsiSet::Psi3_5Literal | PsiSet::Psi4_5 => 5,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            PsiSet::JetDegenerate { .. } => 1,
            PsiSet::Psi2_3 | PsiSet::Psi2_4 | PsiSet::Psi2_5 => 2,
            PsiSet::Psi3_4 | PsiSet::Psi3_5 | PsiSet::Psi3_5Literal => 3,
            PsiSet::Psi4_5 => 4,
        }
    }

    /// The sets whose complements make up the steepness conditions for `n`.
    pub fn conditions_for(n: usize) -> Result<Vec<PsiSet>> {
        Ok(match n {
            2 => vec![PsiSet::JetDegenerate { n: 2, r: 5 }],
            3 => vec![PsiSet::JetDegenerate { n: 3, r: 5 }, PsiSet::Psi2_3],
            4 => vec![
                PsiSet::JetDegenerate { n: 4, r: 5 },
                PsiSet::Psi2_4,
                PsiSet::Psi3_4,
            ],
            5 => vec![
                PsiSet::JetDegenerate { n: 5, r: 4 },
                PsiSet::Psi2_5,
                PsiSet::Psi3_5,
                PsiSet::Psi4_5,
            ],
            n if n >= 6 => return Err(Error::UnsupportedDimension(n)),
            _ => {
                return Err(Error::InvalidSystem {
                    n,
                    m: 0,
                    r: 5,
                    reason: "steepness conditions need at least two variables".into(),
                })
            }
        })
    }

    /// Largest derivative order the set's equations use.
    pub fn order(&self) -> usize {
        match self {
            PsiSet::JetDegenerate { r, .. } => *r,
            PsiSet::Psi2_3 | PsiSet::Psi3_5 | PsiSet::Psi3_5Literal => 4,
            PsiSet::Psi2_4 | PsiSet::Psi2_5 => 5,
            PsiSet::Psi3_4 => 3,
            PsiSet::Psi4_5 => 2,
        }
    }

    /// Order of jet degeneracy the condition quantifies `v` over.
    pub(crate) fn domain_order(&self) -> Option<usize> {
        match self {
            PsiSet::JetDegenerate { .. } => None,
            PsiSet::Psi4_5 => Some(2),
            _ => Some(3),
        }
    }

    /// Names of the witness vectors, in the order they are reported.
    pub fn witness_names(&self) -> &'static [&'static str] {
        match self {
            PsiSet::JetDegenerate { .. } => &["v"],
            PsiSet::Psi2_3 | PsiSet::Psi2_4 | PsiSet::Psi2_5 => &["v", "u"],
            PsiSet::Psi3_4 | PsiSet::Psi3_5 | PsiSet::Psi3_5Literal => &["v", "u", "w"],
            PsiSet::Psi4_5 => &["v", "u", "w", "x"],
        }
    }

    pub fn description(&self) -> String {
        match self {
            PsiSet::JetDegenerate { r, .. } => format!("{r}-jet non-degeneracy"),
            PsiSet::Psi2_3 => "every (u,v) solving the u-system for three-jet-degenerate v is rank deficient".into(),
            PsiSet::Psi2_4 | PsiSet::Psi2_5 => {
                "every (u,v) solving the two-plane system with the fifth-order equation is rank deficient".into()
            }
            PsiSet::Psi3_4 => "no three-jet-degenerate v is annihilated by the restricted Hessian".into(),
            PsiSet::Psi3_5 => {
                "every (u,w,v) solving the three-space system with the quartic equation is rank deficient".into()
            }
            PsiSet::Psi3_5Literal => {
                "three-space system with the quartic equation in its literal transcribed form".into()
            }
            PsiSet::Psi4_5 => "no two-jet-degenerate v is annihilated by the restricted Hessian".into(),
        }
    }

    /// Search problem for the set over an already reduced jet (dimension `n-1`).
    pub fn problem(&self, reduced: &Jet) -> Result<SearchProblem> {
        let d = reduced.n();
        if d + 1 != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n() - 1,
                got: d,
            });
        }
        if reduced.order() < self.order() {
            return Err(Error::OrderTooLow {
                needed: self.order(),
                got: reduced.order(),
            });
        }
        let (manifold, fixed, eqs) = self.parts(d);
        let problem = SearchProblem::new(reduced.clone(), manifold, fixed, eqs)?;
        Ok(if *self == PsiSet::Psi3_5 {
            // a Gram determinant, an adjugate quadratic form and the pair
            // (h²[u,v], h²[w,v]) are all O(2)-invariant in (u, w)
            problem.with_span_invariant_tail(2)
        } else {
            problem
        })
    }

    /// Defining equations. Slots name the searched vectors (`v = 1`, `u = 2`,
    /// `w = 3`); for the sets quantified against a basis, `v` is the only
    /// searched vector and slots `2..=d+1` are the `d` basis vectors.
    pub fn equations(&self, d: usize) -> Vec<FormalPolynomial> {
        self.parts(d).2
    }

    /// Whether the equations refer to a basis of the gradient complement.
    pub fn uses_fixed_basis(&self) -> bool {
        matches!(self, PsiSet::Psi3_4 | PsiSet::Psi4_5)
    }

    fn parts(&self, d: usize) -> (Manifold, Vec<Vec<f64>>, Vec<FormalPolynomial>) {
        let h = FormalPolynomial::form;
        match self {
            PsiSet::JetDegenerate { r, .. } => {
                let eqs = (2..=*r).map(|k| h(k, vec![1; k])).collect();
                (Manifold::sphere(d), vec![], eqs)
            }
            PsiSet::Psi2_3 => (Manifold::frame(d, 2), vec![], plane_equations(false)),
            PsiSet::Psi2_4 | PsiSet::Psi2_5 => {
                (Manifold::frame(d, 2), vec![], plane_equations(true))
            }
            PsiSet::Psi3_5 | PsiSet::Psi3_5Literal => {
                let mut eqs = vec![
                    h(2, vec![1, 1]),
                    h(3, vec![1, 1, 1]),
                    h(2, vec![1, 2]),
                    h(2, vec![1, 3]),
                ];
                eqs.push(if *self == PsiSet::Psi3_5 {
                    quartic_rederived()
                } else {
                    quartic_literal()
                });
                (Manifold::frame(d, 3), vec![], eqs)
            }
            PsiSet::Psi3_4 | PsiSet::Psi4_5 => {
                // v is slot 1; the reduced standard basis is slots 2..=d+1
                let fixed: Vec<Vec<f64>> = (0..d)
                    .map(|i| {
                        let mut e = vec![0.0; d];
                        e[i] = 1.0;
                        e
                    })
                    .collect();
                let mut eqs: Vec<FormalPolynomial> =
                    (0..d).map(|j| h(2, vec![1, j + 2])).collect();
                if *self == PsiSet::Psi3_4 {
                    eqs.push(h(3, vec![1, 1, 1]));
                }
                (Manifold::sphere(d), fixed, eqs)
            }
        }
    }
}

/// `v = 1`, `u = 2`: `h²[v,v], h³[v,v,v], h²[u,v]`, the degree-two
/// elimination `h²[u,u]h⁴[v⁴] − 3h³[v,v,u]²`, and optionally the
/// fifth-order one `15h³[v,v,u]²h³[u,u,v] + h⁵[v⁵]h²[u,u]² − 10h⁴[v³,u]h³[u,v,v]h²[u,u]`.
fn plane_equations(fifth: bool) -> Vec<FormalPolynomial> {
    let h = FormalPolynomial::form;
    let a = h(2, vec![2, 2]);
    let p = h(3, vec![1, 1, 2]);
    let mut eqs = vec![
        h(2, vec![1, 1]),
        h(3, vec![1, 1, 1]),
        h(2, vec![1, 2]),
        a.mul(&h(4, vec![1; 4])).sub(&p.pow(2).scale_int(3)),
    ];
    if fifth {
        let e = p
            .pow(2)
            .mul(&h(3, vec![1, 2, 2]))
            .scale_int(15)
            .add(&h(5, vec![1; 5]).mul(&a.pow(2)))
            .sub(&h(4, vec![1, 1, 1, 2]).mul(&p).mul(&a).scale_int(10));
        eqs.push(e);
    }
    eqs
}

struct QuarticParts {
    a: FormalPolynomial,
    b: FormalPolynomial,
    c: FormalPolynomial,
    p: FormalPolynomial,
    q: FormalPolynomial,
    f: FormalPolynomial,
}

fn quartic_parts() -> QuarticParts {
    let h = FormalPolynomial::form;
    QuarticParts {
        a: h(2, vec![2, 2]),
        b: h(2, vec![3, 3]),
        c: h(2, vec![2, 3]),
        p: h(3, vec![1, 1, 2]),
        q: h(3, vec![1, 1, 3]),
        f: h(4, vec![1; 4]),
    }
}

/// `F·(ab − c²) − 3(b p² − 2c p q + a q²)` with `a = h²[u,u]`, `b = h²[w,w]`,
/// `c = h²[u,w]`, `p = h³[v,v,u]`, `q = h³[v,v,w]`, `F = h⁴[v⁴]`: the
/// determinant condition for the linear system in the curve's second-order
/// coefficients to be consistent with the third-order one.
pub(crate) fn quartic_rederived() -> FormalPolynomial {
    let QuarticParts { a, b, c, p, q, f } = quartic_parts();
    let det = a.mul(&b).sub(&c.pow(2));
    let quad = b
        .mul(&p.pow(2))
        .sub(&c.mul(&p).mul(&q).scale_int(2))
        .add(&a.mul(&q.pow(2)));
    f.mul(&det).sub(&quad.scale_int(3))
}

/// `{F a − 6p²}{b a − c²} + 12 p q a c − 6 p² c² − 6 q² a²`, which equals
/// `a·(F·(ab − c²) − 6(b p² − 2c p q + a q²))`.
pub(crate) fn quartic_literal() -> FormalPolynomial {
    let QuarticParts { a, b, c, p, q, f } = quartic_parts();
    f.mul(&a)
        .sub(&p.pow(2).scale_int(6))
        .mul(&b.mul(&a).sub(&c.pow(2)))
        .add(&p.mul(&q).mul(&a).mul(&c).scale_int(12))
        .sub(&p.pow(2).mul(&c.pow(2)).scale_int(6))
        .sub(&q.pow(2).mul(&a.pow(2)).scale_int(6))
}

impl fmt::Display for PsiSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiSet::JetDegenerate { n, .. } => write!(f, "psi1_{n}"),
            PsiSet::Psi2_3 => write!(f, "psi2_3"),
            PsiSet::Psi2_4 => write!(f, "psi2_4"),
            PsiSet::Psi2_5 => write!(f, "psi2_5"),
            PsiSet::Psi3_4 => write!(f, "psi3_4"),
            PsiSet::Psi3_5 => write!(f, "psi3_5"),
            PsiSet::Psi3_5Literal => write!(f, "psi3_5_literal"),
            PsiSet::Psi4_5 => write!(f, "psi4_5"),
        }
    }
}

impl FromStr for PsiSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '*' | ' ' | '(' | ')'))
            .collect();
        Ok(match norm.trim_end_matches('_') {
            "psi1_2" | "psi12" => PsiSet::JetDegenerate { n: 2, r: 5 },
            "psi1_3" | "psi13" => PsiSet::JetDegenerate { n: 3, r: 5 },
            "psi1_4" | "psi14" => PsiSet::JetDegenerate { n: 4, r: 5 },
            "psi1_5" | "psi15" => PsiSet::JetDegenerate { n: 5, r: 4 },
            "psi2_3" | "psi23" => PsiSet::Psi2_3,
            "psi2_4" | "psi24" => PsiSet::Psi2_4,
            "psi2_5" | "psi25" => PsiSet::Psi2_5,
            "psi3_4" | "psi34" => PsiSet::Psi3_4,
            "psi3_5" | "psi35" => PsiSet::Psi3_5,
            "psi3_5_literal" => PsiSet::Psi3_5Literal,
            "psi4_5" | "psi45" => PsiSet::Psi4_5,
            _ => return Err(Error::UnknownSet(s.to_owned())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    #[test]
    fn ids_round_trip() {
        for n in 2..=5 {
            for s in PsiSet::conditions_for(n).unwrap() {
                assert_eq!(s.to_string().parse::<PsiSet>().unwrap(), s);
            }
        }
        assert_eq!("Psi*3(5)".parse::<PsiSet>().unwrap(), PsiSet::Psi3_5);
        assert!(matches!("psi9_9".parse::<PsiSet>(), Err(Error::UnknownSet(_))));
        assert!(matches!(
            PsiSet::conditions_for(6),
            Err(Error::UnsupportedDimension(6))
        ));
    }

    #[test]
    fn three_space_residual_depends_only_on_the_uw_span() {
        use crate::polyjet::MultiIndex;
        use crate::search::random_point;
        let d = 4;
        // a dense pseudo-random 5-jet in four variables
        let mut entries = Vec::new();
        let mut x = 0.37f64;
        for k in 1..=5usize {
            for mu in MultiIndex::all_of_degree(d, k) {
                x = (x * 9301.0 + 0.49297).fract();
                entries.push((mu, 2.0 * x - 1.0));
            }
        }
        let jet = Jet::from_coeffs(d, 5, vec![0.0; d], entries).unwrap();
        for set in [PsiSet::Psi3_5, PsiSet::Psi3_5Literal] {
            let prob = set.problem(&jet).unwrap();
            let pt = random_point(&prob, 7, 0);
            let (c, s) = 0.7f64.sin_cos();
            let mut turned = pt.clone();
            for k in 0..d {
                turned[1][k] = c * pt[1][k] - s * pt[2][k];
                turned[2][k] = s * pt[1][k] + c * pt[2][k];
            }
            let mut swapped = pt.clone();
            swapped.swap(1, 2);
            let r = prob.residual(&pt);
            let same = |q: &[Vec<f64>]| (prob.residual(q) - r).abs() <= 1e-12 * r.max(1.0);
            let invariant = same(&turned) && same(&swapped);
            assert_eq!(invariant, set == PsiSet::Psi3_5, "{set}");
            assert_eq!(prob.span_tail(), if set == PsiSet::Psi3_5 { 2 } else { 0 });
        }
    }

    #[test]
    fn literal_quartic_factors_through_h2uu() {
        // literal = a * (F D - 6 Q); compare against a * rederived-with-6
        let QuarticParts { a, b, c, p, q, f } = quartic_parts();
        let det = a.mul(&b).sub(&c.pow(2));
        let quad = b
            .mul(&p.pow(2))
            .sub(&c.mul(&p).mul(&q).scale_int(2))
            .add(&a.mul(&q.pow(2)));
        let six = a.mul(&f.mul(&det).sub(&quad.scale_int(6)));
        assert_eq!(
            quartic_literal().scalar_multiple_of(&six),
            Some(BigRational::from_integer(1.into()))
        );
        assert!(quartic_rederived().scalar_multiple_of(&six).is_none());
    }
}
