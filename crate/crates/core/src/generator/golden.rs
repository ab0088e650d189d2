//! Hand-transcribed compact systems, for comparison with [`build_xi`].
//!
//! Each system is a list of covector expressions `Π(expr[·])`, one per
//! curve power, each standing for `m` equations (the components along
//! `A¹…Aᵐ`). Vectors are named by the usual identifications: `u = A²`,
//! `w = A³`, `v = A¹ + Σ b_i1 A^i`, and the Greek parameters are curve
//! coefficients.
//!
//! [`build_xi`]: super::build_xi

use crate::formal::{expand_form, FormalPolynomial, VecExpr};

use super::FormalSystem;

#[derive(Debug, Clone)]
pub struct GoldenSystem {
    pub n: usize,
    pub m: usize,
    pub label: &'static str,
    /// `equations[q - 1][j - 1]`: component `j` of the `t^q` covector.
    pub equations: Vec<Vec<FormalPolynomial>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenComparison {
    pub label: &'static str,
    pub matches: bool,
    /// `(component, power)` of every equation that is not a nonzero scalar
    /// multiple of its transcribed counterpart.
    pub mismatched: Vec<(usize, usize)>,
}

/// `c · h[args…, ·]`
type Piece = (FormalPolynomial, Vec<VecExpr>);

fn pi(pieces: &[Piece], m: usize) -> Vec<FormalPolynomial> {
    (1..=m)
        .map(|j| {
            pieces.iter().fold(FormalPolynomial::zero(), |acc, (c, args)| {
                let mut a = args.clone();
                a.push(VecExpr::basis(j));
                acc.add(&c.mul(&expand_form(&a)))
            })
        })
        .collect()
}

fn v(m: usize) -> VecExpr {
    (2..=m).fold(VecExpr::basis(1), |acc, i| acc.plus(i, b(i, 1)))
}

fn b(i: usize, j: usize) -> FormalPolynomial {
    FormalPolynomial::curve(i, j)
}

fn int(c: i64) -> FormalPolynomial {
    FormalPolynomial::int(c)
}

/// `x·A² + y·A³`
fn uw(x: FormalPolynomial, y: FormalPolynomial) -> VecExpr {
    VecExpr(vec![(2, x), (3, y)])
}

/// The hand-derived reference system for `(n, m)` at `r = 5`,
/// transcribed literally. With `corrected`, the one transcription known to
/// carry a dropped factor (`n = 5, m = 3`, quadratic order) is repaired.
pub fn golden_system(n: usize, m: usize, corrected: bool) -> Option<GoldenSystem> {
    let u = VecExpr::basis(2);
    let vv = v(m);
    let one = || int(1);
    let (label, per_power): (&'static str, Vec<Vec<Piece>>) = match (n, m) {
        (2, 1) => (
            "n=2 m=1: h2..h5 of v",
            (1..=4).map(|k| vec![(one(), vec![vv.clone(); k])]).collect(),
        ),
        (3, 2) | (4, 2) | (5, 2) => {
            let (alpha, beta, gamma) = (b(2, 2), b(2, 3), b(2, 4));
            let mut eqs = vec![
                vec![(one(), vec![vv.clone()])],
                vec![
                    (alpha.scale_int(2), vec![u.clone()]),
                    (one(), vec![vv.clone(), vv.clone()]),
                ],
                vec![
                    (beta.scale_int(6), vec![u.clone()]),
                    (alpha.scale_int(6), vec![u.clone(), vv.clone()]),
                    (one(), vec![vv.clone(); 3]),
                ],
            ];
            if n > 3 {
                eqs.push(vec![
                    (gamma.scale_int(24), vec![u.clone()]),
                    (beta.scale_int(24), vec![vv.clone(), u.clone()]),
                    (alpha.pow(2).scale_int(12), vec![u.clone(), u.clone()]),
                    (alpha.scale_int(12), vec![vv.clone(), vv.clone(), u.clone()]),
                    (one(), vec![vv.clone(); 4]),
                ]);
            }
            let label = match n {
                3 => "n=3 m=2",
                4 => "n=4 m=2",
                _ => "n=5 m=2",
            };
            (label, eqs)
        }
        (4, 3) => {
            let (alpha, beta) = (b(2, 2), b(3, 2));
            (
                "n=4 m=3",
                vec![
                    vec![(one(), vec![vv.clone()])],
                    vec![
                        (int(2), vec![uw(alpha, beta)]),
                        (one(), vec![vv.clone(), vv.clone()]),
                    ],
                ],
            )
        }
        (5, 3) => {
            let (alpha, beta, gamma, delta) = (b(2, 2), b(3, 2), b(2, 3), b(3, 3));
            let quad = if corrected { 2 } else { 1 };
            (
                if corrected {
                    "n=5 m=3 (quadratic order with factor 2)"
                } else {
                    "n=5 m=3"
                },
                vec![
                    vec![(one(), vec![vv.clone()])],
                    vec![
                        (int(quad), vec![uw(alpha.clone(), beta.clone())]),
                        (one(), vec![vv.clone(), vv.clone()]),
                    ],
                    vec![
                        (int(6), vec![uw(gamma, delta)]),
                        (int(6), vec![uw(alpha, beta), vv.clone()]),
                        (one(), vec![vv.clone(); 3]),
                    ],
                ],
            )
        }
        (5, 4) => ("n=5 m=4", vec![vec![(one(), vec![vv.clone()])]]),
        _ => return None,
    };
    Some(GoldenSystem {
        n,
        m,
        label,
        equations: per_power.iter().map(|p| pi(p, m)).collect(),
    })
}

/// Equation-by-equation comparison up to a nonzero rational scalar.
pub fn compare_with_golden(sys: &FormalSystem, golden: &GoldenSystem) -> GoldenComparison {
    let mut mismatched = Vec::new();
    let shape_ok = sys.n == golden.n
        && sys.m == golden.m
        && sys.equations.len() == golden.equations.iter().map(Vec::len).sum::<usize>();
    for e in &sys.equations {
        let expected = golden
            .equations
            .get(e.power - 1)
            .and_then(|row| row.get(e.component - 1));
        let ok = expected.is_some_and(|g| e.poly.scalar_multiple_of(g).is_some());
        if !ok {
            mismatched.push((e.component, e.power));
        }
    }
    GoldenComparison {
        label: golden.label,
        matches: shape_ok && mismatched.is_empty(),
        mismatched,
    }
}
