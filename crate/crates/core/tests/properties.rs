use num::{BigInt, BigRational, ToPrimitive, Zero};
use proptest::prelude::*;
use steep_core::conditions::{
    psi_membership, r_jet_degeneracy, restricted_hessian_eigenvalues, two_jet_oracle,
    DegeneracyStatus, PsiSet, Status,
};
use steep_core::polyjet::{jet_at, Jet, MultiIndex, Polynomial};
use steep_core::search::{minimize, random_point, Manifold, Mode, SearchConfig, SearchProblem};
use steep_core::formal::FormalPolynomial;

fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn dense_jet(n: usize, r: usize, values: &[f64]) -> Jet {
    let mut it = values.iter().cycle();
    let entries: Vec<(MultiIndex, f64)> = (1..=r)
        .flat_map(|k| MultiIndex::all_of_degree(n, k))
        .map(|mu| (mu, *it.next().unwrap()))
        .collect();
    Jet::from_coeffs(n, r, vec![0.0; n], entries).unwrap()
}

fn poly_strategy(n: usize) -> impl Strategy<Value = Polynomial> {
    let monos: Vec<MultiIndex> = (0..=5).flat_map(|k| MultiIndex::all_of_degree(n, k)).collect();
    let count = monos.len();
    prop::collection::vec((0..count, -5i64..=5, 1i64..=3), 1..12).prop_map(move |terms| {
        Polynomial::from_terms(n, terms.into_iter().map(|(i, a, b)| (monos[i].clone(), rat(a, b))))
            .unwrap()
    })
}

fn point_strategy(n: usize) -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec((-3i64..=3, 1i64..=4), n).prop_map(|v| v.into_iter().map(|(a, b)| rat(a, b)).collect())
}

fn quiet() -> SearchConfig {
    SearchConfig {
        starts: 64,
        ..SearchConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn forms_are_symmetric_and_multilinear(
        n in 1usize..=5,
        k in 1usize..=5,
        vals in prop::collection::vec(-2.0f64..2.0, 40),
        vecs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 6),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        swap in 0usize..5,
    ) {
        let j = dense_jet(n, 5, &vals);
        let vs: Vec<Vec<f64>> = vecs.iter().map(|v| v[..n].to_vec()).collect();
        let args: Vec<&[f64]> = vs[..k].iter().map(Vec::as_slice).collect();
        let base = j.multilinear(k, &args).unwrap();
        let scale = 1.0 + base.abs();
        let mut perm = args.clone();
        perm.swap(0, swap % k);
        prop_assert!((j.multilinear(k, &perm).unwrap() - base).abs() < 1e-10 * scale);
        // linear in the first slot
        let mix: Vec<f64> = vs[0].iter().zip(&vs[5]).map(|(x, y)| a * x + b * y).collect();
        let mut first = args.clone();
        first[0] = &mix;
        let lhs = j.multilinear(k, &first).unwrap();
        let mut other = args.clone();
        other[0] = &vs[5];
        let rhs = a * base + b * j.multilinear(k, &other).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs() + rhs.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The jet of a degree-five polynomial reproduces it exactly.
    #[test]
    fn taylor_expansion_is_exact((n, p, a) in (2usize..=4).prop_flat_map(|n| (Just(n), poly_strategy(n), point_strategy(n)))) {
        let j = jet_at(&p, &a, 5).unwrap();
        let mut t = Polynomial::constant(n, p.eval(&a).unwrap());
        let shifted: Vec<Polynomial> = (0..n)
            .map(|i| Polynomial::variable(n, i).unwrap().sub(&Polynomial::constant(n, a[i].clone())))
            .collect();
        for k in 1..=5 {
            for mu in MultiIndex::all_of_degree(n, k) {
                let d = j.deriv_exact(&mu).unwrap();
                if d.is_zero() {
                    continue;
                }
                let mut term = Polynomial::constant(n, d / BigRational::from_integer(mu.factorial()));
                for (i, &e) in mu.0.iter().enumerate() {
                    term = term.mul(&shifted[i].pow(e));
                }
                t = t.add(&term);
            }
        }
        prop_assert_eq!(t, p);
    }

    /// Each derivative matches a central difference of the next lower one.
    #[test]
    fn derivatives_match_finite_differences((n, p, a) in (2usize..=4).prop_flat_map(|n| (Just(n), poly_strategy(n), point_strategy(n)))) {
        let h = rat(1, 1000);
        let j = jet_at(&p, &a, 5).unwrap();
        let scale = 1.0f64.max(j.max_abs());
        for axis in 0..n {
            let mut ap = a.clone();
            let mut am = a.clone();
            ap[axis] += &h;
            am[axis] -= &h;
            let jp = jet_at(&p, &ap, 5).unwrap();
            let jm = jet_at(&p, &am, 5).unwrap();
            let value = |jet: &Jet, mu: &MultiIndex, at: &[BigRational]| -> f64 {
                if mu.degree() == 0 {
                    p.eval(at).unwrap().to_f64().unwrap()
                } else {
                    jet.deriv(mu)
                }
            };
            for k in 0..5 {
                for mu in MultiIndex::all_of_degree(n, k) {
                    let mut up = mu.clone();
                    up.0[axis] += 1;
                    let fd = (value(&jp, &mu, &ap) - value(&jm, &mu, &am)) / 2e-3;
                    prop_assert!((fd - j.deriv(&up)).abs() <= 1e-5 * scale, "{:?}: {} vs {}", up, fd, j.deriv(&up));
                }
            }
        }
    }

    /// Analytic residual gradient against central differences, off the manifold too.
    #[test]
    fn residual_gradient_matches_finite_differences(
        vals in prop::collection::vec(-1.0f64..1.0, 60),
        pt in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 2),
    ) {
        let j = dense_jet(4, 5, &vals);
        let eqs = PsiSet::Psi2_5.equations(4);
        let prob = SearchProblem::new(j, Manifold::frame(4, 2), vec![], eqs).unwrap();
        let g = prob.residual_gradient(&pt);
        let h = 1e-6;
        for f in 0..2 {
            for c in 0..4 {
                let mut a = pt.clone();
                let mut b = pt.clone();
                a[f][c] += h;
                b[f][c] -= h;
                let fd = (prob.residual(&a) - prob.residual(&b)) / (2.0 * h);
                prop_assert!((fd - g[f][c]).abs() <= 1e-5 * (1.0 + fd.abs()), "{} vs {}", fd, g[f][c]);
            }
        }
    }

    /// Retraction lands on the Stiefel-type manifold and fixes its points.
    #[test]
    fn retraction_is_a_projection(pt in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 3)) {
        let m = Manifold::frame(5, 3);
        let mut x = pt.clone();
        prop_assume!(m.retract(&mut x).is_some());
        prop_assert!(m.constraint_violation(&x) < 1e-12);
        let mut y = x.clone();
        m.retract(&mut y).unwrap();
        for (a, b) in x.iter().flatten().zip(y.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, max_global_rejects: 10_000, ..ProptestConfig::default() })]

    /// Definiteness of the restricted Hessian decides two-jet degeneracy.
    #[test]
    fn hessian_oracle_agrees_with_search(
        n in 2usize..=4,
        grad in prop::collection::vec(-3i64..=3, 4),
        quad in prop::collection::vec(-3i64..=3, 10),
    ) {
        let mut terms = Vec::new();
        for i in 0..n {
            terms.push((MultiIndex::unit(n, i), rat(grad[i], 1)));
        }
        let mut q = quad.iter();
        for i in 0..n {
            for k in i..n {
                let mut mu = MultiIndex::unit(n, i);
                mu.0[k] += 1;
                terms.push((mu, rat(*q.next().unwrap(), 2)));
            }
        }
        let p = Polynomial::from_terms(n, terms).unwrap();
        prop_assume!(grad[..n].iter().any(|&g| g != 0));
        let j = jet_at(&p, &vec![BigRational::zero(); n], 2).unwrap();
        let ev = restricted_hessian_eigenvalues(&j, 1e-10).unwrap();
        let top = ev.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        // stay away from the boundary where neither side can decide
        prop_assume!(ev.iter().all(|e| e.abs() > 0.05 * top.max(1e-9)));
        let cfg = quiet();
        let oracle = two_jet_oracle(&j, &cfg).unwrap();
        let scan = r_jet_degeneracy(&j, 2, &cfg).unwrap();
        prop_assert!(scan.status != DegeneracyStatus::Unknown);
        prop_assert_eq!(oracle, scan.status == DegeneracyStatus::NonDegenerate);
    }
}

/// Direct two-plane residuals with the fifth-order equation, in full space.
fn plane_residuals(j: &Jet, v: &[f64], u: &[f64]) -> Vec<f64> {
    let h = |k: usize, a: &[&[f64]]| j.multilinear(k, a).unwrap();
    let a = h(2, &[u, u]);
    let p = h(3, &[v, v, u]);
    vec![
        h(2, &[v, v]),
        h(3, &[v, v, v]),
        h(2, &[u, v]),
        a * h(4, &[v, v, v, v]) - 3.0 * p * p,
        15.0 * p * p * h(3, &[u, u, v]) + h(5, &[v, v, v, v, v]) * a * a
            - 10.0 * h(4, &[v, v, v, u]) * p * a,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Found two-plane witnesses stay solutions under u -> u + s v.
    #[test]
    fn two_plane_witnesses_are_shear_invariant(c in 1i64..=4, e in -3i64..=3, s in -2.0f64..2.0) {
        // v = e1, u = e2 solves the system; the search may find any solution
        let mono = |a: &[u32]| MultiIndex(a.to_vec());
        let p = Polynomial::from_terms(4, [
            (mono(&[0, 0, 0, 1]), rat(1, 1)),
            (mono(&[0, 2, 0, 0]), rat(1, 2)),
            (mono(&[0, 0, 2, 0]), rat(-1, 2)),
            (mono(&[2, 1, 0, 0]), rat(c, 1)),
            (mono(&[4, 0, 0, 0]), rat(c * c, 2)),
            (mono(&[1, 2, 0, 0]), rat(e, 1)),
            (mono(&[5, 0, 0, 0]), rat(-c * c * e, 1)),
        ]).unwrap();
        let j = jet_at(&p, &vec![BigRational::zero(); 4], 5).unwrap();
        let rec = psi_membership(&j, PsiSet::Psi2_4, &quiet()).unwrap();
        prop_assert_eq!(rec.status, Status::Violated);
        let w = rec.witness.unwrap();
        let (v, u) = (&w[0].vector, &w[1].vector);
        let scale = j.max_abs();
        let before = plane_residuals(&j, v, u);
        let sheared: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + s * b).collect();
        let after = plane_residuals(&j, v, &sheared);
        for (x, y) in before.iter().zip(&after) {
            prop_assert!(x.abs() < 1e-3 * scale.powi(3));
            prop_assert!(y.abs() < 1e-3 * scale.powi(3), "{:?} -> {:?}", before, after);
        }
    }
}

#[test]
fn searches_are_deterministic_across_thread_counts() {
    let p = steep_core::polyjet::parse_polynomial("I2^5/5 + I1^3/3 - I1^2/2 + I1*I2/2 - I3^2/2 - I4", 4).unwrap();
    let j = jet_at(&p, &vec![BigRational::zero(); 4], 5).unwrap();
    let cfg = SearchConfig {
        mode: Mode::Heuristic,
        ..SearchConfig::default()
    };
    let run = || serde_json::to_string(&steep_core::conditions::check_steepness(&j, &cfg).unwrap()).unwrap();
    let a = run();
    let b = run();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    assert_eq!(a, b);
    assert_eq!(a, single);
}

#[test]
fn certified_bounds_survive_ten_times_the_starts() {
    let mut checked = 0;
    for seed in 0..6u64 {
        let entries: Vec<(MultiIndex, f64)> = (2..=5)
            .flat_map(|k| MultiIndex::all_of_degree(3, k))
            .enumerate()
            .map(|(i, mu)| (mu, (((i as u64 * 7919 + seed * 104_729) % 997) as f64 / 498.5) - 1.0))
            .chain([(MultiIndex::unit(3, 2), 1.0)])
            .collect();
        let j = Jet::from_coeffs(3, 5, vec![0.0; 3], entries).unwrap();
        let cfg = SearchConfig::default();
        for r in 2..=3 {
            let res = r_jet_degeneracy(&j, r, &cfg).unwrap();
            let Some(bound) = res.certified_lower_bound else { continue };
            let red = steep_core::conditions::Reduction::new(&j, cfg.gradient_tol).unwrap();
            let eqs = (2..=r).map(|k| FormalPolynomial::form(k, vec![1; k])).collect();
            let prob = SearchProblem::new(red.jet.clone(), Manifold::sphere(2), vec![], eqs).unwrap();
            let heavy = SearchConfig {
                starts: cfg.starts * 10,
                mode: Mode::Heuristic,
                ..cfg
            };
            let out = minimize(&prob, &heavy);
            assert!(out.best_value >= bound, "seed {seed} r {r}: {} < {bound}", out.best_value);
            // a fresh random point never beats the bound either
            assert!(prob.residual(&random_point(&prob, 99, 0)) >= bound);
            checked += 1;
        }
    }
    assert!(checked >= 3, "only {checked} certificates");
}

#[test]
fn degeneracy_is_monotone_in_the_order() {
    let p = steep_core::polyjet::parse_polynomial(
        "I4^4/4 + I5^4/4 + I3^3/3 + I3*I2^2/2 - I1^2/2 - I3^2/2 - I5^2/2 + I3*I4 + I2",
        5,
    )
    .unwrap();
    let j = jet_at(&p, &vec![BigRational::zero(); 5], 5).unwrap();
    let cfg = quiet();
    let statuses: Vec<DegeneracyStatus> =
        (1..=4).map(|r| r_jet_degeneracy(&j, r, &cfg).unwrap().status).collect();
    // once non-degenerate, always non-degenerate
    let first_nd = statuses.iter().position(|s| *s == DegeneracyStatus::NonDegenerate).unwrap();
    assert!(statuses[first_nd..].iter().all(|s| *s == DegeneracyStatus::NonDegenerate));
    assert!(statuses[..first_nd].iter().all(|s| *s == DegeneracyStatus::Degenerate));
}

#[test]
fn certified_bounds_never_exceed_a_dense_scan() {
    use rand::{Rng, SeedableRng};
    let cfg = SearchConfig::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for case in 0..60 {
        let entries: Vec<(MultiIndex, f64)> = (2..=5)
            .flat_map(|k| MultiIndex::all_of_degree(3, k))
            .map(|mu| (mu, rng.random_range(-1.0..1.0)))
            .chain([(MultiIndex::unit(3, 2), 1.0)])
            .collect();
        let j = Jet::from_coeffs(3, 5, vec![0.0; 3], entries).unwrap();
        for r in 2..=3 {
            let Some(bound) = r_jet_degeneracy(&j, r, &cfg).unwrap().certified_lower_bound else { continue };
            let red = steep_core::conditions::Reduction::new(&j, cfg.gradient_tol).unwrap();
            let eqs = (2..=r).map(|k| FormalPolynomial::form(k, vec![1; k])).collect();
            let prob = SearchProblem::new(red.jet, Manifold::sphere(2), vec![], eqs).unwrap();
            let scan = (0..20_000)
                .map(|i| {
                    let t = i as f64 * std::f64::consts::PI / 20_000.0;
                    prob.residual(&[vec![t.cos(), t.sin()]])
                })
                .fold(f64::INFINITY, f64::min);
            assert!(scan >= bound, "case {case} order {r}: scan {scan} below bound {bound}");
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

#[test]
fn flat_degenerate_valleys_form_one_family() {
    // v = e2 is a high-multiplicity order-3 zero; nearby hits must merge
    let p = steep_core::polyjet::parse_polynomial("I2^5/5 + I1^3/3 - I1^2/2 + I1*I2/2 - I3^2/2 - I4", 4).unwrap();
    let j = jet_at(&p, &vec![BigRational::zero(); 4], 5).unwrap();
    let d = r_jet_degeneracy(&j, 3, &SearchConfig::default()).unwrap();
    assert_eq!(d.status, DegeneracyStatus::Degenerate);
    assert_eq!(d.witnesses.len(), 1, "{:?}", d.witnesses);
    assert!(d.witnesses[0][1].abs() > 0.999);
}
