//! The worked examples and golden systems, as a regression matrix.

use num::BigRational;
use serde::Serialize;
use steep_core::conditions::{
    check_steepness, psi2_3_direct_residuals, r_jet_degeneracy, rank_deficient, DegeneracyStatus,
    Status, Verdict,
};
use steep_core::generator::{build_xi, compare_with_golden, golden_system, CurveValues};
use steep_core::polyjet::{jet_at, parse_polynomial, Jet};
use steep_core::search::SearchConfig;

pub const EXAMPLE1: &str = "I2^5/5 + I1^3/3 - I1^2/2 + I1*I2/2 - I3^2/2 - I4";
pub const EXAMPLE2: &str =
    "I4^4/4 + I5^4/4 + I3^3/3 + I3*I2^2/2 - I1^2/2 - I3^2/2 - I5^2/2 + I3*I4 + I2";
/// Limit of the three-variable sequence below: weakly convex, not steep-certifiable.
pub const EXAMPLE3_LIMIT: &str = "(3/2)*(I1^4 + I2^4)/24 + I3";

/// Member `k` of the three-variable sequence converging to [`EXAMPLE3_LIMIT`].
pub fn example3(k: u64) -> String {
    format!(
        "(3/2)*(I1^4 + I2^4)/24 - I3^4/{} - I2*I1^2/{} + I2^2/{} + I3",
        24 * k,
        2 * k,
        2 * k * k
    )
}

pub const CASES: [&str; 4] = ["example1", "example2", "example3", "golden"];

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub case: String,
    pub pass: bool,
    pub lines: Vec<String>,
}

fn origin(n: usize) -> Vec<BigRational> {
    vec![BigRational::from_integer(0.into()); n]
}

pub fn jet_of(poly: &str, n: usize) -> Jet {
    let p = parse_polynomial(poly, n).expect("built-in polynomial parses");
    jet_at(&p, &origin(n), 5).expect("built-in jet")
}

fn close_to_line(w: &[f64], target: &[f64], tol: f64) -> bool {
    let d: f64 = w.iter().zip(target).map(|(a, b)| a * b).sum();
    (1.0 - d.abs()) < tol
}

fn steep_case(name: &str, poly: &str, n: usize, cfg: &SearchConfig) -> CaseResult {
    let t = std::time::Instant::now();
    let rep = check_steepness(&jet_of(poly, n), cfg);
    let mut lines = Vec::new();
    let pass = match rep {
        Ok(rep) => {
            for c in &rep.conditions {
                lines.push(format!(
                    "{}: {:?} (best residual {:.3e}, lower bound {})",
                    c.id,
                    c.status,
                    c.best_residual,
                    c.certified_lower_bound.map_or("-".into(), |b| format!("{b:.3e}"))
                ));
            }
            lines.push(format!("verdict {:?} in {:.1?}", rep.verdict, t.elapsed()));
            rep.verdict == Verdict::SteepCertified
        }
        Err(e) => {
            lines.push(format!("error: {e}"));
            false
        }
    };
    CaseResult {
        case: name.into(),
        pass,
        lines,
    }
}

fn example1(cfg: &SearchConfig) -> CaseResult {
    let mut res = steep_case("example1", EXAMPLE1, 4, cfg);
    let j = jet_of(EXAMPLE1, 4);
    match r_jet_degeneracy(&j, 3, cfg) {
        Ok(d) => {
            let ok = d.status == DegeneracyStatus::Degenerate
                && d.witnesses.len() == 1
                && close_to_line(&d.witnesses[0], &[0.0, 1.0, 0.0, 0.0], cfg.cluster_tol);
            res.lines.push(format!("order-3 witnesses {:?}", d.witnesses));
            res.pass &= ok;
        }
        Err(e) => {
            res.lines.push(format!("order-3 scan error: {e}"));
            res.pass = false;
        }
    }
    res
}

fn example2(cfg: &SearchConfig) -> CaseResult {
    let mut res = steep_case("example2", EXAMPLE2, 5, cfg);
    let j = jet_of(EXAMPLE2, 5);
    match r_jet_degeneracy(&j, 3, cfg) {
        Ok(d) => {
            let ok = d.status == DegeneracyStatus::Degenerate
                && d.witnesses.len() == 1
                && close_to_line(&d.witnesses[0], &[0.0, 0.0, 0.0, 1.0, 0.0], cfg.cluster_tol);
            res.lines.push(format!("order-3 witnesses {:?}", d.witnesses));
            res.pass &= ok;
        }
        Err(e) => {
            res.lines.push(format!("order-3 scan error: {e}"));
            res.pass = false;
        }
    }
    match r_jet_degeneracy(&j, 4, cfg) {
        Ok(d) => {
            res.lines.push(format!("order-4 scan {:?}", d.status));
            res.pass &= d.status == DegeneracyStatus::NonDegenerate;
        }
        Err(e) => {
            res.lines.push(format!("order-4 scan error: {e}"));
            res.pass = false;
        }
    }
    res
}

/// Residuals of the three-variable two-plane system for member `k` at the
/// prescribed witness, plus the largest jet entry used as the scale.
pub fn example3_residuals(k: u64) -> (Vec<f64>, f64) {
    let j = jet_of(&example3(k), 3);
    let kf = k as f64;
    let r = psi2_3_direct_residuals(&j, &[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], kf / 2.0, kf * kf / 2.0)
        .expect("three variables");
    (r, j.max_abs().max(1.0))
}

/// The limit function's check: the two-plane condition must be violated by
/// a full-rank pair in the `(e₁, e₂)` plane.
pub fn example3_limit(cfg: &SearchConfig) -> (bool, String) {
    let j = jet_of(EXAMPLE3_LIMIT, 3);
    let rep = match check_steepness(&j, cfg) {
        Ok(r) => r,
        Err(e) => return (false, format!("error: {e}")),
    };
    let Some(c) = rep.conditions.iter().find(|c| c.id == "n3.cond2") else {
        return (false, "condition 2 missing".into());
    };
    let Some(w) = &c.witness else {
        return (false, format!("verdict {:?}, condition 2 {:?} without witness", rep.verdict, c.status));
    };
    let vs: Vec<Vec<f64>> = w.iter().map(|nv| nv.vector.clone()).collect();
    let in_plane = vs.iter().all(|v| v[2].abs() < 1e-6);
    let full_rank = !rank_deficient(&vs, cfg.rank_tol);
    let ok = rep.verdict == Verdict::NotCertified && c.status == Status::Violated && in_plane && full_rank;
    (
        ok,
        format!("verdict {:?}, condition 2 {:?}, witness {:?}", rep.verdict, c.status, w),
    )
}

fn example3_case(cfg: &SearchConfig) -> CaseResult {
    let mut lines = Vec::new();
    let mut pass = true;
    let sys = build_xi(3, 5, 2).expect("valid triple");
    for k in [1u64, 10, 100] {
        let (r, scale) = example3_residuals(k);
        let worst = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let ok = worst < 1e-10 * scale;
        pass &= ok;
        let j = jet_of(&example3(k), 3);
        let mut b = CurveValues::new();
        b.insert((2, 2), k as f64 / 2.0);
        b.insert((2, 3), (k * k) as f64 / 2.0);
        let xi = sys
            .instantiate(&j, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], &b)
            .expect("shapes match");
        lines.push(format!(
            "k={k}: direct residuals {r:?} (max {worst:.3e}), generated system residuals {xi:?}"
        ));
    }
    if !pass {
        lines.push(
            "the prescribed witness leaves 6a*h3[u,v,v] + h4[v^4] = -3/2 and \
             6b*h2[u,u] + 6a*h3[u,u,v] + h4[v^3,u] = 3 for every k"
                .into(),
        );
    }
    let (ok, line) = example3_limit(cfg);
    pass &= ok;
    lines.push(format!("limit function: {line}"));
    CaseResult {
        case: "example3".into(),
        pass,
        lines,
    }
}

fn golden_case() -> CaseResult {
    let mut lines = Vec::new();
    let mut pass = true;
    for (n, m) in [(2, 1), (3, 2), (4, 2), (5, 2), (4, 3), (5, 3), (5, 4)] {
        let sys = build_xi(n, 5, m).expect("valid triple");
        let g = golden_system(n, m, false).expect("transcribed");
        let cmp = compare_with_golden(&sys, &g);
        pass &= cmp.matches;
        let mut line = format!("{}: {}", cmp.label, if cmp.matches { "equal" } else { "DIFFERENT" });
        if !cmp.matches {
            line.push_str(&format!(" at (component, power) {:?}", cmp.mismatched));
            if let Some(fixed) = golden_system(n, m, true) {
                if compare_with_golden(&sys, &fixed).matches {
                    line.push_str(&format!("; equal to \"{}\"", fixed.label));
                }
            }
        }
        lines.push(line);
    }
    CaseResult {
        case: "golden".into(),
        pass,
        lines,
    }
}

pub fn run_case(case: &str, cfg: &SearchConfig) -> Option<CaseResult> {
    Some(match case {
        "example1" => example1(cfg),
        "example2" => example2(cfg),
        "example3" => example3_case(cfg),
        "golden" => golden_case(),
        _ => return None,
    })
}
