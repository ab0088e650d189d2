use num::{BigRational, Zero};
use steep_core::conditions::{check_steepness, r_jet_degeneracy, DegeneracyStatus, Status, Verdict};
use steep_core::polyjet::{jet_at, parse_polynomial, Jet};
use steep_core::search::SearchConfig;

const EXAMPLE1: &str = "I2^5/5 + I1^3/3 - I1^2/2 + I1*I2/2 - I3^2/2 - I4";
const EXAMPLE2: &str =
    "I4^4/4 + I5^4/4 + I3^3/3 + I3*I2^2/2 - I1^2/2 - I3^2/2 - I5^2/2 + I3*I4 + I2";

fn jet(poly: &str, n: usize) -> Jet {
    let p = parse_polynomial(poly, n).unwrap();
    jet_at(&p, &vec![BigRational::zero(); n], 5).unwrap()
}

#[test]
fn four_variable_example_is_certified() {
    let rep = check_steepness(&jet(EXAMPLE1, 4), &SearchConfig::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::SteepCertified, "{rep:#?}");
    assert!(rep.conditions.iter().all(|c| c.certified_lower_bound.is_some()));
}

// the full five-variable check runs in the acceptance target
#[test]
fn five_variable_example_has_one_degenerate_line() {
    let j = jet(EXAMPLE2, 5);
    let cfg = SearchConfig::default();
    let d3 = r_jet_degeneracy(&j, 3, &cfg).unwrap();
    assert_eq!(d3.status, DegeneracyStatus::Degenerate);
    assert_eq!(d3.witnesses.len(), 1);
    assert!(d3.witnesses[0][3].abs() > 0.999);
    let d4 = r_jet_degeneracy(&j, 4, &cfg).unwrap();
    assert_eq!(d4.status, DegeneracyStatus::NonDegenerate);
    assert!(d4.certified_lower_bound.unwrap() >= cfg.margin_tol);
}

#[test]
fn weakly_convex_limit_is_not_certified() {
    let rep = check_steepness(&jet("(3/2)*(I1^4 + I2^4)/24 + I3", 3), &SearchConfig::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::NotCertified);
    let c2 = rep.conditions.iter().find(|c| c.id == "n3.cond2").unwrap();
    assert_eq!(c2.status, Status::Violated);
}

#[test]
fn vanishing_gradient_is_reported() {
    let rep = check_steepness(&jet("I1^2 + I2^2", 2), &SearchConfig::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::DegenerateGradient);
}
