//! Polynomials, jets and multilinear forms.

mod jet;
mod parse;
mod poly;

pub use jet::{jet_at, Jet, JetFile, JetTerm};
pub use parse::parse_polynomial;
pub use poly::{MultiIndex, Polynomial};

/// Parses a point given as comma-separated decimals or rationals, e.g. `"0,1/2,-0.25"`.
pub fn parse_point(text: &str) -> crate::Result<Vec<num::BigRational>> {
    text.split(',')
        .map(|part| {
            let p = parse_polynomial(part.trim(), 0)?;
            if p.num_terms() > 1 || p.degree().unwrap_or(0) > 0 {
                return Err(crate::Error::Syntax {
                    offset: 0,
                    message: format!("coordinate {part:?} is not a number"),
                });
            }
            let c = p.terms().next().map(|(_, c)| c.clone()).unwrap_or_default();
            Ok(c)
        })
        .collect()
}
