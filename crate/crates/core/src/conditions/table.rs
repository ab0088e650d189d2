use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexRow {
    pub m: usize,
    pub alpha_bar: i64,
    pub beta: i64,
    /// `β₁ ≤ 3`: the curve construction puts every three-jet-degenerate
    /// point in the bad set, so the conditions say nothing there.
    pub uninformative: bool,
}

/// Steepness-index bounds `ᾱ_m`, curve degrees `β_m = (ᾱ_m+3)/2` and the
/// codimension lower bound of the bad set, for `n` variables and order `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexTable {
    pub n: usize,
    pub r: usize,
    pub rows: Vec<IndexRow>,
    pub codim_bound: i64,
}

/// `n(n−2)/2` for even `n`, `(n−1)²/2` for odd `n`.
fn dimension_offset(n: i64) -> i64 {
    if n % 2 == 0 {
        n * (n - 2) / 2
    } else {
        (n - 1) * (n - 1) / 2
    }
}

pub fn alpha_bar(n: usize, r: usize, m: usize) -> i64 {
    let (n, r, m) = (n as i64, r as i64, m as i64);
    (2 * r - 3 - dimension_offset(n) + 2 * m * (n - m - 1)).max(1)
}

pub fn beta(n: usize, r: usize, m: usize) -> i64 {
    (alpha_bar(n, r, m) + 3) / 2
}

pub fn index_table(n: usize, r: usize) -> Result<IndexTable> {
    if n < 2 || r < 2 {
        return Err(Error::InvalidSystem {
            n,
            m: 0,
            r,
            reason: "index table needs n >= 2 and r >= 2".into(),
        });
    }
    let rows = (1..n)
        .map(|m| {
            let a = alpha_bar(n, r, m);
            let b = (a + 3) / 2;
            IndexRow {
                m,
                alpha_bar: a,
                beta: b,
                uninformative: m == 1 && b <= 3,
            }
        })
        .collect();
    // half the dimension offset, always an integer
    let codim_bound = (r as i64 - 1 - dimension_offset(n as i64) / 2).max(0);
    Ok(IndexTable {
        n,
        r,
        rows,
        codim_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn betas_for_low_dimensions() {
        let b = |n| -> Vec<i64> {
            index_table(n, 5).unwrap().rows.iter().map(|r| r.beta).collect()
        };
        assert_eq!(b(2), vec![5]);
        assert_eq!(b(3), vec![5, 4]);
        assert_eq!(b(4), vec![5, 5, 3]);
        assert_eq!(b(5), vec![4, 5, 4, 2]);
        let six = index_table(6, 5).unwrap();
        assert_eq!(six.rows[0].alpha_bar, 3);
        assert_eq!(six.rows[0].beta, 3);
        assert!(six.rows[0].uninformative);
        assert_eq!(index_table(4, 5).unwrap().codim_bound, 2);
    }

    #[test]
    fn alpha_is_odd_and_positive() {
        for n in 2..12 {
            for r in 2..12 {
                for row in index_table(n, r).unwrap().rows {
                    assert!(row.alpha_bar >= 1 && row.alpha_bar % 2 == 1);
                    assert_eq!(2 * row.beta - 3, row.alpha_bar);
                }
            }
        }
    }
}
