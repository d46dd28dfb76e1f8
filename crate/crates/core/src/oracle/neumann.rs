//! Truncated Neumann series `sum_{k=0}^{T} M^k 1`.

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

fn validate(m: &SquareMatrix) -> Result<f64> {
    let mut max_sum = 0.0f64;
    for i in 0..m.dim() {
        if m.row(i).iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::param("m", format!("row {i} has a negative entry")));
        }
        let s: f64 = m.row(i).iter().sum();
        if !(s < 1.0) {
            return Err(Error::NotSubstochastic { row: i, sum: s });
        }
        max_sum = max_sum.max(s);
    }
    Ok(max_sum)
}

/// `sum_{k=0}^{terms} M^k 1` by repeated matrix-vector products.
pub fn neumann_measure(m: &SquareMatrix, terms: usize) -> Result<Vec<f64>> {
    Ok(neumann_partial_sums(m, terms)?.pop().expect("at least one partial sum"))
}

/// Every partial sum `S_0 = 1, S_1, ..., S_terms`.
pub fn neumann_partial_sums(m: &SquareMatrix, terms: usize) -> Result<Vec<Vec<f64>>> {
    if terms == 0 {
        return Err(Error::param("terms", "must be at least 1"));
    }
    validate(m)?;
    let n = m.dim();
    let mut power = vec![1.0; n];
    let mut sum = power.clone();
    let mut out = Vec::with_capacity(terms + 1);
    out.push(sum.clone());
    for _ in 0..terms {
        power = m.mul_vec(&power);
        for (s, p) in sum.iter_mut().zip(&power) {
            *s += p;
        }
        out.push(sum.clone());
    }
    Ok(out)
}

/// Bound on `||sum_{k > terms} M^k 1||_inf` from the largest row sum.
pub fn neumann_tail_bound(m: &SquareMatrix, terms: usize) -> Result<f64> {
    let rho = validate(m)?;
    Ok(rho.powi(terms as i32 + 1) / (1.0 - rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_gives_ones() {
        let m = SquareMatrix::zeros(4);
        for t in [1, 5, 50] {
            assert_eq!(neumann_measure(&m, t).unwrap(), vec![1.0; 4]);
        }
    }

    #[test]
    fn first_order_truncation_adds_row_sums() {
        let m = SquareMatrix::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.05]]).unwrap();
        let s = neumann_measure(&m, 1).unwrap();
        assert!((s[0] - 1.3).abs() < 1e-15);
        assert!((s[1] - 1.35).abs() < 1e-15);
    }

    #[test]
    fn scalar_geometric_tail() {
        let m = SquareMatrix::from_rows(&[vec![0.5]]).unwrap();
        let s = neumann_measure(&m, 60).unwrap()[0];
        assert!((s - 2.0).abs() <= neumann_tail_bound(&m, 60).unwrap() + 1e-15);
    }

    #[test]
    fn rejects_invalid_input() {
        let m = SquareMatrix::from_rows(&[vec![0.5, 0.5], vec![0.0, 0.1]]).unwrap();
        assert!(matches!(neumann_measure(&m, 3), Err(Error::NotSubstochastic { row: 0, .. })));
        assert!(neumann_measure(&SquareMatrix::zeros(2), 0).is_err());
        let m = SquareMatrix::from_rows(&[vec![-0.1]]).unwrap();
        assert!(neumann_measure(&m, 2).is_err());
    }
}
