//! Upstreamness and downstreamness: exact solves, Fally's recursions and
//! the rank-1 estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, solve_leontief, LuFactors, SquareMatrix};
use crate::model::{IoTable, SubstochasticPair};

/// Residual bound for `(I - M) x = 1`.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;
/// Max-norm step size at which the Fally iterations stop.
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureKind {
    U1,
    D1,
    U2,
    D2,
    UTilde,
    DTilde,
}

impl MeasureKind {
    pub fn label(self) -> &'static str {
        match self {
            MeasureKind::U1 => "U1",
            MeasureKind::D1 => "D1",
            MeasureKind::U2 => "U2",
            MeasureKind::D2 => "D2",
            MeasureKind::UTilde => "U_tilde",
            MeasureKind::DTilde => "D_tilde",
        }
    }
}

impl std::str::FromStr for MeasureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "u1" => MeasureKind::U1,
            "d1" => MeasureKind::D1,
            "u2" => MeasureKind::U2,
            "d2" => MeasureKind::D2,
            "u_tilde" | "utilde" => MeasureKind::UTilde,
            "d_tilde" | "dtilde" => MeasureKind::DTilde,
            other => return Err(format!("unknown measure `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureVector {
    pub kind: MeasureKind,
    pub values: Vec<f64>,
}

impl MeasureVector {
    fn new(kind: MeasureKind, values: Vec<f64>) -> Self {
        MeasureVector { kind, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `U1 = (I - A_U)^{-1} 1`.
pub fn upstreamness_true(a_u: &SquareMatrix) -> Result<MeasureVector> {
    let x = solve_leontief(a_u, SOLVE_RESIDUAL_TOL)?;
    Ok(MeasureVector::new(MeasureKind::U1, x))
}

/// `D1 = (I - A_D)^{-1} 1`.
pub fn downstreamness_true(a_d: &SquareMatrix) -> Result<MeasureVector> {
    let x = solve_leontief(a_d, SOLVE_RESIDUAL_TOL)?;
    Ok(MeasureVector::new(MeasureKind::D1, x))
}

/// `U1` and `D1` of a table from a single factorization.
///
/// With `M = diag(Y) - A` we have `I - A_U = Y^{-1} M` and
/// `I - A_D = Y^{-1} M^T`, so `U1 = M^{-1} Y` and `D1 = M^{-T} Y`.
/// `I - A_D` is similar to `(I - A_U)^T`, which keeps this well posed even
/// when a row of `A_D` sums above one.
pub fn true_measures(table: &IoTable) -> Result<(MeasureVector, MeasureVector)> {
    let n = table.n_sectors();
    let a = table.flows();
    let y = table.gross_output();
    let m = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            y[i] - a.get(i, j)
        } else {
            -a.get(i, j)
        }
    });
    let lu = LuFactors::new(&m);
    let mut u1 = lu.solve(y);
    let mut d1 = lu.solve_transpose(y);
    // one step of iterative refinement
    let ru: Vec<f64> = m.mul_vec(&u1).iter().zip(y).map(|(mx, yi)| yi - mx).collect();
    let rd: Vec<f64> = m.mul_vec_transposed(&d1).iter().zip(y).map(|(mx, yi)| yi - mx).collect();
    for (x, dx) in u1.iter_mut().zip(lu.solve(&ru)) {
        *x += dx;
    }
    for (x, dx) in d1.iter_mut().zip(lu.solve_transpose(&rd)) {
        *x += dx;
    }

    // residuals of (I - A_U) U1 = 1 and (I - A_D) D1 = 1
    let ru: Vec<f64> = m
        .mul_vec(&u1)
        .iter()
        .zip(y)
        .map(|(mx, yi)| (mx - yi) / yi)
        .collect();
    let rd: Vec<f64> = m
        .mul_vec_transposed(&d1)
        .iter()
        .zip(y)
        .map(|(mx, yi)| (mx - yi) / yi)
        .collect();
    for r in [ru, rd] {
        let (row, residual) = max_abs(&r);
        if !(residual <= SOLVE_RESIDUAL_TOL) {
            return Err(Error::Singular { row, residual });
        }
    }
    Ok((
        MeasureVector::new(MeasureKind::U1, u1),
        MeasureVector::new(MeasureKind::D1, d1),
    ))
}

/// Iterates `x <- 1 + step(x)` from the all-ones vector.
fn fixed_point(
    n: usize,
    max_iter: usize,
    mut step: impl FnMut(&[f64], &mut [f64]),
) -> Result<Vec<f64>> {
    let mut x = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut last_step = f64::INFINITY;
    for _ in 0..max_iter {
        step(&x, &mut next);
        last_step = 0.0;
        for (xi, ni) in x.iter().zip(next.iter_mut()) {
            *ni += 1.0;
            last_step = f64::max(last_step, (*ni - xi).abs());
        }
        std::mem::swap(&mut x, &mut next);
        if !last_step.is_finite() {
            break;
        }
        if last_step < FIXED_POINT_TOL {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_step,
    })
}

/// Fally's recursion `U2_i = 1 + sum_j (d_ij Y_j / Y_i) U2_j`, with
/// direct requirements `d_ij = a_ij / Y_j`.
pub fn upstreamness_fally(table: &IoTable) -> Result<MeasureVector> {
    upstreamness_fally_capped(table, FIXED_POINT_MAX_ITER)
}

pub fn upstreamness_fally_capped(table: &IoTable, max_iter: usize) -> Result<MeasureVector> {
    let n = table.n_sectors();
    let a = table.flows();
    let y = table.gross_output();
    let d = SquareMatrix::from_fn(n, |i, j| a.get(i, j) / y[j]);
    let x = fixed_point(n, max_iter, |x, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = d
                .row(i)
                .iter()
                .zip(y)
                .zip(x)
                .map(|((dij, yj), xj)| dij * yj / y[i] * xj)
                .sum();
        }
    })?;
    Ok(MeasureVector::new(MeasureKind::U2, x))
}

/// Fally's input-side recursion `D2_i = 1 + sum_j d_ji D2_j` with
/// `d_ji = a_ji / Y_i`.
pub fn downstreamness_fally(table: &IoTable) -> Result<MeasureVector> {
    downstreamness_fally_capped(table, FIXED_POINT_MAX_ITER)
}

pub fn downstreamness_fally_capped(table: &IoTable, max_iter: usize) -> Result<MeasureVector> {
    let n = table.n_sectors();
    let a = table.flows();
    let y = table.gross_output();
    let x = fixed_point(n, max_iter, |x, out| {
        out.fill(0.0);
        // out_i = sum_j a_ji x_j / Y_i, accumulated row by row of `a`
        for (j, xj) in x.iter().enumerate() {
            for (o, aji) in out.iter_mut().zip(a.row(j)) {
                *o += aji * xj;
            }
        }
        for (o, yi) in out.iter_mut().zip(y) {
            *o /= yi;
        }
    })?;
    Ok(MeasureVector::new(MeasureKind::D2, x))
}

fn rank1(row_sums: &[f64], kind: MeasureKind) -> Result<MeasureVector> {
    let mean = row_sums.iter().sum::<f64>() / row_sums.len() as f64;
    if !(mean < 1.0) {
        return Err(Error::MeanRowSum { mean });
    }
    let denom = 1.0 - mean;
    Ok(MeasureVector::new(
        kind,
        row_sums.iter().map(|r| 1.0 + r / denom).collect(),
    ))
}

/// `U~_i = 1 + r_i / (1 - mean(r))` and its input-side twin.
pub fn rank1_estimators(pair: &SubstochasticPair) -> Result<(MeasureVector, MeasureVector)> {
    Ok((
        rank1(&pair.a_u.row_sums(), MeasureKind::UTilde)?,
        rank1(&pair.a_d.row_sums(), MeasureKind::DTilde)?,
    ))
}

/// Rank-1 estimators straight from a table.
pub fn rank1_from_table(table: &IoTable) -> Result<(MeasureVector, MeasureVector)> {
    let y = table.gross_output();
    let a = table.flows();
    let r: Vec<f64> = a.row_sums().iter().zip(y).map(|(s, yi)| s / yi).collect();
    let rp: Vec<f64> = a.col_sums().iter().zip(y).map(|(s, yi)| s / yi).collect();
    Ok((
        rank1(&r, MeasureKind::UTilde)?,
        rank1(&rp, MeasureKind::DTilde)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_pair, sample_table, InstanceStream, ModelParams};

    fn toy(rows: &[Vec<f64>], f: &[f64]) -> IoTable {
        IoTable::from_flows(SquareMatrix::from_rows(rows).unwrap(), f.to_vec()).unwrap()
    }

    #[test]
    fn zero_flows_give_unit_measures() {
        let t = toy(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]], &[1.0, 2.0, 3.0]);
        let pair = build_pair(&t).unwrap();
        for m in [
            upstreamness_true(&pair.a_u).unwrap(),
            downstreamness_true(&pair.a_d).unwrap(),
            upstreamness_fally(&t).unwrap(),
            downstreamness_fally(&t).unwrap(),
            rank1_estimators(&pair).unwrap().0,
            rank1_estimators(&pair).unwrap().1,
        ] {
            assert_eq!(m.values, vec![1.0; 3], "{:?}", m.kind);
        }
    }

    #[test]
    fn scalar_case_is_geometric() {
        let t = toy(&[vec![2.0]], &[1.0]);
        let pair = build_pair(&t).unwrap();
        let u1 = upstreamness_true(&pair.a_u).unwrap().values[0];
        let d1 = downstreamness_true(&pair.a_d).unwrap().values[0];
        assert!((u1 - 3.0).abs() < 1e-14);
        assert!((d1 - 3.0).abs() < 1e-14);
        assert!((upstreamness_fally(&t).unwrap().values[0] - 3.0).abs() < 1e-10);
        assert!((downstreamness_fally(&t).unwrap().values[0] - 3.0).abs() < 1e-10);
        let (ut, dt) = rank1_estimators(&pair).unwrap();
        assert!((ut.values[0] - u1).abs() < 1e-15);
        assert!((dt.values[0] - d1).abs() < 1e-15);

        let r = 0.37;
        let m = SquareMatrix::from_rows(&[vec![r]]).unwrap();
        let u = upstreamness_true(&m).unwrap().values[0];
        assert!((u - 1.0 / (1.0 - r)).abs() < 1e-15);
    }

    #[test]
    fn shared_factorization_matches_separate_solves() {
        // final demand dominates, so every A_D row is substochastic too
        let params = ModelParams::exponential(40, 1.0, 0.0002, 8);
        let t = sample_table(&params, &mut InstanceStream::new(8, 0)).unwrap();
        let pair = build_pair(&t).unwrap();
        assert_eq!(pair.d_rowsum_violations, 0);
        let (u1, d1) = true_measures(&t).unwrap();
        let u = upstreamness_true(&pair.a_u).unwrap();
        let d = downstreamness_true(&pair.a_d).unwrap();
        for (a, b) in u1.values.iter().zip(&u.values).chain(d1.values.iter().zip(&d.values)) {
            assert!((a - b).abs() < 1e-10 * b);
        }
        let (ut, dt) = rank1_estimators(&pair).unwrap();
        let (ut2, dt2) = rank1_from_table(&t).unwrap();
        for (a, b) in ut.values.iter().zip(&ut2.values).chain(dt.values.iter().zip(&dt2.values)) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn toy_table_with_unit_input_share_row() {
        // A_U = ((0, 1/2), (2/3, 0)); A_D = ((0, 1), (1/3, 0))
        let t = toy(&[vec![0.0, 1.0], vec![2.0, 0.0]], &[1.0, 1.0]);
        let (u1, d1) = true_measures(&t).unwrap();
        assert!((u1.values[0] - 9.0 / 4.0).abs() < 1e-14);
        assert!((u1.values[1] - 5.0 / 2.0).abs() < 1e-14);
        assert!((d1.values[0] - 3.0).abs() < 1e-14);
        assert!((d1.values[1] - 2.0).abs() < 1e-14);
        let pair = build_pair(&t).unwrap();
        assert_eq!(pair.d_rowsum_violations, 0);
        assert!(matches!(
            downstreamness_true(&pair.a_d),
            Err(Error::NotSubstochastic { row: 0, .. })
        ));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let params = ModelParams::exponential(10, 1.0, 0.01, 2);
        let t = sample_table(&params, &mut InstanceStream::new(2, 0)).unwrap();
        assert!(matches!(
            upstreamness_fally_capped(&t, 3),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn rank1_rejects_mean_row_sum_at_one() {
        let m = SquareMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let pair = SubstochasticPair {
            a_u: m.clone(),
            a_d: m,
            d_rowsum_violations: 0,
        };
        assert!(matches!(rank1_estimators(&pair), Err(Error::MeanRowSum { .. })));
    }
}
