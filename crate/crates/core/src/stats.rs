//! Sample statistics for scatter data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments2 {
    pub mean_x: f64,
    pub mean_y: f64,
    /// Unbiased (m - 1) second moments.
    pub var_x: f64,
    pub var_y: f64,
    pub cov: f64,
}

pub fn moments2(points: &[(f64, f64)]) -> Result<Moments2> {
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least two points, got {}",
            points.len()
        )));
    }
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Ok(Moments2 {
        mean_x,
        mean_y,
        var_x: sxx / (m - 1.0),
        var_y: syy / (m - 1.0),
        cov: sxy / (m - 1.0),
    })
}

pub fn sample_covariance(points: &[(f64, f64)]) -> Result<f64> {
    Ok(moments2(points)?.cov)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub covariance: f64,
}

/// Least squares of `y` on `x` with a free intercept.
pub fn ols(points: &[(f64, f64)]) -> Result<LinearFit> {
    let m = moments2(points)?;
    if !(m.var_x > 0.0) {
        return Err(Error::Degenerate("x has zero variance".into()));
    }
    let slope = m.cov / m.var_x;
    let pearson_r = if m.var_y > 0.0 {
        (m.cov / (m.var_x.sqrt() * m.var_y.sqrt())).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept: m.mean_y - slope * m.mean_x,
        pearson_r,
        covariance: m.cov,
    })
}

/// Bootstrap standard error of the sample covariance over `resamples`
/// resamples with replacement.
pub fn bootstrap_cov_se(points: &[(f64, f64)], resamples: usize, seed: u64) -> Result<f64> {
    if resamples < 2 {
        return Err(Error::param("resamples", "need at least 2"));
    }
    moments2(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = points.len();
    let mut buf = vec![(0.0, 0.0); m];
    let mut covs = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for b in buf.iter_mut() {
            *b = points[rng.random_range(0..m)];
        }
        covs.push(moments2(&buf)?.cov);
    }
    let mean = covs.iter().sum::<f64>() / resamples as f64;
    let var = covs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let fit = ols(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-14);
        assert!((fit.intercept - 1.0).abs() < 1e-13);
        assert!((fit.pearson_r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_x() {
        assert!(ols(&[(1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(ols(&[(1.0, 2.0)]).is_err());
    }

    #[test]
    fn bootstrap_is_deterministic_and_positive() {
        let pts: Vec<_> = (0..200).map(|i| ((i as f64).sin(), (i as f64 * 0.7).cos())).collect();
        let a = bootstrap_cov_se(&pts, 100, 3).unwrap();
        assert_eq!(a, bootstrap_cov_se(&pts, 100, 3).unwrap());
        assert!(a > 0.0);
    }

    proptest! {
        #[test]
        fn pearson_bounded_and_consistent(pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..60)) {
            if let Ok(fit) = ols(&pts) {
                let m = moments2(&pts).unwrap();
                prop_assert!(fit.pearson_r.abs() <= 1.0);
                if m.var_y > 0.0 {
                    let back = fit.pearson_r * m.var_x.sqrt() * m.var_y.sqrt();
                    prop_assert!((back - fit.covariance).abs() <= 1e-9 * (m.var_x * m.var_y).sqrt().max(1e-300));
                }
            }
        }
    }
}
