//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals,
//! and the `J`/`L` integrals mapped onto `[0, 1)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::analytics::CompensatedSum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

pub const DEFAULT_REL_TOL: f64 = 1e-12;
pub const MAX_EVALUATIONS: usize = 4_000_000;

// Kronrod abscissae on [-1, 1] (positive half, descending), with the
// 15-point Kronrod weights and the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One GK15 panel: (Kronrod value, |Kronrod - Gauss|).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[i] * pair;
        // Gauss nodes are the odd-indexed Kronrod nodes
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    // an estimate below the roundoff floor is not believable
    let floor = 50.0 * f64::EPSILON * (kron * h).abs();
    (kron * h, ((kron - gauss) * h).abs().max(floor))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn resum(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut v = CompensatedSum::default();
    let mut e = CompensatedSum::default();
    for p in heap.iter() {
        v.add(p.value);
        e.add(p.error);
    }
    (v.value(), e.value())
}

/// Integrates `f` over `[a, b]` until the summed panel error estimate is
/// below `rel_tol * |value|`, always bisecting the worst panel.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<QuadratureResult> {
    if !(rel_tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {rel_tol}")));
    }
    let mut heap = BinaryHeap::new();
    let (value, error) = gk15(&f, a, b);
    heap.push(Panel { a, b, value, error });
    let mut evaluations = 15;
    let (mut total, mut total_err) = (value, error);
    loop {
        if total_err <= rel_tol * total.abs() {
            // the running totals drift; confirm against a fresh sum
            let (v, e) = resum(&heap);
            if e <= rel_tol * v.abs() {
                break;
            }
            (total, total_err) = (v, e);
        }
        if evaluations + 30 > MAX_EVALUATIONS {
            return Err(Error::Quadrature {
                evaluations,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel can no longer be split in floating point
            return Err(Error::Quadrature {
                evaluations,
                error: total_err,
            });
        }
        let (lv, le) = gk15(&f, worst.a, mid);
        let (rv, re) = gk15(&f, mid, worst.b);
        evaluations += 30;
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, error: re });
    }
    let (value, abs_error_estimate) = resum(&heap);
    Ok(QuadratureResult {
        value,
        abs_error_estimate,
        evaluations,
    })
}

fn check(k: usize, min_k: usize, mu: f64, mu_f: f64) -> Result<()> {
    if k < min_k {
        return Err(Error::param("k", format!("must be at least {min_k}")));
    }
    if !(mu > 0.0) || !(mu_f > 0.0) {
        return Err(Error::param("mu", "rates must be positive"));
    }
    Ok(())
}

/// `J(k) = int_0^inf ds (mu + s)^{-k} (mu_f + s)^{-1}` by quadrature.
///
/// With `s = mu t / (1 - t)` the integrand becomes
/// `mu^{1-k} (1 - t)^{k-1} / (mu_f (1 - t) + mu t)` on `[0, 1)`.
pub fn quad_j(k: usize, mu: f64, mu_f: f64, tol: f64) -> Result<QuadratureResult> {
    check(k, 1, mu, mu_f)?;
    let p = (k - 1) as i32;
    let r = integrate(
        |t| (1.0 - t).powi(p) / (mu_f * (1.0 - t) + mu * t),
        0.0,
        1.0,
        tol,
    )?;
    Ok(scaled(r, (-(p as f64) * mu.ln()).exp()))
}

/// `L(k) = int int ds dt (mu_f + s + t)^{-1} (mu + s + t)^{-k}` by quadrature.
///
/// `u = s + t` (Jacobian `u`) leaves `int_0^inf u (mu_f + u)^{-1} (mu + u)^{-k} du`,
/// then `u = mu t / (1 - t)` gives
/// `mu^{2-k} t (1 - t)^{k-2} / (mu_f (1 - t) + mu t)` on `[0, 1)`.
pub fn quad_l(k: usize, mu: f64, mu_f: f64, tol: f64) -> Result<QuadratureResult> {
    check(k, 2, mu, mu_f)?;
    let p = (k - 2) as i32;
    let r = integrate(
        |t| t * (1.0 - t).powi(p) / (mu_f * (1.0 - t) + mu * t),
        0.0,
        1.0,
        tol,
    )?;
    Ok(scaled(r, (-(p as f64) * mu.ln()).exp()))
}

fn scaled(r: QuadratureResult, factor: f64) -> QuadratureResult {
    QuadratureResult {
        value: r.value * factor,
        abs_error_estimate: r.abs_error_estimate * factor,
        evaluations: r.evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact_in_one_panel() {
        let r = integrate(|x| x.powi(10) - 3.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.value - (2f64.powi(11) / 11.0 - 6.0)).abs() < 1e-12);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn elementary_j_values() {
        let r = quad_j(3, 1.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-12 / 3.0);
        // partial fractions: ln(mu / mu_f) / (mu - mu_f)
        let r = quad_j(1, 1.0, 0.5, 1e-12).unwrap();
        assert!((r.value - 2.0 * std::f64::consts::LN_2).abs() < 1e-11);
    }

    #[test]
    fn elementary_l_values() {
        let r = quad_l(3, 1.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 1.0 / 6.0).abs() < 1e-12);
        let r = quad_l(2, 2.0, 2.0, 1e-12).unwrap();
        assert!((r.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn error_estimate_covers_actual_error() {
        let r = quad_j(2, 1.0, 0.5, 1e-10).unwrap();
        // J(2) at mu=1, mu_f=1/2: partial fractions give 4 ln 2 - 2
        let exact = 2.0 * (2.0 * std::f64::consts::LN_2 - 1.0);
        assert!((r.value - exact).abs() <= r.abs_error_estimate.max(1e-15));
    }

    #[test]
    fn impossible_tolerance_fails() {
        let r = quad_j(11, 1.0, 0.1, 1e-30);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
        assert!(quad_l(1, 1.0, 0.1, 1e-12).is_err());
        assert!(integrate(|x| x, 0.0, 1.0, 0.0).is_err());
    }
}
