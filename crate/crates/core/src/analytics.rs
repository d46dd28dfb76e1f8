//! Closed forms for the exponential random model.
//!
//! Everything reduces to the kernel
//!
//! ```text
//! G(k, phi) = B(1, k) 2F1(1, k; k + 1; phi) = sum_{n >= 0} phi^n / (n + k)
//! ```
//!
//! with `phi = 1 - mu_f / mu`. The auxiliary integrals are
//! `J(k) = mu^{-k} G(k)` and `L(k) = mu^{1-k} / (k - 1) - mu_f J(k)`.
//! The moments carry prefactors like `mu^N mu_f J(N + 1)` that overflow for
//! `mu > 1` and large `N` if transcribed literally; they are evaluated in the
//! cancelled form `(mu_f / mu) G(N + 1)` instead, so only the normalised
//! kernels `G(k)` and `H(k) = mu^{k-1} L(k) = 1/(k-1) - (mu_f/mu) G(k)` appear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative agreement required between the moment route and the closed form.
pub const ROUTE_TOL: f64 = 1e-8;
/// Relative truncation threshold of the kernel series.
pub const SERIES_TOL: f64 = 1e-15;
const MAX_SERIES_TERMS: usize = 200_000_000;

/// `phi = 1 - mu_f / mu`; always below one.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Phi(f64);

impl Phi {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value >= 1.0 {
            return Err(Error::param(
                "phi",
                format!("series diverges for phi = {value} (need phi < 1)"),
            ));
        }
        Ok(Phi(value))
    }

    pub fn from_rates(mu: f64, mu_f: f64) -> Result<Self> {
        check_rates(mu, mu_f)?;
        Phi::new(1.0 - mu_f / mu)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_rates(mu: f64, mu_f: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::param("mu", format!("must be positive, got {mu}")));
    }
    if !(mu_f > 0.0 && mu_f.is_finite()) {
        return Err(Error::param("mu_f", format!("must be positive, got {mu_f}")));
    }
    Ok(())
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `B(1, k) 2F1(1, k; k + 1; phi) = sum_{n >= 0} phi^n / (n + k)`.
///
/// Summed until the geometric tail bound drops below `1e-15` of the
/// partial sum.
pub fn hyp2f1_special(k: usize, phi: Phi) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    series(phi, |n| 1.0 / (n + k as f64))
}

/// `sum_{n >= 0} phi^n c(n)` for positive, non-increasing `c`.
fn series(phi: Phi, c: impl Fn(f64) -> f64) -> Result<f64> {
    let p = phi.value();
    if p == 0.0 {
        return Ok(c(0.0));
    }
    let q = p.abs();
    let mut acc = CompensatedSum::default();
    let mut pow = 1.0;
    for n in 0..MAX_SERIES_TERMS {
        acc.add(pow * c(n as f64));
        pow *= p;
        let tail = pow.abs() * c(n as f64 + 1.0) / (1.0 - q);
        if tail < SERIES_TOL * acc.value().abs() {
            return Ok(acc.value());
        }
    }
    Err(Error::OutsideValidity(format!(
        "kernel series at phi={p} did not settle in {MAX_SERIES_TERMS} terms"
    )))
}

/// The same kernel through `phi^{-k} (-ln(1 - phi) - sum_{m<k} phi^m / m)`.
///
/// Returns `None` when the subtraction would lose too many digits
/// (`phi^k <= 1e-8`, or the result is more than `1e5` times smaller than
/// the logarithm), or when `phi` is outside `(0, 1)`.
pub fn hyp2f1_log_form(k: usize, phi: Phi) -> Option<f64> {
    let p = phi.value();
    if k == 0 || !(p > 0.0 && p < 1.0) {
        return None;
    }
    let pk = p.powi(k as i32);
    if !(pk > 1e-8) {
        return None;
    }
    let log_term = -(-p).ln_1p();
    let mut head = CompensatedSum::default();
    let mut pow = 1.0;
    for m in 1..k {
        pow *= p;
        head.add(pow / m as f64);
    }
    let tail = log_term - head.value();
    if !(tail > 1e-5 * log_term) {
        return None;
    }
    Some(tail / pk)
}

/// `J(k) = int_0^inf ds (mu + s)^{-k} (mu_f + s)^{-1} = mu^{-k} G(k)`.
pub fn j_integral(k: usize, mu: f64, mu_f: f64) -> Result<f64> {
    let phi = Phi::from_rates(mu, mu_f)?;
    let g = hyp2f1_special(k, phi)?;
    let j = (-(k as f64) * mu.ln()).exp() * g;
    if !(j >= f64::MIN_POSITIVE) || !j.is_finite() {
        return Err(Error::OutsideValidity(format!(
            "J({k}) at mu={mu}, mu_f={mu_f} is not representable in double precision"
        )));
    }
    Ok(j)
}

/// `H(k) = mu^{k-1} L(k) = 1 / (k - 1) - (mu_f / mu) G(k)`.
///
/// The difference cancels badly for large `k`; since `mu_f / mu = 1 - phi`
/// it equals `int_0^1 t^{k-2} (1 - t) / (1 - phi t) dt`, which expands to a
/// series of positive terms.
fn l_kernel(k: usize, phi: Phi) -> Result<f64> {
    let k = k as f64;
    series(phi, |n| 1.0 / ((n + k - 1.0) * (n + k)))
}

/// `L(k) = int int ds dt (mu_f + s + t)^{-1} (mu + s + t)^{-k}
///       = mu^{1-k} / (k - 1) - mu_f J(k)`.
pub fn l_integral(k: usize, mu: f64, mu_f: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::param("k", "L(k) diverges for k < 2"));
    }
    let phi = Phi::from_rates(mu, mu_f)?;
    let h = l_kernel(k, phi)?;
    if !(h > 0.0) {
        return Err(Error::OutsideValidity(format!(
            "L({k}) evaluated to {h} at mu={mu}, mu_f={mu_f}; it must be positive"
        )));
    }
    let l = (-((k - 1) as f64) * mu.ln()).exp() * h;
    if !(l >= f64::MIN_POSITIVE) || !l.is_finite() {
        return Err(Error::OutsideValidity(format!(
            "L({k}) at mu={mu}, mu_f={mu_f} is not representable in double precision"
        )));
    }
    Ok(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentSource {
    Analytic,
    MonteCarlo {
        samples: usize,
        /// Standard errors of `e_r`, `e_rp`, `e_rrp`, `e_r2`.
        std_errors: [f64; 4],
    },
}

/// `E[r]`, `E[r']`, `E[r r']`, `E[r^2]` of the first-row sums of `A_U`, `A_D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub e_r: f64,
    pub e_rp: f64,
    pub e_rrp: f64,
    pub e_r2: f64,
    pub source: MomentSource,
}

impl MomentSet {
    pub fn as_array(&self) -> [f64; 4] {
        [self.e_r, self.e_rp, self.e_rrp, self.e_r2]
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::param("n", "must be at least 1"))
    } else {
        Ok(())
    }
}

/// Exact moments of the exponential model.
pub fn moments_analytic(n: usize, mu: f64, mu_f: f64) -> Result<MomentSet> {
    check_n(n)?;
    let phi = Phi::from_rates(mu, mu_f)?;
    if mu_f >= mu {
        log::warn!("mu_f = {mu_f} >= mu = {mu}: A_D rows are often not substochastic");
    }
    let ratio = mu_f / mu;
    let nf = n as f64;
    let g_n1 = hyp2f1_special(n + 1, phi)?;
    let g_n = hyp2f1_special(n, phi)?;
    let h_n1 = l_kernel(n + 1, phi)?;
    let h_n2 = l_kernel(n + 2, phi)?;

    let e_r = ratio * nf * g_n1;
    // I1 + I2 of the input-side row sum
    let e_rp = ratio * (g_n1 + (nf - 1.0) * g_n);
    // K1..K4: a_11^2, a_11 * column, a_11 * other row entries, column * rest of row
    let k1 = 2.0 * h_n2;
    let k2 = (nf - 1.0) * h_n1;
    let k3 = (nf - 1.0) * h_n2;
    let k4 = (nf - 1.0) * (nf - 1.0) * h_n1;
    let e_rrp = ratio * (k1 + k2 + k3 + k4);
    let e_r2 = ratio * (nf * nf + nf) * h_n2;

    let out = MomentSet {
        e_r,
        e_rp,
        e_rrp,
        e_r2,
        source: MomentSource::Analytic,
    };
    if out.as_array().iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow { n, mu, mu_f });
    }
    Ok(out)
}

/// Covariance from moments:
/// `(E[rr'] - E[r]E[r']) / ((1 - E[r])(1 - E[r']))`.
pub fn covariance_from_moments(m: &MomentSet) -> Result<f64> {
    if !(m.e_r < 1.0) || !(m.e_rp < 1.0) {
        return Err(Error::OutsideValidity(format!(
            "E[r] = {}, E[r'] = {}; both must be below 1",
            m.e_r, m.e_rp
        )));
    }
    Ok((m.e_rrp - m.e_r * m.e_rp) / ((1.0 - m.e_r) * (1.0 - m.e_rp)))
}

/// Numerator and denominator of the closed form `C_N = -num / den`,
/// transcribed block by block in terms of `B(1, k) 2F1(1, k; k+1; phi)`.
pub fn closed_form_parts(n: usize, phi: Phi) -> Result<(f64, f64)> {
    check_n(n)?;
    let p = phi.value();
    let nf = n as f64;
    let b_n = hyp2f1_special(n, phi)?;
    let b_n1 = hyp2f1_special(n + 1, phi)?;
    let b_n2 = hyp2f1_special(n + 2, phi)?;
    let pm1 = p - 1.0;
    let num = pm1
        * (nf * pm1 * b_n1 * b_n1
            + (nf - 1.0) * nf * pm1 * b_n1 * (b_n + 1.0)
            + (nf + 1.0) * pm1 * b_n2
            + nf);
    let den = ((nf - 1.0) * pm1 * b_n + pm1 * b_n1 + 1.0) * (nf * pm1 * b_n1 + 1.0);
    Ok((num, den))
}

/// Both evaluations of `C_N(mu, mu_f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRoutes {
    pub moment_route: f64,
    pub closed_form: f64,
}

impl CovarianceRoutes {
    pub fn relative_gap(&self) -> f64 {
        (self.moment_route - self.closed_form).abs() / self.closed_form.abs()
    }
}

pub fn covariance_routes(n: usize, mu: f64, mu_f: f64) -> Result<CovarianceRoutes> {
    let moments = moments_analytic(n, mu, mu_f)?;
    let moment_route = covariance_from_moments(&moments)?;
    let (num, den) = closed_form_parts(n, Phi::from_rates(mu, mu_f)?)?;
    let closed_form = -num / den;
    if !moment_route.is_finite() || !closed_form.is_finite() {
        return Err(Error::Overflow { n, mu, mu_f });
    }
    Ok(CovarianceRoutes {
        moment_route,
        closed_form,
    })
}

/// `C_N(mu, mu_f)`, evaluated through the moments and through the closed
/// form; a gap above `1e-8` relative is an error.
pub fn covariance_exact(n: usize, mu: f64, mu_f: f64) -> Result<f64> {
    let routes = covariance_routes(n, mu, mu_f)?;
    if !(routes.relative_gap() <= ROUTE_TOL) {
        return Err(Error::RouteMismatch {
            moment_route: routes.moment_route,
            closed_form: routes.closed_form,
        });
    }
    Ok(routes.moment_route)
}

/// `S = C_N (1 - E[r])^2 / (E[r^2] - E[r]^2)`.
pub fn slope_exact(n: usize, mu: f64, mu_f: f64) -> Result<f64> {
    let c = covariance_exact(n, mu, mu_f)?;
    let m = moments_analytic(n, mu, mu_f)?;
    slope_from(c, &m)
}

pub fn slope_from(c: f64, m: &MomentSet) -> Result<f64> {
    let var = m.e_r2 - m.e_r * m.e_r;
    if !(var > 0.0) {
        return Err(Error::Degenerate(format!(
            "Var[r] = {var} (E[r^2] = {}, E[r] = {})",
            m.e_r2, m.e_r
        )));
    }
    Ok(c * (1.0 - m.e_r).powi(2) / var)
}

/// `C_N` for `N = 1..=n_max`.
pub fn covariance_curve(n_max: usize, mu: f64, mu_f: f64) -> Result<Vec<(usize, f64)>> {
    check_n(n_max)?;
    (1..=n_max)
        .map(|n| covariance_exact(n, mu, mu_f).map(|c| (n, c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn phi(x: f64) -> Phi {
        Phi::new(x).unwrap()
    }

    #[test]
    fn kernel_at_zero_argument() {
        for k in [1, 2, 7, 500] {
            assert_eq!(hyp2f1_special(k, phi(0.0)).unwrap(), 1.0 / k as f64);
        }
    }

    #[test]
    fn kernel_log_identity_k2() {
        let v = hyp2f1_special(2, phi(0.5)).unwrap();
        assert_relative_eq!(v, 4.0 * std::f64::consts::LN_2 - 2.0, max_relative = 1e-15);
    }

    #[test]
    fn kernel_rejects_bad_input() {
        assert!(Phi::new(1.0).is_err());
        assert!(Phi::new(f64::NAN).is_err());
        assert!(hyp2f1_special(0, phi(0.3)).is_err());
        assert!(Phi::from_rates(0.0, 1.0).is_err());
        assert!(j_integral(3, 1.0, -0.1).is_err());
        assert!(l_integral(1, 1.0, 0.1).is_err());
    }

    #[test]
    fn negative_phi_is_alternating_but_fine() {
        // mu_f = 3 mu: phi = -2 is outside the radius, phi = -0.5 inside
        let v = hyp2f1_special(1, phi(-0.5)).unwrap();
        assert_relative_eq!(v, (1.5f64).ln() / 0.5, max_relative = 1e-14);
    }

    #[test]
    fn equal_rates_collapse() {
        for mu in [0.5, 1.0, 2.0] {
            for k in [1, 3, 10] {
                let j = j_integral(k, mu, mu).unwrap();
                assert_relative_eq!(j, 1.0 / (k as f64 * mu.powi(k as i32)), max_relative = 1e-14);
            }
            let l = l_integral(3, mu, mu).unwrap();
            assert_relative_eq!(l, 1.0 / (6.0 * mu * mu), max_relative = 1e-14);
        }
    }

    #[test]
    fn j_large_k_is_finite_and_decreasing() {
        let a = j_integral(400, 2.0, 0.005).unwrap();
        let b = j_integral(401, 2.0, 0.005).unwrap();
        assert!(b.is_finite() && b > 0.0 && b < a);
    }

    #[test]
    fn single_sector_moments() {
        let (mu, mu_f) = (1.0, 0.1);
        let m = moments_analytic(1, mu, mu_f).unwrap();
        assert_relative_eq!(m.e_r, mu * mu_f * j_integral(2, mu, mu_f).unwrap(), max_relative = 1e-14);
        assert_relative_eq!(m.e_r2, 2.0 * mu * mu_f * l_integral(3, mu, mu_f).unwrap(), max_relative = 1e-13);
        assert!(m.e_r2 <= m.e_r);
        // r = r' when N = 1
        assert_relative_eq!(m.e_r, m.e_rp, max_relative = 1e-15);
        assert_relative_eq!(m.e_r2, m.e_rrp, max_relative = 1e-14);
    }

    #[test]
    fn moments_match_literal_transcription_when_representable() {
        // mu^N stays in range for these, so the unnormalised J/L formulas can be used as written
        for (n, mu, mu_f) in [(5usize, 1.0f64, 0.1f64), (12, 1.5, 0.02), (30, 0.8, 0.05)] {
            let m = moments_analytic(n, mu, mu_f).unwrap();
            let nf = n as f64;
            let j = |k| j_integral(k, mu, mu_f).unwrap();
            let l = |k| l_integral(k, mu, mu_f).unwrap();
            let pw = |e: f64| mu.powf(e);
            let e_r = pw(nf) * mu_f * nf * j(n + 1);
            let e_rp = pw(2.0 * nf - 1.0) * mu_f * (j(n + 1) / pw(nf - 1.0) + (nf - 1.0) * j(n) / pw(nf));
            let e_rrp = pw(2.0 * nf - 1.0)
                * mu_f
                * (2.0 * l(n + 2) / pw(nf - 1.0)
                    + (nf - 1.0) * l(n + 1) / pw(nf)
                    + (nf - 1.0) * l(n + 2) / pw(nf - 1.0)
                    + (nf - 1.0).powi(2) * l(n + 1) / pw(nf));
            let e_r2 = pw(nf) * mu_f * (nf * nf + nf) * l(n + 2);
            assert_relative_eq!(m.e_r, e_r, max_relative = 1e-12);
            assert_relative_eq!(m.e_rp, e_rp, max_relative = 1e-12);
            assert_relative_eq!(m.e_rrp, e_rrp, max_relative = 1e-12);
            assert_relative_eq!(m.e_r2, e_r2, max_relative = 1e-12);
        }
    }

    #[test]
    fn table_one_values() {
        for (mu, mu_f, n, want) in [
            (1.0, 0.001, 200, 0.10385),
            (2.0, 0.005, 400, 0.29494),
            (3.0, 0.001, 300, 0.06158),
            (1.2, 0.001, 500, 0.17260),
            (1.5, 0.003, 350, 0.23955),
        ] {
            let c = covariance_exact(n, mu, mu_f).unwrap();
            assert!((c - want).abs() < 5e-5, "N={n} mu={mu} mu_f={mu_f}: {c}");
        }
    }

    #[test]
    fn slope_is_one() {
        assert_relative_eq!(slope_exact(200, 1.0, 0.001).unwrap(), 1.0, max_relative = 1e-8);
        assert_relative_eq!(slope_exact(1, 1.0, 0.5).unwrap(), 1.0, max_relative = 1e-8);
    }

    #[test]
    fn curve_starts_at_single_sector_value() {
        let curve = covariance_curve(5, 1.0, 0.1).unwrap();
        assert_eq!(curve.len(), 5);
        assert_eq!(curve[0].0, 1);
        assert_eq!(curve[0].1, covariance_exact(1, 1.0, 0.1).unwrap());
        assert!(covariance_curve(0, 1.0, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn log_form_agrees_where_safe(k in 1usize..600, p in 0.01f64..0.9999) {
            let ph = phi(p);
            if let Some(lf) = hyp2f1_log_form(k, ph) {
                let s = hyp2f1_special(k, ph).unwrap();
                prop_assert!((lf - s).abs() <= 1e-9 * s, "k={} phi={} series={} log={}", k, p, s, lf);
            }
        }

        #[test]
        fn kernel_downward_recurrence(k in 1usize..300, p in -0.9f64..0.999) {
            // G(k) = 1/k + phi G(k+1)
            let ph = phi(p);
            let g = hyp2f1_special(k, ph).unwrap();
            let g1 = hyp2f1_special(k + 1, ph).unwrap();
            prop_assert!((g - (1.0 / k as f64 + p * g1)).abs() <= 1e-13 * g.abs());
        }

        #[test]
        fn kernel_strictly_decreasing(k in 1usize..500, p in -0.9f64..0.9995) {
            prop_assert!(hyp2f1_special(k + 1, phi(p)).unwrap() < hyp2f1_special(k, phi(p)).unwrap());
        }

        #[test]
        fn h_matches_difference_form(k in 2usize..40, p in -0.9f64..0.99) {
            let h = l_kernel(k, phi(p)).unwrap();
            let diff = 1.0 / (k - 1) as f64 - (1.0 - p) * hyp2f1_special(k, phi(p)).unwrap();
            prop_assert!((h - diff).abs() <= 1e-12 / (k * k) as f64);
        }

        // (mu + s)^{-k} only falls with k once mu >= 1
        #[test]
        fn j_strictly_decreasing(k in 1usize..500, mu in 1.0f64..4.0, ratio in 0.0005f64..1.0) {
            let mu_f = mu * ratio;
            prop_assert!(j_integral(k + 1, mu, mu_f).unwrap() < j_integral(k, mu, mu_f).unwrap());
        }

        #[test]
        fn l_positive(k in 2usize..600, mu in 0.2f64..4.0, ratio in 0.0005f64..1.9) {
            // mu^{1-k} leaves the double range for large k and mu
            let representable = ((k - 1) as f64 * mu.ln()).abs() < 700.0;
            match l_integral(k, mu, mu * ratio) {
                Ok(l) => prop_assert!(l > 0.0),
                Err(e) => prop_assert!(!representable, "{}", e),
            }
        }

        #[test]
        fn covariance_depends_only_on_phi(n in 1usize..200, mu in 0.3f64..3.0, ratio in 0.001f64..0.5) {
            let base = covariance_exact(n, mu, mu * ratio).unwrap();
            for c in [0.5, 2.0, 10.0] {
                let scaled = covariance_exact(n, c * mu, c * mu * ratio).unwrap();
                prop_assert!((scaled - base).abs() <= 1e-10 * base.abs());
            }
        }
    }
}
