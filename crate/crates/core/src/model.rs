//! Random input-output economies.
//!
//! A table is sampled from i.i.d. flows `a_ij` and final demands `F_i`;
//! gross output and value added follow from the two accounting identities
//! `Y_i = sum_j a_ij + F_i = sum_j a_ji + V_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

/// Distribution family of the flow entries and final demands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Disorder {
    /// `a ~ Exp(mu)`, `F ~ Exp(mu_f)`.
    Exponential,
    /// `a ~ U[0, 2/mu]`, `F ~ U[0, 2/mu_f]` (means `1/mu`, `1/mu_f`).
    Uniform,
    /// `ln a ~ N(mu_prime, sigma^2)`, `ln F ~ N(demand_log_mean, demand_log_sigma^2)`.
    LogNormal {
        mu_prime: f64,
        sigma: f64,
        demand_log_mean: f64,
        demand_log_sigma: f64,
    },
}

impl Disorder {
    /// Log-normal flows with the unit log-variance density and the default
    /// demand interpretation (log-mean 6.67, log-sigma 1).
    pub fn log_normal(mu_prime: f64) -> Self {
        Disorder::LogNormal {
            mu_prime,
            sigma: 1.0,
            demand_log_mean: 6.67,
            demand_log_sigma: 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Disorder::Exponential => "exp",
            Disorder::Uniform => "uniform",
            Disorder::LogNormal { .. } => "lognormal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_sectors: usize,
    pub mu: f64,
    pub mu_f: f64,
    pub disorder: Disorder,
    /// Probability that a flow entry is forced to zero.
    pub sparsity: f64,
    pub seed: u64,
}

impl ModelParams {
    pub fn exponential(n_sectors: usize, mu: f64, mu_f: f64, seed: u64) -> Self {
        ModelParams {
            n_sectors,
            mu,
            mu_f,
            disorder: Disorder::Exponential,
            sparsity: 0.0,
            seed,
        }
    }

    pub fn with_disorder(mut self, disorder: Disorder) -> Self {
        self.disorder = disorder;
        self
    }

    pub fn with_sparsity(mut self, sparsity: f64) -> Self {
        self.sparsity = sparsity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sectors == 0 {
            return Err(Error::param("n_sectors", "must be at least 1"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::param("mu", format!("must be positive, got {}", self.mu)));
        }
        if !(self.mu_f > 0.0 && self.mu_f.is_finite()) {
            return Err(Error::param(
                "mu_f",
                format!("must be positive, got {}", self.mu_f),
            ));
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::param(
                "sparsity",
                format!("must lie in [0, 1], got {}", self.sparsity),
            ));
        }
        if let Disorder::LogNormal {
            mu_prime,
            sigma,
            demand_log_mean,
            demand_log_sigma,
        } = self.disorder
        {
            if !mu_prime.is_finite() || !demand_log_mean.is_finite() {
                return Err(Error::param("mu_prime", "log-means must be finite"));
            }
            if !(sigma > 0.0) || !(demand_log_sigma > 0.0) {
                return Err(Error::param("sigma", "log-sigmas must be positive"));
            }
        }
        Ok(())
    }
}

/// What to do with an instance whose `A_D` has a row sum above one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationPolicy {
    /// Keep the instance and record the number of offending rows.
    #[default]
    Flag,
    /// Resample the instance until no row is offending.
    Reject,
}

const LANE_VALUES: u64 = 0;
const LANE_MASK: u64 = 1;

/// Deterministic random source for one instance of an ensemble.
///
/// Each `(seed, instance, attempt)` maps to its own pair of ChaCha8 streams,
/// so results never depend on which worker draws which instance. Flow and
/// demand values come from one stream, the sparsity mask from the other.
pub struct InstanceStream {
    values: ChaCha8Rng,
    mask: ChaCha8Rng,
}

impl InstanceStream {
    pub fn new(seed: u64, instance: u64) -> Self {
        Self::with_attempt(seed, instance, 0)
    }

    pub fn with_attempt(seed: u64, instance: u64, attempt: u64) -> Self {
        InstanceStream {
            values: lane_rng(seed, instance, attempt, LANE_VALUES),
            mask: lane_rng(seed, instance, attempt, LANE_MASK),
        }
    }

    pub(crate) fn values(&mut self) -> &mut ChaCha8Rng {
        &mut self.values
    }

    pub(crate) fn mask(&mut self) -> &mut ChaCha8Rng {
        &mut self.mask
    }
}

fn lane_rng(seed: u64, instance: u64, attempt: u64, lane: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&attempt.to_le_bytes());
    key[16..24].copy_from_slice(&lane.to_le_bytes());
    key[24..].copy_from_slice(b"gvc-rlab");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(instance);
    rng
}

/// Per-entry samplers for one disorder family.
pub(crate) enum EntrySampler {
    Exp { flow: Exp<f64>, demand: Exp<f64> },
    Uniform { flow: Uniform<f64>, demand: Uniform<f64> },
    LogNormal { flow: LogNormal<f64>, demand: LogNormal<f64> },
}

impl EntrySampler {
    pub(crate) fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let bad = |e: String| Error::param("disorder", e);
        Ok(match params.disorder {
            Disorder::Exponential => EntrySampler::Exp {
                flow: Exp::new(params.mu).map_err(|e| bad(e.to_string()))?,
                demand: Exp::new(params.mu_f).map_err(|e| bad(e.to_string()))?,
            },
            Disorder::Uniform => EntrySampler::Uniform {
                flow: Uniform::new_inclusive(0.0, 2.0 / params.mu)
                    .map_err(|e| bad(e.to_string()))?,
                demand: Uniform::new_inclusive(0.0, 2.0 / params.mu_f)
                    .map_err(|e| bad(e.to_string()))?,
            },
            Disorder::LogNormal {
                mu_prime,
                sigma,
                demand_log_mean,
                demand_log_sigma,
            } => EntrySampler::LogNormal {
                flow: LogNormal::new(mu_prime, sigma).map_err(|e| bad(e.to_string()))?,
                demand: LogNormal::new(demand_log_mean, demand_log_sigma)
                    .map_err(|e| bad(e.to_string()))?,
            },
        })
    }

    #[inline]
    pub(crate) fn flow<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            EntrySampler::Exp { flow, .. } => flow.sample(rng),
            EntrySampler::Uniform { flow, .. } => flow.sample(rng),
            EntrySampler::LogNormal { flow, .. } => flow.sample(rng),
        }
    }

    #[inline]
    pub(crate) fn demand<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            EntrySampler::Exp { demand, .. } => demand.sample(rng),
            EntrySampler::Uniform { demand, .. } => demand.sample(rng),
            EntrySampler::LogNormal { demand, .. } => demand.sample(rng),
        }
    }
}

/// One economy: flows, final demand, gross output and value added.
#[derive(Debug, Clone, PartialEq)]
pub struct IoTable {
    a: SquareMatrix,
    f: Vec<f64>,
    y: Vec<f64>,
    v: Vec<f64>,
}

impl IoTable {
    /// Builds a table from flows and final demand; `Y` and `V` are derived.
    pub fn from_flows(a: SquareMatrix, f: Vec<f64>) -> Result<Self> {
        let n = a.dim();
        if n == 0 {
            return Err(Error::param("a", "table must have at least one sector"));
        }
        if f.len() != n {
            return Err(Error::param(
                "f",
                format!("final demand has {} entries, expected {n}", f.len()),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let x = a.get(i, j);
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(Error::param(
                        "a",
                        format!("flow ({i}, {j}) = {x} is not a finite non-negative number"),
                    ));
                }
            }
        }
        if let Some((i, x)) = f.iter().enumerate().find(|(_, x)| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::param(
                "f",
                format!("final demand {i} = {x} is not a finite non-negative number"),
            ));
        }
        let y: Vec<f64> = a.row_sums().iter().zip(&f).map(|(s, fi)| s + fi).collect();
        if let Some(row) = y.iter().position(|yi| *yi <= 0.0) {
            return Err(Error::ZeroOutput { row });
        }
        let v = y.iter().zip(a.col_sums()).map(|(yi, c)| yi - c).collect();
        Ok(IoTable { a, f, y, v })
    }

    pub fn n_sectors(&self) -> usize {
        self.a.dim()
    }

    pub fn flows(&self) -> &SquareMatrix {
        &self.a
    }

    pub fn final_demand(&self) -> &[f64] {
        &self.f
    }

    pub fn gross_output(&self) -> &[f64] {
        &self.y
    }

    pub fn value_added(&self) -> &[f64] {
        &self.v
    }

    /// Largest deviation from `Y_i = sum_j a_ij + F_i`.
    pub fn output_identity_error(&self) -> f64 {
        (0..self.n_sectors())
            .map(|i| (self.y[i] - self.a.row(i).iter().sum::<f64>() - self.f[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from `Y_i = sum_j a_ji + V_i`.
    pub fn input_identity_error(&self) -> f64 {
        self.a
            .col_sums()
            .iter()
            .zip(&self.y)
            .zip(&self.v)
            .map(|((c, y), v)| (y - c - v).abs())
            .fold(0.0, f64::max)
    }
}

/// Samples one table from `stream`.
///
/// Flows are drawn row-major, then the `N` final demands. With sparsity > 0
/// each flow is independently zeroed before `Y` is computed.
pub fn sample_table(params: &ModelParams, stream: &mut InstanceStream) -> Result<IoTable> {
    let sampler = EntrySampler::new(params)?;
    sample_with(&sampler, params, stream)
}

pub(crate) fn sample_with(
    sampler: &EntrySampler,
    params: &ModelParams,
    stream: &mut InstanceStream,
) -> Result<IoTable> {
    let n = params.n_sectors;
    let mut a = SquareMatrix::zeros(n);
    for i in 0..n {
        for x in a.row_mut(i) {
            *x = sampler.flow(stream.values());
        }
    }
    let f: Vec<f64> = (0..n).map(|_| sampler.demand(stream.values())).collect();
    if params.sparsity > 0.0 {
        for i in 0..n {
            for x in a.row_mut(i) {
                if stream.mask().random::<f64>() < params.sparsity {
                    *x = 0.0;
                }
            }
        }
    }
    IoTable::from_flows(a, f)
}

/// The output-share and input-share matrices of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstochasticPair {
    pub a_u: SquareMatrix,
    pub a_d: SquareMatrix,
    /// Rows of `a_d` whose sum exceeds one (negative value added).
    pub d_rowsum_violations: usize,
}

/// Number of sectors whose input-share row sum `sum_j a_ji / Y_i` exceeds one,
/// i.e. sectors with negative value added.
pub fn input_share_violations(table: &IoTable) -> usize {
    table
        .flows()
        .col_sums()
        .iter()
        .zip(table.gross_output())
        .filter(|(c, y)| *c / *y > 1.0)
        .count()
}

/// `(A_U)_ij = a_ij / Y_i`, `(A_D)_ij = a_ji / Y_i`.
pub fn build_pair(table: &IoTable) -> Result<SubstochasticPair> {
    let n = table.n_sectors();
    let y = table.gross_output();
    if let Some(row) = y.iter().position(|yi| *yi == 0.0) {
        return Err(Error::ZeroOutput { row });
    }
    let a = table.flows();
    let a_u = SquareMatrix::from_fn(n, |i, j| a.get(i, j) / y[i]);
    let a_d = SquareMatrix::from_fn(n, |i, j| a.get(j, i) / y[i]);
    let d_rowsum_violations = input_share_violations(table);
    Ok(SubstochasticPair {
        a_u,
        a_d,
        d_rowsum_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[Vec<f64>], f: &[f64]) -> IoTable {
        IoTable::from_flows(SquareMatrix::from_rows(rows).unwrap(), f.to_vec()).unwrap()
    }

    #[test]
    fn empty_flows_give_demand_as_output() {
        let params = ModelParams::exponential(2, 1.0, 0.1, 3).with_sparsity(1.0);
        let t = sample_table(&params, &mut InstanceStream::new(3, 0)).unwrap();
        assert!(t.flows().as_slice().iter().all(|x| *x == 0.0));
        assert_eq!(t.gross_output(), t.final_demand());
        assert_eq!(t.value_added(), t.final_demand());

        let t = table(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[3.0, 5.0]);
        assert_eq!(t.gross_output(), &[3.0, 5.0]);
        assert_eq!(t.value_added(), &[3.0, 5.0]);
        let p = build_pair(&t).unwrap();
        assert!(p.a_u.as_slice().iter().chain(p.a_d.as_slice()).all(|x| *x == 0.0));
        assert_eq!(p.d_rowsum_violations, 0);
    }

    #[test]
    fn scalar_pair() {
        let p = build_pair(&table(&[vec![2.0]], &[1.0])).unwrap();
        assert_eq!(p.a_u.get(0, 0), 2.0 / 3.0);
        assert_eq!(p.a_d.get(0, 0), 2.0 / 3.0);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = ModelParams::exponential(0, 1.0, 0.1, 0);
        assert!(p.validate().is_err());
        p.n_sectors = 3;
        p.mu = 0.0;
        assert!(p.validate().is_err());
        p.mu = 1.0;
        p.mu_f = -1.0;
        assert!(p.validate().is_err());
        p.mu_f = 0.1;
        p.sparsity = 1.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn rejects_degenerate_row() {
        let r = IoTable::from_flows(
            SquareMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap(),
            vec![0.0, 1.0],
        );
        assert!(matches!(r, Err(Error::ZeroOutput { row: 0 })));
    }

    #[test]
    fn rejects_negative_flow() {
        let r = IoTable::from_flows(
            SquareMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap(),
            vec![1.0, 1.0],
        );
        assert!(r.is_err());
    }

    #[test]
    fn exponential_entries_have_mean_one_over_mu() {
        let params = ModelParams::exponential(100, 1.0, 0.1, 11);
        let t = sample_table(&params, &mut InstanceStream::new(11, 0)).unwrap();
        let xs = t.flows().as_slice();
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn uniform_and_lognormal_means() {
        let base = ModelParams::exponential(200, 2.0, 0.05, 5);
        let t = sample_table(
            &base.with_disorder(Disorder::Uniform),
            &mut InstanceStream::new(5, 0),
        )
        .unwrap();
        let xs = t.flows().as_slice();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        // U[0, 1]: sd 0.2887, 40000 draws
        assert!((mean - 0.5).abs() < 4.0 * 0.2887 / 200.0);
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));

        let t = sample_table(
            &base.with_disorder(Disorder::log_normal(1.0)),
            &mut InstanceStream::new(5, 0),
        )
        .unwrap();
        let logs: Vec<f64> = t.flows().as_slice().iter().map(|x| x.ln()).collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        assert!((mean - 1.0).abs() < 4.0 / 200.0);
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let params = ModelParams::exponential(20, 1.0, 0.01, 99);
        let a = sample_table(&params, &mut InstanceStream::new(99, 4)).unwrap();
        let b = sample_table(&params, &mut InstanceStream::new(99, 4)).unwrap();
        let c = sample_table(&params, &mut InstanceStream::new(99, 5)).unwrap();
        let d = sample_table(&params, &mut InstanceStream::with_attempt(99, 4, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn sparsity_mask_leaves_surviving_values_unchanged() {
        let params = ModelParams::exponential(30, 1.0, 0.01, 1);
        let dense = sample_table(&params, &mut InstanceStream::new(1, 2)).unwrap();
        let sparse =
            sample_table(&params.with_sparsity(0.3), &mut InstanceStream::new(1, 2)).unwrap();
        assert_eq!(dense.final_demand(), sparse.final_demand());
        for (d, s) in dense.flows().as_slice().iter().zip(sparse.flows().as_slice()) {
            assert!(*s == 0.0 || s == d);
        }
        let zeros = sparse.flows().as_slice().iter().filter(|x| **x == 0.0).count();
        // 900 Bernoulli(0.3) draws: mean 270, sd ~13.7
        assert!((zeros as f64 - 270.0).abs() < 5.0 * 13.75, "zeros {zeros}");
    }
}
