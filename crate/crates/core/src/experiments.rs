//! Monte Carlo ensembles of full tables: per-instance measures of one
//! sector, scatter fits, the covariance table and the sparsity sweep.
//!
//! Sector indices are 0-based here; reports print them 1-based.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::covariance_exact;
use crate::error::{Error, Result};
use crate::measures::{rank1_from_table, true_measures, MeasureKind};
use crate::model::{
    input_share_violations, sample_with, Disorder, EntrySampler, InstanceStream, IoTable,
    ModelParams, ViolationPolicy,
};
use crate::stats::{bootstrap_cov_se, ols};

/// Resampling cap per instance under [`ViolationPolicy::Reject`].
pub const MAX_ATTEMPTS: usize = 10_000;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const DEFAULT_SEED: u64 = 20_230_407;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub params: ModelParams,
    pub instances: usize,
    pub sector_index: usize,
    pub policy: ViolationPolicy,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
}

impl EnsembleSpec {
    pub fn new(params: ModelParams, instances: usize, sector_index: usize) -> Self {
        EnsembleSpec {
            params,
            instances,
            sector_index,
            policy: ViolationPolicy::Flag,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_policy(mut self, policy: ViolationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.instances < 2 {
            return Err(Error::param("instances", "need at least 2"));
        }
        if self.sector_index >= self.params.n_sectors {
            return Err(Error::param(
                "sector",
                format!(
                    "sector {} (1-based) exceeds N = {}",
                    self.sector_index + 1,
                    self.params.n_sectors
                ),
            ));
        }
        if self.workers == 0 {
            return Err(Error::param("workers", "need at least 1"));
        }
        Ok(())
    }
}

/// Measures of the tracked sector in one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance: usize,
    pub u1: f64,
    pub d1: f64,
    pub u_tilde: f64,
    pub d_tilde: f64,
    /// Rows of `A_D` with sum above one in the kept table.
    pub violations: usize,
    /// Tables drawn for this instance (1 unless rejections happened).
    pub attempts: usize,
}

impl InstanceRecord {
    pub fn get(&self, kind: MeasureKind) -> Result<f64> {
        match kind {
            MeasureKind::U1 => Ok(self.u1),
            MeasureKind::D1 => Ok(self.d1),
            MeasureKind::UTilde => Ok(self.u_tilde),
            MeasureKind::DTilde => Ok(self.d_tilde),
            other => Err(Error::param(
                "measure",
                format!("{} is not recorded by ensembles", other.label()),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutput {
    pub records: Vec<InstanceRecord>,
    /// Tables discarded under the reject policy.
    pub rejections: usize,
    /// Instances whose solve failed; only non-empty for lenient runs.
    pub excluded: Vec<usize>,
}

fn draw(
    sampler: &EntrySampler,
    spec: &EnsembleSpec,
    instance: usize,
) -> Result<(IoTable, usize, usize)> {
    let p = &spec.params;
    for attempt in 0..MAX_ATTEMPTS {
        let mut stream = InstanceStream::with_attempt(p.seed, instance as u64, attempt as u64);
        let table = sample_with(sampler, p, &mut stream)?;
        let violations = input_share_violations(&table);
        if violations == 0 || spec.policy == ViolationPolicy::Flag {
            return Ok((table, violations, attempt + 1));
        }
    }
    Err(Error::OutsideValidity(format!(
        "no table without A_D row-sum violations in {MAX_ATTEMPTS} attempts"
    )))
}

fn run_instance(sampler: &EntrySampler, spec: &EnsembleSpec, instance: usize) -> Result<InstanceRecord> {
    let (table, violations, attempts) = draw(sampler, spec, instance)?;
    let (u1, d1) = true_measures(&table)?;
    let (ut, dt) = rank1_from_table(&table)?;
    let i = spec.sector_index;
    Ok(InstanceRecord {
        instance,
        u1: u1.values[i],
        d1: d1.values[i],
        u_tilde: ut.values[i],
        d_tilde: dt.values[i],
        violations,
        attempts,
    })
}

fn run_all(spec: &EnsembleSpec) -> Result<Vec<Result<InstanceRecord>>> {
    spec.validate()?;
    let sampler = EntrySampler::new(&spec.params)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    Ok(pool.install(|| {
        (0..spec.instances)
            .into_par_iter()
            .map(|k| {
                run_instance(&sampler, spec, k).map_err(|e| Error::Instance {
                    instance: k,
                    source: Box::new(e),
                })
            })
            .collect()
    }))
}

fn collect(results: Vec<Result<InstanceRecord>>, lenient: bool) -> Result<EnsembleOutput> {
    let mut records = Vec::with_capacity(results.len());
    let mut excluded = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(Error::Instance { instance, source }) if lenient => {
                log::warn!("instance {instance} excluded: {source}");
                excluded.push(instance);
            }
            Err(e) => return Err(e),
        }
    }
    let rejections = records.iter().map(|r| r.attempts - 1).sum();
    Ok(EnsembleOutput {
        records,
        rejections,
        excluded,
    })
}

/// Samples `spec.instances` tables and records the tracked sector's
/// `U1`, `D1`, `U~`, `D~`. Output is identical for any worker count.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleOutput> {
    collect(run_all(spec)?, false)
}

/// As [`run_ensemble`], but instances whose solve fails are dropped and
/// listed in `excluded` instead of aborting the run.
pub fn run_ensemble_lenient(spec: &EnsembleSpec) -> Result<EnsembleOutput> {
    collect(run_all(spec)?, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterResult {
    pub points: Vec<(f64, f64)>,
    pub ols_slope: f64,
    pub ols_intercept: f64,
    pub pearson_r: f64,
    pub sample_covariance: f64,
}

pub fn scatter_from_records(
    records: &[InstanceRecord],
    x_kind: MeasureKind,
    y_kind: MeasureKind,
) -> Result<ScatterResult> {
    let points = records
        .iter()
        .map(|r| Ok((r.get(x_kind)?, r.get(y_kind)?)))
        .collect::<Result<Vec<_>>>()?;
    let fit = ols(&points)?;
    Ok(ScatterResult {
        points,
        ols_slope: fit.slope,
        ols_intercept: fit.intercept,
        pearson_r: fit.pearson_r,
        sample_covariance: fit.covariance,
    })
}

pub fn scatter_uv(spec: &EnsembleSpec, x_kind: MeasureKind, y_kind: MeasureKind) -> Result<ScatterResult> {
    // reject unsupported kinds before paying for the ensemble
    let probe = InstanceRecord {
        instance: 0,
        u1: 0.0,
        d1: 0.0,
        u_tilde: 0.0,
        d_tilde: 0.0,
        violations: 0,
        attempts: 0,
    };
    probe.get(x_kind)?;
    probe.get(y_kind)?;
    scatter_from_records(&run_ensemble(spec)?.records, x_kind, y_kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRow {
    pub mu: f64,
    pub mu_f: f64,
    pub n: usize,
    pub sample_cov: f64,
    pub bootstrap_se: f64,
    pub analytic: f64,
}

impl CovarianceRow {
    /// `|sample - analytic|` in bootstrap standard errors.
    pub fn z_score(&self) -> f64 {
        (self.sample_cov - self.analytic).abs() / self.bootstrap_se
    }
}

/// Sample `Cov(U1_i, D1_i)` over `m` instances next to `C_N` for each
/// `(mu, mu_f, n)` row.
pub fn covariance_table(
    rows: &[(f64, f64, usize)],
    m: usize,
    sector_index: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<CovarianceRow>> {
    if m < 1000 {
        return Err(Error::param("instances", format!("need at least 1000, got {m}")));
    }
    rows.iter()
        .enumerate()
        .map(|(k, &(mu, mu_f, n))| {
            let row_seed = seed.wrapping_add(k as u64);
            let params = ModelParams::exponential(n, mu, mu_f, row_seed);
            let spec = EnsembleSpec::new(params, m, sector_index).with_workers(workers);
            let out = run_ensemble(&spec)?;
            let scatter = scatter_from_records(&out.records, MeasureKind::U1, MeasureKind::D1)?;
            Ok(CovarianceRow {
                mu,
                mu_f,
                n,
                sample_cov: scatter.sample_covariance,
                bootstrap_se: bootstrap_cov_se(&scatter.points, BOOTSTRAP_RESAMPLES, row_seed)?,
                analytic: covariance_exact(n, mu, mu_f)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sparsity: f64,
    pub scatter: ScatterResult,
    pub excluded: usize,
}

/// `(U1, D1)` scatter fit at each sparsity level; failed instances are
/// dropped with a warning and counted.
pub fn sparsity_sweep(base: &EnsembleSpec, sparsities: &[f64]) -> Result<Vec<SweepPoint>> {
    sparsities
        .iter()
        .map(|&s| {
            if !(0.0..=0.5).contains(&s) {
                return Err(Error::param(
                    "sparsity",
                    format!("sweep levels must lie in [0, 0.5], got {s}"),
                ));
            }
            let mut spec = *base;
            spec.params.sparsity = s;
            let out = run_ensemble_lenient(&spec)?;
            if !out.excluded.is_empty() {
                log::warn!(
                    "sparsity {s}: {} instance(s) excluded after solver failure",
                    out.excluded.len()
                );
            }
            Ok(SweepPoint {
                sparsity: s,
                scatter: scatter_from_records(&out.records, MeasureKind::U1, MeasureKind::D1)?,
                excluded: out.excluded.len(),
            })
        })
        .collect()
}

/// `(mu, mu_f, N)` rows of the reference covariance table.
pub const TABLE1_ROWS: [(f64, f64, usize); 5] = [
    (1.0, 0.001, 200),
    (2.0, 0.005, 400),
    (3.0, 0.001, 300),
    (1.2, 0.001, 500),
    (1.5, 0.003, 350),
];

/// `(mu, mu_f)` pairs of the covariance-vs-N curves.
pub const CURVE_PAIRS: [(f64, f64); 4] = [(1.0, 0.1), (2.0, 0.1), (2.0, 0.05), (2.0, 0.01)];

/// Named reference ensembles (sector 7, 1000 instances).
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
pub enum Preset {
    /// Exponential, N=100, mu=1, mu_f=0.1 (U~ vs U1).
    Fig2,
    /// Exponential, N=100, mu=1, mu_f=0.01 (D~ vs D1).
    Fig3,
    /// Exponential, N=200, mu=1, mu_f=0.005 (U1 vs D1).
    Fig4,
    /// Log-normal, N=400, mu'=1, demand log-mean 6.67.
    Fig6,
    /// Uniform, N=400, mu=1, mu_f=0.05.
    Fig7,
}

impl Preset {
    pub fn spec(self, seed: u64) -> EnsembleSpec {
        let exp = |n, mu_f| ModelParams::exponential(n, 1.0, mu_f, seed);
        let params = match self {
            Preset::Fig2 => exp(100, 0.1),
            Preset::Fig3 => exp(100, 0.01),
            Preset::Fig4 => exp(200, 0.005),
            Preset::Fig6 => exp(400, 0.05).with_disorder(Disorder::log_normal(1.0)),
            Preset::Fig7 => exp(400, 0.05).with_disorder(Disorder::Uniform),
        };
        EnsembleSpec::new(params, 1000, 6)
    }

    /// The pair of measures the preset is meant to compare.
    pub fn axes(self) -> (MeasureKind, MeasureKind) {
        match self {
            Preset::Fig2 => (MeasureKind::U1, MeasureKind::UTilde),
            Preset::Fig3 => (MeasureKind::D1, MeasureKind::DTilde),
            _ => (MeasureKind::U1, MeasureKind::D1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_sparse_ensemble_is_all_ones() {
        let params = ModelParams::exponential(5, 1.0, 0.1, 4).with_sparsity(1.0);
        let out = run_ensemble(&EnsembleSpec::new(params, 2, 0)).unwrap();
        assert_eq!(out.records.len(), 2);
        for r in &out.records {
            for v in [r.u1, r.d1, r.u_tilde, r.d_tilde] {
                assert!((v - 1.0).abs() < 1e-15, "{v}");
            }
            assert_eq!(r.violations, 0);
        }
    }

    #[test]
    fn spec_validation() {
        let params = ModelParams::exponential(5, 1.0, 0.1, 4);
        assert!(EnsembleSpec::new(params, 1, 0).validate().is_err());
        assert!(EnsembleSpec::new(params, 10, 5).validate().is_err());
        assert!(EnsembleSpec::new(params, 10, 4).with_workers(0).validate().is_err());
        assert!(EnsembleSpec::new(params, 10, 4).validate().is_ok());
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let params = ModelParams::exponential(30, 1.0, 0.05, 12);
        let spec = EnsembleSpec::new(params, 40, 6);
        let a = run_ensemble(&spec.with_workers(1)).unwrap();
        let b = run_ensemble(&spec.with_workers(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reject_policy_resamples() {
        // small final demand makes negative value added common
        let params = ModelParams::exponential(20, 1.0, 0.05, 3);
        let flag = run_ensemble(&EnsembleSpec::new(params, 30, 0)).unwrap();
        let reject =
            run_ensemble(&EnsembleSpec::new(params, 30, 0).with_policy(ViolationPolicy::Reject))
                .unwrap();
        assert!(flag.records.iter().any(|r| r.violations > 0));
        assert!(reject.records.iter().all(|r| r.violations == 0));
        assert!(reject.rejections > 0);
        assert_eq!(flag.rejections, 0);
    }

    #[test]
    fn unsupported_scatter_axis() {
        let spec = EnsembleSpec::new(ModelParams::exponential(5, 1.0, 0.1, 1), 5, 0);
        assert!(scatter_uv(&spec, MeasureKind::U2, MeasureKind::D1).is_err());
    }

    #[test]
    fn sweep_rejects_out_of_range_levels() {
        let spec = EnsembleSpec::new(ModelParams::exponential(5, 1.0, 0.1, 1), 5, 0);
        assert!(sparsity_sweep(&spec, &[0.7]).is_err());
    }

    #[test]
    fn zero_sparsity_sweep_reproduces_baseline() {
        let spec = EnsembleSpec::new(ModelParams::exponential(25, 1.0, 0.05, 9), 30, 6);
        let base = scatter_uv(&spec, MeasureKind::U1, MeasureKind::D1).unwrap();
        let sweep = sparsity_sweep(&spec, &[0.0]).unwrap();
        assert_eq!(sweep[0].scatter, base);
    }

    #[test]
    fn covariance_table_needs_enough_instances() {
        assert!(covariance_table(&[(1.0, 0.1, 10)], 10, 0, 1, 1).is_err());
    }
}
