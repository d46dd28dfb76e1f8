//! Command-line front end.
//!
//! Every value is resolved as flag, then config file, then default; the seed
//! additionally falls back to `GVC_RANDLAB_SEED` before the built-in default.
//! All inputs are validated before any computation starts.

mod args;
mod check;
mod commands;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, ValueEnum};

pub use args::*;

use crate::error::{Error, Result};
use crate::experiments::{EnsembleSpec, DEFAULT_SEED};
use crate::io::config::RunConfig;
use crate::model::{Disorder, ModelParams, ViolationPolicy};

pub const SEED_ENV: &str = "GVC_RANDLAB_SEED";

const KNOWN_KEYS: &[&str] = &[
    "preset", "n", "mu", "muf", "disorder", "mu-prime", "sigma", "muf-prime", "sigma-f",
    "sparsity", "instances", "sector", "policy", "seed", "workers", "out", "format", "x", "y",
    "rows", "levels", "table1", "n-max", "tol", "samples", "sigmas", "k-max",
];

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(1)
        }
    }
}

/// Runs one subcommand; `Ok(false)` means it finished but a check failed.
pub fn run(cli: Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let unknown: Vec<&str> = cfg.keys().filter(|k| !KNOWN_KEYS.contains(k)).collect();
    if !unknown.is_empty() {
        return Err(Error::Format(format!("unknown config key(s): {}", unknown.join(", "))));
    }
    let ctx = Ctx { cfg };
    match cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, &a),
        Command::Scatter(a) => commands::scatter(&ctx, &a),
        Command::Table1(a) => commands::table1(&ctx, &a),
        Command::Sparsity(a) => commands::sparsity(&ctx, &a),
        Command::Analytic(a) => commands::analytic(&ctx, &a),
        Command::Curve(a) => commands::curve(&ctx, &a),
        Command::OracleCheck(a) => check::oracle_check(&ctx, &a),
        Command::Ingest(a) => commands::ingest(&ctx, &a),
        Command::Measure(a) => commands::measure(&ctx, &a),
    }
}

pub(crate) struct Ctx {
    cfg: RunConfig,
}

pub(crate) struct Output {
    dir: PathBuf,
    formats: BTreeSet<Format>,
}

impl Output {
    pub(crate) fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub(crate) fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub(crate) fn write(&self, name: &str, body: impl FnOnce(&mut dyn std::io::Write) -> Result<()>) -> Result<PathBuf> {
        let path = self.path(name);
        let mut w = crate::io::create(&path)?;
        body(&mut w)?;
        std::io::Write::flush(&mut w).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

impl Ctx {
    pub(crate) fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.cfg.pick(flag, key)
    }

    pub(crate) fn pick_enum<T: ValueEnum>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.cfg
            .raw(key)
            .map(|v| {
                T::from_str(v, true)
                    .map_err(|e| Error::Format(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    pub(crate) fn pick_list<T: FromStr>(&self, flag: Option<Vec<T>>, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.cfg
            .raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim().parse::<T>().map_err(|e| {
                            Error::Format(format!("config key `{key}`: bad value `{s}`: {e}"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub(crate) fn seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(s) = self.pick(flag, "seed")? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    pub(crate) fn workers(&self, flag: Option<usize>) -> Result<usize> {
        match self.pick(flag, "workers")? {
            Some(0) => Err(Error::param("workers", "need at least 1")),
            Some(w) => Ok(w),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }

    /// 1-based sector flag to a 0-based index.
    pub(crate) fn sector(&self, flag: Option<usize>) -> Result<Option<usize>> {
        match self.pick(flag, "sector")? {
            Some(0) => Err(Error::param("sector", "sectors are numbered from 1")),
            Some(s) => Ok(Some(s - 1)),
            None => Ok(None),
        }
    }

    pub(crate) fn output(&self, a: &OutputArgs) -> Result<Output> {
        let dir = self
            .pick(a.out.clone(), "out")?
            .unwrap_or_else(|| PathBuf::from("out"));
        let formats: BTreeSet<Format> = match a.format.clone() {
            Some(f) => f.into_iter().collect(),
            None => match self.cfg.raw("format") {
                Some(v) => v
                    .split(',')
                    .map(|s| {
                        Format::from_str(s.trim(), true)
                            .map_err(|e| Error::Format(format!("config key `format`: {e}")))
                    })
                    .collect::<Result<_>>()?,
                None => [Format::Csv, Format::Json].into_iter().collect(),
            },
        };
        ensure_dir(&dir)?;
        Ok(Output { dir, formats })
    }

    pub(crate) fn ensemble(&self, m: &ModelArgs) -> Result<EnsembleSpec> {
        let seed = self.seed(m.seed.seed)?;
        let preset = self.pick_enum(m.preset, "preset")?;
        let mut spec = match preset {
            Some(p) => p.spec(seed),
            None => EnsembleSpec::new(ModelParams::exponential(100, 1.0, 0.1, seed), 1000, 6),
        };
        let p = &mut spec.params;
        if let Some(n) = self.pick(m.n, "n")? {
            p.n_sectors = n;
        }
        if let Some(mu) = self.pick(m.mu, "mu")? {
            p.mu = mu;
        }
        if let Some(muf) = self.pick(m.muf, "muf")? {
            p.mu_f = muf;
        }
        match self.pick_enum(m.disorder, "disorder")? {
            Some(DisorderArg::Exp) => p.disorder = Disorder::Exponential,
            Some(DisorderArg::Uniform) => p.disorder = Disorder::Uniform,
            Some(DisorderArg::Lognormal) => {
                if !matches!(p.disorder, Disorder::LogNormal { .. }) {
                    p.disorder = Disorder::log_normal(1.0);
                }
            }
            None => {}
        }
        let knobs = [
            ("mu-prime", self.pick(m.mu_prime, "mu-prime")?),
            ("sigma", self.pick(m.sigma, "sigma")?),
            ("muf-prime", self.pick(m.muf_prime, "muf-prime")?),
            ("sigma-f", self.pick(m.sigma_f, "sigma-f")?),
        ];
        match &mut p.disorder {
            Disorder::LogNormal {
                mu_prime,
                sigma,
                demand_log_mean,
                demand_log_sigma,
            } => {
                let slots = [mu_prime, sigma, demand_log_mean, demand_log_sigma];
                for ((_, v), slot) in knobs.iter().zip(slots) {
                    if let Some(v) = v {
                        *slot = *v;
                    }
                }
            }
            _ => {
                if let Some((name, _)) = knobs.iter().find(|(_, v)| v.is_some()) {
                    return Err(Error::Format(format!(
                        "--{name} only applies to --disorder lognormal"
                    )));
                }
            }
        }
        if let Some(s) = self.pick(m.sparsity, "sparsity")? {
            p.sparsity = s;
        }
        if let Some(i) = self.pick(m.instances, "instances")? {
            spec.instances = i;
        }
        if let Some(s) = self.sector(m.sector)? {
            spec.sector_index = s;
        }
        if let Some(policy) = self.pick_enum(m.policy, "policy")? {
            spec.policy = match policy {
                PolicyArg::Flag => ViolationPolicy::Flag,
                PolicyArg::Reject => ViolationPolicy::Reject,
            };
        }
        spec.workers = self.workers(m.seed.workers)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let md = std::fs::metadata(dir).map_err(|e| Error::io(dir, e))?;
    if md.permissions().readonly() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::PermissionDenied, "directory is read-only"),
        ));
    }
    Ok(())
}
