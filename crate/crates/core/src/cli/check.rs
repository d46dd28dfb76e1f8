//! `oracle-check`: closed forms against the independent oracles.

use serde::Serialize;

use super::{Ctx, Format, OracleArgs};
use crate::analytics::{covariance_routes, j_integral, l_integral, moments_analytic, MomentSource, ROUTE_TOL};
use crate::error::{Error, Result};
use crate::experiments::TABLE1_ROWS;
use crate::io::{fmt_f64, write_json, write_rows};
use crate::measures::{downstreamness_true, upstreamness_true};
use crate::model::{build_pair, sample_table, InstanceStream, ModelParams};
use crate::oracle::{moments_bruteforce, neumann_measure, neumann_tail_bound, quad_j, quad_l, MIN_SAMPLES};

pub const INTEGRAL_PAIRS: [(f64, f64); 4] = [(1.0, 0.1), (1.0, 0.001), (2.0, 0.005), (3.0, 0.001)];
const J_TOL: f64 = 1e-10;
const L_TOL: f64 = 1e-8;
const NEUMANN_TOL: f64 = 1e-10;
const EXACT_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub group: &'static str,
    pub case: String,
    pub value: f64,
    pub reference: f64,
    /// Relative error, or distance in standard errors for sampled checks.
    pub error: f64,
    pub tol: f64,
    pub pass: bool,
}

fn rel(group: &'static str, case: String, value: f64, reference: f64, tol: f64) -> CheckLine {
    let error = (value - reference).abs() / reference.abs();
    CheckLine { group, case, value, reference, error, tol, pass: error <= tol }
}

fn failed(group: &'static str, case: String, e: &Error, tol: f64) -> CheckLine {
    log::warn!("{group} {case}: {e}");
    CheckLine { group, case, value: f64::NAN, reference: f64::NAN, error: f64::INFINITY, tol, pass: false }
}

fn integrals(k_max: usize, j_tol: f64, l_tol: f64, lines: &mut Vec<CheckLine>) {
    for &(mu, mu_f) in &INTEGRAL_PAIRS {
        for k in 2..=k_max {
            let case = format!("k={k} mu={mu} mu_f={mu_f}");
            match (j_integral(k, mu, mu_f), quad_j(k, mu, mu_f, QUAD_TOL)) {
                (Ok(v), Ok(q)) => lines.push(rel("J vs quadrature", case.clone(), v, q.value, j_tol)),
                (Err(e), _) | (_, Err(e)) => lines.push(failed("J vs quadrature", case.clone(), &e, j_tol)),
            }
            match (l_integral(k, mu, mu_f), quad_l(k, mu, mu_f, QUAD_TOL)) {
                (Ok(v), Ok(q)) => lines.push(rel("L vs quadrature", case, v, q.value, l_tol)),
                (Err(e), _) | (_, Err(e)) => lines.push(failed("L vs quadrature", case, &e, l_tol)),
            }
        }
    }
}

/// `mu_f = mu`: `J(k) = 1 / (k mu^k)`, `L(k) = mu^{1-k} / (k (k - 1))`.
fn equal_rates(tol: f64, lines: &mut Vec<CheckLine>) {
    for mu in [0.5f64, 1.0, 2.0] {
        for k in [2usize, 3, 10, 50] {
            let kf = k as f64;
            let case = format!("k={k} mu=mu_f={mu}");
            let j_exact = 1.0 / (kf * mu.powi(k as i32));
            let l_exact = mu.powi(1 - k as i32) / (kf * (kf - 1.0));
            for (name, got) in [
                ("J", j_integral(k, mu, mu)),
                ("L", l_integral(k, mu, mu)),
                ("quad J", quad_j(k, mu, mu, QUAD_TOL).map(|q| q.value)),
                ("quad L", quad_l(k, mu, mu, QUAD_TOL).map(|q| q.value)),
            ] {
                let exact = if name.ends_with('J') { j_exact } else { l_exact };
                let c = format!("{name} {case}");
                match got {
                    Ok(v) => lines.push(rel("equal rates", c, v, exact, tol)),
                    Err(e) => lines.push(failed("equal rates", c, &e, tol)),
                }
            }
        }
    }
}

fn moments(samples: usize, sigmas: f64, seed: u64, lines: &mut Vec<CheckLine>) -> Result<()> {
    const NAMES: [&str; 4] = ["E[r]", "E[r']", "E[rr']", "E[r^2]"];
    for n in [1usize, 5, 20] {
        let params = ModelParams::exponential(n, 1.0, 0.1, seed);
        let exact = moments_analytic(n, 1.0, 0.1)?;
        let mc = moments_bruteforce(&params, samples)?;
        let MomentSource::MonteCarlo { std_errors, .. } = mc.source else {
            unreachable!("brute force always reports standard errors")
        };
        for k in 0..4 {
            let (v, r, se) = (mc.as_array()[k], exact.as_array()[k], std_errors[k]);
            let z = (v - r).abs() / se;
            lines.push(CheckLine {
                group: "moments vs brute force",
                case: format!("{} N={n} mu=1 mu_f=0.1", NAMES[k]),
                value: v,
                reference: r,
                error: z,
                tol: sigmas,
                pass: z <= sigmas,
            });
        }
    }
    Ok(())
}

fn neumann_terms(m: &crate::linalg::SquareMatrix) -> Result<usize> {
    let mut terms = 16;
    while neumann_tail_bound(m, terms)? > 1e-15 {
        terms *= 2;
        if terms > 1 << 20 {
            return Err(Error::OutsideValidity("Neumann series converges too slowly".into()));
        }
    }
    Ok(terms)
}

fn neumann(tol: f64, seed: u64, lines: &mut Vec<CheckLine>) -> Result<()> {
    let params = ModelParams::exponential(5, 1.0, 0.01, seed);
    // the first instance whose A_D is substochastic, so both series converge
    for instance in 0..1000u64 {
        let table = sample_table(&params, &mut InstanceStream::new(seed, instance))?;
        let pair = build_pair(&table)?;
        if pair.d_rowsum_violations > 0 {
            continue;
        }
        let u = upstreamness_true(&pair.a_u)?;
        let d = downstreamness_true(&pair.a_d)?;
        let nu = neumann_measure(&pair.a_u, neumann_terms(&pair.a_u)?)?;
        let nd = neumann_measure(&pair.a_d, neumann_terms(&pair.a_d)?)?;
        for i in 0..5 {
            lines.push(rel("Neumann vs solve", format!("U1[{}] instance {instance}", i + 1), u.values[i], nu[i], tol));
            lines.push(rel("Neumann vs solve", format!("D1[{}] instance {instance}", i + 1), d.values[i], nd[i], tol));
        }
        return Ok(());
    }
    Err(Error::OutsideValidity("no instance with substochastic A_D in 1000 draws".into()))
}

fn routes(tol: f64, lines: &mut Vec<CheckLine>) {
    for (mu, mu_f, n) in TABLE1_ROWS {
        let case = format!("N={n} mu={mu} mu_f={mu_f}");
        match covariance_routes(n, mu, mu_f) {
            Ok(r) => lines.push(rel("covariance routes", case, r.moment_route, r.closed_form, tol)),
            Err(e) => lines.push(failed("covariance routes", case, &e, tol)),
        }
    }
}

#[derive(Debug, Serialize)]
struct GroupSummary {
    group: &'static str,
    cases: usize,
    failures: usize,
    worst_error: f64,
    worst_case: String,
    tol: f64,
}

fn summarize(lines: &[CheckLine]) -> Vec<GroupSummary> {
    let mut groups: Vec<GroupSummary> = Vec::new();
    for l in lines {
        let g = match groups.iter_mut().find(|g| g.group == l.group) {
            Some(g) => g,
            None => {
                groups.push(GroupSummary {
                    group: l.group,
                    cases: 0,
                    failures: 0,
                    worst_error: 0.0,
                    worst_case: String::new(),
                    tol: l.tol,
                });
                groups.last_mut().unwrap()
            }
        };
        g.cases += 1;
        g.failures += usize::from(!l.pass);
        if !(l.error <= g.worst_error) {
            g.worst_error = l.error;
            g.worst_case = l.case.clone();
        }
    }
    groups
}

pub(crate) fn oracle_check(ctx: &Ctx, a: &OracleArgs) -> Result<bool> {
    let tol = ctx.pick(a.tol, "tol")?;
    if let Some(t) = tol {
        if !(t >= 0.0) {
            return Err(Error::param("tol", format!("must be non-negative, got {t}")));
        }
    }
    let samples = ctx.pick(a.samples, "samples")?.unwrap_or(1_000_000);
    if samples < MIN_SAMPLES {
        return Err(Error::param("samples", format!("need at least {MIN_SAMPLES}")));
    }
    let sigmas = ctx.pick(a.sigmas, "sigmas")?.unwrap_or(4.0);
    if !(sigmas > 0.0) {
        return Err(Error::param("sigmas", "must be positive"));
    }
    let k_max = ctx.pick(a.k_max, "k-max")?.unwrap_or(502);
    if k_max < 2 {
        return Err(Error::param("k_max", "must be at least 2"));
    }
    let seed = ctx.seed(a.seed)?;
    let out = ctx.output(&a.output)?;

    let mut lines = Vec::new();
    integrals(k_max, tol.unwrap_or(J_TOL), tol.unwrap_or(L_TOL), &mut lines);
    equal_rates(tol.unwrap_or(EXACT_TOL), &mut lines);
    routes(tol.unwrap_or(ROUTE_TOL), &mut lines);
    neumann(tol.unwrap_or(NEUMANN_TOL), seed, &mut lines)?;
    moments(samples, sigmas, seed, &mut lines)?;

    let groups = summarize(&lines);
    for g in &groups {
        let unit = if g.group == "moments vs brute force" { "SE" } else { "rel" };
        if g.failures == 0 {
            println!(
                "PASS  {:<24} {:>5} cases, worst {:.3e} {unit} (tol {:.1e}) at {}",
                g.group, g.cases, g.worst_error, g.tol, g.worst_case
            );
        } else {
            println!(
                "FAIL  {:<24} {:>5}/{} cases failed, worst {:.3e} {unit} (tol {:.1e}) at {}",
                g.group, g.failures, g.cases, g.worst_error, g.tol, g.worst_case
            );
        }
    }
    let ok = groups.iter().all(|g| g.failures == 0);
    println!("{}", if ok { "all checks passed" } else { "some checks FAILED" });

    if out.wants(Format::Csv) {
        let body: Vec<Vec<String>> = lines
            .iter()
            .map(|l| {
                vec![
                    l.group.to_string(),
                    l.case.clone(),
                    fmt_f64(l.value),
                    fmt_f64(l.reference),
                    fmt_f64(l.error),
                    fmt_f64(l.tol),
                    if l.pass { "pass" } else { "fail" }.to_string(),
                ]
            })
            .collect();
        out.write("oracle_report.csv", |w| {
            write_rows(&["check", "case", "value", "reference", "error", "tol", "result"], &body, w)
        })?;
    }
    if out.wants(Format::Json) {
        out.write("oracle_report.json", |w| write_json(&groups, w))?;
    }
    Ok(ok)
}
