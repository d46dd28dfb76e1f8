use serde::Serialize;

use super::{AnalyticArgs, Ctx, CurveArgs, Format, IngestArgs, MeasureArgs, Output, ScatterArgs, SimulateArgs, SparsityArgs, Table1Args};
use crate::analytics::{
    covariance_from_moments, covariance_routes, moments_analytic, slope_from, Phi, ROUTE_TOL,
};
use crate::error::{Error, Result};
use crate::experiments::{
    covariance_table, run_ensemble, sparsity_sweep, EnsembleSpec,
    InstanceRecord, CURVE_PAIRS, TABLE1_ROWS,
};
use crate::io::empirical::{ingest_table_with_tol, measure_empirical, write_table, TableFormat, DEFAULT_IDENTITY_TOL};
use crate::io::svg::{scatter_svg, Series};
use crate::io::{fmt_f64, write_json, write_records, write_rows};
use crate::measures::MeasureKind;
use crate::model::ModelParams;
use crate::stats::{ols, LinearFit};

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Serialize)]
struct Fit {
    x: &'static str,
    y: &'static str,
    slope: Option<f64>,
    intercept: Option<f64>,
    pearson_r: Option<f64>,
    covariance: Option<f64>,
}

fn fit(records: &[InstanceRecord], x: MeasureKind, y: MeasureKind) -> Result<Fit> {
    let points = points(records, x, y)?;
    let f: Option<LinearFit> = match ols(&points) {
        Ok(f) => Some(f),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(Fit {
        x: x.label(),
        y: y.label(),
        slope: f.map(|f| f.slope),
        intercept: f.map(|f| f.intercept),
        pearson_r: f.map(|f| f.pearson_r),
        covariance: f.map(|f| f.covariance),
    })
}

fn points(records: &[InstanceRecord], x: MeasureKind, y: MeasureKind) -> Result<Vec<(f64, f64)>> {
    records.iter().map(|r| Ok((r.get(x)?, r.get(y)?))).collect()
}

#[derive(Debug, Serialize)]
struct EnsembleSummary<'a> {
    params: &'a ModelParams,
    instances: usize,
    sector: usize,
    rejections: usize,
    flagged_instances: usize,
    #[serde(flatten)]
    primary: Fit,
    fits: Vec<Fit>,
}

fn describe(spec: &EnsembleSpec) -> String {
    let p = &spec.params;
    format!(
        "{} N={} mu={} mu_f={} sparsity={} instances={} sector={} seed={}",
        p.disorder.name(),
        p.n_sectors,
        p.mu,
        p.mu_f,
        p.sparsity,
        spec.instances,
        spec.sector_index + 1,
        p.seed
    )
}

fn print_fit(f: &Fit) {
    match (f.slope, f.pearson_r) {
        (Some(s), Some(r)) => println!("{} vs {}: slope {s:.6}, r {r:.6}", f.y, f.x),
        _ => println!("{} vs {}: no fit (constant measure)", f.y, f.x),
    }
}

fn scatter_plot(out: &Output, name: &str, title: &str, pts: &[(f64, f64)], x: &str, y: &str) -> Result<()> {
    let svg = scatter_svg(title, x, y, &[Series { label: title, color: COLORS[0], points: pts }], true);
    let path = out.path(name);
    std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))
}

pub(crate) fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<bool> {
    let spec = ctx.ensemble(&a.model)?;
    let preset = ctx.pick_enum(a.model.preset, "preset")?;
    let (x, y) = preset.map_or((MeasureKind::U1, MeasureKind::D1), |p| p.axes());
    let out = ctx.output(&a.output)?;
    println!("simulate: {}", describe(&spec));
    let run = run_ensemble(&spec)?;

    if out.wants(Format::Csv) {
        out.write("records.csv", |w| write_records(&run.records, w))?;
    }
    let primary = fit(&run.records, x, y)?;
    print_fit(&primary);
    let mut fits = Vec::new();
    for (fx, fy) in [
        (MeasureKind::U1, MeasureKind::D1),
        (MeasureKind::UTilde, MeasureKind::DTilde),
        (MeasureKind::U1, MeasureKind::UTilde),
        (MeasureKind::D1, MeasureKind::DTilde),
    ] {
        fits.push(fit(&run.records, fx, fy)?);
    }
    let flagged = run.records.iter().filter(|r| r.violations > 0).count();
    if flagged > 0 {
        println!("{flagged} instance(s) kept with negative value added");
    }
    if out.wants(Format::Json) {
        let summary = EnsembleSummary {
            params: &spec.params,
            instances: spec.instances,
            sector: spec.sector_index + 1,
            rejections: run.rejections,
            flagged_instances: flagged,
            primary,
            fits,
        };
        out.write("summary.json", |w| write_json(&summary, w))?;
    }
    if out.wants(Format::Svg) {
        let pts = points(&run.records, x, y)?;
        scatter_plot(&out, "scatter.svg", &describe(&spec), &pts, x.label(), y.label())?;
    }
    println!("wrote {}", out.dir.display());
    Ok(true)
}

pub(crate) fn scatter(ctx: &Ctx, a: &ScatterArgs) -> Result<bool> {
    let spec = ctx.ensemble(&a.model)?;
    let preset = ctx.pick_enum(a.model.preset, "preset")?;
    let (px, py) = preset.map_or((MeasureKind::U1, MeasureKind::D1), |p| p.axes());
    let x = ctx.pick(a.x, "x")?.unwrap_or(px);
    let y = ctx.pick(a.y, "y")?.unwrap_or(py);
    for k in [x, y] {
        if matches!(k, MeasureKind::U2 | MeasureKind::D2) {
            return Err(Error::param("measure", format!("{} is not recorded by ensembles", k.label())));
        }
    }
    let out = ctx.output(&a.output)?;
    println!("scatter: {}", describe(&spec));
    let run = run_ensemble(&spec)?;
    let pts = points(&run.records, x, y)?;
    if out.wants(Format::Csv) {
        let rows: Vec<Vec<String>> = run
            .records
            .iter()
            .zip(&pts)
            .map(|(r, p)| vec![r.instance.to_string(), fmt_f64(p.0), fmt_f64(p.1)])
            .collect();
        out.write("scatter.csv", |w| write_rows(&["instance", x.label(), y.label()], &rows, w))?;
    }
    let f = fit(&run.records, x, y)?;
    print_fit(&f);
    if out.wants(Format::Json) {
        out.write("scatter.json", |w| write_json(&f, w))?;
    }
    if out.wants(Format::Svg) {
        scatter_plot(&out, "scatter.svg", &describe(&spec), &pts, x.label(), y.label())?;
    }
    Ok(true)
}

pub(crate) fn table1(ctx: &Ctx, a: &Table1Args) -> Result<bool> {
    let seed = ctx.seed(a.seed.seed)?;
    let workers = ctx.workers(a.seed.workers)?;
    let m = ctx.pick(a.instances, "instances")?.unwrap_or(10_000);
    let sector = ctx.sector(a.sector)?.unwrap_or(6);
    let rows: Vec<(f64, f64, usize)> = match ctx.pick_list(a.rows.clone(), "rows")? {
        None => TABLE1_ROWS.to_vec(),
        Some(sel) => sel
            .iter()
            .map(|&r| {
                r.checked_sub(1)
                    .and_then(|i| TABLE1_ROWS.get(i).copied())
                    .ok_or_else(|| Error::param("rows", format!("row {r} is not in 1..={}", TABLE1_ROWS.len())))
            })
            .collect::<Result<_>>()?,
    };
    if m < 1000 {
        return Err(Error::param("instances", "need at least 1000 per row"));
    }
    if rows.iter().any(|r| sector >= r.2) {
        return Err(Error::param("sector", "exceeds N of a selected row"));
    }
    let out = ctx.output(&a.output)?;
    let table = covariance_table(&rows, m, sector, seed, workers)?;
    println!("{:>5} {:>7} {:>5} {:>10} {:>10} {:>10} {:>6}", "mu", "mu_f", "N", "sample", "boot_se", "exact", "z");
    for r in &table {
        println!(
            "{:>5} {:>7} {:>5} {:>10.5} {:>10.5} {:>10.5} {:>6.2}",
            r.mu, r.mu_f, r.n, r.sample_cov, r.bootstrap_se, r.analytic, r.z_score()
        );
    }
    if out.wants(Format::Csv) {
        let body: Vec<Vec<String>> = table
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.mu),
                    fmt_f64(r.mu_f),
                    r.n.to_string(),
                    fmt_f64(r.sample_cov),
                    fmt_f64(r.bootstrap_se),
                    fmt_f64(r.analytic),
                    fmt_f64(r.z_score()),
                ]
            })
            .collect();
        out.write("table1.csv", |w| {
            write_rows(&["mu", "mu_f", "N", "sample_cov", "bootstrap_se", "C_N", "z_score"], &body, w)
        })?;
    }
    if out.wants(Format::Json) {
        out.write("table1.json", |w| write_json(&table, w))?;
    }
    Ok(true)
}

pub(crate) fn sparsity(ctx: &Ctx, a: &SparsityArgs) -> Result<bool> {
    let spec = ctx.ensemble(&a.model)?;
    let levels = ctx
        .pick_list(a.levels.clone(), "levels")?
        .unwrap_or_else(|| vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
    if let Some(bad) = levels.iter().find(|s| !(0.0..=0.5).contains(*s)) {
        return Err(Error::param("levels", format!("sweep levels must lie in [0, 0.5], got {bad}")));
    }
    let out = ctx.output(&a.output)?;
    println!("sparsity: {}", describe(&spec));
    let sweep = sparsity_sweep(&spec, &levels)?;
    for p in &sweep {
        println!(
            "sparsity {:.3}: slope {:.6}, r {:.6}, excluded {}",
            p.sparsity, p.scatter.ols_slope, p.scatter.pearson_r, p.excluded
        );
    }
    if out.wants(Format::Csv) {
        let body: Vec<Vec<String>> = sweep
            .iter()
            .map(|p| {
                vec![
                    fmt_f64(p.sparsity),
                    fmt_f64(p.scatter.ols_slope),
                    fmt_f64(p.scatter.ols_intercept),
                    fmt_f64(p.scatter.pearson_r),
                    fmt_f64(p.scatter.sample_covariance),
                    p.excluded.to_string(),
                ]
            })
            .collect();
        out.write("sparsity.csv", |w| {
            write_rows(&["sparsity", "slope", "intercept", "pearson_r", "covariance", "excluded"], &body, w)
        })?;
    }
    if out.wants(Format::Json) {
        #[derive(Serialize)]
        struct Row {
            sparsity: f64,
            slope: f64,
            intercept: f64,
            pearson_r: f64,
            covariance: f64,
            excluded: usize,
        }
        let rows: Vec<Row> = sweep
            .iter()
            .map(|p| Row {
                sparsity: p.sparsity,
                slope: p.scatter.ols_slope,
                intercept: p.scatter.ols_intercept,
                pearson_r: p.scatter.pearson_r,
                covariance: p.scatter.sample_covariance,
                excluded: p.excluded,
            })
            .collect();
        out.write("sparsity.json", |w| write_json(&rows, w))?;
    }
    if out.wants(Format::Svg) {
        let series: Vec<(String, Vec<(f64, f64)>)> = sweep
            .iter()
            .map(|p| (format!("sparsity {}", p.sparsity), p.scatter.points.clone()))
            .collect();
        let s: Vec<Series> = series
            .iter()
            .enumerate()
            .map(|(k, (l, pts))| Series { label: l, color: COLORS[k % COLORS.len()], points: pts })
            .collect();
        let svg = scatter_svg("U1 vs D1 by sparsity", "U1", "D1", &s, true);
        let path = out.path("sparsity.svg");
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    Ok(true)
}

#[derive(Debug, Serialize)]
struct AnalyticRow {
    n: usize,
    mu: f64,
    mu_f: f64,
    phi: f64,
    e_r: Option<f64>,
    e_rp: Option<f64>,
    e_rrp: Option<f64>,
    e_r2: Option<f64>,
    c_n: Option<f64>,
    slope: Option<f64>,
    status: String,
}

/// Returns the row and whether it passed its internal cross-checks.
fn analytic_row(n: usize, mu: f64, mu_f: f64) -> (AnalyticRow, bool) {
    let phi = 1.0 - mu_f / mu;
    let mut row = AnalyticRow {
        n,
        mu,
        mu_f,
        phi,
        e_r: None,
        e_rp: None,
        e_rrp: None,
        e_r2: None,
        c_n: None,
        slope: None,
        status: "ok".into(),
    };
    let m = match moments_analytic(n, mu, mu_f) {
        Ok(m) => m,
        Err(e) => {
            row.status = format!("flagged: {e}");
            return (row, true);
        }
    };
    (row.e_r, row.e_rp, row.e_rrp, row.e_r2) = (Some(m.e_r), Some(m.e_rp), Some(m.e_rrp), Some(m.e_r2));
    if covariance_from_moments(&m).is_err() {
        row.status = "flagged: E[r] or E[r'] >= 1".into();
        return (row, true);
    }
    let routes = match covariance_routes(n, mu, mu_f) {
        Ok(r) => r,
        Err(e) => {
            row.status = format!("flagged: {e}");
            return (row, true);
        }
    };
    row.c_n = Some(routes.moment_route);
    let mut ok = true;
    if !(routes.relative_gap() <= ROUTE_TOL) {
        row.status = format!("route mismatch: closed form {}", routes.closed_form);
        ok = false;
    }
    match slope_from(routes.moment_route, &m) {
        Ok(s) => {
            row.slope = Some(s);
            if !((s - 1.0).abs() <= ROUTE_TOL) {
                row.status = format!("slope {s} differs from 1");
                ok = false;
            }
        }
        Err(e) => row.status = format!("flagged: {e}"),
    }
    (row, ok)
}

fn check_rate(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub(crate) fn analytic(ctx: &Ctx, a: &AnalyticArgs) -> Result<bool> {
    let table1 = a.table1 || ctx.cfg.get::<bool>("table1")?.unwrap_or(false);
    let grid: Vec<(f64, f64, usize)> = if table1 {
        TABLE1_ROWS.to_vec()
    } else {
        let ns = ctx
            .pick_list(a.n.clone(), "n")?
            .unwrap_or_else(|| vec![1, 2, 5, 10, 20, 50, 100, 200, 500]);
        let mus = ctx.pick_list(a.mu.clone(), "mu")?.unwrap_or_else(|| vec![1.0]);
        let mufs = ctx.pick_list(a.muf.clone(), "muf")?.unwrap_or_else(|| vec![0.1]);
        let mut g = Vec::new();
        for &mu in &mus {
            for &muf in &mufs {
                for &n in &ns {
                    g.push((mu, muf, n));
                }
            }
        }
        g
    };
    for &(mu, muf, n) in &grid {
        check_rate("mu", mu)?;
        check_rate("muf", muf)?;
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        Phi::from_rates(mu, muf)?;
    }
    let out = ctx.output(&a.output)?;
    let mut all_ok = true;
    let mut rows = Vec::with_capacity(grid.len());
    for &(mu, muf, n) in &grid {
        let (row, ok) = analytic_row(n, mu, muf);
        all_ok &= ok;
        match row.c_n {
            Some(c) => println!("N={n} mu={mu} mu_f={muf}: C_N {c:.6} ({})", row.status),
            None => println!("N={n} mu={mu} mu_f={muf}: {}", row.status),
        }
        rows.push(row);
    }
    if out.wants(Format::Csv) {
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_f64(r.mu),
                    fmt_f64(r.mu_f),
                    fmt_f64(r.phi),
                    opt(r.e_r),
                    opt(r.e_rp),
                    opt(r.e_rrp),
                    opt(r.e_r2),
                    opt(r.c_n),
                    opt(r.slope),
                    r.status.clone(),
                ]
            })
            .collect();
        out.write("analytic.csv", |w| {
            write_rows(
                &["N", "mu", "mu_f", "phi", "E_r", "E_rp", "E_rrp", "E_r2", "C_N", "slope", "status"],
                &body,
                w,
            )
        })?;
    }
    if out.wants(Format::Json) {
        out.write("analytic.json", |w| write_json(&rows, w))?;
    }
    Ok(all_ok)
}

pub(crate) fn curve(ctx: &Ctx, a: &CurveArgs) -> Result<bool> {
    let n_max = ctx.pick(a.n_max, "n-max")?.unwrap_or(500);
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let pairs: Vec<(f64, f64)> = match (ctx.pick_list(a.mu.clone(), "mu")?, ctx.pick_list(a.muf.clone(), "muf")?) {
        (None, None) => CURVE_PAIRS.to_vec(),
        (Some(m), Some(f)) if m.len() == f.len() => m.into_iter().zip(f).collect(),
        _ => {
            return Err(Error::param("mu", "--mu and --muf must be given together, with equal lengths"));
        }
    };
    for &(mu, muf) in &pairs {
        check_rate("mu", mu)?;
        check_rate("muf", muf)?;
        Phi::from_rates(mu, muf)?;
    }
    let out = ctx.output(&a.output)?;
    let mut ok = true;
    let mut curves = Vec::new();
    for &(mu, muf) in &pairs {
        let c = crate::analytics::covariance_curve(n_max, mu, muf)?;
        let positive = c.iter().all(|p| p.1 > 0.0);
        let increasing = c.windows(2).all(|w| w[1].1 > w[0].1);
        println!(
            "mu={mu} mu_f={muf}: C_1 {:.6}, C_{n_max} {:.6}, positive {positive}, increasing {increasing}",
            c[0].1,
            c[c.len() - 1].1
        );
        ok &= positive && increasing;
        curves.push((mu, muf, c));
    }
    if out.wants(Format::Csv) {
        let body: Vec<Vec<String>> = curves
            .iter()
            .flat_map(|(mu, muf, c)| {
                c.iter()
                    .map(move |(n, v)| vec![n.to_string(), fmt_f64(*mu), fmt_f64(*muf), fmt_f64(*v)])
            })
            .collect();
        out.write("curve.csv", |w| write_rows(&["N", "mu", "mu_f", "C_N"], &body, w))?;
    }
    if out.wants(Format::Json) {
        #[derive(Serialize)]
        struct Curve {
            mu: f64,
            mu_f: f64,
            c_n: Vec<f64>,
            positive: bool,
            increasing: bool,
        }
        let js: Vec<Curve> = curves
            .iter()
            .map(|(mu, muf, c)| Curve {
                mu: *mu,
                mu_f: *muf,
                c_n: c.iter().map(|p| p.1).collect(),
                positive: c.iter().all(|p| p.1 > 0.0),
                increasing: c.windows(2).all(|w| w[1].1 > w[0].1),
            })
            .collect();
        out.write("curve.json", |w| write_json(&js, w))?;
    }
    if out.wants(Format::Svg) {
        let labelled: Vec<(String, Vec<(f64, f64)>)> = curves
            .iter()
            .map(|(mu, muf, c)| {
                (format!("mu={mu}, mu_f={muf}"), c.iter().map(|(n, v)| (*n as f64, *v)).collect())
            })
            .collect();
        let s: Vec<Series> = labelled
            .iter()
            .enumerate()
            .map(|(k, (l, p))| Series { label: l, color: COLORS[k % COLORS.len()], points: p })
            .collect();
        let svg = scatter_svg("Covariance vs N", "N", "C_N", &s, false);
        let path = out.path("curve.svg");
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    Ok(ok)
}

fn table_format(s: &str) -> Result<TableFormat> {
    s.parse().map_err(|e: String| Error::Format(e))
}

pub(crate) fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<bool> {
    let tol = ctx.pick(a.tol, "tol")?.unwrap_or(DEFAULT_IDENTITY_TOL);
    let fmt = table_format(&a.table_format)?;
    let out = ctx.output(&a.output)?;
    let t = ingest_table_with_tol(&a.path, fmt, tol)?;
    let io = t.to_io_table()?;
    #[derive(Serialize)]
    struct Report<'a> {
        path: String,
        n_sectors: usize,
        density: f64,
        total_gross_output: f64,
        negative_value_added: Vec<&'a str>,
        output_identity_error: f64,
        input_identity_error: f64,
    }
    let report = Report {
        path: a.path.display().to_string(),
        n_sectors: t.n_sectors(),
        density: t.density,
        total_gross_output: io.gross_output().iter().sum(),
        negative_value_added: t
            .value_added
            .iter()
            .zip(&t.sector_names)
            .filter(|(v, _)| **v < 0.0)
            .map(|(_, n)| n.as_str())
            .collect(),
        output_identity_error: io.output_identity_error(),
        input_identity_error: io.input_identity_error(),
    };
    println!(
        "{}: {} sectors, density {:.4}, {} sector(s) with negative value added",
        report.path,
        report.n_sectors,
        report.density,
        report.negative_value_added.len()
    );
    if out.wants(Format::Csv) {
        out.write("table.csv", |w| write_table(&t, w))?;
    }
    if out.wants(Format::Json) {
        out.write("ingest.json", |w| write_json(&report, w))?;
    }
    Ok(true)
}

pub(crate) fn measure(ctx: &Ctx, a: &MeasureArgs) -> Result<bool> {
    let tol = ctx.pick(a.tol, "tol")?.unwrap_or(DEFAULT_IDENTITY_TOL);
    let fmt = table_format(&a.table_format)?;
    let out = ctx.output(&a.output)?;
    let t = ingest_table_with_tol(&a.path, fmt, tol)?;
    let (sectors, summary) = measure_empirical(&t)?;
    match summary.ols_slope {
        Some(s) => println!("{} sectors, density {:.4}, D1 on U1 slope {s:.6}", summary.n_sectors, summary.density),
        None => println!("{} sectors, density {:.4}, U1 constant: no slope", summary.n_sectors, summary.density),
    }
    if out.wants(Format::Csv) {
        let body: Vec<Vec<String>> = sectors
            .iter()
            .map(|s| vec![s.sector.clone(), fmt_f64(s.u1), fmt_f64(s.d1), fmt_f64(s.u_tilde), fmt_f64(s.d_tilde)])
            .collect();
        out.write("measures.csv", |w| write_rows(&["sector", "U1", "D1", "U_tilde", "D_tilde"], &body, w))?;
    }
    if out.wants(Format::Json) {
        out.write("measures.json", |w| write_json(&summary, w))?;
    }
    if out.wants(Format::Svg) {
        let pts: Vec<(f64, f64)> = sectors.iter().map(|s| (s.u1, s.d1)).collect();
        scatter_plot(&out, "measures.svg", &a.path.display().to_string(), &pts, "U1", "D1")?;
    }
    Ok(true)
}
