//! C interface to `gvc_randlab`.
//!
//! Every fallible call returns a [`GvcStatus`]; on anything but `GVC_STATUS_OK`
//! the message is available from [`gvc_last_error_message`] on the same
//! thread. Ensembles and tables are opaque handles released with their
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use gvc_randlab::analytics;
use gvc_randlab::experiments::{run_ensemble, EnsembleSpec, InstanceRecord};
use gvc_randlab::io::empirical::{ingest_table_with_tol, measure_empirical, EmpiricalTable, TableFormat};
use gvc_randlab::io::write_records;
use gvc_randlab::linalg::SquareMatrix;
use gvc_randlab::measures::MeasureKind;
use gvc_randlab::model::{Disorder, ModelParams, ViolationPolicy};
use gvc_randlab::stats::ols;
use gvc_randlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Singular system, non-substochastic matrix, failed convergence.
    Numerical = 3,
    /// Result outside the range where the closed forms are valid or representable.
    OutOfRange = 4,
    Io = 5,
    /// Malformed input file or accounting identity violated.
    Format = 6,
    Panic = 7,
}

/// Pass only the listed values; the selector enums are read as-is.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvcDisorder {
    Exponential = 0,
    Uniform = 1,
    LogNormal = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvcPolicy {
    Flag = 0,
    Reject = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvcMeasure {
    U1 = 0,
    D1 = 1,
    UTilde = 2,
    DTilde = 3,
}

/// Ensemble parameters. `mu_prime`, `sigma`, `demand_log_mean` and
/// `demand_log_sigma` are read only for log-normal disorder. `sector` is
/// 1-based; `workers = 0` means one.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GvcEnsembleParams {
    pub n_sectors: usize,
    pub mu: f64,
    pub mu_f: f64,
    pub disorder: GvcDisorder,
    pub mu_prime: f64,
    pub sigma: f64,
    pub demand_log_mean: f64,
    pub demand_log_sigma: f64,
    pub sparsity: f64,
    pub seed: u64,
    pub instances: usize,
    pub sector: usize,
    pub policy: GvcPolicy,
    pub workers: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GvcMoments {
    pub e_r: f64,
    pub e_rp: f64,
    pub e_rrp: f64,
    pub e_r2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GvcRecord {
    pub instance: usize,
    pub u1: f64,
    pub d1: f64,
    pub u_tilde: f64,
    pub d_tilde: f64,
    pub violations: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GvcFit {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub covariance: f64,
}

/// Opaque ensemble result.
pub struct GvcEnsemble {
    records: Vec<InstanceRecord>,
}

/// Opaque input-output table.
pub struct GvcTable {
    table: EmpiricalTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GvcStatus {
    match e {
        Error::InvalidParameter { .. } | Error::ZeroOutput { .. } | Error::Degenerate(_) => {
            GvcStatus::InvalidArgument
        }
        Error::NotSubstochastic { .. }
        | Error::MeanRowSum { .. }
        | Error::Singular { .. }
        | Error::NoConvergence { .. }
        | Error::Quadrature { .. }
        | Error::RouteMismatch { .. } => GvcStatus::Numerical,
        Error::OutsideValidity(_) | Error::Overflow { .. } => GvcStatus::OutOfRange,
        Error::Instance { source, .. } => status_of(source),
        Error::Format(_) | Error::Identity(_) | Error::Csv(_) | Error::Json(_) => GvcStatus::Format,
        Error::Io { .. } => GvcStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (GvcStatus, String)>) -> GvcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GvcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            GvcStatus::Panic
        }
    }
}

fn lib<T>(r: gvc_randlab::Result<T>) -> Result<T, (GvcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GvcStatus, String) {
    (GvcStatus::NullPointer, format!("`{what}` is NULL"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (GvcStatus, String)> {
    // SAFETY: the caller guarantees `p` is NULL or valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, (GvcStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    // SAFETY: non-NULL and, per the contract, NUL-terminated.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| (GvcStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
    Ok(Path::new(s))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gvc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gvc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Exact covariance `C_N(mu, mu_f)`.
///
/// # Safety
/// `out` must be NULL or valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn gvc_covariance_exact(n: usize, mu: f64, mu_f: f64, out: *mut f64) -> GvcStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = lib(analytics::covariance_exact(n, mu, mu_f))?;
        Ok(())
    })
}

/// Regression slope implied by the exact covariance (identically one).
///
/// # Safety
/// `out` must be NULL or valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn gvc_slope_exact(n: usize, mu: f64, mu_f: f64, out: *mut f64) -> GvcStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = lib(analytics::slope_exact(n, mu, mu_f))?;
        Ok(())
    })
}

/// Exact first-row moments.
///
/// # Safety
/// `out` must be NULL or valid for writing one `GvcMoments`.
#[no_mangle]
pub unsafe extern "C" fn gvc_moments_analytic(n: usize, mu: f64, mu_f: f64, out: *mut GvcMoments) -> GvcStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let m = lib(analytics::moments_analytic(n, mu, mu_f))?;
        *out = GvcMoments { e_r: m.e_r, e_rp: m.e_rp, e_rrp: m.e_rrp, e_r2: m.e_r2 };
        Ok(())
    })
}

/// `J(k)`.
///
/// # Safety
/// `out` must be NULL or valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn gvc_j_integral(k: usize, mu: f64, mu_f: f64, out: *mut f64) -> GvcStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = lib(analytics::j_integral(k, mu, mu_f))?;
        Ok(())
    })
}

/// `L(k)`, `k >= 2`.
///
/// # Safety
/// `out` must be NULL or valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn gvc_l_integral(k: usize, mu: f64, mu_f: f64, out: *mut f64) -> GvcStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = lib(analytics::l_integral(k, mu, mu_f))?;
        Ok(())
    })
}

fn spec_of(p: &GvcEnsembleParams) -> Result<EnsembleSpec, (GvcStatus, String)> {
    let disorder = match p.disorder {
        GvcDisorder::Exponential => Disorder::Exponential,
        GvcDisorder::Uniform => Disorder::Uniform,
        GvcDisorder::LogNormal => Disorder::LogNormal {
            mu_prime: p.mu_prime,
            sigma: p.sigma,
            demand_log_mean: p.demand_log_mean,
            demand_log_sigma: p.demand_log_sigma,
        },
    };
    if p.sector == 0 {
        return Err((GvcStatus::InvalidArgument, "sector is 1-based".into()));
    }
    let params = ModelParams::exponential(p.n_sectors, p.mu, p.mu_f, p.seed)
        .with_disorder(disorder)
        .with_sparsity(p.sparsity);
    let policy = match p.policy {
        GvcPolicy::Flag => ViolationPolicy::Flag,
        GvcPolicy::Reject => ViolationPolicy::Reject,
    };
    let spec = EnsembleSpec::new(params, p.instances, p.sector - 1)
        .with_policy(policy)
        .with_workers(p.workers.max(1));
    lib(spec.validate())?;
    Ok(spec)
}

/// Samples an ensemble. On success `*out` owns a handle for
/// [`gvc_ensemble_free`].
///
/// # Safety
/// `params` must be NULL or point to a valid `GvcEnsembleParams`; `out` must
/// be NULL or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvc_ensemble_run(params: *const GvcEnsembleParams, out: *mut *mut GvcEnsemble) -> GvcStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = std::ptr::null_mut();
        let p = unsafe { params.as_ref() }.ok_or_else(|| null("params"))?;
        let spec = spec_of(p)?;
        let run = lib(run_ensemble(&spec))?;
        *out = Box::into_raw(Box::new(GvcEnsemble { records: run.records }));
        Ok(())
    })
}

/// Number of records, 0 for NULL.
///
/// # Safety
/// `e` must be NULL or a live handle from [`gvc_ensemble_run`].
#[no_mangle]
pub unsafe extern "C" fn gvc_ensemble_len(e: *const GvcEnsemble) -> usize {
    unsafe { e.as_ref() }.map_or(0, |e| e.records.len())
}

/// Record `index` (0-based) of the ensemble.
///
/// # Safety
/// `e` must be NULL or a live handle; `out` NULL or valid for one `GvcRecord`.
#[no_mangle]
pub unsafe extern "C" fn gvc_ensemble_record(e: *const GvcEnsemble, index: usize, out: *mut GvcRecord) -> GvcStatus {
    guard(|| {
        let e = unsafe { e.as_ref() }.ok_or_else(|| null("ensemble"))?;
        let out = unsafe { out_ref(out, "out") }?;
        let r = e.records.get(index).ok_or_else(|| {
            (GvcStatus::InvalidArgument, format!("index {index} out of {} records", e.records.len()))
        })?;
        *out = GvcRecord {
            instance: r.instance,
            u1: r.u1,
            d1: r.d1,
            u_tilde: r.u_tilde,
            d_tilde: r.d_tilde,
            violations: r.violations,
        };
        Ok(())
    })
}

fn kind(m: GvcMeasure) -> MeasureKind {
    match m {
        GvcMeasure::U1 => MeasureKind::U1,
        GvcMeasure::D1 => MeasureKind::D1,
        GvcMeasure::UTilde => MeasureKind::UTilde,
        GvcMeasure::DTilde => MeasureKind::DTilde,
    }
}

/// OLS fit of measure `y` on measure `x` across the ensemble.
///
/// # Safety
/// `e` must be NULL or a live handle; `out` NULL or valid for one `GvcFit`.
#[no_mangle]
pub unsafe extern "C" fn gvc_ensemble_fit(e: *const GvcEnsemble, x: GvcMeasure, y: GvcMeasure, out: *mut GvcFit) -> GvcStatus {
    guard(|| {
        let e = unsafe { e.as_ref() }.ok_or_else(|| null("ensemble"))?;
        let out = unsafe { out_ref(out, "out") }?;
        let pts = lib(e
            .records
            .iter()
            .map(|r| Ok((r.get(kind(x))?, r.get(kind(y))?)))
            .collect::<gvc_randlab::Result<Vec<_>>>())?;
        let f = lib(ols(&pts))?;
        *out = GvcFit { slope: f.slope, intercept: f.intercept, pearson_r: f.pearson_r, covariance: f.covariance };
        Ok(())
    })
}

/// Writes the records CSV (`instance,U1,D1,U_tilde,D_tilde,violations`).
///
/// # Safety
/// `e` must be NULL or a live handle; `path` NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gvc_ensemble_write_csv(e: *const GvcEnsemble, path: *const c_char) -> GvcStatus {
    guard(|| {
        let e = unsafe { e.as_ref() }.ok_or_else(|| null("ensemble"))?;
        let path = unsafe { path_arg(path) }?;
        let w = lib(gvc_randlab::io::create(path))?;
        lib(write_records(&e.records, w))
    })
}

/// Releases an ensemble; NULL is ignored.
///
/// # Safety
/// `e` must be NULL or a handle from [`gvc_ensemble_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gvc_ensemble_free(e: *mut GvcEnsemble) {
    if !e.is_null() {
        drop(unsafe { Box::from_raw(e) });
    }
}

/// Reads a CSV table; `tol` is the relative tolerance of the accounting
/// identities (non-positive selects 1e-6).
///
/// # Safety
/// `path` must be NULL or NUL-terminated; `out` NULL or valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvc_table_ingest(path: *const c_char, tol: f64, out: *mut *mut GvcTable) -> GvcStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = std::ptr::null_mut();
        let path = unsafe { path_arg(path) }?;
        let tol = if tol > 0.0 { tol } else { gvc_randlab::io::empirical::DEFAULT_IDENTITY_TOL };
        let table = lib(ingest_table_with_tol(path, TableFormat::Csv, tol))?;
        *out = Box::into_raw(Box::new(GvcTable { table }));
        Ok(())
    })
}

/// Builds a table from `n * n` row-major flows and `n` final demands.
///
/// # Safety
/// `flows` must hold `n * n` doubles and `final_demand` `n`; `out` must be
/// NULL or valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvc_table_from_flows(
    n: usize,
    flows: *const f64,
    final_demand: *const f64,
    out: *mut *mut GvcTable,
) -> GvcStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = std::ptr::null_mut();
        if flows.is_null() {
            return Err(null("flows"));
        }
        if final_demand.is_null() {
            return Err(null("final_demand"));
        }
        if n == 0 {
            return Err((GvcStatus::InvalidArgument, "n must be at least 1".into()));
        }
        let len = n
            .checked_mul(n)
            .ok_or_else(|| (GvcStatus::InvalidArgument, "n * n overflows".to_string()))?;
        // SAFETY: sizes per the contract above.
        let a = unsafe { std::slice::from_raw_parts(flows, len) }.to_vec();
        let f = unsafe { std::slice::from_raw_parts(final_demand, n) }.to_vec();
        let names = (1..=n).map(|i| format!("S{i}")).collect();
        let table = lib(EmpiricalTable::new(names, lib(SquareMatrix::from_row_major(n, a))?, f, None, 0.0))?;
        *out = Box::into_raw(Box::new(GvcTable { table }));
        Ok(())
    })
}

/// Number of sectors, 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live table handle.
#[no_mangle]
pub unsafe extern "C" fn gvc_table_sectors(t: *const GvcTable) -> usize {
    unsafe { t.as_ref() }.map_or(0, |t| t.table.n_sectors())
}

/// Fraction of non-zero flows.
///
/// # Safety
/// `t` must be NULL or a live handle; `out` NULL or valid for one `double`.
#[no_mangle]
pub unsafe extern "C" fn gvc_table_density(t: *const GvcTable, out: *mut f64) -> GvcStatus {
    guard(|| {
        let t = unsafe { t.as_ref() }.ok_or_else(|| null("table"))?;
        *unsafe { out_ref(out, "out") }? = t.table.density;
        Ok(())
    })
}

/// Per-sector `U1`, `D1`, `U~`, `D~`. Each non-NULL array receives
/// [`gvc_table_sectors`] values; NULL arrays are skipped.
///
/// # Safety
/// `t` must be NULL or a live handle; each array NULL or valid for
/// `gvc_table_sectors(t)` doubles.
#[no_mangle]
pub unsafe extern "C" fn gvc_table_measures(
    t: *const GvcTable,
    u1: *mut f64,
    d1: *mut f64,
    u_tilde: *mut f64,
    d_tilde: *mut f64,
) -> GvcStatus {
    guard(|| {
        let t = unsafe { t.as_ref() }.ok_or_else(|| null("table"))?;
        let (sectors, _) = lib(measure_empirical(&t.table))?;
        let fields: [(*mut f64, fn(&gvc_randlab::io::empirical::SectorMeasures) -> f64); 4] = [
            (u1, |s| s.u1),
            (d1, |s| s.d1),
            (u_tilde, |s| s.u_tilde),
            (d_tilde, |s| s.d_tilde),
        ];
        for (ptr, get) in fields {
            if !ptr.is_null() {
                // SAFETY: caller provides room for one value per sector.
                let dst = unsafe { std::slice::from_raw_parts_mut(ptr, sectors.len()) };
                for (d, s) in dst.iter_mut().zip(&sectors) {
                    *d = get(s);
                }
            }
        }
        Ok(())
    })
}

/// Releases a table; NULL is ignored.
///
/// # Safety
/// `t` must be NULL or a table handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gvc_table_free(t: *mut GvcTable) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}
