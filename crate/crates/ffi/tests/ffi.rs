use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use gvc_randlab_ffi::*;

fn last_error() -> String {
    let p = gvc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn params(n: usize, instances: usize, workers: usize) -> GvcEnsembleParams {
    GvcEnsembleParams {
        n_sectors: n,
        mu: 1.0,
        mu_f: 0.1,
        disorder: GvcDisorder::Exponential,
        mu_prime: 0.0,
        sigma: 0.0,
        demand_log_mean: 0.0,
        demand_log_sigma: 0.0,
        sparsity: 0.0,
        seed: 11,
        instances,
        sector: 7,
        policy: GvcPolicy::Flag,
        workers,
    }
}

#[test]
fn table_one_row_through_the_c_abi() {
    let mut c = 0.0;
    assert_eq!(unsafe { gvc_covariance_exact(400, 2.0, 0.005, &mut c) }, GvcStatus::Ok);
    assert!((c - 0.29494).abs() < 5e-5);
    let mut s = 0.0;
    assert_eq!(unsafe { gvc_slope_exact(400, 2.0, 0.005, &mut s) }, GvcStatus::Ok);
    assert!((s - 1.0).abs() < 1e-8);
}

#[test]
fn moments_and_integrals() {
    let mut m = GvcMoments::default();
    assert_eq!(unsafe { gvc_moments_analytic(1, 1.0, 0.1, &mut m) }, GvcStatus::Ok);
    assert!((m.e_r - m.e_rp).abs() < 1e-15);
    let (mut j, mut l) = (0.0, 0.0);
    assert_eq!(unsafe { gvc_j_integral(3, 2.0, 2.0, &mut j) }, GvcStatus::Ok);
    assert!((j - 1.0 / 24.0).abs() < 1e-15);
    assert_eq!(unsafe { gvc_l_integral(1, 2.0, 2.0, &mut l) }, GvcStatus::InvalidArgument);
    assert!(last_error().contains('k'));
}

#[test]
fn errors_and_nulls() {
    assert_eq!(unsafe { gvc_covariance_exact(10, 1.0, 0.1, ptr::null_mut()) }, GvcStatus::NullPointer);
    assert!(last_error().contains("out"));
    let mut c = 0.0;
    assert_eq!(unsafe { gvc_covariance_exact(10, -1.0, 0.1, &mut c) }, GvcStatus::InvalidArgument);
    assert!(last_error().contains("mu"));
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { gvc_ensemble_run(ptr::null(), &mut e) }, GvcStatus::NullPointer);
    assert!(e.is_null());
    assert_eq!(unsafe { gvc_ensemble_len(ptr::null()) }, 0);
    unsafe { gvc_ensemble_free(ptr::null_mut()) };
    unsafe { gvc_table_free(ptr::null_mut()) };
    let bad = GvcEnsembleParams { sector: 0, ..params(10, 10, 1) };
    assert_eq!(unsafe { gvc_ensemble_run(&bad, &mut e) }, GvcStatus::InvalidArgument);
}

#[test]
fn ensemble_handle() {
    let p = params(20, 50, 2);
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { gvc_ensemble_run(&p, &mut e) }, GvcStatus::Ok);
    assert_eq!(unsafe { gvc_ensemble_len(e) }, 50);
    let mut r = GvcRecord::default();
    assert_eq!(unsafe { gvc_ensemble_record(e, 49, &mut r) }, GvcStatus::Ok);
    assert_eq!(r.instance, 49);
    assert!(r.u1 >= 1.0 && r.d1 >= 1.0);
    assert_eq!(unsafe { gvc_ensemble_record(e, 50, &mut r) }, GvcStatus::InvalidArgument);
    let mut f = GvcFit::default();
    assert_eq!(unsafe { gvc_ensemble_fit(e, GvcMeasure::U1, GvcMeasure::UTilde, &mut f) }, GvcStatus::Ok);
    assert!(f.pearson_r > 0.9);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.csv");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { gvc_ensemble_write_csv(e, cpath.as_ptr()) }, GvcStatus::Ok);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("instance,U1,D1,U_tilde,D_tilde,violations\n"));
    assert_eq!(text.lines().count(), 51);
    unsafe { gvc_ensemble_free(e) };

    // same records with one worker
    let mut e1 = ptr::null_mut();
    assert_eq!(unsafe { gvc_ensemble_run(&params(20, 50, 1), &mut e1) }, GvcStatus::Ok);
    let path1 = dir.path().join("records1.csv");
    let cpath1 = CString::new(path1.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { gvc_ensemble_write_csv(e1, cpath1.as_ptr()) }, GvcStatus::Ok);
    unsafe { gvc_ensemble_free(e1) };
    assert_eq!(std::fs::read(&path1).unwrap(), text.as_bytes());
}

#[test]
fn table_handles() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.csv");
    std::fs::write(&path, "sector,A,B,FINAL_DEMAND\nA,0,1,1\nB,2,0,1\n").unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { gvc_table_ingest(cpath.as_ptr(), 0.0, &mut t) }, GvcStatus::Ok);
    assert_eq!(unsafe { gvc_table_sectors(t) }, 2);
    let mut density = 0.0;
    assert_eq!(unsafe { gvc_table_density(t, &mut density) }, GvcStatus::Ok);
    assert_eq!(density, 0.5);
    let (mut u1, mut d1, mut ut, mut dt) = ([0.0; 2], [0.0; 2], [0.0; 2], [0.0; 2]);
    let st = unsafe {
        gvc_table_measures(t, u1.as_mut_ptr(), d1.as_mut_ptr(), ut.as_mut_ptr(), dt.as_mut_ptr())
    };
    assert_eq!(st, GvcStatus::Ok);
    assert!((u1[0] - 2.25).abs() < 1e-14 && (u1[1] - 2.5).abs() < 1e-14);
    assert!((d1[0] - 3.0).abs() < 1e-14 && (d1[1] - 2.0).abs() < 1e-14);
    unsafe { gvc_table_free(t) };

    std::fs::write(&path, "sector,A,B,FINAL_DEMAND\nA,0,-1,1\nB,2,0,1\n").unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { gvc_table_ingest(cpath.as_ptr(), 0.0, &mut t) }, GvcStatus::Format);
    assert!(t.is_null());
    assert!(last_error().contains("negative flow"));

    let missing = CString::new(dir.path().join("nope.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { gvc_table_ingest(missing.as_ptr(), 0.0, &mut t) }, GvcStatus::Io);

    let flows = [0.0, 1.0, -2.0, 0.0];
    let fd = [1.0, 1.0];
    assert_eq!(
        unsafe { gvc_table_from_flows(2, flows.as_ptr(), fd.as_ptr(), &mut t) },
        GvcStatus::Format
    );
}

#[test]
fn header_declares_the_api() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/gvc_randlab.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "gvc_last_error_message",
        "gvc_covariance_exact",
        "gvc_ensemble_run",
        "gvc_ensemble_free",
        "gvc_table_ingest",
        "gvc_table_free",
        "typedef struct GvcEnsemble GvcEnsemble;",
        "GVC_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C program against the header and the static library
/// when a C compiler and the archive are available.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // tests/ffi-<hash> lives in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let archive = profile_dir.join("libgvc_randlab_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !archive.exists() || std::process::Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} not built", archive.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = std::process::Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&archive)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
