use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use semiquantum_ffi::*;

fn last_error() -> String {
    let p = sq_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn kernel_spot_values() {
    unsafe {
        let mut m = SqMoments {
            x2: 0.0,
            p2: 0.0,
            c: 0.0,
        };
        assert_eq!(sq_vacuum_moments(2f64.sqrt(), 0.0, 1.0, &mut m), SqStatus::Ok);
        let b = SqBasis {
            w: 2f64.sqrt(),
            sigma: 0.25,
            theta: 0.0,
        };
        let mut n = f64::NAN;
        assert_eq!(sq_quanta_expectation(&m, &b, 1.0, &mut n), SqStatus::Ok);
        assert!((n - 0.0078125).abs() < 1e-15);

        let a = SqBasis { sigma: 0.0, ..b };
        let (mut a2, mut b2) = (0.0, 0.0);
        assert_eq!(sq_bogoliubov(&a, &b, &mut a2, &mut b2), SqStatus::Ok);
        assert!((a2 - 1.0078125).abs() < 1e-14 && (b2 - 0.0078125).abs() < 1e-15);

        let p = SqParams {
            m: 1.0,
            e: 1.0,
            hbar: 1.0,
        };
        let (mut w, mut wd) = (0.0, 0.0);
        assert_eq!(sq_frequency(&p, 1.0, 1.0, &mut w, &mut wd), SqStatus::Ok);
        assert!((w - 2f64.sqrt()).abs() < 1e-15 && (wd - 0.5f64.sqrt()).abs() < 1e-15);

        let mut closed = f64::NAN;
        assert_eq!(sq_occupation_closed_form(w, 0.0, w, &mut closed), SqStatus::Ok);
        assert_eq!(closed, 0.0);
        let mut diff = f64::NAN;
        assert_eq!(sq_occupation_difference(w, 0.0, w, wd, &mut diff), SqStatus::Ok);
        assert!((diff + 0.0078125).abs() < 1e-15);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut m = SqMoments {
            x2: 0.0,
            p2: 0.0,
            c: 0.0,
        };
        assert_eq!(sq_vacuum_moments(-1.0, 0.0, 1.0, &mut m), SqStatus::Domain);
        assert!(last_error().contains("Omega"));
        assert_eq!(sq_vacuum_moments(1.0, 0.0, 1.0, ptr::null_mut()), SqStatus::NullPointer);
        assert!(last_error().contains("result"));

        let bad = SqMoments {
            x2: 0.1,
            p2: 0.1,
            c: 0.0,
        };
        let b = SqBasis {
            w: 1.0,
            sigma: 0.0,
            theta: 0.0,
        };
        let mut n = 0.0;
        assert_eq!(sq_quanta_expectation(&bad, &b, 1.0, &mut n), SqStatus::InvalidArgument);
        assert!(last_error().contains("Heisenberg"));

        let p = SqParams {
            m: 0.0,
            e: 1.0,
            hbar: 1.0,
        };
        let (mut w, mut wd) = (0.0, 0.0);
        assert_ne!(sq_frequency(&p, 1.0, 1.0, &mut w, &mut wd), SqStatus::Ok);
        let mut x = 0.0;
        assert_eq!(sq_occupation_closed_form(0.0, 0.0, 1.0, &mut x), SqStatus::Domain);
    }
}

#[test]
fn scenario_lifecycle() {
    unsafe {
        let mut sc = ptr::null_mut();
        let name = CString::new("vacuum-kick").unwrap();
        assert_eq!(sq_scenario_bundled(name.as_ptr(), &mut sc), SqStatus::Ok);
        let mut p = SqParams {
            m: 0.0,
            e: 0.0,
            hbar: 0.0,
        };
        assert_eq!(sq_scenario_params(sc, &mut p), SqStatus::Ok);
        assert_eq!(
            p,
            SqParams {
                m: 1.0,
                e: 1.0,
                hbar: 1.0
            }
        );
        assert_eq!(sq_scenario_set_t_end(sc, -1.0), SqStatus::InvalidArgument);
        assert_eq!(sq_scenario_set_t_end(sc, 2.0), SqStatus::Ok);

        let mut tr = ptr::null_mut();
        assert_eq!(sq_integrate(sc, &mut tr), SqStatus::Ok);
        assert_eq!(sq_trajectory_len(tr), 201);
        let mut term = SqTermination::AbortedStepFailure;
        assert_eq!(sq_trajectory_status(tr, &mut term), SqStatus::Ok);
        assert_eq!(term, SqTermination::Completed);
        let mut r = SqRecord::default();
        assert_eq!(sq_trajectory_record(tr, 0, &mut r), SqStatus::Ok);
        assert_eq!(r.n_ours, 0.0);
        assert!((r.n_cdms - 0.0078125).abs() < 1e-12);
        assert_eq!(sq_trajectory_record(tr, 201, &mut r), SqStatus::OutOfRange);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("ts.csv").to_str().unwrap()).unwrap();
        assert_eq!(sq_trajectory_write_csv(tr, path.as_ptr()), SqStatus::Ok);
        let csv = std::fs::read_to_string(dir.path().join("ts.csv")).unwrap();
        assert_eq!(csv.lines().count(), 202);

        sq_trajectory_free(tr);
        sq_scenario_free(sc);
        sq_trajectory_free(ptr::null_mut());
        sq_scenario_free(ptr::null_mut());
        assert_eq!(sq_trajectory_len(ptr::null()), 0);
    }
}

#[test]
fn scenario_text_errors() {
    unsafe {
        let mut sc = ptr::null_mut();
        let text = CString::new("m = 1\ne = 1\n").unwrap();
        assert_eq!(sq_scenario_from_text(text.as_ptr(), &mut sc), SqStatus::Config);
        assert!(last_error().contains("hbar"));
        assert!(sc.is_null());
        let name = CString::new("nope").unwrap();
        assert_eq!(sq_scenario_bundled(name.as_ptr(), &mut sc), SqStatus::InvalidArgument);
        assert_eq!(sq_scenario_from_text(ptr::null(), &mut sc), SqStatus::NullPointer);

        let text = CString::new("m = 1\ne = 0\nhbar = 1\nA0 = 0\nAdot0 = 0\nt_end = 10\nquantum_init = explicit\nrho0 = 2\nrhodot0 = 0\nrho_min = 0.6\n").unwrap();
        assert_eq!(sq_scenario_from_text(text.as_ptr(), &mut sc), SqStatus::Ok);
        let mut tr = ptr::null_mut();
        assert_eq!(sq_integrate(sc, &mut tr), SqStatus::Ok);
        let mut term = SqTermination::Completed;
        sq_trajectory_status(tr, &mut term);
        assert_eq!(term, SqTermination::AbortedSingularity);
        assert!(sq_trajectory_len(tr) > 0);
        sq_trajectory_free(tr);
        sq_scenario_free(sc);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(sq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/semiquantum.h")).unwrap()
}

#[test]
fn header_declares_the_api() {
    let h = header();
    assert!(h.starts_with("#ifndef SEMIQUANTUM_H"));
    for name in [
        "sq_last_error_message",
        "sq_version",
        "sq_frequency",
        "sq_vacuum_moments",
        "sq_quanta_expectation",
        "sq_occupation_closed_form",
        "sq_occupation_difference",
        "sq_bogoliubov",
        "sq_scenario_from_text",
        "sq_scenario_bundled",
        "sq_scenario_set_t_end",
        "sq_scenario_params",
        "sq_scenario_free",
        "sq_integrate",
        "sq_trajectory_len",
        "sq_trajectory_record",
        "sq_trajectory_status",
        "sq_trajectory_write_csv",
        "sq_trajectory_free",
        "typedef struct SqScenario SqScenario;",
        "typedef struct SqTrajectory SqTrajectory;",
        "SQ_STATUS_PANIC = 8",
        "SQ_TERMINATION_ABORTED_STEP_FAILURE = 2",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
    let record = h
        .split("typedef struct SqRecord {")
        .nth(1)
        .and_then(|s| s.split('}').next())
        .unwrap();
    assert_eq!(record.matches("double ").count(), 18);
}

/// Directory holding the build's `libsemiquantum_ffi.a`.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = artifact_dir().join("libsemiquantum_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let status = Command::new("cc")
        .arg(manifest.join("examples/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("run cc");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("501 rows"));
}
