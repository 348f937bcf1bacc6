//! C ABI for the semiquantum simulator.
//!
//! Every fallible function returns an [`SqStatus`]; on failure the message is
//! available from [`sq_last_error_message`] on the same thread. Scenarios and
//! trajectories are opaque heap handles released with their `_free`
//! functions. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use semiquantum::config::{bundled, parse_scenario};
use semiquantum::dynamics::{AbortKind, Termination};
use semiquantum::physics::{self, Bogoliubov};
use semiquantum::{Error, GaussianMoments, ModelParams, OscBasis, ScenarioConfig, TimeSeriesRecord, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Config = 4,
    Io = 5,
    Runtime = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// How an integration ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqTermination {
    Completed = 0,
    AbortedSingularity = 1,
    AbortedStepFailure = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqParams {
    pub m: f64,
    pub e: f64,
    pub hbar: f64,
}

/// Second moments `<x^2>`, `<p^2>`, `<(xp+px)/2>` of a Gaussian state.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqMoments {
    pub x2: f64,
    pub p2: f64,
    pub c: f64,
}

/// Annihilation-operator family `e^{i theta} ((w + i sigma) x + i p) / sqrt(2 hbar w)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqBasis {
    pub w: f64,
    pub sigma: f64,
    pub theta: f64,
}

/// One time-series row; same fields and order as the CSV columns.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SqRecord {
    pub t: f64,
    pub a: f64,
    pub adot: f64,
    pub rho: f64,
    pub rhodot: f64,
    pub omega_eff: f64,
    pub omega_eff_dot: f64,
    pub omega: f64,
    pub omegadot: f64,
    pub x2: f64,
    pub p2: f64,
    pub c: f64,
    pub n_ours: f64,
    pub n_cdms: f64,
    pub dn_leading: f64,
    pub hx: f64,
    pub etot: f64,
    pub corr: f64,
}

impl From<&TimeSeriesRecord> for SqRecord {
    fn from(r: &TimeSeriesRecord) -> Self {
        SqRecord {
            t: r.t,
            a: r.a,
            adot: r.adot,
            rho: r.rho,
            rhodot: r.rhodot,
            omega_eff: r.omega_eff,
            omega_eff_dot: r.omega_eff_dot,
            omega: r.omega,
            omegadot: r.omegadot,
            x2: r.x2,
            p2: r.p2,
            c: r.c,
            n_ours: r.n_ours,
            n_cdms: r.n_cdms,
            dn_leading: r.dn_leading,
            hx: r.hx,
            etot: r.etot,
            corr: r.corr,
        }
    }
}

/// Opaque scenario handle.
pub struct SqScenario(ScenarioConfig);

/// Opaque trajectory handle.
pub struct SqTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => SqStatus::Domain,
            Error::Validation(_) | Error::Usage(_) => SqStatus::InvalidArgument,
            Error::Config { .. } => SqStatus::Config,
            Error::Io(_) => SqStatus::Io,
            Error::Singularity { .. }
            | Error::StepUnderflow { .. }
            | Error::NonFinite { .. }
            | Error::Diagnostic(_) => SqStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SqStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SqStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SqStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SqStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

fn basis(b: &SqBasis) -> Result<OscBasis, Failure> {
    Ok(OscBasis::new(b.w, b.sigma, b.theta)?)
}

fn params(p: &SqParams) -> Result<ModelParams, Failure> {
    Ok(ModelParams::new(p.m, p.e, p.hbar)?)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `omega = sqrt(m^2 + e^2 A^2)` and its time derivative.
///
/// # Safety
/// Pointers must be null or valid for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn sq_frequency(
    p: *const SqParams,
    a: f64,
    adot: f64,
    omega: *mut f64,
    omegadot: *mut f64,
) -> SqStatus {
    guard(|| {
        let p = params(deref(p, "params")?)?;
        let (w, wd) = physics::frequency(a, adot, &p);
        *out(omega, "omega")? = w;
        *out(omegadot, "omegadot")? = wd;
        Ok(())
    })
}

/// Moments of the vacuum of the invariant basis with effective frequency `Omega`.
///
/// # Safety
/// `result` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_vacuum_moments(
    omega_eff: f64,
    omega_eff_dot: f64,
    hbar: f64,
    result: *mut SqMoments,
) -> SqStatus {
    guard(|| {
        let m = physics::vacuum_moments(omega_eff, omega_eff_dot, hbar)?;
        *out(result, "result")? = SqMoments {
            x2: m.x2,
            p2: m.p2,
            c: m.c,
        };
        Ok(())
    })
}

/// `<c^dagger c>` for the operator family `b` in a state with the given moments.
///
/// # Safety
/// Pointers must be null or valid for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn sq_quanta_expectation(
    moments: *const SqMoments,
    b: *const SqBasis,
    hbar: f64,
    result: *mut f64,
) -> SqStatus {
    guard(|| {
        let m = deref(moments, "moments")?;
        let n = physics::quanta_expectation(
            &GaussianMoments::new(m.x2, m.p2, m.c),
            &basis(deref(b, "basis")?)?,
            hbar,
        )?;
        *out(result, "result")? = n;
        Ok(())
    })
}

/// Static-basis quanta in the invariant vacuum, from `Omega`, `Omega'` and `omega`.
///
/// # Safety
/// `result` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_occupation_closed_form(
    omega_eff: f64,
    omega_eff_dot: f64,
    omega: f64,
    result: *mut f64,
) -> SqStatus {
    guard(|| {
        if !(omega_eff > 0.0 && omega > 0.0 && omega_eff_dot.is_finite()) {
            return Err(Failure(
                SqStatus::Domain,
                format!("frequencies must be positive (Omega = {omega_eff}, omega = {omega})"),
            ));
        }
        *out(result, "result")? = physics::occupation_closed_form(omega_eff, omega_eff_dot, omega);
        Ok(())
    })
}

/// Exact difference between the static-basis and sheared-basis counts in the
/// invariant vacuum.
///
/// # Safety
/// `result` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_occupation_difference(
    omega_eff: f64,
    omega_eff_dot: f64,
    omega: f64,
    omegadot: f64,
    result: *mut f64,
) -> SqStatus {
    guard(|| {
        if !(omega_eff > 0.0 && omega > 0.0 && omega_eff_dot.is_finite() && omegadot.is_finite()) {
            return Err(Failure(
                SqStatus::Domain,
                format!("frequencies must be positive (Omega = {omega_eff}, omega = {omega})"),
            ));
        }
        *out(result, "result")? = physics::occupation_difference_exact(omega_eff, omega_eff_dot, omega, omegadot);
        Ok(())
    })
}

/// `|alpha|^2` and `|beta|^2` of the map from basis `a` to basis `b`.
///
/// # Safety
/// Pointers must be null or valid for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn sq_bogoliubov(
    a: *const SqBasis,
    b: *const SqBasis,
    alpha2: *mut f64,
    beta2: *mut f64,
) -> SqStatus {
    guard(|| {
        let Bogoliubov { alpha, beta } = Bogoliubov::between(&basis(deref(a, "a")?)?, &basis(deref(b, "b")?)?)?;
        *out(alpha2, "alpha2")? = alpha.norm_sqr();
        *out(beta2, "beta2")? = beta.norm_sqr();
        Ok(())
    })
}

/// Parses a scenario from `key = value` text.
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `scenario` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_from_text(text: *const c_char, scenario: *mut *mut SqScenario) -> SqStatus {
    guard(|| {
        let slot = out(scenario, "scenario")?;
        let cfg = parse_scenario(self::text(text, "text")?, "scenario")?;
        *slot = Box::into_raw(Box::new(SqScenario(cfg)));
        Ok(())
    })
}

/// Loads a bundled scenario: `free`, `vacuum-kick`, `adiabatic` or `strong`.
///
/// # Safety
/// `name` must be null or a NUL-terminated string; `scenario` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_bundled(name: *const c_char, scenario: *mut *mut SqScenario) -> SqStatus {
    guard(|| {
        let slot = out(scenario, "scenario")?;
        let name = text(name, "name")?;
        let src =
            bundled(name).ok_or_else(|| Failure(SqStatus::InvalidArgument, format!("no bundled scenario `{name}`")))?;
        *slot = Box::into_raw(Box::new(SqScenario(parse_scenario(src, name)?)));
        Ok(())
    })
}

/// Overrides the end time of a scenario.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_set_t_end(scenario: *mut SqScenario, t_end: f64) -> SqStatus {
    guard(|| {
        let s = out(scenario, "scenario")?;
        let mut cfg = s.0.clone();
        cfg.t_end = t_end;
        cfg.validate()?;
        s.0 = cfg;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a live handle; `result` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_params(scenario: *const SqScenario, result: *mut SqParams) -> SqStatus {
    guard(|| {
        let p = deref(scenario, "scenario")?.0.params;
        *out(result, "result")? = SqParams {
            m: p.m,
            e: p.e,
            hbar: p.hbar,
        };
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_free(scenario: *mut SqScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Integrates a scenario. An aborted run still succeeds here; check
/// [`sq_trajectory_status`].
///
/// # Safety
/// `scenario` must be null or a live handle; `trajectory` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_integrate(scenario: *const SqScenario, trajectory: *mut *mut SqTrajectory) -> SqStatus {
    guard(|| {
        let cfg = &deref(scenario, "scenario")?.0;
        let slot = out(trajectory, "trajectory")?;
        let tr = semiquantum::integrate(cfg)?;
        *slot = Box::into_raw(Box::new(SqTrajectory(tr)));
        Ok(())
    })
}

/// Number of sampled rows; 0 for a null handle.
///
/// # Safety
/// `trajectory` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_trajectory_len(trajectory: *const SqTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.0.records.len())
}

/// # Safety
/// `trajectory` must be null or a live handle; `result` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_trajectory_record(
    trajectory: *const SqTrajectory,
    index: usize,
    result: *mut SqRecord,
) -> SqStatus {
    guard(|| {
        let tr = &deref(trajectory, "trajectory")?.0;
        let r = tr.records.get(index).ok_or_else(|| {
            Failure(
                SqStatus::OutOfRange,
                format!("record {index} out of range (len {})", tr.records.len()),
            )
        })?;
        *out(result, "result")? = SqRecord::from(r);
        Ok(())
    })
}

/// # Safety
/// `trajectory` must be null or a live handle; `result` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_trajectory_status(trajectory: *const SqTrajectory, result: *mut SqTermination) -> SqStatus {
    guard(|| {
        let status = match deref(trajectory, "trajectory")?.0.termination {
            Termination::Completed => SqTermination::Completed,
            Termination::Aborted {
                kind: AbortKind::Singularity,
                ..
            } => SqTermination::AbortedSingularity,
            Termination::Aborted {
                kind: AbortKind::StepFailure,
                ..
            } => SqTermination::AbortedStepFailure,
        };
        *out(result, "result")? = status;
        Ok(())
    })
}

/// Writes the time series as CSV.
///
/// # Safety
/// `trajectory` must be null or a live handle; `path` null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sq_trajectory_write_csv(trajectory: *const SqTrajectory, path: *const c_char) -> SqStatus {
    guard(|| {
        let tr = &deref(trajectory, "trajectory")?.0;
        semiquantum::output::write_records_file(Path::new(text(path, "path")?), &tr.records)?;
        Ok(())
    })
}

/// # Safety
/// `trajectory` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn sq_trajectory_free(trajectory: *mut SqTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}
