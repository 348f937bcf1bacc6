//! Trajectory-level checks: conservation drift, largest Lyapunov exponent,
//! observed convergence order, extrema counts of the particle-number series
//! and the weak-coupling scaling of the discrepancy between the two number
//! definitions.

use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, Flow, Method, PinneyFlow, ScenarioConfig, Termination, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::integrator::{rk4_step, OdeSystem};
use crate::state::Representation;

/// Initial displacement in `A` for the two-trajectory Lyapunov estimate.
pub const LYAPUNOV_DISPLACEMENT: f64 = 1e-8;
/// Fraction of renormalization intervals discarded as transient.
pub const LYAPUNOV_TRANSIENT: f64 = 0.1;
/// Default absolute noise floor for [`structure_count`].
pub const STRUCTURE_NOISE_FLOOR: f64 = 1e-9;
/// Longest horizon used for the self-convergence part of [`diagnose`].
pub const ORDER_HORIZON: f64 = 10.0;

/// Maximum relative deviation of `Etot` from its initial value.
pub fn energy_drift(records: &[TimeSeriesRecord]) -> Result<f64> {
    if records.len() < 2 {
        return Err(Error::usage(format!(
            "energy drift needs at least 2 records, got {}",
            records.len()
        )));
    }
    let e0 = records[0].etot;
    if e0 == 0.0 {
        return Err(Error::usage("initial energy is zero; relative drift undefined"));
    }
    Ok(records.iter().map(|r| ((r.etot - e0) / e0).abs()).fold(0.0, f64::max))
}

/// Number of strict local maxima standing at least `noise_floor` above both
/// neighbours.
pub fn structure_count(series: &[f64], noise_floor: f64) -> Result<usize> {
    if series.len() < 3 {
        return Err(Error::usage(format!(
            "structure count needs at least 3 samples, got {}",
            series.len()
        )));
    }
    if !(noise_floor >= 0.0) {
        return Err(Error::usage("noise floor must be nonnegative"));
    }
    Ok(series
        .windows(3)
        .filter(|w| w[1] > w[0] + noise_floor && w[1] > w[2] + noise_floor)
        .count())
}

/// Largest-Lyapunov-exponent estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    /// Standard error of the mean over the averaging window.
    pub stderr: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub intervals: usize,
    /// False when the reference trajectory aborted before the horizon.
    pub completed: bool,
}

/// Two-trajectory Benettin estimate for a generic flow. Separation is measured
/// on the first `dims` components; the companion is displaced by
/// `displacement` in component 0 and renormalized every `renorm_interval`.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_benettin<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y0: [f64; N],
    dt: f64,
    renorm_interval: f64,
    horizon: f64,
    displacement: f64,
    dims: usize,
) -> Result<LyapunovEstimate> {
    if !(renorm_interval > 0.0 && horizon >= renorm_interval && dt > 0.0) {
        return Err(Error::usage(
            "need dt > 0, renorm_interval > 0 and horizon >= renorm_interval",
        ));
    }
    if dims == 0 || dims > N {
        return Err(Error::usage("separation dimension out of range"));
    }
    let steps_per = (renorm_interval / dt).round().max(1.0) as usize;
    let h = renorm_interval / steps_per as f64;
    let intervals = (horizon / renorm_interval + 1e-9).floor() as usize;
    let skip = (LYAPUNOV_TRANSIENT * intervals as f64).floor() as usize;
    let dist = |a: &[f64; N], b: &[f64; N]| -> f64 { (0..dims).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt() };

    let mut y = y0;
    let mut z = y0;
    z[0] += displacement;
    let mut logs = Vec::with_capacity(intervals);
    let mut completed = true;
    let mut t = 0.0;
    'outer: for k in 0..intervals {
        for s in 0..steps_per {
            let tt = t + s as f64 * h;
            match (rk4_step(sys, tt, &y, h), rk4_step(sys, tt, &z, h)) {
                (Ok(a), Ok(b)) => {
                    y = a;
                    z = b;
                }
                _ => {
                    completed = false;
                    break 'outer;
                }
            }
        }
        t = (k + 1) as f64 * renorm_interval;
        let d = dist(&y, &z);
        if !(d.is_finite() && d > 0.0) {
            completed = false;
            break;
        }
        logs.push((d / displacement).ln() / renorm_interval);
        let scale = displacement / d;
        for i in 0..dims {
            z[i] = y[i] + (z[i] - y[i]) * scale;
        }
        z[dims..N].copy_from_slice(&y[dims..N]);
    }
    let kept: Vec<f64> = logs
        .iter()
        .skip(skip.min(logs.len().saturating_sub(1)))
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(Error::Diagnostic(
            "trajectory failed before the first renormalization".into(),
        ));
    }
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let var = if kept.len() > 1 {
        kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let first = logs.len() - kept.len();
    Ok(LyapunovEstimate {
        lambda: mean,
        stderr: (var / n).sqrt(),
        window_start: first as f64 * renorm_interval,
        window_end: logs.len() as f64 * renorm_interval,
        intervals: kept.len(),
        completed,
    })
}

fn step_of(method: Method) -> f64 {
    match method {
        Method::Rk4 { dt } => dt,
        Method::Adaptive { dt_init, .. } => dt_init,
    }
}

/// Largest Lyapunov exponent of the `(A, A', rho, rho')` flow of a scenario.
pub fn lyapunov_max(cfg: &ScenarioConfig, renorm_interval: f64, horizon: f64) -> Result<LyapunovEstimate> {
    let initial = cfg.initial_state()?.convert(Representation::Pinney, &cfg.params)?;
    let flow = PinneyFlow { params: cfg.params };
    let y0 = flow.pack(&initial)?;
    lyapunov_benettin(
        &flow,
        y0,
        step_of(cfg.method),
        renorm_interval,
        horizon,
        LYAPUNOV_DISPLACEMENT,
        4,
    )
}

/// Observed convergence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub dts: Vec<f64>,
    /// Error measure per step size (self-differences or exact errors).
    pub errors: Vec<f64>,
    /// Order estimates from consecutive pairs of errors.
    pub orders: Vec<f64>,
    /// Estimate at the finest resolution.
    pub order: f64,
}

fn check_halving(dt_list: &[f64], min_len: usize) -> Result<()> {
    if dt_list.len() < min_len {
        return Err(Error::usage(format!(
            "convergence order needs at least {min_len} step sizes, got {}",
            dt_list.len()
        )));
    }
    for w in dt_list.windows(2) {
        if !(w[0] > 0.0 && ((w[0] / w[1]) - 2.0).abs() < 1e-9) {
            return Err(Error::usage("each step size must halve the previous one"));
        }
    }
    Ok(())
}

fn orders_from(dts: &[f64], errors: Vec<f64>) -> Result<ConvergenceStudy> {
    let floor = 1e-300;
    if errors.iter().any(|e| !(e.is_finite() && *e > floor)) {
        return Err(Error::Diagnostic(format!(
            "error sequence {errors:?} is at roundoff level or non-finite; order undefined"
        )));
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(ConvergenceStudy {
        dts: dts.to_vec(),
        order: *orders.last().expect("at least one ratio"),
        errors,
        orders,
    })
}

/// Convergence order of RK4 against a known solution.
pub fn convergence_order_exact<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y0: [f64; N],
    t_end: f64,
    dt_list: &[f64],
    exact: [f64; N],
) -> Result<ConvergenceStudy> {
    check_halving(dt_list, 3)?;
    let mut errors = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let n = (t_end / dt).round().max(1.0) as usize;
        let y = crate::integrator::rk4_integrate(sys, 0.0, y0, t_end, n)?;
        errors.push(y.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
    }
    orders_from(dt_list, errors)
}

/// Richardson self-convergence order of a scenario from its final state,
/// using successive differences of runs at halved RK4 steps.
pub fn convergence_order(cfg: &ScenarioConfig, dt_list: &[f64]) -> Result<ConvergenceStudy> {
    check_halving(dt_list, 3)?;
    let mut finals = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let mut c = cfg.clone();
        c.method = Method::Rk4 { dt };
        c.sample_every = usize::MAX;
        let tr = integrate(&c)?;
        if !tr.termination.is_completed() {
            return Err(Error::Diagnostic(format!(
                "run with dt = {dt} did not complete: {}",
                tr.termination.status()
            )));
        }
        let r = tr.records.last().expect("final record");
        finals.push([r.a, r.adot, r.x2, r.p2, r.c]);
    }
    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .collect();
    orders_from(&dt_list[1..], diffs)
}

/// Weak-coupling scaling of `max_t |N_ours - N_cdms|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyScaling {
    pub couplings: Vec<f64>,
    /// `max_t |N_ours - N_cdms|` per coupling.
    pub amplitudes: Vec<f64>,
    /// `max_t |N_ours - N_cdms - e^4 A^2 A'^2 / 16 m^6|` per coupling.
    pub remainders: Vec<f64>,
    /// Least-squares slope of `ln amplitude` against `ln e`; `None` when rejected.
    pub power: Option<f64>,
    /// Why the fit was rejected, if it was.
    pub note: Option<String>,
    pub statuses: Vec<String>,
}

impl DiscrepancyScaling {
    /// `remainder / e^6` per coupling.
    pub fn remainder_coefficients(&self) -> Vec<f64> {
        self.couplings
            .iter()
            .zip(&self.remainders)
            .map(|(e, r)| r / e.powi(6))
            .collect()
    }
}

/// Least-squares slope of `ys` against `xs` in log-log space.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn discrepancy_series(records: &[TimeSeriesRecord]) -> (f64, f64) {
    records.iter().fold((0.0f64, 0.0f64), |(amp, rem), r| {
        let d = r.n_ours - r.n_cdms;
        (amp.max(d.abs()), rem.max((d - r.dn_leading).abs()))
    })
}

/// Runs `base` at each coupling in `e_list` (in parallel) and fits the power law.
pub fn discrepancy_scaling(base: &ScenarioConfig, e_list: &[f64]) -> Result<DiscrepancyScaling> {
    if e_list.len() < 3 {
        return Err(Error::usage(format!(
            "discrepancy scaling needs at least 3 couplings, got {}",
            e_list.len()
        )));
    }
    let all_zero = e_list.iter().all(|&e| e == 0.0);
    if !all_zero {
        if e_list.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::usage("couplings must all be positive (or all zero)"));
        }
        let ratio = e_list[1] / e_list[0];
        if e_list.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) || ratio == 1.0 {
            return Err(Error::usage("couplings must form a geometric progression"));
        }
    }
    for &e in e_list {
        let strength = (e * base.a0 / base.params.m).powi(2);
        if strength >= 1.0 {
            return Err(Error::usage(format!(
                "coupling e = {e} leaves the weak regime (e^2 A0^2 / m^2 = {strength})"
            )));
        }
    }
    let legs: Vec<Result<(f64, f64, Termination)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = e_list
            .iter()
            .map(|&e| {
                scope.spawn(move || {
                    let mut cfg = base.clone();
                    cfg.params.e = e;
                    let tr = integrate(&cfg)?;
                    let (amp, rem) = discrepancy_series(&tr.records);
                    Ok((amp, rem, tr.termination))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("leg thread panicked"))
            .collect()
    });
    let mut amplitudes = Vec::new();
    let mut remainders = Vec::new();
    let mut statuses = Vec::new();
    for leg in legs {
        let (a, r, term) = leg?;
        amplitudes.push(a);
        remainders.push(r);
        statuses.push(term.status().to_string());
    }
    let (power, note) = if amplitudes.iter().all(|&a| a == 0.0) {
        (None, Some("zero signal: all discrepancy amplitudes vanish".to_string()))
    } else if amplitudes.iter().any(|&a| !(a > 0.0)) {
        (None, Some("some amplitudes vanish; power law undefined".to_string()))
    } else if statuses.iter().any(|s| s != "completed") {
        (None, Some("some legs aborted".to_string()))
    } else {
        (Some(log_log_slope(e_list, &amplitudes)), None)
    };
    Ok(DiscrepancyScaling {
        couplings: e_list.to_vec(),
        amplitudes,
        remainders,
        power,
        note,
        statuses,
    })
}

/// Summary written by the `diagnose` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub scenario: String,
    pub status: String,
    pub energy_drift: Option<f64>,
    pub lyapunov: Option<LyapunovEstimate>,
    pub order: Option<f64>,
    pub extrema_ours: Option<usize>,
    pub extrema_cdms: Option<usize>,
    pub discrepancy_power: Option<f64>,
    /// Reasons for any field left empty.
    pub notes: Vec<String>,
}

impl DiagnosticsReport {
    /// Cheap part of the report, from an existing run.
    pub fn from_run(cfg: &ScenarioConfig, records: &[TimeSeriesRecord], termination: &Termination) -> Self {
        let mut notes = Vec::new();
        let energy_drift = energy_drift(records)
            .map_err(|e| notes.push(format!("energy_drift: {e}")))
            .ok();
        let ours: Vec<f64> = records.iter().map(|r| r.n_ours).collect();
        let cdms: Vec<f64> = records.iter().map(|r| r.n_cdms).collect();
        let extrema_ours = structure_count(&ours, STRUCTURE_NOISE_FLOOR)
            .map_err(|e| notes.push(format!("extrema: {e}")))
            .ok();
        let extrema_cdms = structure_count(&cdms, STRUCTURE_NOISE_FLOOR).ok();
        DiagnosticsReport {
            scenario: cfg.name.clone(),
            status: termination.status().to_string(),
            energy_drift,
            lyapunov: None,
            order: None,
            extrema_ours,
            extrema_cdms,
            discrepancy_power: None,
            notes,
        }
    }
}

/// Full diagnostics of one scenario: the run itself, a Lyapunov estimate over
/// the whole horizon, self-convergence over at most [`ORDER_HORIZON`], and the
/// discrepancy power over `[e, e/2, e/4]` when the coupling is weak.
pub fn diagnose(cfg: &ScenarioConfig) -> Result<(crate::dynamics::Trajectory, DiagnosticsReport)> {
    let tr = integrate(cfg)?;
    let mut report = DiagnosticsReport::from_run(cfg, &tr.records, &tr.termination);

    let renorm = 1.0f64.min(cfg.t_end);
    match lyapunov_max(cfg, renorm, cfg.t_end) {
        Ok(l) => report.lyapunov = Some(l),
        Err(e) => report.notes.push(format!("lyapunov: {e}")),
    }

    let dt = step_of(cfg.method);
    let mut short = cfg.clone();
    short.t_end = cfg.t_end.min(ORDER_HORIZON);
    match convergence_order(&short, &[dt, dt / 2.0, dt / 4.0]) {
        Ok(c) => report.order = Some(c.order),
        Err(e) => report.notes.push(format!("order: {e}")),
    }

    let e = cfg.params.e;
    if e > 0.0 {
        match discrepancy_scaling(cfg, &[e, e / 2.0, e / 4.0]) {
            Ok(s) => {
                report.discrepancy_power = s.power;
                if let Some(n) = s.note {
                    report.notes.push(format!("discrepancy: {n}"));
                }
            }
            Err(err) => report.notes.push(format!("discrepancy: {err}")),
        }
    } else {
        report.notes.push("discrepancy: zero signal (e = 0)".into());
    }
    Ok((tr, report))
}
