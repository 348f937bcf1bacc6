//! Time evolution of the coupled classical-quantum system.
//!
//! The classical coordinate feels the mean-field force `A'' = -e^2 A <x^2>`,
//! while the quantum Gaussian evolves under the instantaneous frequency
//! `omega(A)`. Both sectors are advanced together as one first-order system.
//! Three encodings of the quantum sector are supported:
//!
//! * `pinney`: `rho'' = -omega^2 rho + 1/rho^3`, plus the phase `theta' = 1/rho^2`;
//! * `mode`: `f'' = -omega^2 f` with `<x^2> = |f|^2`;
//! * `moments`: `x2' = 2c`, `c' = p2 - omega^2 x2`, `p2' = -2 omega^2 c`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{rk4_step, DormandPrince, OdeSystem};
use crate::physics::{
    effective_frequency, energies, frequency, occupation_difference_leading, occupation_numbers, GaussianMoments,
    ModelParams, OscBasis,
};
use crate::state::{QuantumSector, Representation, SemiState};

pub const DEFAULT_RHO_MIN: f64 = 1e-8;

/// How the quantum sector is prepared at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuantumInit {
    /// Vacuum of the invariant basis matched to the instantaneous frequency:
    /// `Omega(0) = omega(A0)`, `Omega'(0) = 0`.
    Vacuum,
    /// Explicit Pinney data.
    Explicit { rho0: f64, rhodot0: f64 },
    /// Second-order adiabatic (WKB) solution of the effective-frequency
    /// equation, so `Omega` starts on the slowly varying branch.
    Adiabatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Method {
    Rk4 { dt: f64 },
    Adaptive { rtol: f64, atol: f64, dt_init: f64 },
}

impl Method {
    /// Spacing of the output grid for a given stride.
    pub fn sample_interval(&self, sample_every: usize) -> f64 {
        let base = match *self {
            Method::Rk4 { dt } => dt,
            Method::Adaptive { dt_init, .. } => dt_init,
        };
        base * sample_every as f64
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub params: ModelParams,
    pub a0: f64,
    pub adot0: f64,
    pub quantum_init: QuantumInit,
    pub representation: Representation,
    pub method: Method,
    pub t_end: f64,
    /// Output stride: every `sample_every` RK4 steps, or every
    /// `sample_every * dt_init` time units for the adaptive method.
    pub sample_every: usize,
    /// Width floor below which the run aborts.
    pub rho_min: f64,
}

impl ScenarioConfig {
    /// Vacuum-initialized RK4 run with `dt = 1e-3` sampled every 10 steps.
    pub fn new(name: impl Into<String>, params: ModelParams, a0: f64, adot0: f64, t_end: f64) -> Self {
        ScenarioConfig {
            name: name.into(),
            params,
            a0,
            adot0,
            quantum_init: QuantumInit::Vacuum,
            representation: Representation::Pinney,
            method: Method::Rk4 { dt: 1e-3 },
            t_end,
            sample_every: 10,
            rho_min: DEFAULT_RHO_MIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::usage(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.t_end, "t_end")?;
        positive(self.rho_min, "rho_min")?;
        if !(self.a0.is_finite() && self.adot0.is_finite()) {
            return Err(Error::usage("A0 and Adot0 must be finite"));
        }
        if self.sample_every == 0 {
            return Err(Error::usage("sample_every must be at least 1"));
        }
        match self.method {
            Method::Rk4 { dt } => positive(dt, "dt")?,
            Method::Adaptive { rtol, atol, dt_init } => {
                positive(rtol, "rtol")?;
                positive(atol, "atol")?;
                positive(dt_init, "dt_init")?;
            }
        }
        if let QuantumInit::Explicit { rho0, rhodot0 } = self.quantum_init {
            positive(rho0, "rho0")?;
            if !rhodot0.is_finite() {
                return Err(Error::usage("rhodot0 must be finite"));
            }
        }
        Ok(())
    }

    /// Initial state in the configured representation.
    pub fn initial_state(&self) -> Result<SemiState> {
        self.validate()?;
        let pinney = match self.quantum_init {
            QuantumInit::Vacuum => init_vacuum(self.a0, self.adot0, &self.params),
            QuantumInit::Explicit { rho0, rhodot0 } => SemiState::pinney(0.0, self.a0, self.adot0, rho0, rhodot0, 0.0),
            QuantumInit::Adiabatic => init_adiabatic(self.a0, self.adot0, &self.params)?,
        };
        pinney.convert(self.representation, &self.params)
    }
}

/// Invariant-basis vacuum with `Omega(0) = omega(A0)` and `Omega'(0) = 0`.
pub fn init_vacuum(a0: f64, adot0: f64, params: &ModelParams) -> SemiState {
    let (omega, _) = frequency(a0, adot0, params);
    SemiState::pinney(0.0, a0, adot0, omega.powf(-0.5), 0.0, 0.0)
}

/// Invariant-basis vacuum on the adiabatic branch:
/// `Omega = omega - omega''/(4 omega^2) + 3 omega'^2/(8 omega^3)`, `Omega' = omega'`.
pub fn init_adiabatic(a0: f64, adot0: f64, params: &ModelParams) -> Result<SemiState> {
    let (omega, omegadot) = frequency(a0, adot0, params);
    let e2 = params.e * params.e;
    let addot = -e2 * a0 * 0.5 * params.hbar / omega;
    let omegaddot = (e2 * (adot0 * adot0 + a0 * addot) - omegadot * omegadot) / omega;
    let omega_eff = omega - omegaddot / (4.0 * omega * omega) + 3.0 * omegadot * omegadot / (8.0 * omega.powi(3));
    if !(omega_eff > 0.0) {
        return Err(Error::domain(format!(
            "adiabatic initialization breaks down (Omega = {omega_eff}); the motion is not slow"
        )));
    }
    let rho = omega_eff.powf(-0.5);
    let rhodot = -0.5 * omegadot * rho / omega_eff;
    Ok(SemiState::pinney(0.0, a0, adot0, rho, rhodot, 0.0))
}

/// A flat encoding of [`SemiState`] that can be integrated.
pub trait Flow<const N: usize>: OdeSystem<N> {
    fn pack(&self, state: &SemiState) -> Result<[f64; N]>;
    fn unpack(&self, t: f64, y: &[f64; N]) -> SemiState;
    /// Pure-state width `rho`, monitored against the collapse floor.
    fn width(&self, y: &[f64; N]) -> f64;
}

#[inline]
fn omega_sq(a: f64, params: &ModelParams) -> f64 {
    params.m * params.m + params.e * params.e * a * a
}

fn check_finite<const N: usize>(t: f64, y: &[f64; N]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

/// `[A, A', rho, rho', theta]`.
#[derive(Debug, Clone, Copy)]
pub struct PinneyFlow {
    pub params: ModelParams,
}

impl OdeSystem<5> for PinneyFlow {
    fn rhs(&self, t: f64, y: &[f64; 5]) -> Result<[f64; 5]> {
        check_finite(t, y)?;
        let [a, adot, rho, rhodot, _] = *y;
        if rho <= 0.0 {
            return Err(Error::domain(format!("rho = {rho} at t = {t}")));
        }
        let e2 = self.params.e * self.params.e;
        let inv2 = 1.0 / (rho * rho);
        Ok([
            adot,
            -e2 * a * 0.5 * self.params.hbar * rho * rho,
            rhodot,
            -omega_sq(a, &self.params) * rho + inv2 / rho,
            inv2,
        ])
    }
}

impl Flow<5> for PinneyFlow {
    fn pack(&self, s: &SemiState) -> Result<[f64; 5]> {
        match s.quantum {
            QuantumSector::Pinney { rho, rhodot, theta } => Ok([s.a, s.adot, rho, rhodot, theta]),
            _ => Err(Error::usage("expected a Pinney state")),
        }
    }

    fn unpack(&self, t: f64, y: &[f64; 5]) -> SemiState {
        SemiState::pinney(t, y[0], y[1], y[2], y[3], y[4])
    }

    fn width(&self, y: &[f64; 5]) -> f64 {
        y[2]
    }
}

/// `[A, A', Re f, Im f, Re f', Im f']`.
#[derive(Debug, Clone, Copy)]
pub struct ModeFlow {
    pub params: ModelParams,
}

impl OdeSystem<6> for ModeFlow {
    fn rhs(&self, t: f64, y: &[f64; 6]) -> Result<[f64; 6]> {
        check_finite(t, y)?;
        let [a, adot, fr, fi, gr, gi] = *y;
        let e2 = self.params.e * self.params.e;
        let w2 = omega_sq(a, &self.params);
        Ok([adot, -e2 * a * (fr * fr + fi * fi), gr, gi, -w2 * fr, -w2 * fi])
    }
}

impl Flow<6> for ModeFlow {
    fn pack(&self, s: &SemiState) -> Result<[f64; 6]> {
        match s.quantum {
            QuantumSector::Mode { f, fdot } => Ok([s.a, s.adot, f.re, f.im, fdot.re, fdot.im]),
            _ => Err(Error::usage("expected a mode state")),
        }
    }

    fn unpack(&self, t: f64, y: &[f64; 6]) -> SemiState {
        SemiState::mode(t, y[0], y[1], Complex64::new(y[2], y[3]), Complex64::new(y[4], y[5]))
    }

    fn width(&self, y: &[f64; 6]) -> f64 {
        (2.0 * (y[2] * y[2] + y[3] * y[3]) / self.params.hbar).sqrt()
    }
}

/// `[A, A', x2, p2, c]`.
#[derive(Debug, Clone, Copy)]
pub struct MomentFlow {
    pub params: ModelParams,
}

impl OdeSystem<5> for MomentFlow {
    fn rhs(&self, t: f64, y: &[f64; 5]) -> Result<[f64; 5]> {
        check_finite(t, y)?;
        let [a, adot, x2, p2, c] = *y;
        let e2 = self.params.e * self.params.e;
        let w2 = omega_sq(a, &self.params);
        Ok([adot, -e2 * a * x2, 2.0 * c, -2.0 * w2 * c, p2 - w2 * x2])
    }
}

impl Flow<5> for MomentFlow {
    fn pack(&self, s: &SemiState) -> Result<[f64; 5]> {
        match s.quantum {
            QuantumSector::Moments(m) => Ok([s.a, s.adot, m.x2, m.p2, m.c]),
            _ => Err(Error::usage("expected a moments state")),
        }
    }

    fn unpack(&self, t: f64, y: &[f64; 5]) -> SemiState {
        SemiState::from_moments(t, y[0], y[1], GaussianMoments::new(y[2], y[3], y[4]))
    }

    fn width(&self, y: &[f64; 5]) -> f64 {
        (2.0 * y[2] / self.params.hbar).sqrt()
    }
}

/// Moments driving the classical sector, with a Pinney width co-integrated
/// under the same `omega(A(t))`: `[A, A', x2, p2, c, rho, rho']`.
///
/// The Pinney width defines the invariant basis at every instant; the number
/// of its quanta in the evolving moments is conserved.
#[derive(Debug, Clone, Copy)]
pub struct InvariantFlow {
    pub params: ModelParams,
}

impl OdeSystem<7> for InvariantFlow {
    fn rhs(&self, t: f64, y: &[f64; 7]) -> Result<[f64; 7]> {
        check_finite(t, y)?;
        let [a, adot, x2, p2, c, rho, rhodot] = *y;
        if rho <= 0.0 {
            return Err(Error::domain(format!("rho = {rho} at t = {t}")));
        }
        let e2 = self.params.e * self.params.e;
        let w2 = omega_sq(a, &self.params);
        Ok([
            adot,
            -e2 * a * x2,
            2.0 * c,
            -2.0 * w2 * c,
            p2 - w2 * x2,
            rhodot,
            -w2 * rho + 1.0 / (rho * rho * rho),
        ])
    }
}

/// Quantum-sector part of a time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantumDerivative {
    Pinney { rhodot: f64, rhoddot: f64, thetadot: f64 },
    Mode { fdot: Complex64, fddot: Complex64 },
    Moments { x2dot: f64, p2dot: f64, cdot: f64 },
}

/// Time derivative of a [`SemiState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub adot: f64,
    pub addot: f64,
    pub quantum: QuantumDerivative,
}

/// Right-hand side of the coupled equations for any representation.
pub fn derivatives(state: &SemiState, params: &ModelParams) -> Result<StateDerivative> {
    state.validate(params)?;
    let params = *params;
    match state.representation() {
        Representation::Pinney => {
            let flow = PinneyFlow { params };
            let d = flow.rhs(state.t, &flow.pack(state)?)?;
            Ok(StateDerivative {
                adot: d[0],
                addot: d[1],
                quantum: QuantumDerivative::Pinney {
                    rhodot: d[2],
                    rhoddot: d[3],
                    thetadot: d[4],
                },
            })
        }
        Representation::Mode => {
            let flow = ModeFlow { params };
            let d = flow.rhs(state.t, &flow.pack(state)?)?;
            Ok(StateDerivative {
                adot: d[0],
                addot: d[1],
                quantum: QuantumDerivative::Mode {
                    fdot: Complex64::new(d[2], d[3]),
                    fddot: Complex64::new(d[4], d[5]),
                },
            })
        }
        Representation::Moments => {
            let flow = MomentFlow { params };
            let d = flow.rhs(state.t, &flow.pack(state)?)?;
            Ok(StateDerivative {
                adot: d[0],
                addot: d[1],
                quantum: QuantumDerivative::Moments {
                    x2dot: d[2],
                    p2dot: d[3],
                    cdot: d[4],
                },
            })
        }
    }
}

/// One sampled row of observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
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

impl TimeSeriesRecord {
    /// Column names, in output order.
    pub const COLUMNS: [&'static str; 18] = [
        "t",
        "A",
        "Adot",
        "rho",
        "rhodot",
        "Omega",
        "Omegadot",
        "omega",
        "omegadot",
        "x2",
        "p2",
        "c",
        "N_ours",
        "N_cdms",
        "dN_leading",
        "Hx",
        "Etot",
        "corr",
    ];

    pub fn from_state(state: &SemiState, params: &ModelParams) -> Result<Self> {
        let (omega, omegadot) = frequency(state.a, state.adot, params);
        let (rho, rhodot) = state.width(params.hbar)?;
        let (omega_eff, omega_eff_dot) = effective_frequency(rho, rhodot)?;
        let m = state.moments(params.hbar)?;
        let (n_ours, n_cdms) = occupation_numbers(state, params)?;
        let en = energies(state, params)?;
        Ok(TimeSeriesRecord {
            t: state.t,
            a: state.a,
            adot: state.adot,
            rho,
            rhodot,
            omega_eff,
            omega_eff_dot,
            omega,
            omegadot,
            x2: m.x2,
            p2: m.p2,
            c: m.c,
            n_ours,
            n_cdms,
            dn_leading: occupation_difference_leading(state.a, state.adot, params),
            hx: en.hx,
            etot: en.etot,
            corr: en.corr,
        })
    }

    pub fn values(&self) -> [f64; 18] {
        [
            self.t,
            self.a,
            self.adot,
            self.rho,
            self.rhodot,
            self.omega_eff,
            self.omega_eff_dot,
            self.omega,
            self.omegadot,
            self.x2,
            self.p2,
            self.c,
            self.n_ours,
            self.n_cdms,
            self.dn_leading,
            self.hx,
            self.etot,
            self.corr,
        ]
    }

    pub fn from_values(v: &[f64; 18]) -> Self {
        TimeSeriesRecord {
            t: v[0],
            a: v[1],
            adot: v[2],
            rho: v[3],
            rhodot: v[4],
            omega_eff: v[5],
            omega_eff_dot: v[6],
            omega: v[7],
            omegadot: v[8],
            x2: v[9],
            p2: v[10],
            c: v[11],
            n_ours: v[12],
            n_cdms: v[13],
            dn_leading: v[14],
            hx: v[15],
            etot: v[16],
            corr: v[17],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortKind {
    /// The Gaussian width fell below the floor.
    Singularity,
    /// Step-size underflow or a non-finite state.
    StepFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    Aborted { kind: AbortKind, t: f64, detail: String },
}

impl Termination {
    pub fn status(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Aborted {
                kind: AbortKind::Singularity,
                ..
            } => "aborted-singularity",
            Termination::Aborted {
                kind: AbortKind::StepFailure,
                ..
            } => "aborted-stepfail",
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    fn from_error(err: Error, t: f64) -> Self {
        let kind = match err {
            Error::Singularity { .. } | Error::Domain(_) => AbortKind::Singularity,
            _ => AbortKind::StepFailure,
        };
        let t = match err {
            Error::Singularity { t, .. } | Error::StepUnderflow { t, .. } | Error::NonFinite { t } => t,
            _ => t,
        };
        Termination::Aborted {
            kind,
            t,
            detail: err.to_string(),
        }
    }
}

/// Result of a run: sampled rows (partial on abort) and how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TimeSeriesRecord>,
    pub termination: Termination,
    /// Last state reached (the state before the failing step on abort).
    pub final_state: SemiState,
    pub steps: usize,
}

/// Drives `sys` over `[0, t_end]`, calling `on_sample` at the initial point and
/// on the output grid. Returns how the run ended, the accepted step count and
/// the last good `(t, y)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn drive<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    method: Method,
    t_end: f64,
    sample_every: usize,
    y0: [f64; N],
    width: impl Fn(&[f64; N]) -> f64,
    rho_min: f64,
    mut on_sample: impl FnMut(f64, &[f64; N]) -> Result<()>,
) -> (Termination, usize, f64, [f64; N]) {
    let mut y = y0;
    let mut t = 0.0;
    let mut steps = 0usize;
    if let Err(e) = on_sample(t, &y) {
        return (Termination::from_error(e, t), steps, t, y);
    }
    let guard = |t: f64, y: &[f64; N]| -> Result<()> {
        check_finite(t, y)?;
        let rho = width(y);
        if !(rho > rho_min) {
            return Err(Error::Singularity {
                t,
                detail: format!("width rho = {rho:e} fell below rho_min = {rho_min:e}"),
            });
        }
        Ok(())
    };
    match method {
        Method::Rk4 { dt } => {
            let n_steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
            for n in 1..=n_steps {
                let t_next = if n == n_steps { t_end } else { n as f64 * dt };
                let next = rk4_step(sys, t, &y, t_next - t).and_then(|y_new| guard(t_next, &y_new).map(|_| y_new));
                match next {
                    Ok(y_new) => {
                        y = y_new;
                        t = t_next;
                        steps += 1;
                    }
                    Err(e) => return (Termination::from_error(e, t), steps, t, y),
                }
                if n % sample_every == 0 || n == n_steps {
                    if let Err(e) = on_sample(t, &y) {
                        return (Termination::from_error(e, t), steps, t, y);
                    }
                }
            }
        }
        Method::Adaptive { rtol, atol, dt_init } => {
            let dp = DormandPrince::new(rtol, atol);
            let interval = dt_init * sample_every as f64;
            let n_samples = ((t_end / interval) - 1e-9).ceil().max(1.0) as usize;
            let mut h = dt_init;
            for k in 1..=n_samples {
                let target = if k == n_samples { t_end } else { k as f64 * interval };
                match dp
                    .advance(sys, t, y, target, &mut h)
                    .and_then(|(y_new, n)| guard(target, &y_new).map(|_| (y_new, n)))
                {
                    Ok((y_new, n)) => {
                        y = y_new;
                        t = target;
                        steps += n;
                    }
                    Err(e) => return (Termination::from_error(e, t), steps, t, y),
                }
                if let Err(e) = on_sample(t, &y) {
                    return (Termination::from_error(e, t), steps, t, y);
                }
            }
        }
    }
    (Termination::Completed, steps, t, y)
}

fn run_flow<F: Flow<N>, const N: usize>(flow: F, cfg: &ScenarioConfig, initial: &SemiState) -> Result<Trajectory> {
    let y0 = flow.pack(initial)?;
    let mut records = Vec::new();
    let params = cfg.params;
    let (termination, steps, t, y) = drive(
        &flow,
        cfg.method,
        cfg.t_end,
        cfg.sample_every,
        y0,
        |y| flow.width(y),
        cfg.rho_min,
        |t, y| {
            records.push(TimeSeriesRecord::from_state(&flow.unpack(t, y), &params)?);
            Ok(())
        },
    );
    Ok(Trajectory {
        records,
        termination,
        final_state: flow.unpack(t, &y),
        steps,
    })
}

/// Integrates a scenario. Invalid configurations are errors; numerical
/// breakdown is reported in [`Trajectory::termination`] with partial records.
pub fn integrate(cfg: &ScenarioConfig) -> Result<Trajectory> {
    let initial = cfg.initial_state()?;
    let params = cfg.params;
    match cfg.representation {
        Representation::Pinney => run_flow(PinneyFlow { params }, cfg, &initial),
        Representation::Mode => run_flow(ModeFlow { params }, cfg, &initial),
        Representation::Moments => run_flow(MomentFlow { params }, cfg, &initial),
    }
}

/// Samples of the invariant-basis quanta `<a^dagger a>` along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSeries {
    pub t: Vec<f64>,
    pub quanta: Vec<f64>,
    pub termination: Termination,
}

/// Evolves `moments0` together with the configured Pinney width and records
/// the number of invariant-basis quanta (`W = Omega`, `sigma = Omega'/2 Omega`)
/// in the evolving moments. With `moments0 = None` the quantum sector starts
/// in the invariant vacuum itself.
pub fn integrate_invariant(cfg: &ScenarioConfig, moments0: Option<GaussianMoments>) -> Result<InvariantSeries> {
    let pinney = cfg.initial_state()?.convert(Representation::Pinney, &cfg.params)?;
    let (rho, rhodot) = pinney.width(cfg.params.hbar)?;
    let m = match moments0 {
        Some(m) => {
            m.validate(cfg.params.hbar)?;
            m
        }
        None => pinney.moments(cfg.params.hbar)?,
    };
    let flow = InvariantFlow { params: cfg.params };
    let y0 = [cfg.a0, cfg.adot0, m.x2, m.p2, m.c, rho, rhodot];
    let hbar = cfg.params.hbar;
    let mut t_out = Vec::new();
    let mut quanta = Vec::new();
    let (termination, ..) = drive(
        &flow,
        cfg.method,
        cfg.t_end,
        cfg.sample_every,
        y0,
        |y| y[5],
        cfg.rho_min,
        |t, y| {
            let (om, omd) = effective_frequency(y[5], y[6])?;
            let basis = OscBasis::invariant(om, omd, 0.0)?;
            let n = crate::physics::quanta_expectation(&GaussianMoments::new(y[2], y[3], y[4]), &basis, hbar)?;
            t_out.push(t);
            quanta.push(n);
            Ok(())
        },
    );
    Ok(InvariantSeries {
        t: t_out,
        quanta,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn vacuum_init_examples() {
        let s = init_vacuum(1.0, 0.0, &unit());
        let (rho, rhodot) = s.width(1.0).unwrap();
        assert!((rho - 0.8408964).abs() < 1e-7 && rhodot == 0.0);
        let d = derivatives(&s, &unit()).unwrap();
        match d.quantum {
            QuantumDerivative::Pinney { rhoddot, .. } => assert!(rhoddot.abs() < 1e-14),
            _ => panic!(),
        }
        assert!((d.addot + 0.5 / 2f64.sqrt()).abs() < 1e-14);

        let s = init_vacuum(0.0, 0.0, &unit());
        let d = derivatives(&s, &unit()).unwrap();
        assert_eq!(s.width(1.0).unwrap(), (1.0, 0.0));
        assert_eq!((d.adot, d.addot), (0.0, 0.0));
        assert_eq!(
            d.quantum,
            QuantumDerivative::Pinney {
                rhodot: 0.0,
                rhoddot: 0.0,
                thetadot: 1.0
            }
        );

        let s = init_vacuum(1.0, 1.0, &unit());
        let (o, c) = occupation_numbers(&s, &unit()).unwrap();
        assert_eq!(o, 0.0);
        assert!((c - 1.0 / 128.0).abs() < 1e-15);
    }

    #[test]
    fn decoupled_derivatives() {
        let p = ModelParams::new(1.0, 0.0, 1.0).unwrap();
        let s = SemiState::pinney(0.0, 3.0, 1.0, 1.2, 0.0, 0.0);
        let d = derivatives(&s, &p).unwrap();
        assert_eq!(d.addot, 0.0);
        match d.quantum {
            QuantumDerivative::Pinney { rhoddot, .. } => {
                assert!((rhoddot - (-1.2 + 1.0 / 1.2f64.powi(3))).abs() < 1e-15)
            }
            _ => panic!(),
        }
    }

    #[test]
    fn moment_derivative_example_and_cross_check() {
        // Omega = 2 vacuum at omega = 1 (A = 0).
        let m = crate::physics::vacuum_moments(2.0, 0.0, 1.0).unwrap();
        let s = SemiState::from_moments(0.0, 0.0, 0.0, m);
        let d = derivatives(&s, &unit()).unwrap();
        assert_eq!(
            d.quantum,
            QuantumDerivative::Moments {
                x2dot: 0.0,
                p2dot: 0.0,
                cdot: 0.75
            }
        );
        // d<x^2>/dt from the mode form equals 2c.
        let s = SemiState::pinney(0.0, 0.4, 0.3, 0.9, 0.25, 0.0);
        let mode = s.convert(Representation::Mode, &unit()).unwrap();
        let moments = s.convert(Representation::Moments, &unit()).unwrap();
        let (f, fdot) = match mode.quantum {
            QuantumSector::Mode { f, fdot } => (f, fdot),
            _ => unreachable!(),
        };
        let x2dot_mode = 2.0 * (f.conj() * fdot).re;
        match derivatives(&moments, &unit()).unwrap().quantum {
            QuantumDerivative::Moments { x2dot, .. } => assert!((x2dot - x2dot_mode).abs() < 1e-14),
            _ => unreachable!(),
        }
    }

    #[test]
    fn derivatives_reject_collapsed_width() {
        let s = SemiState::pinney(0.0, 0.0, 0.0, -0.1, 0.0, 0.0);
        assert!(matches!(derivatives(&s, &unit()), Err(Error::Domain(_))));
    }

    #[test]
    fn adiabatic_init_satisfies_width_equation_approximately() {
        let p = ModelParams::new(1.0, 0.05, 1.0).unwrap();
        let s = init_adiabatic(1.0, 1.0, &p).unwrap();
        let (rho, rhodot) = s.width(1.0).unwrap();
        let (om, omd) = effective_frequency(rho, rhodot).unwrap();
        let (w, wd) = frequency(1.0, 1.0, &p);
        assert!((om - w).abs() < 1e-3 && (omd - wd).abs() < 1e-12);
        // The correction lowers Omega by about e^2 A'^2 / 4.
        assert!(om < w);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ScenarioConfig::new("x", unit(), 0.0, 0.0, 1.0);
        assert!(cfg.validate().is_ok());
        cfg.t_end = 0.0;
        assert!(cfg.validate().is_err());
        cfg.t_end = 1.0;
        cfg.method = Method::Rk4 { dt: -1.0 };
        assert!(cfg.validate().is_err());
        cfg.method = Method::Rk4 { dt: 0.1 };
        cfg.quantum_init = QuantumInit::Explicit {
            rho0: 0.0,
            rhodot0: 0.0,
        };
        assert!(cfg.validate().is_err());
        cfg.quantum_init = QuantumInit::Vacuum;
        cfg.sample_every = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sampling_grid_and_partial_final_step() {
        let mut cfg = ScenarioConfig::new("grid", unit(), 0.5, 0.0, 1.05);
        cfg.method = Method::Rk4 { dt: 0.1 };
        cfg.sample_every = 2;
        let tr = integrate(&cfg).unwrap();
        let ts: Vec<f64> = tr.records.iter().map(|r| r.t).collect();
        assert_eq!(ts.len(), 7);
        assert_eq!(ts[0], 0.0);
        assert!((ts[1] - 0.2).abs() < 1e-15);
        assert_eq!(*ts.last().unwrap(), 1.05);
        assert_eq!(tr.steps, 11);
        assert!(tr.termination.is_completed());
    }

    #[test]
    fn adaptive_hits_sample_grid_exactly() {
        let mut cfg = ScenarioConfig::new("adaptive", unit(), 1.0, 1.0, 5.0);
        cfg.method = Method::Adaptive {
            rtol: 1e-10,
            atol: 1e-12,
            dt_init: 0.01,
        };
        cfg.sample_every = 50;
        let tr = integrate(&cfg).unwrap();
        assert_eq!(tr.records.len(), 11);
        for (k, r) in tr.records.iter().enumerate() {
            assert!((r.t - 0.5 * k as f64).abs() < 1e-12);
        }
        let mut rk = cfg.clone();
        rk.method = Method::Rk4 { dt: 1e-3 };
        rk.sample_every = 500;
        let reference = integrate(&rk).unwrap();
        for (x, y) in tr.records.iter().zip(&reference.records) {
            assert!((x.x2 - y.x2).abs() < 1e-8, "{} vs {}", x.x2, y.x2);
        }
    }

    #[test]
    fn collapse_is_reported_with_partial_records() {
        // A tiny floor violation: start narrower than the floor allows to reach.
        let mut cfg = ScenarioConfig::new("collapse", unit(), 0.0, 0.0, 10.0);
        cfg.quantum_init = QuantumInit::Explicit {
            rho0: 1.0,
            rhodot0: -50.0,
        };
        cfg.rho_min = 0.05;
        cfg.method = Method::Rk4 { dt: 1e-3 };
        let tr = integrate(&cfg).unwrap();
        assert_eq!(tr.termination.status(), "aborted-singularity");
        assert!(!tr.records.is_empty());
        match tr.termination {
            Termination::Aborted { t, .. } => assert!(t > 0.0 && t < 10.0),
            _ => unreachable!(),
        }
    }
}
