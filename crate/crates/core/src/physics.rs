//! Pure kernels for the coupled oscillator pair.
//!
//! The classical coordinate `A` sets the frequency of the quantum oscillator,
//! `omega^2 = m^2 + e^2 A^2`. The quantum sector is a Gaussian state whose
//! width is parameterized by an effective frequency `Omega = 1/rho^2`, with
//! `rho` obeying the Ermakov-Pinney equation `rho'' + omega^2 rho = 1/rho^3`.
//!
//! Particle numbers are expectations of `c^dagger c` for a family of
//! annihilation operators
//!
//! ```text
//! c = e^{i theta} ((W + i sigma) x + i p) / sqrt(2 hbar W)
//! ```
//!
//! which covers the static basis (`W = omega`, `sigma = 0`), the invariant
//! basis (`W = Omega`, `sigma = Omega'/2 Omega`) and the sheared basis used in
//! the earlier CDMS analysis (`W = omega`, `sigma = omega'/2 omega`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::SemiState;

/// Relative slack allowed on the Heisenberg bound before moments are rejected.
pub const HEISENBERG_TOLERANCE: f64 = 1e-8;

/// Physical constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Bare frequency of the quantum oscillator.
    pub m: f64,
    /// Coupling between `A` and `x`.
    pub e: f64,
    pub hbar: f64,
}

impl ModelParams {
    pub fn new(m: f64, e: f64, hbar: f64) -> Result<Self> {
        let params = ModelParams { m, e, hbar };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::domain(format!("m must be positive, got {}", self.m)));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::domain(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.e.is_finite() && self.e >= 0.0) {
            return Err(Error::domain(format!("e must be nonnegative, got {}", self.e)));
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            m: 1.0,
            e: 1.0,
            hbar: 1.0,
        }
    }
}

/// Second moments of the quantum sector (unit mass, so `p = x'`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    /// `<x^2>`
    pub x2: f64,
    /// `<p^2>`
    pub p2: f64,
    /// Symmetrized cross moment `<{x, p}>/2`.
    pub c: f64,
}

impl GaussianMoments {
    pub fn new(x2: f64, p2: f64, c: f64) -> Self {
        GaussianMoments { x2, p2, c }
    }

    /// `x2 p2 - c^2`; equals `hbar^2/4` for pure states.
    pub fn uncertainty(&self) -> f64 {
        self.x2 * self.p2 - self.c * self.c
    }

    /// Relative deviation of the uncertainty product from the pure-state value.
    pub fn purity_defect(&self, hbar: f64) -> f64 {
        let pure = 0.25 * hbar * hbar;
        (self.uncertainty() - pure) / pure
    }

    /// Checks positivity and the Heisenberg bound (with relative slack
    /// [`HEISENBERG_TOLERANCE`]).
    pub fn validate(&self, hbar: f64) -> Result<()> {
        if !(self.x2.is_finite() && self.p2.is_finite() && self.c.is_finite()) {
            return Err(Error::validation("non-finite moments"));
        }
        if self.x2 <= 0.0 || self.p2 <= 0.0 {
            return Err(Error::validation(format!(
                "moments must be positive (x2 = {}, p2 = {})",
                self.x2, self.p2
            )));
        }
        if self.purity_defect(hbar) < -HEISENBERG_TOLERANCE {
            return Err(Error::validation(format!(
                "Heisenberg bound violated: x2 p2 - c^2 = {:e} < hbar^2/4 = {:e}",
                self.uncertainty(),
                0.25 * hbar * hbar
            )));
        }
        Ok(())
    }
}

/// Annihilation-operator family `(W, sigma, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscBasis {
    pub w: f64,
    pub sigma: f64,
    pub theta: f64,
}

impl OscBasis {
    pub fn new(w: f64, sigma: f64, theta: f64) -> Result<Self> {
        let basis = OscBasis { w, sigma, theta };
        basis.validate()?;
        Ok(basis)
    }

    /// The basis that diagonalizes the instantaneous Hamiltonian.
    pub fn instantaneous(omega: f64) -> Result<Self> {
        Self::new(omega, 0.0, 0.0)
    }

    /// The invariant basis built from the effective frequency.
    pub fn invariant(omega_eff: f64, omega_eff_dot: f64, theta: f64) -> Result<Self> {
        if !(omega_eff > 0.0) {
            return Err(Error::domain(format!("Omega must be positive, got {omega_eff}")));
        }
        Self::new(omega_eff, omega_eff_dot / (2.0 * omega_eff), theta)
    }

    /// The CDMS basis: instantaneous frequency with shear `omega'/2 omega`.
    pub fn cdms(omega: f64, omegadot: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::domain(format!("omega must be positive, got {omega}")));
        }
        Self::new(omega, omegadot / (2.0 * omega), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w.is_finite() && self.w > 0.0) {
            return Err(Error::domain(format!(
                "basis frequency must be positive, got {}",
                self.w
            )));
        }
        if !self.sigma.is_finite() || !self.theta.is_finite() {
            return Err(Error::domain("basis shear and phase must be finite"));
        }
        Ok(())
    }
}

/// Instantaneous energies of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `<H_x>`, the mean energy of the quantum oscillator.
    pub hx: f64,
    /// `A'^2/2 + <H_x>`, conserved by the coupled flow.
    pub etot: f64,
    /// Size of the terms dropped by the mean-field reduction, `hbar^2 e^2 N / m^2`.
    pub corr: f64,
}

/// Returns `(omega, omega')` along the classical trajectory.
pub fn frequency(a: f64, adot: f64, params: &ModelParams) -> (f64, f64) {
    let e2 = params.e * params.e;
    let omega = (params.m * params.m + e2 * a * a).sqrt();
    (omega, e2 * a * adot / omega)
}

/// Returns `(Omega, Omega')` for the width `rho` of the Gaussian.
pub fn effective_frequency(rho: f64, rhodot: f64) -> Result<(f64, f64)> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::domain(format!("rho must be positive, got {rho}")));
    }
    let inv = 1.0 / (rho * rho);
    Ok((inv, -2.0 * rhodot * inv / rho))
}

/// Residual of the effective-frequency equation
/// `Omega''/(2 Omega) - 3/4 (Omega'/Omega)^2 + Omega^2 - omega^2`.
pub fn pinney_residual(omega_eff: f64, omega_eff_dot: f64, omega_eff_ddot: f64, omega: f64) -> f64 {
    let ratio = omega_eff_dot / omega_eff;
    0.5 * omega_eff_ddot / omega_eff - 0.75 * ratio * ratio + omega_eff * omega_eff - omega * omega
}

/// Moments of the vacuum of the invariant basis with effective frequency `Omega`.
pub fn vacuum_moments(omega_eff: f64, omega_eff_dot: f64, hbar: f64) -> Result<GaussianMoments> {
    if !(omega_eff.is_finite() && omega_eff > 0.0) {
        return Err(Error::domain(format!("Omega must be positive, got {omega_eff}")));
    }
    let x2 = 0.5 * hbar / omega_eff;
    let p2 = 0.5 * hbar * (omega_eff + 0.25 * omega_eff_dot * omega_eff_dot / (omega_eff * omega_eff * omega_eff));
    let c = -0.25 * hbar * omega_eff_dot / (omega_eff * omega_eff);
    Ok(GaussianMoments { x2, p2, c })
}

/// `<c^dagger c>` for the operator family `basis` in a state with the given moments.
pub fn quanta_expectation(moments: &GaussianMoments, basis: &OscBasis, hbar: f64) -> Result<f64> {
    basis.validate()?;
    moments.validate(hbar)?;
    let OscBasis { w, sigma, .. } = *basis;
    let quadratic = (w * w + sigma * sigma) * moments.x2 + moments.p2 + 2.0 * sigma * moments.c;
    Ok(quadratic / (2.0 * hbar * w) - 0.5)
}

/// Closed-form number of static quanta in the invariant vacuum:
/// `(omega/Omega + Omega/omega + Omega'^2/(4 omega Omega^3))/4 - 1/2`.
pub fn occupation_closed_form(omega_eff: f64, omega_eff_dot: f64, omega: f64) -> f64 {
    let cube = omega_eff * omega_eff * omega_eff;
    0.25 * (omega / omega_eff + omega_eff / omega + 0.25 * omega_eff_dot * omega_eff_dot / (omega * cube)) - 0.5
}

/// Returns `(N_ours, N_cdms)`: the instantaneous-basis count from the closed
/// form and the count in the sheared CDMS basis.
///
/// Assumes the quantum sector is the vacuum of the invariant basis, so the
/// state's width determines `Omega`.
pub fn occupation_numbers(state: &SemiState, params: &ModelParams) -> Result<(f64, f64)> {
    let (omega, omegadot) = frequency(state.a, state.adot, params);
    let (rho, rhodot) = state.width(params.hbar)?;
    let (omega_eff, omega_eff_dot) = effective_frequency(rho, rhodot)?;
    let n_ours = occupation_closed_form(omega_eff, omega_eff_dot, omega);
    let moments = state.moments(params.hbar)?;
    let n_cdms = quanta_expectation(&moments, &OscBasis::cdms(omega, omegadot)?, params.hbar)?;
    Ok((n_ours, n_cdms))
}

/// Exact `N_ours - N_cdms` for the invariant vacuum:
/// `(2 (Omega'/Omega)(omega'/omega) - (omega'/omega)^2) / (16 omega Omega)`.
pub fn occupation_difference_exact(omega_eff: f64, omega_eff_dot: f64, omega: f64, omegadot: f64) -> f64 {
    let r_eff = omega_eff_dot / omega_eff;
    let r = omegadot / omega;
    (2.0 * r_eff * r - r * r) / (16.0 * omega * omega_eff)
}

/// Leading weak-coupling discrepancy `e^4 A'^2 A^2 / (16 m^6)`.
pub fn occupation_difference_leading(a: f64, adot: f64, params: &ModelParams) -> f64 {
    let e2 = params.e * params.e;
    let m2 = params.m * params.m;
    e2 * e2 * adot * adot * a * a / (16.0 * m2 * m2 * m2)
}

/// Complex Bogoliubov coefficients with `c_to = alpha c_from + beta c_from^dagger`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bogoliubov {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl Bogoliubov {
    pub fn between(from: &OscBasis, to: &OscBasis) -> Result<Self> {
        from.validate()?;
        to.validate()?;
        let norm = 2.0 * (from.w * to.w).sqrt();
        let shear = to.sigma - from.sigma;
        let alpha = Complex64::new(from.w + to.w, shear) / norm;
        let beta = Complex64::new(to.w - from.w, shear) / norm;
        // Phases: c_to carries e^{i theta_to}, c_from e^{i theta_from}.
        let alpha = alpha * Complex64::from_polar(1.0, to.theta - from.theta);
        let beta = beta * Complex64::from_polar(1.0, to.theta + from.theta);
        Ok(Bogoliubov { alpha, beta })
    }
}

/// Returns `(|alpha|^2, |beta|^2)` of the map from `basis_a` to `basis_b`.
/// `|beta|^2` is the number of `b` quanta in the `a` vacuum.
pub fn bogoliubov_coefficients(basis_a: &OscBasis, basis_b: &OscBasis, _hbar: f64) -> Result<(f64, f64)> {
    let Bogoliubov { alpha, beta } = Bogoliubov::between(basis_a, basis_b)?;
    Ok((alpha.norm_sqr(), beta.norm_sqr()))
}

/// Quantum, total and neglected-correction energies.
pub fn energies(state: &SemiState, params: &ModelParams) -> Result<EnergyReport> {
    let (omega, _) = frequency(state.a, state.adot, params);
    let moments = state.moments(params.hbar)?;
    let hx = 0.5 * (moments.p2 + omega * omega * moments.x2);
    let etot = 0.5 * state.adot * state.adot + hx;
    let (n_ours, _) = occupation_numbers(state, params)?;
    let corr = params.hbar * params.hbar * params.e * params.e / (params.m * params.m) * n_ours;
    Ok(EnergyReport { hx, etot, corr })
}
