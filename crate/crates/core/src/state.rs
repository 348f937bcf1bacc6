//! Instantaneous state of the coupled system and conversions between the
//! three encodings of the quantum sector.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{GaussianMoments, ModelParams};

/// Relative tolerance on the Wronskian and purity checks.
pub const INVARIANT_TOLERANCE: f64 = 1e-8;

/// How the quantum sector is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Width `rho` of the Gaussian, with `Omega = 1/rho^2`.
    Pinney,
    /// Complex mode function `f` with `<x^2> = |f|^2`.
    Mode,
    /// Second moments directly.
    Moments,
}

impl Representation {
    pub const ALL: [Representation; 3] = [Representation::Pinney, Representation::Mode, Representation::Moments];

    pub fn as_str(&self) -> &'static str {
        match self {
            Representation::Pinney => "pinney",
            Representation::Mode => "mode",
            Representation::Moments => "moments",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinney" => Ok(Representation::Pinney),
            "mode" => Ok(Representation::Mode),
            "moments" => Ok(Representation::Moments),
            other => Err(Error::usage(format!(
                "unknown representation `{other}` (expected pinney, mode or moments)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantumSector {
    /// `theta` is the accumulated phase `int dt / rho^2`; it does not enter
    /// any observable but keeps the Pinney/mode round trip lossless.
    Pinney {
        rho: f64,
        rhodot: f64,
        theta: f64,
    },
    Mode {
        f: Complex64,
        fdot: Complex64,
    },
    Moments(GaussianMoments),
}

/// Classical data plus one encoding of the quantum sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiState {
    pub t: f64,
    pub a: f64,
    pub adot: f64,
    pub quantum: QuantumSector,
}

impl SemiState {
    pub fn pinney(t: f64, a: f64, adot: f64, rho: f64, rhodot: f64, theta: f64) -> Self {
        SemiState {
            t,
            a,
            adot,
            quantum: QuantumSector::Pinney { rho, rhodot, theta },
        }
    }

    pub fn mode(t: f64, a: f64, adot: f64, f: Complex64, fdot: Complex64) -> Self {
        SemiState {
            t,
            a,
            adot,
            quantum: QuantumSector::Mode { f, fdot },
        }
    }

    pub fn from_moments(t: f64, a: f64, adot: f64, moments: GaussianMoments) -> Self {
        SemiState {
            t,
            a,
            adot,
            quantum: QuantumSector::Moments(moments),
        }
    }

    pub fn representation(&self) -> Representation {
        match self.quantum {
            QuantumSector::Pinney { .. } => Representation::Pinney,
            QuantumSector::Mode { .. } => Representation::Mode,
            QuantumSector::Moments(_) => Representation::Moments,
        }
    }

    /// Checks the representation's invariant: `rho > 0`, Wronskian `i hbar`,
    /// or the Heisenberg bound.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        params.validate()?;
        if !(self.t.is_finite() && self.a.is_finite() && self.adot.is_finite()) {
            return Err(Error::validation("non-finite classical data"));
        }
        match self.quantum {
            QuantumSector::Pinney { rho, rhodot, theta } => {
                if !(rho.is_finite() && rho > 0.0) {
                    return Err(Error::domain(format!("rho must be positive, got {rho}")));
                }
                if !(rhodot.is_finite() && theta.is_finite()) {
                    return Err(Error::validation("non-finite Pinney data"));
                }
            }
            QuantumSector::Mode { f, fdot } => {
                let w = wronskian(f, fdot);
                let defect = (w - Complex64::new(0.0, params.hbar)).norm() / params.hbar;
                if !(defect <= INVARIANT_TOLERANCE) {
                    return Err(Error::validation(format!(
                        "mode Wronskian {w} differs from i*hbar (relative defect {defect:e})"
                    )));
                }
            }
            QuantumSector::Moments(m) => m.validate(params.hbar)?,
        }
        Ok(())
    }

    /// Pure-state width `(rho, rho')` with `<x^2> = hbar rho^2 / 2`.
    ///
    /// For the moments encoding this reads the width off `x2` and `c` without
    /// checking purity.
    pub fn width(&self, hbar: f64) -> Result<(f64, f64)> {
        let scale = (2.0 / hbar).sqrt();
        let (rho, rhodot) = match self.quantum {
            QuantumSector::Pinney { rho, rhodot, .. } => (rho, rhodot),
            QuantumSector::Mode { f, fdot } => {
                let r = f.norm();
                (scale * r, scale * (f.conj() * fdot).re / r)
            }
            QuantumSector::Moments(m) => {
                let rho = (2.0 * m.x2 / hbar).sqrt();
                (rho, 2.0 * m.c / (hbar * rho))
            }
        };
        if !(rho.is_finite() && rho > 0.0) || !rhodot.is_finite() {
            return Err(Error::domain(format!("degenerate width rho = {rho}")));
        }
        Ok((rho, rhodot))
    }

    /// Second moments of the quantum sector.
    pub fn moments(&self, hbar: f64) -> Result<GaussianMoments> {
        match self.quantum {
            QuantumSector::Pinney { rho, rhodot, .. } => {
                if !(rho > 0.0) {
                    return Err(Error::domain(format!("rho must be positive, got {rho}")));
                }
                Ok(GaussianMoments {
                    x2: 0.5 * hbar * rho * rho,
                    p2: 0.5 * hbar * (rhodot * rhodot + 1.0 / (rho * rho)),
                    c: 0.5 * hbar * rho * rhodot,
                })
            }
            QuantumSector::Mode { f, fdot } => Ok(GaussianMoments {
                x2: f.norm_sqr(),
                p2: fdot.norm_sqr(),
                c: (f * fdot.conj()).re,
            }),
            QuantumSector::Moments(m) => Ok(m),
        }
    }

    /// Re-encodes the quantum sector. Converting from moments requires a
    /// pure state; the phase is then set to zero.
    pub fn convert(&self, target: Representation, params: &ModelParams) -> Result<SemiState> {
        self.validate(params)?;
        let hbar = params.hbar;
        let quantum = match (self.quantum, target) {
            (q, t) if self.representation() == t => q,
            (QuantumSector::Pinney { rho, rhodot, theta }, Representation::Mode) => {
                let (f, fdot) = mode_from_width(rho, rhodot, theta, hbar);
                QuantumSector::Mode { f, fdot }
            }
            (QuantumSector::Mode { f, .. }, Representation::Pinney) => {
                let (rho, rhodot) = self.width(hbar)?;
                QuantumSector::Pinney {
                    rho,
                    rhodot,
                    theta: -f.arg(),
                }
            }
            (QuantumSector::Moments(m), _) => {
                let defect = m.purity_defect(hbar);
                if defect.abs() > INVARIANT_TOLERANCE {
                    return Err(Error::validation(format!(
                        "moments are not a pure state (relative purity defect {defect:e})"
                    )));
                }
                let (rho, rhodot) = self.width(hbar)?;
                if target == Representation::Pinney {
                    QuantumSector::Pinney {
                        rho,
                        rhodot,
                        theta: 0.0,
                    }
                } else {
                    let (f, fdot) = mode_from_width(rho, rhodot, 0.0, hbar);
                    QuantumSector::Mode { f, fdot }
                }
            }
            (_, Representation::Moments) => QuantumSector::Moments(self.moments(hbar)?),
            _ => unreachable!("all conversions covered"),
        };
        Ok(SemiState { quantum, ..*self })
    }
}

/// `f conj(f') - conj(f) f'`; equals `i hbar` for a normalized mode.
pub fn wronskian(f: Complex64, fdot: Complex64) -> Complex64 {
    f * fdot.conj() - f.conj() * fdot
}

/// Mode function `f = sqrt(hbar/2) rho e^{-i theta}` with `theta' = 1/rho^2`.
pub fn mode_from_width(rho: f64, rhodot: f64, theta: f64, hbar: f64) -> (Complex64, Complex64) {
    let phase = Complex64::from_polar((0.5 * hbar).sqrt(), -theta);
    (phase * rho, phase * Complex64::new(rhodot, -1.0 / rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn pinney_to_mode_to_moments_example() {
        let s = SemiState::pinney(0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let m = s.convert(Representation::Mode, &p()).unwrap();
        let h = 0.5f64.sqrt();
        match m.quantum {
            QuantumSector::Mode { f, fdot } => {
                assert!((f - Complex64::new(h, 0.0)).norm() < 1e-15);
                assert!((fdot - Complex64::new(0.0, -h)).norm() < 1e-15);
            }
            _ => panic!("expected mode"),
        }
        let mm = m.convert(Representation::Moments, &p()).unwrap();
        let g = mm.moments(1.0).unwrap();
        assert!((g.x2 - 0.5).abs() < 1e-15 && (g.p2 - 0.5).abs() < 1e-15 && g.c.abs() < 1e-15);
        assert!((g.uncertainty() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bad_wronskian_is_rejected() {
        let s = SemiState::mode(0.0, 0.0, 0.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0));
        assert!(matches!(
            s.convert(Representation::Pinney, &p()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn mixed_moments_cannot_become_pinney() {
        let s = SemiState::from_moments(0.0, 0.0, 0.0, GaussianMoments::new(1.0, 1.0, 0.0));
        assert!(s.validate(&p()).is_ok());
        assert!(matches!(
            s.convert(Representation::Pinney, &p()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn nonpositive_rho_is_a_domain_error() {
        let s = SemiState::pinney(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(s.validate(&p()), Err(Error::Domain(_))));
    }

    #[test]
    fn pinney_moments_agree_with_vacuum_formula() {
        let (rho, rhodot) = (0.7, -0.4);
        let s = SemiState::pinney(0.0, 0.0, 0.0, rho, rhodot, 0.0);
        let (om, omd) = crate::physics::effective_frequency(rho, rhodot).unwrap();
        let direct = crate::physics::vacuum_moments(om, omd, 1.0).unwrap();
        let m = s.moments(1.0).unwrap();
        assert!(rel(m.x2, direct.x2) < 1e-14 && rel(m.p2, direct.p2) < 1e-14 && rel(m.c, direct.c) < 1e-14);
    }

    fn rel_state(a: &SemiState, b: &SemiState, hbar: f64) -> f64 {
        let ma = a.moments(hbar).unwrap();
        let mb = b.moments(hbar).unwrap();
        let mut worst = 0.0f64;
        for (x, y) in [(ma.x2, mb.x2), (ma.p2, mb.p2), (ma.c, mb.c)] {
            worst = worst.max((x - y).abs() / (x.abs() + y.abs()).max(1e-12));
        }
        worst
    }

    proptest! {
        #[test]
        fn pinney_mode_round_trip(rho in 0.1f64..5.0, rhodot in -3.0f64..3.0, theta in -3.0f64..3.0, hbar in 0.1f64..3.0) {
            let params = ModelParams::new(1.0, 0.5, hbar).unwrap();
            let s = SemiState::pinney(0.3, 1.2, -0.4, rho, rhodot, theta);
            let back = s.convert(Representation::Mode, &params).unwrap()
                .convert(Representation::Pinney, &params).unwrap();
            match back.quantum {
                QuantumSector::Pinney { rho: r, rhodot: rd, theta: th } => {
                    prop_assert!(rel(r, rho) < 1e-12);
                    prop_assert!((rd - rhodot).abs() < 1e-12 * (1.0 + rhodot.abs()));
                    prop_assert!((th - theta).abs() < 1e-12 * (1.0 + theta.abs()));
                }
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn moment_round_trips(rho in 0.1f64..5.0, rhodot in -3.0f64..3.0, hbar in 0.1f64..3.0, via_mode in any::<bool>()) {
            let params = ModelParams::new(1.0, 0.5, hbar).unwrap();
            let s = SemiState::pinney(0.0, 0.1, 0.2, rho, rhodot, 0.0)
                .convert(Representation::Moments, &params).unwrap();
            let mid = if via_mode { Representation::Mode } else { Representation::Pinney };
            let back = s.convert(mid, &params).unwrap().convert(Representation::Moments, &params).unwrap();
            prop_assert!(rel_state(&s, &back, hbar) < 1e-12);
            let m = s.moments(hbar).unwrap();
            prop_assert!(m.purity_defect(hbar).abs() < 1e-12);
        }

        #[test]
        fn constructed_modes_have_unit_wronskian(rho in 0.1f64..5.0, rhodot in -3.0f64..3.0, theta in -6.0f64..6.0, hbar in 0.1f64..3.0) {
            let (f, fdot) = mode_from_width(rho, rhodot, theta, hbar);
            let w = wronskian(f, fdot);
            prop_assert!(w.re.abs() < 1e-12 * hbar);
            prop_assert!((w.im - hbar).abs() < 1e-12 * hbar);
        }
    }
}
