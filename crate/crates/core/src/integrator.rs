//! Explicit Runge-Kutta integrators over fixed-size state arrays.

use crate::error::{Error, Result};

/// A first-order system `y' = f(t, y)` of dimension `N`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;
}

impl<const N: usize, F> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        self(t, y)
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(&[f64; N], f64)]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (k, w) in terms {
            acc += w * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<S: OdeSystem<N>, const N: usize>(sys: &S, t: f64, y: &[f64; N], dt: f64) -> Result<[f64; N]> {
    let half = 0.5 * dt;
    let k1 = sys.rhs(t, y)?;
    let k2 = sys.rhs(t + half, &axpy(y, half, &[(&k1, 1.0)]))?;
    let k3 = sys.rhs(t + half, &axpy(y, half, &[(&k2, 1.0)]))?;
    let k4 = sys.rhs(t + dt, &axpy(y, dt, &[(&k3, 1.0)]))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Integrates from `t0` to `t1` with `n` equal RK4 steps.
pub fn rk4_integrate<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    n: usize,
) -> Result<[f64; N]> {
    let dt = (t1 - t0) / n as f64;
    let mut y = y0;
    for i in 0..n {
        y = rk4_step(sys, t0 + i as f64 * dt, &y, dt)?;
    }
    Ok(y)
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Embedded Dormand-Prince 5(4) pair with a standard step-size controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    /// Steps smaller than this (relative to `max(1, |t|)`) abort integration.
    pub dt_min: f64,
}

impl DormandPrince {
    pub fn new(rtol: f64, atol: f64) -> Self {
        DormandPrince {
            rtol,
            atol,
            dt_min: 1e-13,
        }
    }

    /// Attempts one step; returns the fifth-order solution and the scaled
    /// RMS error estimate (accept when `<= 1`).
    pub fn try_step<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        t: f64,
        y: &[f64; N],
        dt: f64,
    ) -> Result<([f64; N], f64)> {
        let k1 = sys.rhs(t, y)?;
        let k2 = sys.rhs(t + C2 * dt, &axpy(y, dt, &[(&k1, A21)]))?;
        let k3 = sys.rhs(t + C3 * dt, &axpy(y, dt, &[(&k1, A31), (&k2, A32)]))?;
        let k4 = sys.rhs(t + C4 * dt, &axpy(y, dt, &[(&k1, A41), (&k2, A42), (&k3, A43)]))?;
        let k5 = sys.rhs(
            t + C5 * dt,
            &axpy(y, dt, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]),
        )?;
        let k6 = sys.rhs(
            t + dt,
            &axpy(y, dt, &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)]),
        )?;
        let y5 = axpy(y, dt, &[(&k1, B1), (&k3, B3), (&k4, B4), (&k5, B5), (&k6, B6)]);
        let k7 = sys.rhs(t + dt, &y5)?;
        let mut acc = 0.0;
        for i in 0..N {
            let err = dt * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
            acc += (err / scale) * (err / scale);
        }
        Ok((y5, (acc / N as f64).sqrt()))
    }

    /// Advances from `t` to exactly `t_target`. `dt` is the suggested first
    /// step and is updated with the controller's next proposal.
    pub fn advance<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        t: f64,
        y: [f64; N],
        t_target: f64,
        dt: &mut f64,
    ) -> Result<([f64; N], usize)> {
        let mut t = t;
        let mut y = y;
        let mut accepted = 0;
        while t < t_target {
            let remaining = t_target - t;
            let last = *dt >= remaining;
            let h = if last { remaining } else { *dt };
            if h < self.dt_min * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, dt: h });
            }
            match self.try_step(sys, t, &y, h) {
                Ok((y_new, err)) if err.is_finite() && err <= 1.0 => {
                    t = if last { t_target } else { t + h };
                    y = y_new;
                    accepted += 1;
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    // A clipped final step says nothing about the controller's preferred size.
                    if !last || factor < 1.0 {
                        *dt = h * factor;
                    }
                }
                Ok((_, err)) => {
                    let factor = if err.is_finite() {
                        (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                    } else {
                        0.1
                    };
                    *dt = h * factor;
                }
                // Stage evaluations that leave the domain are treated as a rejected step.
                Err(Error::Domain(_)) => *dt = h * 0.1,
                Err(other) => return Err(other),
            }
        }
        Ok((y, accepted))
    }
}
