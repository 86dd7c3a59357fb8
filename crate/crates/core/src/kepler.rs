//! The period-1 rectilinear Kepler drive `x(t)`.
//!
//! The two primaries move on a line and collide at every integer time. After
//! rescaling their half-separation obeys `ẍ = -mu / x²` with `mu = 1/8`, and
//! the collision is regularized as an elastic bounce. We parametrize the
//! solution by the eccentric anomaly `E`:
//!
//! ```text
//! x = a (1 - cos E),     2π τ = E - sin E,     τ = frac(t)
//! ```
//!
//! which gives the exact period, exact collision times, and no stiffness at
//! the collisions. The semi-amplitude follows from `2π √(a³/mu) = 1`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Gravitational parameter of the rescaled radial problem.
pub const MU: f64 = 0.125;

/// Below this time fraction the Newton seed uses the cube-root asymptotics.
const CUBE_ROOT_SEED_BELOW: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeplerDrive {
    amplitude: f64,
    mu: f64,
    period: f64,
    newton_tol: f64,
    newton_max_iter: usize,
}

impl Default for KeplerDrive {
    fn default() -> Self {
        Self::new()
    }
}

impl KeplerDrive {
    pub fn new() -> Self {
        Self::with_tolerance(1e-14, 50)
    }

    pub fn with_tolerance(newton_tol: f64, newton_max_iter: usize) -> Self {
        let mu = MU;
        let amplitude = (mu / (4.0 * PI * PI)).cbrt();
        let drive = Self {
            amplitude,
            mu,
            period: 1.0,
            newton_tol,
            newton_max_iter,
        };
        debug_assert!(drive.period_equation_residual() <= 1e-14);
        drive
    }

    /// Semi-amplitude `a`; the apex height is `2a`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Relative residual of `2π √(a³/mu) = 1`.
    pub fn period_equation_residual(&self) -> f64 {
        (TAU * (self.amplitude.powi(3) / self.mu).sqrt() - self.period).abs() / self.period
    }

    /// Energy `ẋ²/2 - mu/x` of the drive, `-mu/(2a)`.
    pub fn energy(&self) -> f64 {
        -self.mu / (2.0 * self.amplitude)
    }

    /// Solves `E - sin E = 2π τ` for `τ ∈ [0, 1)`.
    pub fn solve_radial_kepler(&self, tau: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidInput(format!(
                "time fraction {tau} outside [0, 1)"
            )));
        }
        if tau > 0.5 {
            return Ok(TAU - self.solve_half(1.0 - tau)?);
        }
        self.solve_half(tau)
    }

    // τ ∈ [0, 1/2], so E ∈ [0, π].
    fn solve_half(&self, tau: f64) -> Result<f64> {
        if tau == 0.0 {
            return Ok(0.0);
        }
        if tau == 0.5 {
            return Ok(PI);
        }
        let target = TAU * tau;
        let mut e = if tau < CUBE_ROOT_SEED_BELOW {
            (12.0 * PI * tau).cbrt()
        } else {
            target
        };
        let (mut lo, mut hi) = (0.0, PI);
        for _ in 0..self.newton_max_iter {
            let f = e_minus_sin(e) - target;
            if f.abs() <= self.newton_tol {
                // one more step costs little and leaves headroom for folding
                let polished = e - f / (1.0 - e.cos());
                let better = polished > lo
                    && polished < hi
                    && (e_minus_sin(polished) - target).abs() < f.abs();
                return Ok(if better { polished } else { e });
            }
            if f > 0.0 {
                hi = e;
            } else {
                lo = e;
            }
            let step = f / (1.0 - e.cos());
            let next = e - step;
            e = if next.is_finite() && next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi {
                return Ok(e);
            }
        }
        let residual = (e_minus_sin(e) - target).abs();
        if residual <= self.newton_tol {
            Ok(e)
        } else {
            Err(Error::NonConvergence(format!(
                "radial Kepler equation at tau = {tau}: residual {residual:e}"
            )))
        }
    }

    /// Anomaly of the time folded onto the rising half `[0, 1/2]`, and the
    /// sign of `ẋ` at the original time.
    fn folded_anomaly(&self, t: f64) -> (f64, f64) {
        let tau = t.rem_euclid(self.period) / self.period;
        // rem_euclid may round up to exactly 1 for tiny negative t
        let tau = if tau >= 1.0 { 0.0 } else { tau };
        let (folded, sign) = if tau > 0.5 {
            (1.0 - tau, -1.0)
        } else {
            (tau, 1.0)
        };
        let e = self
            .solve_half(folded)
            .expect("radial Kepler solve cannot fail on [0, 1/2]");
        (e, sign)
    }

    /// Height `x(t) ≥ 0`, zero exactly at integer times.
    pub fn x(&self, t: f64) -> f64 {
        let (e, _) = self.folded_anomaly(t);
        let s = (0.5 * e).sin();
        2.0 * self.amplitude * s * s
    }

    /// `x` at a time given as the exact fraction `numer/denom` of a period.
    pub fn x_at_fraction(&self, numer: i64, denom: i64) -> f64 {
        let tau = numer.rem_euclid(denom) as f64 / denom as f64;
        self.x(tau)
    }

    /// Velocity `ẋ(t)`; undefined at the collision times.
    pub fn xdot(&self, t: f64) -> Result<f64> {
        let tau = t.rem_euclid(self.period);
        if tau == 0.0 || tau >= self.period {
            return Err(Error::CollisionTime(t));
        }
        let (e, sign) = self.folded_anomaly(t);
        let half = 0.5 * e;
        // sin E / (1 - cos E) = cot(E/2)
        Ok(sign * (self.mu / self.amplitude).sqrt() * half.cos() / half.sin())
    }
}

/// `E - sin E` without cancellation for small `E`.
fn e_minus_sin(e: f64) -> f64 {
    if e < 0.5 {
        let e2 = e * e;
        // Σ (-1)^k E^(2k+3) / (2k+3)!
        let mut term = e * e2 / 6.0;
        let mut sum = term;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= -e2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        e - e.sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bisect(target: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, TAU);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - mid.sin() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn anomaly_examples() {
        let k = KeplerDrive::new();
        assert_eq!(k.solve_radial_kepler(0.0).unwrap(), 0.0);
        assert_eq!(k.solve_radial_kepler(0.5).unwrap(), PI);
        let e = k.solve_radial_kepler(0.25).unwrap();
        assert_relative_eq!(e, bisect(0.5 * PI), epsilon = 1e-13);
        assert!((e - 2.30988).abs() < 1e-5);
    }

    #[test]
    fn anomaly_rejects_out_of_range() {
        let k = KeplerDrive::new();
        assert!(k.solve_radial_kepler(1.0).is_err());
        assert!(k.solve_radial_kepler(-0.1).is_err());
    }

    #[test]
    fn anomaly_residual_and_monotone() {
        let k = KeplerDrive::new();
        let mut prev = -1.0;
        for i in 0..10_000 {
            let tau = i as f64 / 10_000.0;
            let e = k.solve_radial_kepler(tau).unwrap();
            let lhs = if tau <= 0.5 {
                e_minus_sin(e)
            } else {
                e - e.sin()
            };
            assert!(
                (lhs - TAU * tau).abs() <= 1e-14,
                "tau {tau}: {:e}",
                lhs - TAU * tau
            );
            assert!(e > prev);
            prev = e;
        }
        // deep inside the collision layer
        for tau in [1e-12, 1e-9, 1e-6, 1.0 - 1e-9] {
            let e = k.solve_radial_kepler(tau).unwrap();
            assert!((e_minus_sin(e.min(TAU - e)) - TAU * tau.min(1.0 - tau)).abs() < 1e-14);
        }
    }

    #[test]
    fn nonconvergence_is_reported() {
        let k = KeplerDrive::with_tolerance(0.0, 1);
        assert!(matches!(
            k.solve_radial_kepler(0.3),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn height_examples() {
        let k = KeplerDrive::new();
        assert_eq!(k.x(3.0), 0.0);
        assert_eq!(k.x(-2.0), 0.0);
        let a = (1.0 / (32.0 * PI * PI)).cbrt();
        assert_relative_eq!(k.amplitude(), a, max_relative = 1e-15);
        assert_relative_eq!(k.x(0.5), 2.0 * a, max_relative = 1e-15);
        assert!((k.x(0.5) - 0.2937).abs() < 1e-4);
        assert_eq!(k.x(0.3), k.x(0.7));
        assert!(k.x(1e-9) > 0.0);
    }

    #[test]
    fn velocity_examples() {
        let k = KeplerDrive::new();
        assert!(k.xdot(0.5).unwrap().abs() < 1e-15);
        let up = k.xdot(0.25).unwrap();
        let down = k.xdot(0.75).unwrap();
        assert!(up > 0.0);
        assert_relative_eq!(up, -down, max_relative = 1e-14);
        assert!(matches!(k.xdot(2.0), Err(Error::CollisionTime(_))));
    }

    #[test]
    fn energy_is_conserved() {
        let k = KeplerDrive::new();
        assert!((k.energy() + 0.425_627_7).abs() < 1e-6);
        for t in [0.37, 0.01, 0.5, 0.999, 12.123] {
            let v = k.xdot(t).unwrap();
            let e = 0.5 * v * v - MU / k.x(t);
            assert_relative_eq!(e, k.energy(), max_relative = 1e-10);
        }
    }

    #[test]
    fn fraction_evaluation_matches_time_evaluation() {
        let k = KeplerDrive::new();
        assert_eq!(k.x_at_fraction(-3, 64), k.x(61.0 / 64.0));
        assert_eq!(k.x_at_fraction(128, 64), 0.0);
    }
}
