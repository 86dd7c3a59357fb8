//! Default tolerances shared by the solvers, the verification checks and
//! the acceptance suite.

use serde::{Deserialize, Serialize};

/// Newton residual for the radial Kepler equation.
pub const KEPLER_NEWTON_TOL: f64 = 1e-14;

/// Gradient sup-norm at which the optimizer stops.
pub const GRAD_TOL: f64 = 1e-10;

/// Iteration cap of one optimizer run.
pub const MAX_ITER: usize = 5000;

/// Change of the action between successive restarts on one grid.
pub const RHO_TOL: f64 = 1e-8;

/// Reflection defect `max |y(t) - y(-t)|` of a symmetric orbit.
pub const SYM_TOL: f64 = 1e-6;

/// Per-interval discrete L² distance of a tail to its periodic orbit.
pub const TAIL_TOL: f64 = 1e-6;

/// Change of the windowed renormalized action between window extensions.
pub const J_TOL: f64 = 1e-8;

/// Window extensions before the connection loop gives up.
pub const MAX_WINDOWS: usize = 20;

/// Slack for the lower-bound comparison `A(y) ≥ ρ̂`.
pub const LOWER_BOUND_TOL: f64 = 1e-6;

/// Slack for comparisons that hold exactly in exact arithmetic.
pub const ORDER_TOL: f64 = 1e-9;

/// Bound on `EL residual / h²` accepted by `verify`. The residual of a
/// converged discrete minimizer is second order in the step, with a
/// constant near 130 for the shipped examples.
pub const EL_TOL_H2: f64 = 500.0;

/// Collected tolerances, serializable so a run records what it used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub rho_tol: f64,
    pub sym_tol: f64,
    pub tail_tol: f64,
    pub j_tol: f64,
    pub max_windows: usize,
    pub lower_bound_tol: f64,
    pub el_tol_h2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grad_tol: GRAD_TOL,
            max_iter: MAX_ITER,
            rho_tol: RHO_TOL,
            sym_tol: SYM_TOL,
            tail_tol: TAIL_TOL,
            j_tol: J_TOL,
            max_windows: MAX_WINDOWS,
            lower_bound_tol: LOWER_BOUND_TOL,
            el_tol_h2: EL_TOL_H2,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("rho_tol", self.rho_tol),
            ("sym_tol", self.sym_tol),
            ("tail_tol", self.tail_tol),
            ("j_tol", self.j_tol),
            ("lower_bound_tol", self.lower_bound_tol),
            ("el_tol_h2", self.el_tol_h2),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::InvalidInput(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        if self.max_iter == 0 || self.max_windows == 0 {
            return Err(crate::Error::InvalidInput(
                "iteration caps must be positive".into(),
            ));
        }
        Ok(())
    }
}
