//! Limited-memory quasi-Newton minimization with a strong-Wolfe line search.
//!
//! Objectives may be defined on an open subset of `Rⁿ`: returning `None`
//! from [`Objective::eval`] marks a point as outside the domain, and the line
//! search then shortens the step.

mod lbfgs;
mod line_search;

pub use lbfgs::{minimize, LbfgsOptions, LbfgsReport, Status};
pub use line_search::{strong_wolfe, LineSearchOptions, LineSearchResult};

pub trait Objective {
    /// Value at `x`, writing the gradient into `grad`; `None` outside the
    /// domain.
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64>;
}

impl<F> Objective for F
where
    F: FnMut(&[f64], &mut [f64]) -> Option<f64>,
{
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        self(x, grad)
    }
}

/// A symmetric positive definite approximation `P` of the Hessian.
pub trait Preconditioner {
    /// Overwrites `v` with `P⁻¹ v`.
    fn apply_inverse(&self, v: &mut [f64]);
}

/// `P = I`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply_inverse(&self, _v: &mut [f64]) {}
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
