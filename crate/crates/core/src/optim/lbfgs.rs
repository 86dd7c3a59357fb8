use std::collections::VecDeque;

use super::line_search::{strong_wolfe, LineSearchOptions};
use super::{dot, sup_norm, Objective, Preconditioner};

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    /// Number of stored curvature pairs.
    pub memory: usize,
    /// Stop when the gradient sup-norm drops to this value.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub line_search: LineSearchOptions,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            grad_tol: crate::tolerances::GRAD_TOL,
            max_iter: crate::tolerances::MAX_ITER,
            line_search: LineSearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// No step along the current direction decreased the objective; the
    /// iterate is as good as rounding allows for this direction.
    LineSearchFailed,
    /// The monitor asked to stop.
    Interrupted,
    /// The starting point is outside the domain.
    InfeasibleStart,
}

#[derive(Debug, Clone)]
pub struct LbfgsReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub grad_sup: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: Status,
}

impl LbfgsReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Minimizes `obj` from `x0` with preconditioned L-BFGS.
///
/// `monitor` sees every accepted iterate and may return `false` to stop.
pub fn minimize<O, P, M>(
    obj: &mut O,
    precond: &P,
    x0: Vec<f64>,
    opts: &LbfgsOptions,
    mut monitor: M,
) -> LbfgsReport
where
    O: Objective,
    P: Preconditioner + ?Sized,
    M: FnMut(&[f64]) -> bool,
{
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut evaluations = 1;
    let Some(mut value) = obj.eval(&x, &mut grad) else {
        return LbfgsReport {
            x,
            value: f64::INFINITY,
            grad,
            grad_sup: f64::INFINITY,
            iterations: 0,
            evaluations,
            status: Status::InfeasibleStart,
        };
    };
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(opts.memory);
    let mut gamma = 1.0;
    let mut alpha = vec![0.0; opts.memory];
    let mut status = Status::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if sup_norm(&grad) <= opts.grad_tol {
            status = Status::Converged;
            break;
        }

        // two-loop recursion with H₀ = γ P⁻¹
        let mut dir = grad.clone();
        for (k, p) in pairs.iter().enumerate().rev() {
            alpha[k] = p.rho * dot(&p.s, &dir);
            dir.iter_mut()
                .zip(&p.y)
                .for_each(|(d, y)| *d -= alpha[k] * y);
        }
        precond.apply_inverse(&mut dir);
        dir.iter_mut().for_each(|d| *d *= gamma);
        for (k, p) in pairs.iter().enumerate() {
            let beta = p.rho * dot(&p.y, &dir);
            dir.iter_mut()
                .zip(&p.s)
                .for_each(|(d, s)| *d += (alpha[k] - beta) * s);
        }
        dir.iter_mut().for_each(|d| *d = -*d);

        let mut found = strong_wolfe(obj, &x, value, &grad, &dir, 1.0, opts.line_search);
        if found.is_none() && !pairs.is_empty() {
            // memory may be stale: retry along the preconditioned gradient
            pairs.clear();
            gamma = 1.0;
            dir.copy_from_slice(&grad);
            precond.apply_inverse(&mut dir);
            dir.iter_mut().for_each(|d| *d = -*d);
            found = strong_wolfe(obj, &x, value, &grad, &dir, 1.0, opts.line_search);
        }
        let Some(step) = found else {
            status = Status::LineSearchFailed;
            break;
        };
        evaluations += step.evals;
        iterations += 1;

        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            let mut py = y.clone();
            precond.apply_inverse(&mut py);
            let ypy = dot(&y, &py);
            if ypy > 0.0 {
                gamma = sy / ypy;
            }
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back(Pair {
                s,
                y,
                rho: 1.0 / sy,
            });
        }
        x = step.x;
        grad = step.grad;
        value = step.value;

        if !monitor(&x) {
            status = Status::Interrupted;
            break;
        }
    }
    if status == Status::MaxIterations && sup_norm(&grad) <= opts.grad_tol {
        status = Status::Converged;
    }
    LbfgsReport {
        grad_sup: sup_norm(&grad),
        x,
        value,
        grad,
        iterations,
        evaluations,
        status,
    }
}
