//! Direct-method driver shared by the periodic and connection solvers.
//!
//! Minimizes the discrete action over a contiguous block of node values
//! while the rest of the trajectory stays fixed. The sign constraints at
//! integer nodes are open, so the first attempt is unconstrained and only
//! watches the signs; if an iterate leaves the admissible class the run
//! restarts from the seed with a softplus penalty that is annealed away,
//! and the last stage rejects inadmissible points outright.

use std::ops::Range;

use log::{debug, info};

use crate::action::{DiscreteAction, TridiagonalPreconditioner};
use crate::optim::{self, LbfgsOptions, LbfgsReport, Objective, Status};
use crate::symbolic::Symbols;
use crate::tolerances::Tolerances;

/// Penalty weights of the annealing schedule, followed by an unpenalized
/// stage restricted to the admissible set.
const PENALTY_SCHEDULE: [f64; 5] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];
const PENALTY_WIDTH: f64 = 0.05;
const MAX_RESTARTS: usize = 6;
/// Curvature scale of the potential used by the preconditioner.
const PRECONDITIONER_SIGMA: f64 = 1.0;

/// Which nodes move.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub free: Range<usize>,
    /// Node `len - 1` mirrors node 0.
    pub periodic: bool,
}

pub(crate) struct NodeObjective<'a, S: Symbols> {
    action: &'a DiscreteAction,
    symbols: &'a S,
    layout: &'a Layout,
    full: Vec<f64>,
    nodal: Vec<f64>,
    penalty: f64,
    restrict: bool,
}

impl<'a, S: Symbols> NodeObjective<'a, S> {
    pub fn new(
        action: &'a DiscreteAction,
        symbols: &'a S,
        layout: &'a Layout,
        template: &[f64],
    ) -> Self {
        Self {
            action,
            symbols,
            layout,
            full: template.to_vec(),
            nodal: vec![0.0; template.len()],
            penalty: 0.0,
            restrict: false,
        }
    }

    fn scatter(&mut self, x: &[f64]) {
        self.full[self.layout.free.clone()].copy_from_slice(x);
        if self.layout.periodic {
            let n = self.full.len() - 1;
            self.full[n] = self.full[0];
        }
    }

    pub fn full_values(&mut self, x: &[f64]) -> Vec<f64> {
        self.scatter(x);
        self.full.clone()
    }

    /// Signed margins `a_n y(n)` at the integer nodes touched by the layout.
    fn for_each_integer_node(&self, mut f: impl FnMut(usize, f64)) {
        let grid = self.action.grid();
        let m = grid.nodes_per_unit();
        let first = self.layout.free.start.div_ceil(m) * m;
        let mut i = first;
        while i < self.layout.free.end {
            let n = grid.integer_at(i).expect("integer node");
            f(i, self.symbols.sign_at(n).value());
            i += m;
        }
    }

    pub fn admissible(&mut self, x: &[f64]) -> bool {
        self.scatter(x);
        let mut ok = true;
        let full = &self.full;
        self.for_each_integer_node(|i, s| ok &= s * full[i] > 0.0);
        ok
    }
}

impl<S: Symbols> Objective for NodeObjective<'_, S> {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        self.scatter(x);
        if self.restrict {
            let mut ok = true;
            let full = &self.full;
            self.for_each_integer_node(|i, s| ok &= s * full[i] > 0.0);
            if !ok {
                return None;
            }
        }
        let mut value = self.action.value(&self.full).ok()?;
        self.action.nodal_gradient(&self.full, &mut self.nodal);
        if self.layout.periodic {
            let n = self.full.len() - 1;
            self.nodal[0] += self.nodal[n];
        }
        grad.copy_from_slice(&self.nodal[self.layout.free.clone()]);
        if self.penalty > 0.0 {
            let (mu, eps) = (self.penalty, PENALTY_WIDTH);
            let start = self.layout.free.start;
            let mut extra = 0.0;
            let full = &self.full;
            self.for_each_integer_node(|i, s| {
                // μ softplus(-s y / ε)
                let z = -s * full[i] / eps;
                extra += mu * softplus(z);
                grad[i - start] += mu * sigmoid(z) * (-s / eps);
            });
            value += extra;
        }
        value.is_finite().then_some(value)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub values: Vec<f64>,
    pub value: f64,
    pub grad_sup: f64,
    pub converged: bool,
    pub iterations: usize,
    pub penalty_restart: bool,
}

pub(crate) fn preconditioner(
    action: &DiscreteAction,
    layout: &Layout,
    len: usize,
) -> TridiagonalPreconditioner {
    let free_first = !layout.periodic && layout.free.start == 0;
    let free_last = !layout.periodic && layout.free.end == len;
    TridiagonalPreconditioner::kinetic(
        layout.free.len(),
        action.grid().step(),
        PRECONDITIONER_SIGMA,
        layout.periodic,
        free_first,
        free_last,
    )
}

fn run<S: Symbols>(
    obj: &mut NodeObjective<'_, S>,
    precond: &TridiagonalPreconditioner,
    x0: Vec<f64>,
    opts: &LbfgsOptions,
    watch_signs: bool,
) -> (LbfgsReport, bool) {
    let mut violated = false;
    let action = obj.action;
    let symbols = obj.symbols;
    let layout = obj.layout;
    let mut probe = NodeObjective::new(action, symbols, layout, &obj.full);
    let report = optim::minimize(obj, precond, x0, opts, |x| {
        if watch_signs && !probe.admissible(x) {
            violated = true;
            return false;
        }
        true
    });
    (report, violated)
}

/// Minimizes from `seed` (full node vector, admissible) over `layout.free`.
pub(crate) fn minimize_nodes<S: Symbols>(
    action: &DiscreteAction,
    symbols: &S,
    layout: &Layout,
    seed: &[f64],
    tol: &Tolerances,
) -> Outcome {
    let opts = LbfgsOptions {
        grad_tol: tol.grad_tol,
        max_iter: tol.max_iter,
        ..Default::default()
    };
    let precond = preconditioner(action, layout, seed.len());
    let mut obj = NodeObjective::new(action, symbols, layout, seed);
    let x0 = seed[layout.free.clone()].to_vec();

    let (mut report, violated) = run(&mut obj, &precond, x0.clone(), &opts, true);
    let mut iterations = report.iterations;
    let mut penalty_restart = false;
    if violated {
        info!("admissibility lost after {iterations} iterations; restarting with penalty");
        penalty_restart = true;
        let (r, its) = penalized(&mut obj, &precond, x0, &opts);
        report = r;
        iterations += its;
    }
    // re-minimize with fresh curvature memory until the value settles
    for _ in 0..MAX_RESTARTS {
        let before = report.value;
        let done = report.converged();
        let (next, violated) = run(&mut obj, &precond, report.x.clone(), &opts, true);
        iterations += next.iterations;
        if violated || next.status == Status::InfeasibleStart {
            break;
        }
        let change = (before - next.value).abs();
        if next.value <= before {
            report = next;
        }
        debug!("restart: change {change:e}, grad {:e}", report.grad_sup);
        if done && report.converged() && change <= tol.rho_tol {
            break;
        }
    }
    let values = obj.full_values(&report.x);
    Outcome {
        values,
        value: report.value,
        grad_sup: report.grad_sup,
        converged: report.grad_sup <= tol.grad_tol,
        iterations,
        penalty_restart,
    }
}

/// Annealed penalty stages, then a stage restricted to the admissible set.
pub(crate) fn penalized<S: Symbols>(
    obj: &mut NodeObjective<'_, S>,
    precond: &TridiagonalPreconditioner,
    seed: Vec<f64>,
    opts: &LbfgsOptions,
) -> (LbfgsReport, usize) {
    let mut x = seed.clone();
    let mut iterations = 0;
    for &mu in &PENALTY_SCHEDULE {
        obj.penalty = mu;
        obj.restrict = false;
        let (r, _) = run(obj, precond, x.clone(), opts, false);
        iterations += r.iterations;
        if r.status != Status::InfeasibleStart {
            x = r.x;
        }
    }
    obj.penalty = 0.0;
    if !obj.admissible(&x) {
        x = seed;
    }
    obj.restrict = true;
    let (r, _) = run(obj, precond, x, opts, false);
    iterations += r.iterations;
    obj.restrict = false;
    (r, iterations)
}
