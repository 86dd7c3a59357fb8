//! Discretized trajectories and the action `∫ ½ẏ² + 1/√(x(t)² + y²) dt`.
//!
//! A trajectory is piecewise linear on a uniform grid in which every integer
//! time is a node. Its discrete action is
//!
//! ```text
//! A = Σ_i (y_{i+1} - y_i)² / (2h) + (h/2) (V(t_i, y_i) + V(t_{i+1}, y_{i+1}))
//! ```
//!
//! so the kinetic part is exact for the piecewise-linear model and the
//! potential is integrated by the trapezoid rule. At integer nodes `x = 0`
//! and the potential is `1/|y|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kepler::KeplerDrive;
use crate::optim::Preconditioner;
use crate::symbolic::Symbols;

pub const MIN_NODES_PER_UNIT: usize = 8;

/// Uniform grid on `[t_start, t_end]` with `nodes_per_unit` steps per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    #[serde(rename = "M")]
    nodes_per_unit: usize,
    t_start: i64,
    t_end: i64,
}

impl Grid {
    pub fn new(nodes_per_unit: usize, t_start: i64, t_end: i64) -> Result<Self> {
        if nodes_per_unit < MIN_NODES_PER_UNIT {
            return Err(Error::InvalidInput(format!(
                "nodes per unit {nodes_per_unit} is below {MIN_NODES_PER_UNIT}"
            )));
        }
        if t_end <= t_start {
            return Err(Error::InvalidInput(format!(
                "empty time span [{t_start}, {t_end}]"
            )));
        }
        Ok(Self {
            nodes_per_unit,
            t_start,
            t_end,
        })
    }

    pub fn nodes_per_unit(&self) -> usize {
        self.nodes_per_unit
    }

    pub fn t_start(&self) -> i64 {
        self.t_start
    }

    pub fn t_end(&self) -> i64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        1.0 / self.nodes_per_unit as f64
    }

    pub fn units(&self) -> usize {
        (self.t_end - self.t_start) as usize
    }

    pub fn segments(&self) -> usize {
        self.units() * self.nodes_per_unit
    }

    /// Number of nodes including both ends.
    pub fn len(&self) -> usize {
        self.segments() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        let m = self.nodes_per_unit;
        self.t_start as f64 + (i / m) as f64 + (i % m) as f64 / m as f64
    }

    /// Node index of integer time `n`.
    pub fn node_of(&self, n: i64) -> Option<usize> {
        (self.t_start..=self.t_end)
            .contains(&n)
            .then(|| (n - self.t_start) as usize * self.nodes_per_unit)
    }

    /// Integer time at node `i`, if it is one.
    pub fn integer_at(&self, i: usize) -> Option<i64> {
        i.is_multiple_of(self.nodes_per_unit)
            .then(|| self.t_start + (i / self.nodes_per_unit) as i64)
    }

    /// Same span with twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            nodes_per_unit: 2 * self.nodes_per_unit,
            ..*self
        }
    }

    pub fn with_span(&self, t_start: i64, t_end: i64) -> Result<Self> {
        Self::new(self.nodes_per_unit, t_start, t_end)
    }
}

/// Boundary condition of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bc {
    /// The value at `t_end` is identified with the value at `t_start`.
    Periodic,
    /// Both end values are clamped.
    FixedEnds {
        left: f64,
        right: f64,
    },
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub bc: Bc,
}

impl Trajectory {
    pub fn new(grid: Grid, values: Vec<f64>, bc: Bc) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory values"));
        }
        let traj = Self { grid, values, bc };
        match bc {
            Bc::Periodic if traj.values[0] != traj.values[grid.segments()] => {
                return Err(Error::InvalidInput(
                    "periodic trajectory with different end values".into(),
                ))
            }
            Bc::FixedEnds { left, right }
                if traj.values[0] != left || traj.values[grid.segments()] != right =>
            {
                return Err(Error::InvalidInput(
                    "clamped trajectory does not match its end values".into(),
                ))
            }
            _ => {}
        }
        Ok(traj)
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(grid: Grid, bc: Bc, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut values: Vec<f64> = (0..grid.len()).map(|i| f(grid.time(i))).collect();
        let last = grid.segments();
        match bc {
            Bc::Periodic => values[last] = values[0],
            Bc::FixedEnds { left, right } => {
                values[0] = left;
                values[last] = right;
            }
            Bc::Free => {}
        }
        Self::new(grid, values, bc)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.grid.len()).map(|i| self.grid.time(i))
    }

    /// Value at integer time `n`.
    pub fn at_integer(&self, n: i64) -> Option<f64> {
        self.grid.node_of(n).map(|i| self.values[i])
    }

    pub fn negated(&self) -> Self {
        let bc = match self.bc {
            Bc::FixedEnds { left, right } => Bc::FixedEnds {
                left: -left,
                right: -right,
            },
            other => other,
        };
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| -v).collect(),
            bc,
        }
    }

    /// Linear interpolation onto the grid with twice the resolution.
    pub fn refined(&self) -> Self {
        let mut values = Vec::with_capacity(2 * self.values.len() - 1);
        for w in self.values.windows(2) {
            values.push(w[0]);
            values.push(0.5 * (w[0] + w[1]));
        }
        values.push(*self.values.last().expect("non-empty"));
        Self {
            grid: self.grid.refined(),
            values,
            bc: self.bc,
        }
    }

    /// Indices of the nodes that are optimization variables.
    pub fn free_range(&self) -> std::ops::Range<usize> {
        let n = self.grid.segments();
        match self.bc {
            Bc::Periodic => 0..n,
            Bc::FixedEnds { .. } => 1..n,
            Bc::Free => 0..n + 1,
        }
    }

    pub fn free_values(&self) -> Vec<f64> {
        self.values[self.free_range()].to_vec()
    }

    pub fn set_free_values(&mut self, free: &[f64]) {
        let range = self.free_range();
        self.values[range].copy_from_slice(free);
        if self.bc == Bc::Periodic {
            let n = self.grid.segments();
            self.values[n] = self.values[0];
        }
    }
}

/// `L = ydot²/2 + 1/√(x(t)² + y²)`.
pub fn lagrangian(drive: &KeplerDrive, t: f64, y: f64, ydot: f64) -> Result<f64> {
    let x = drive.x(t);
    if x == 0.0 && y == 0.0 {
        return Err(Error::TotalCollision(t));
    }
    let value = 0.5 * ydot * ydot + 1.0 / (x * x + y * y).sqrt();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("lagrangian"))
    }
}

/// True iff `a_n y(n) > 0` at every integer node of the trajectory.
pub fn admissible(traj: &Trajectory, symbols: &impl Symbols) -> bool {
    (traj.grid.t_start..=traj.grid.t_end).all(|n| {
        let y = traj.at_integer(n).expect("integer times are nodes");
        symbols.sign_at(n).value() * y > 0.0
    })
}

/// Integer nodes where `a_n y(n) ≤ 0`.
pub fn sign_violations(traj: &Trajectory, symbols: &impl Symbols) -> Vec<i64> {
    (traj.grid.t_start..=traj.grid.t_end)
        .filter(|&n| symbols.sign_at(n).value() * traj.at_integer(n).expect("node") <= 0.0)
        .collect()
}

/// The discrete action on one grid, with `x(t)²` tabulated over one period.
#[derive(Debug, Clone)]
pub struct DiscreteAction {
    grid: Grid,
    x_sq: Vec<f64>,
}

impl DiscreteAction {
    pub fn new(drive: &KeplerDrive, grid: Grid) -> Self {
        let m = grid.nodes_per_unit as i64;
        let x_sq = (0..m)
            .map(|j| {
                let x = drive.x_at_fraction(j, m);
                x * x
            })
            .collect();
        Self { grid, x_sq }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `x(t_i)²` at node `i`.
    #[inline]
    pub fn x_sq_at(&self, i: usize) -> f64 {
        self.x_sq[i % self.grid.nodes_per_unit]
    }

    #[inline]
    fn potential(&self, i: usize, y: f64) -> f64 {
        1.0 / (self.x_sq_at(i) + y * y).sqrt()
    }

    /// `∂V/∂y = -y / (x² + y²)^{3/2}`, the right-hand side of `ÿ = f(t, y)`.
    #[inline]
    pub fn force(&self, i: usize, y: f64) -> f64 {
        let r2 = self.x_sq_at(i) + y * y;
        -y / (r2 * r2.sqrt())
    }

    /// `∂²V/∂y² = (2y² - x²) / (x² + y²)^{5/2}`.
    #[inline]
    pub fn stiffness(&self, i: usize, y: f64) -> f64 {
        let x2 = self.x_sq_at(i);
        let r2 = x2 + y * y;
        (2.0 * y * y - x2) / (r2 * r2 * r2.sqrt())
    }

    fn check_values(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                self.grid.len()
            )));
        }
        let m = self.grid.nodes_per_unit;
        for (i, &y) in values.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::NonFinite("trajectory values"));
            }
            if i % m == 0 && y == 0.0 {
                return Err(Error::TotalCollision(self.grid.time(i)));
            }
        }
        Ok(())
    }

    /// Action of the segments `seg_lo..seg_hi` (segment `i` joins nodes `i`
    /// and `i + 1`). Callers guarantee no total collision.
    pub fn segment_action(&self, values: &[f64], seg_lo: usize, seg_hi: usize) -> f64 {
        let h = self.grid.step();
        let half_h = 0.5 * h;
        let inv_2h = 0.5 / h;
        let mut kinetic = 0.0;
        let mut potential = 0.0;
        for i in seg_lo..seg_hi {
            let (a, b) = (values[i], values[i + 1]);
            let d = b - a;
            kinetic += d * d;
            potential += self.potential(i, a) + self.potential(i + 1, b);
        }
        kinetic * inv_2h + potential * half_h
    }

    /// Action over the unit interval `[p, p + 1]`.
    pub fn unit_action(&self, values: &[f64], p: i64) -> f64 {
        let m = self.grid.nodes_per_unit;
        let lo = (p - self.grid.t_start) as usize * m;
        self.segment_action(values, lo, lo + m)
    }

    pub fn value(&self, values: &[f64]) -> Result<f64> {
        self.check_values(values)?;
        let a = self.segment_action(values, 0, self.grid.segments());
        if a.is_finite() {
            Ok(a)
        } else {
            Err(Error::NonFinite("action"))
        }
    }

    /// Partial derivatives with respect to every node value, each node treated
    /// as independent (free ends).
    pub fn nodal_gradient(&self, values: &[f64], grad: &mut [f64]) {
        let n = self.grid.segments();
        let h = self.grid.step();
        let inv_h = 1.0 / h;
        for i in 0..=n {
            let y = values[i];
            let mut g = h * self.force(i, y);
            let mut k = 0.0;
            if i > 0 {
                k += y - values[i - 1];
            }
            if i < n {
                k += y - values[i + 1];
            }
            if i == 0 || i == n {
                g *= 0.5;
            }
            g += k * inv_h;
            grad[i] = g;
        }
    }

    /// Gradient with the boundary condition applied: zero at clamped ends;
    /// for periodic trajectories the shared end node carries the wrapped
    /// partial at both positions.
    pub fn gradient(&self, traj: &Trajectory) -> Result<Vec<f64>> {
        self.check_values(&traj.values)?;
        let n = self.grid.segments();
        let mut grad = vec![0.0; n + 1];
        self.nodal_gradient(&traj.values, &mut grad);
        match traj.bc {
            Bc::Periodic => {
                let g = grad[0] + grad[n];
                grad[0] = g;
                grad[n] = g;
            }
            Bc::FixedEnds { .. } => {
                grad[0] = 0.0;
                grad[n] = 0.0;
            }
            Bc::Free => {}
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("action gradient"));
        }
        Ok(grad)
    }

    /// Action and gradient as a function of the free variables of `template`.
    /// `work` must hold the full node vector of `template`.
    pub fn eval_free(
        &self,
        template: &Trajectory,
        free: &[f64],
        work: &mut Vec<f64>,
        grad: &mut [f64],
    ) -> Result<f64> {
        work.clear();
        work.extend_from_slice(&template.values);
        let range = template.free_range();
        work[range.clone()].copy_from_slice(free);
        let n = self.grid.segments();
        if template.bc == Bc::Periodic {
            work[n] = work[0];
        }
        let value = self.value(work)?;
        let mut full = vec![0.0; n + 1];
        self.nodal_gradient(work, &mut full);
        if template.bc == Bc::Periodic {
            full[0] += full[n];
        }
        grad.copy_from_slice(&full[range]);
        Ok(value)
    }

    /// Hessian diagonal of the potential part at the free variables.
    pub fn potential_hessian_diag(&self, traj: &Trajectory) -> Vec<f64> {
        let h = self.grid.step();
        let n = self.grid.segments();
        let mut diag: Vec<f64> = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 * h } else { h };
                w * self.stiffness(i, traj.values[i])
            })
            .collect();
        if traj.bc == Bc::Periodic {
            diag[0] += diag[n];
        }
        diag[traj.free_range()].to_vec()
    }

    /// Tridiagonal preconditioner `K/h + h σ I` built from the kinetic part,
    /// shaped for the free variables of `template`.
    pub fn preconditioner(&self, template: &Trajectory, sigma: f64) -> TridiagonalPreconditioner {
        let len = template.free_range().len();
        let free_ends = template.bc == Bc::Free;
        TridiagonalPreconditioner::kinetic(
            len,
            self.grid.step(),
            sigma,
            template.bc == Bc::Periodic,
            free_ends,
            free_ends,
        )
    }
}

/// Symmetric (optionally cyclic) tridiagonal matrix with constant
/// off-diagonal, applied through its inverse.
#[derive(Debug, Clone)]
pub struct TridiagonalPreconditioner {
    diag: Vec<f64>,
    off: f64,
    cyclic: bool,
}

impl TridiagonalPreconditioner {
    /// `K/h + h σ I` on `len` consecutive nodes. `free_first`/`free_last`
    /// mark ends that have only one neighbour (half weight).
    pub fn kinetic(
        len: usize,
        h: f64,
        sigma: f64,
        cyclic: bool,
        free_first: bool,
        free_last: bool,
    ) -> Self {
        let inv_h = 1.0 / h;
        let mut diag = vec![2.0 * inv_h + sigma * h; len];
        if !cyclic {
            if free_first {
                diag[0] = inv_h + 0.5 * sigma * h;
            }
            if free_last {
                diag[len - 1] = inv_h + 0.5 * sigma * h;
            }
        }
        Self {
            diag,
            off: -inv_h,
            cyclic,
        }
    }

    fn solve_linear(&self, diag: &[f64], rhs: &mut [f64]) {
        let n = diag.len();
        if n == 1 {
            rhs[0] /= diag[0];
            return;
        }
        let c = self.off;
        let mut cp = vec![0.0; n];
        let mut denom = diag[0];
        cp[0] = c / denom;
        rhs[0] /= denom;
        for i in 1..n {
            denom = diag[i] - c * cp[i - 1];
            cp[i] = c / denom;
            rhs[i] = (rhs[i] - c * rhs[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= cp[i] * rhs[i + 1];
        }
    }
}

impl Preconditioner for TridiagonalPreconditioner {
    fn apply_inverse(&self, v: &mut [f64]) {
        let n = self.diag.len();
        if !self.cyclic || n < 3 {
            self.solve_linear(&self.diag, v);
            return;
        }
        // Sherman–Morrison on the corner entries: A = T + u uᵀ with
        // u = (γ, 0, …, 0, c), T = A with modified first and last diagonals.
        let c = self.off;
        let gamma = -self.diag[0];
        let mut t_diag = self.diag.clone();
        t_diag[0] -= gamma;
        t_diag[n - 1] -= c * c / gamma;
        self.solve_linear(&t_diag, v);
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = c;
        self.solve_linear(&t_diag, &mut u);
        let factor = (v[0] + c / gamma * v[n - 1]) / (1.0 + u[0] + c / gamma * u[n - 1]);
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi -= factor * ui;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn drive() -> KeplerDrive {
        KeplerDrive::new()
    }

    #[test]
    fn grid_rejects_coarse_or_empty() {
        assert!(Grid::new(4, 0, 1).is_err());
        assert!(Grid::new(16, 2, 2).is_err());
        let g = Grid::new(16, -2, 3).unwrap();
        assert_eq!(g.len(), 81);
        assert_eq!(g.node_of(0), Some(32));
        assert_eq!(g.integer_at(48), Some(1));
        assert_eq!(g.integer_at(47), None);
        assert_eq!(g.time(40), 0.5);
    }

    #[test]
    fn lagrangian_examples() {
        let k = drive();
        let at_apex = lagrangian(&k, 0.5, 0.0, 0.0).unwrap();
        assert_relative_eq!(at_apex, 1.0 / (2.0 * k.amplitude()), max_relative = 1e-14);
        assert!((at_apex - 3.4051).abs() < 1e-3);
        assert_eq!(lagrangian(&k, 0.0, 2.0, 0.0).unwrap(), 0.5);
        let far = lagrangian(&k, 0.3, 1e12, 0.7).unwrap();
        assert_relative_eq!(far, 0.5 * 0.49, max_relative = 1e-10);
        assert!(matches!(
            lagrangian(&k, 4.0, 0.0, 1.0),
            Err(Error::TotalCollision(_))
        ));
    }

    #[test]
    fn constant_periodic_has_no_kinetic_part() {
        let k = drive();
        let grid = Grid::new(32, 0, 1).unwrap();
        let traj = Trajectory::from_fn(grid, Bc::Periodic, |_| 3.0).unwrap();
        let action = DiscreteAction::new(&k, grid);
        let g = action.gradient(&traj).unwrap();
        let h = grid.step();
        for (i, gi) in g.iter().enumerate() {
            let expected = if traj.bc == Bc::Periodic && (i == 0 || i == grid.segments()) {
                h * action.force(0, 3.0)
            } else {
                h * action.force(i, 3.0)
            };
            assert!(*gi < 0.0, "the potential pulls toward y = 0");
            assert_relative_eq!(*gi, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let k = drive();
        let grid = Grid::new(16, -1, 2).unwrap();
        let traj = Trajectory::from_fn(grid, Bc::Free, |t| 0.7 + 0.3 * (2.0 * t).sin()).unwrap();
        let action = DiscreteAction::new(&k, grid);
        let g = action.gradient(&traj).unwrap();
        let eps = 1e-6;
        for i in [0, 5, 16, 31, grid.segments()] {
            let mut up = traj.values.clone();
            up[i] += eps;
            let mut down = traj.values.clone();
            down[i] -= eps;
            let fd = (action.value(&up).unwrap() - action.value(&down).unwrap()) / (2.0 * eps);
            assert_relative_eq!(g[i], fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn large_constant_action_tends_to_reciprocal() {
        let k = drive();
        let grid = Grid::new(1024, 0, 1).unwrap();
        let action = DiscreteAction::new(&k, grid);
        let mut prev = f64::INFINITY;
        for c in [10.0, 100.0, 1000.0] {
            let traj = Trajectory::from_fn(grid, Bc::Periodic, |_| c).unwrap();
            let rel = (action.value(&traj.values).unwrap() * c - 1.0).abs();
            assert!(rel < prev);
            prev = rel;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn collision_and_nonfinite_rejected() {
        let k = drive();
        let grid = Grid::new(8, 0, 1).unwrap();
        let action = DiscreteAction::new(&k, grid);
        let mut values = vec![1.0; 9];
        values[8] = 0.0;
        assert!(matches!(
            action.value(&values),
            Err(Error::TotalCollision(_))
        ));
        values[8] = 1.0;
        values[3] = 0.0;
        assert!(action.value(&values).is_ok());
        values[3] = f64::NAN;
        assert!(action.value(&values).is_err());
        assert!(Trajectory::new(grid, values, Bc::Free).is_err());
    }

    #[test]
    fn admissibility_is_strict_at_integers() {
        let b: crate::PeriodicSymbols = "+++---".parse().unwrap();
        let grid = Grid::new(8, 0, 6).unwrap();
        let mut traj = Trajectory::from_fn(grid, Bc::Free, |t| {
            let n = t.floor() as i64;
            if t.fract() == 0.0 {
                b.sign_at(n).value()
            } else {
                // wrong signs between integers are allowed
                -b.sign_at(n).value()
            }
        })
        .unwrap();
        assert!(admissible(&traj, &b));
        traj.values[16] = 0.0;
        assert!(!admissible(&traj, &b));
        assert_eq!(sign_violations(&traj, &b), vec![2]);
    }

    #[test]
    fn refinement_converges_at_second_order() {
        let k = drive();
        let f = |t: f64| 1.2 + 0.4 * (std::f64::consts::TAU * t / 3.0).sin();
        let values: Vec<f64> = [32usize, 64, 128, 256]
            .iter()
            .map(|&m| {
                let grid = Grid::new(m, 0, 3).unwrap();
                let traj = Trajectory::from_fn(grid, Bc::Periodic, f).unwrap();
                DiscreteAction::new(&k, grid).value(&traj.values).unwrap()
            })
            .collect();
        let d1 = (values[1] - values[0]).abs();
        let d2 = (values[2] - values[1]).abs();
        let d3 = (values[3] - values[2]).abs();
        assert!((d1 / d2).log2() > 1.8, "{values:?}");
        assert!((d2 / d3).log2() > 1.8, "{values:?}");
    }

    #[test]
    fn additive_over_unit_intervals() {
        let k = drive();
        let grid = Grid::new(16, -2, 2).unwrap();
        let traj = Trajectory::from_fn(grid, Bc::Free, |t| 0.7 + 0.3 * t.cos()).unwrap();
        let action = DiscreteAction::new(&k, grid);
        let total = action.value(&traj.values).unwrap();
        let sum: f64 = (-2..2).map(|p| action.unit_action(&traj.values, p)).sum();
        assert_relative_eq!(total, sum, max_relative = 1e-14);
    }

    #[test]
    fn preconditioner_inverts_its_matrix() {
        let k = drive();
        for bc in [
            Bc::Periodic,
            Bc::Free,
            Bc::FixedEnds {
                left: 1.0,
                right: 1.0,
            },
        ] {
            let grid = Grid::new(8, 0, 2).unwrap();
            let traj = Trajectory::from_fn(grid, bc, |_| 1.0).unwrap();
            let p = DiscreteAction::new(&k, grid).preconditioner(&traj, 0.7);
            let n = p.diag.len();
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 0.1).collect();
            // b = A x
            let mut b = vec![0.0; n];
            for i in 0..n {
                b[i] = p.diag[i] * x[i];
                if i > 0 {
                    b[i] += p.off * x[i - 1];
                } else if p.cyclic {
                    b[i] += p.off * x[n - 1];
                }
                if i + 1 < n {
                    b[i] += p.off * x[i + 1];
                } else if p.cyclic {
                    b[i] += p.off * x[0];
                }
            }
            p.apply_inverse(&mut b);
            for (bi, xi) in b.iter().zip(&x) {
                assert_relative_eq!(bi, xi, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn refined_trajectory_interpolates() {
        let grid = Grid::new(8, 0, 1).unwrap();
        let traj = Trajectory::from_fn(grid, Bc::Free, |t| t * t).unwrap();
        let fine = traj.refined();
        assert_eq!(fine.grid.nodes_per_unit(), 16);
        assert_eq!(fine.values[2], traj.values[1]);
        assert_eq!(fine.values[1], 0.5 * (traj.values[0] + traj.values[1]));
    }
}
