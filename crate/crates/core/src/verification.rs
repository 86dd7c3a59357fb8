//! Structural checks on computed orbits.
//!
//! Each check restates a property of exact minimizers at the discrete level:
//! the equation of motion, the zero-crossing pattern forced by the symbols,
//! time-reversal symmetry, the scaling `ρ(kb) = kρ(b)`, the lower bound
//! `A_{0,N} ≥ ρ(b)` for symmetric `b`, the total order of minimizers, and
//! tail convergence of connecting orbits.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::action::{admissible, Bc, DiscreteAction, Grid, Trajectory};
use crate::connection::ConnectingOrbit;
use crate::error::Result;
use crate::kepler::KeplerDrive;
use crate::periodic::{minimize_periodic_from, PeriodicOptions, PeriodicOrbit};
use crate::symbolic::{PeriodicSymbols, Symbols};
use crate::tolerances::Tolerances;

fn interior_nodes(traj: &Trajectory) -> Vec<(usize, usize, usize)> {
    let n = traj.grid.segments();
    match traj.bc {
        Bc::Periodic => (0..n).map(|i| ((i + n - 1) % n, i, (i + 1) % n)).collect(),
        _ => (1..n).map(|i| (i - 1, i, i + 1)).collect(),
    }
}

/// Sup-norm residual of `ÿ = -y/(x² + y²)^{3/2}` on the interior nodes.
///
/// The second difference is compared with the Numerov average
/// `(f_{i-1} + 10 f_i + f_{i+1}) / 12` of the force, which is fourth-order
/// consistent with the differential equation. On an exact discrete
/// stationary point the plain three-point residual vanishes identically, so
/// this form is what measures the distance to the continuous equation.
pub fn el_residual(drive: &KeplerDrive, traj: &Trajectory) -> f64 {
    let action = DiscreteAction::new(drive, traj.grid);
    let h = traj.grid.step();
    let y = &traj.values;
    let f = |i: usize| action.force(i, y[i]);
    interior_nodes(traj)
        .into_iter()
        .map(|(a, i, b)| {
            let accel = (y[b] - 2.0 * y[i] + y[a]) / (h * h);
            (accel - (f(a) + 10.0 * f(i) + f(b)) / 12.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Sup-norm of `δ²y/h² - f(t, y)` at interior nodes: the discrete
/// Euler–Lagrange equation, equal to `-∂A/∂y_i / h`.
pub fn discrete_el_residual(drive: &KeplerDrive, traj: &Trajectory) -> f64 {
    let action = DiscreteAction::new(drive, traj.grid);
    let h = traj.grid.step();
    let y = &traj.values;
    interior_nodes(traj)
        .into_iter()
        .map(|(a, i, b)| ((y[b] - 2.0 * y[i] + y[a]) / (h * h) - action.force(i, y[i])).abs())
        .fold(0.0, f64::max)
}

/// Sign changes of the nodal values in each unit interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossings {
    /// `(n, count)` for each interval `(n, n + 1)`.
    pub counts: Vec<(i64, usize)>,
    /// Non-integer nodes where `y` is exactly zero.
    pub node_hits: Vec<f64>,
}

impl Crossings {
    /// Intervals whose count disagrees with the symbols: one crossing when
    /// `a_n a_{n+1} = -1`, none when `= +1`.
    pub fn mismatches(&self, symbols: &impl Symbols) -> Vec<i64> {
        self.counts
            .iter()
            .filter(|&&(n, c)| {
                let expected = usize::from(symbols.sign_at(n) != symbols.sign_at(n + 1));
                c != expected
            })
            .map(|&(n, _)| n)
            .collect()
    }
}

pub fn zero_crossings(traj: &Trajectory) -> Crossings {
    let m = traj.grid.nodes_per_unit();
    let mut counts = Vec::with_capacity(traj.grid.units());
    let mut node_hits = Vec::new();
    for k in 0..traj.grid.units() {
        let lo = k * m;
        let mut last = traj.values[lo];
        let mut count = 0;
        for i in lo + 1..=lo + m {
            let y = traj.values[i];
            if y == 0.0 {
                if i != lo + m {
                    node_hits.push(traj.grid.time(i));
                }
                continue;
            }
            if last != 0.0 && (y > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = y;
        }
        counts.push((traj.grid.t_start() + k as i64, count));
    }
    Crossings { counts, node_hits }
}

/// `max_j |y(jh) - y(N - jh)|`, or `None` when `b` is not symmetric.
pub fn symmetry_defect(orbit: &PeriodicOrbit) -> Option<f64> {
    if !orbit.symbols.is_symmetric() {
        return None;
    }
    let v = &orbit.traj.values;
    let n = orbit.traj.grid.segments();
    Some((0..=n).fold(0.0, |m, j| m.max((v[j] - v[n - j]).abs())))
}

/// Outcome of the scaling check `|ρ(kb) - kρ(b)|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub k: usize,
    pub rho: f64,
    pub rho_k: f64,
    pub defect: f64,
    /// `max |v(t + N) - v(t)|` of the `kb` minimizer.
    pub periodicity_defect: f64,
    pub passed: bool,
}

pub fn scaling_check(
    drive: &KeplerDrive,
    b: &PeriodicSymbols,
    k: usize,
    opts: &PeriodicOptions,
) -> Result<ScalingCheck> {
    let single = crate::periodic::multi_start(drive, b, opts)?;
    let kb = b.repeat(k);
    let repeated = crate::periodic::multi_start(drive, &kb, opts)?;
    let rho = single.rho_hat();
    let rho_k = repeated.rho_hat();
    let best = repeated.best();
    let shift = (b.period() * best.traj.grid.nodes_per_unit()) as i64;
    let total = best.traj.grid.segments() as i64;
    let periodicity_defect = (0..total).fold(0.0, |m: f64, i| {
        m.max((best.value_at_node(i + shift) - best.value_at_node(i)).abs())
    });
    let defect = (rho_k - k as f64 * rho).abs();
    Ok(ScalingCheck {
        k,
        rho,
        rho_k,
        defect,
        periodicity_defect,
        passed: defect <= k as f64 * opts.tol.rho_tol,
    })
}

/// Random admissible trajectory on `[0, N]` (not necessarily periodic).
///
/// Half of the samples perturb `base` when given; the rest are smooth
/// random curves with the right signs at the integers.
pub fn random_admissible<R: Rng>(
    rng: &mut R,
    b: &PeriodicSymbols,
    grid: Grid,
    base: Option<&Trajectory>,
) -> Trajectory {
    let n = b.period();
    let amplitude: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.05..3.0)).collect();
    let modes: Vec<(f64, f64)> = (0..4)
        .map(|k| {
            (
                rng.gen_range(-0.5..0.5) / (k + 1) as f64,
                rng.gen_range(0.0..1.0),
            )
        })
        .collect();
    let perturb = base.is_some() && rng.gen_bool(0.5);
    let scale = 10f64.powf(rng.gen_range(-6.0..-1.0));
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut values: Vec<f64> = (0..grid.len())
        .map(|i| {
            let t = grid.time(i);
            if perturb {
                let y = base.expect("base").values[i];
                return y + scale * noise[i];
            }
            let k = t.floor() as usize;
            let theta = t - k as f64;
            let lo = b.sign_at(k as i64).value() * amplitude[k];
            let hi = b.sign_at(k as i64 + 1).value() * amplitude[(k + 1).min(n)];
            let mut y = lo + (hi - lo) * theta * theta * (3.0 - 2.0 * theta);
            for (j, (c, phase)) in modes.iter().enumerate() {
                // vanishes at the integers, so signs there are untouched
                y += c
                    * ((j + 1) as f64 * std::f64::consts::PI * t).sin()
                    * (std::f64::consts::PI * (t + phase)).cos().abs();
            }
            y
        })
        .collect();
    // keep the integer-time signs strict after perturbation
    for k in 0..=n {
        let i = k * grid.nodes_per_unit();
        let s = b.sign_at(k as i64).value();
        if s * values[i] <= 0.0 {
            values[i] = s * 1e-3;
        }
    }
    Trajectory::new(grid, values, Bc::Free).expect("finite values")
}

/// Deterministic generator for the sampling checks.
pub fn sampling_rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Counts random admissible trajectories with `A_{0,N} < ρ̂ - tol`.
pub fn lower_bound_violations<R: Rng>(
    drive: &KeplerDrive,
    orbit: &PeriodicOrbit,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<(usize, f64)> {
    let grid = orbit.traj.grid;
    let action = DiscreteAction::new(drive, grid);
    let mut violations = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..samples {
        let y = random_admissible(rng, &orbit.symbols, grid, Some(&orbit.traj));
        debug_assert!(admissible(&y, &orbit.symbols));
        let gap = action.value(&y.values)? - orbit.rho_hat;
        min_gap = min_gap.min(gap);
        if gap < -tol {
            violations += 1;
        }
    }
    Ok((violations, min_gap))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingVerdict {
    Identical,
    StrictlyOrdered,
    Violated,
    SingleSample,
}

/// Pairwise order of minimizers on a common grid.
pub fn ordering_verdict(orbits: &[&Trajectory], same_tol: f64) -> OrderingVerdict {
    if orbits.len() < 2 {
        return OrderingVerdict::SingleSample;
    }
    let mut verdict = OrderingVerdict::Identical;
    for (k, a) in orbits.iter().enumerate() {
        for b in &orbits[k + 1..] {
            let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(u, v)| u - v).collect();
            let sup = diff.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
            if sup <= same_tol {
                continue;
            }
            if diff.iter().all(|&d| d > 0.0) || diff.iter().all(|&d| d < 0.0) {
                verdict = OrderingVerdict::StrictlyOrdered;
            } else {
                return OrderingVerdict::Violated;
            }
        }
    }
    verdict
}

/// A check that may not apply to a given orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Check<T> {
    Value(T),
    NotApplicable(NotApplicable),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotApplicable {
    NotApplicable,
}

impl<T> Check<T> {
    pub fn na() -> Self {
        Check::NotApplicable(NotApplicable::NotApplicable)
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Check::Value(v) => Some(v),
            Check::NotApplicable(_) => None,
        }
    }
}

impl<T> From<Option<T>> for Check<T> {
    fn from(v: Option<T>) -> Self {
        v.map_or_else(Check::na, Check::Value)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub orbit_kind: String,
    pub admissible: bool,
    pub grad_sup: f64,
    pub el_residual_sup: f64,
    pub crossing_counts: Vec<(i64, usize)>,
    pub crossing_mismatches: Vec<i64>,
    pub crossing_node_hits: Vec<f64>,
    pub symmetry_defect: Check<f64>,
    pub scaling_defect: Check<f64>,
    pub ordering_verdict: Check<OrderingVerdict>,
    pub tail_decay: Check<TailDecay>,
    pub comparison: Check<ComparisonCheck>,
    pub lower_bound_violations: Check<usize>,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "kind            {}", self.orbit_kind);
        let _ = writeln!(s, "admissible      {}", self.admissible);
        let _ = writeln!(s, "gradient sup    {:.3e}", self.grad_sup);
        let _ = writeln!(s, "EL residual     {:.3e}", self.el_residual_sup);
        let _ = writeln!(
            s,
            "crossings       {} intervals, {} mismatched, {} node hits",
            self.crossing_counts.len(),
            self.crossing_mismatches.len(),
            self.crossing_node_hits.len()
        );
        if let Some(d) = self.symmetry_defect.value() {
            let _ = writeln!(s, "symmetry defect {d:.3e}");
        }
        if let Some(d) = self.scaling_defect.value() {
            let _ = writeln!(s, "scaling defect  {d:.3e}");
        }
        if let Some(v) = self.ordering_verdict.value() {
            let _ = writeln!(s, "ordering        {v:?}");
        }
        if let Some(t) = self.tail_decay.value() {
            let _ = writeln!(
                s,
                "tails           left {:.3e}, right {:.3e}",
                t.left_max_outer, t.right_max_outer
            );
        }
        if let Some(c) = self.comparison.value() {
            let _ = writeln!(s, "comparison      min margin {:.3e}", c.min_margin);
        }
        if let Some(v) = self.lower_bound_violations.value() {
            let _ = writeln!(s, "lower bound     {v} violations");
        }
        if self.failures.is_empty() {
            let _ = writeln!(s, "PASS");
        } else {
            for f in &self.failures {
                let _ = writeln!(s, "FAIL {f}");
            }
        }
        s
    }
}

/// Per-interval distances of a connecting orbit to `γ±` in its tails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDecay {
    /// `(p, ‖u - γ⁻‖_{L²[p, p+1]})` for `p < K⁻`, ordered outward.
    pub left: Vec<(i64, f64)>,
    /// `(p, ‖u - γ⁺‖_{L²[p, p+1]})` for `p ≥ K⁺`, ordered outward.
    pub right: Vec<(i64, f64)>,
    /// Largest residual over the outermost two tail periods on each side.
    pub left_max_outer: f64,
    pub right_max_outer: f64,
}

impl TailDecay {
    /// Outward monotonicity up to `tol` on both sides.
    pub fn is_monotone(&self, tol: f64) -> bool {
        let mono = |v: &[(i64, f64)]| v.windows(2).all(|w| w[1].1 <= w[0].1 + tol);
        mono(&self.left) && mono(&self.right)
    }
}

/// Nodal sign of `y* - γ⁺` on `[K⁺, T⁺]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCheck {
    /// `+1` when `y* > γ⁺` is expected, `-1` for `y* < γ⁺`.
    pub expected_sign: f64,
    /// `min expected_sign · (y* - γ⁺)` over the nodes; negative values
    /// beyond the tolerance violate the comparison.
    pub min_margin: f64,
    /// True when the case `a_{K⁺} = 1, b⁺_{K⁺} = -1` applies.
    pub upper_case: bool,
}

pub fn verify_periodic(
    drive: &KeplerDrive,
    orbit: &PeriodicOrbit,
    tol: &Tolerances,
    lower_bound_samples: usize,
    rng: &mut impl Rng,
) -> Result<VerificationReport> {
    let traj = &orbit.traj;
    let action = DiscreteAction::new(drive, traj.grid);
    let mut failures = Vec::new();
    let is_admissible = admissible(traj, &orbit.symbols);
    if !is_admissible {
        failures.push("trajectory violates the sign constraints".to_string());
    }
    let grad_sup = match action.gradient(traj) {
        Ok(g) => g.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
        Err(_) => f64::INFINITY,
    };
    if !(grad_sup <= tol.grad_tol) {
        failures.push(format!(
            "gradient sup-norm {grad_sup:.3e} above {:.1e}",
            tol.grad_tol
        ));
    }
    let el = el_residual(drive, traj);
    check_el(el, traj, tol, &mut failures);
    let crossings = zero_crossings(traj);
    let mismatches = crossings.mismatches(&orbit.symbols);
    if !mismatches.is_empty() {
        failures.push(format!(
            "crossing pattern differs on intervals {mismatches:?}"
        ));
    }
    if !crossings.node_hits.is_empty() {
        failures.push("zero landed on a node; rerun at a finer grid".into());
    }
    if let Ok(value) = action.value(&traj.values) {
        if !((value - orbit.rho_hat).abs() <= tol.rho_tol * (1.0 + value.abs())) {
            failures.push(format!(
                "recorded action {:.12} differs from the trajectory's {value:.12}",
                orbit.rho_hat
            ));
        }
    }
    let symmetry = symmetry_defect(orbit);
    if let Some(d) = symmetry {
        if !(d <= tol.sym_tol) {
            failures.push(format!("symmetry defect {d:.3e} above {:.1e}", tol.sym_tol));
        }
    }
    let lower_bound = if orbit.symbols.is_symmetric() && lower_bound_samples > 0 && is_admissible {
        let (violations, _) =
            lower_bound_violations(drive, orbit, lower_bound_samples, tol.lower_bound_tol, rng)?;
        if violations > 0 {
            failures.push(format!("{violations} samples below the periodic minimum"));
        }
        Some(violations)
    } else {
        None
    };
    Ok(VerificationReport {
        orbit_kind: "periodic_orbit".into(),
        admissible: is_admissible,
        grad_sup,
        el_residual_sup: el,
        crossing_counts: crossings.counts,
        crossing_mismatches: mismatches,
        crossing_node_hits: crossings.node_hits,
        symmetry_defect: symmetry.into(),
        scaling_defect: Check::na(),
        ordering_verdict: Check::na(),
        tail_decay: Check::na(),
        comparison: Check::na(),
        lower_bound_violations: lower_bound.into(),
        failures,
    })
}

/// Adds the scaling check for `k` to a periodic report.
pub fn add_scaling(
    report: &mut VerificationReport,
    drive: &KeplerDrive,
    orbit: &PeriodicOrbit,
    k: usize,
    opts: &PeriodicOptions,
) -> Result<()> {
    let check = scaling_check(drive, &orbit.symbols, k, opts)?;
    if !check.passed {
        report
            .failures
            .push(format!("scaling defect {:.3e} for k = {k}", check.defect));
    }
    report.scaling_defect = Check::Value(check.defect);
    Ok(())
}

/// Adds the ordering verdict over fresh multi-start minimizers.
pub fn add_ordering(
    report: &mut VerificationReport,
    drive: &KeplerDrive,
    orbit: &PeriodicOrbit,
    opts: &PeriodicOptions,
) -> Result<()> {
    let runs = opts
        .seeds
        .iter()
        .map(|&y0| minimize_periodic_from(drive, &orbit.symbols, y0, opts))
        .collect::<Result<Vec<_>>>()?;
    let trajs: Vec<&Trajectory> = runs
        .iter()
        .filter(|o| o.converged)
        .map(|o| &o.traj)
        .collect();
    let verdict = ordering_verdict(&trajs, opts.tol.sym_tol);
    if verdict == OrderingVerdict::Violated {
        report
            .failures
            .push("minimizers are not totally ordered".into());
    }
    report.ordering_verdict = Check::Value(verdict);
    Ok(())
}

pub fn verify_connection(
    drive: &KeplerDrive,
    orbit: &ConnectingOrbit,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let traj = &orbit.traj;
    let spec = &orbit.spec;
    let action = DiscreteAction::new(drive, traj.grid);
    let mut failures = Vec::new();
    let is_admissible = admissible(traj, spec);
    if !is_admissible {
        failures.push("trajectory violates the sign constraints".to_string());
    }
    let grad_sup = match action.gradient(traj) {
        Ok(g) => g.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
        Err(_) => f64::INFINITY,
    };
    if !(grad_sup <= tol.grad_tol) {
        failures.push(format!(
            "gradient sup-norm {grad_sup:.3e} above {:.1e}",
            tol.grad_tol
        ));
    }
    let el = el_residual(drive, traj);
    check_el(el, traj, tol, &mut failures);
    let crossings = zero_crossings(traj);
    let mismatches = crossings.mismatches(spec);
    if !mismatches.is_empty() {
        failures.push(format!(
            "crossing pattern differs on intervals {mismatches:?}"
        ));
    }
    if !crossings.node_hits.is_empty() {
        failures.push("zero landed on a node; rerun at a finer grid".into());
    }
    let problem = crate::connection::ConnectionProblem::for_orbit(orbit);
    if let Ok(j) = problem.j_windowed(drive, traj) {
        if !((j - orbit.j_hat).abs() <= tol.j_tol * (1.0 + j.abs())) {
            failures.push(format!(
                "recorded J {:.12} differs from the trajectory's {j:.12}",
                orbit.j_hat
            ));
        }
    }
    let tails = problem.tail_decay(traj)?;
    if !(tails.left_max_outer <= tol.tail_tol && tails.right_max_outer <= tol.tail_tol) {
        failures.push(format!(
            "tail residuals {:.3e} / {:.3e} above {:.1e}",
            tails.left_max_outer, tails.right_max_outer, tol.tail_tol
        ));
    }
    if !tails.is_monotone(tol.tail_tol) {
        failures.push("tail residuals do not decay outward".into());
    }
    let comparison = problem.comparison(traj)?;
    if let Some(c) = comparison {
        if c.min_margin < -ORDER_SLACK {
            failures.push(format!(
                "comparison with γ⁺ fails beyond K⁺ (margin {:.3e})",
                c.min_margin
            ));
        }
    }
    Ok(VerificationReport {
        orbit_kind: "connecting_orbit".into(),
        admissible: is_admissible,
        grad_sup,
        el_residual_sup: el,
        crossing_counts: crossings.counts,
        crossing_mismatches: mismatches,
        crossing_node_hits: crossings.node_hits,
        symmetry_defect: Check::na(),
        scaling_defect: Check::na(),
        ordering_verdict: Check::na(),
        tail_decay: Check::Value(tails),
        comparison: comparison.into(),
        lower_bound_violations: Check::na(),
        failures,
    })
}

fn check_el(el: f64, traj: &Trajectory, tol: &Tolerances, failures: &mut Vec<String>) {
    let h = traj.grid.step();
    let bound = tol.el_tol_h2 * h * h;
    if !(el <= bound) {
        failures.push(format!("EL residual {el:.3e} above {bound:.3e}"));
    }
}

/// Slack for nodal comparisons between two converged trajectories.
pub const ORDER_SLACK: f64 = crate::tolerances::ORDER_TOL;
