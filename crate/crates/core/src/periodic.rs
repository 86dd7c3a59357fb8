//! Minimizers of the action over N-periodic trajectories with prescribed
//! signs at integer times, and the minimal value `ρ(b)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{admissible, Bc, DiscreteAction, Grid, Trajectory};
use crate::error::{Error, Result};
use crate::kepler::KeplerDrive;
use crate::solve::{minimize_nodes, Layout};
use crate::symbolic::{PeriodicSymbols, Symbols};
use crate::tolerances::Tolerances;
use crate::verification;

/// Default seed amplitudes for multi-start.
pub const DEFAULT_SEEDS: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];

#[derive(Debug, Clone)]
pub struct PeriodicOptions {
    /// Resolution of the first (coarsest) solve.
    pub nodes_per_unit: usize,
    /// Number of grid doublings after the first solve.
    pub refine: usize,
    /// Seed amplitudes `y₀`; one minimization per entry.
    pub seeds: Vec<f64>,
    pub tol: Tolerances,
    /// Worker threads for multi-start; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        Self {
            nodes_per_unit: 64,
            refine: 0,
            seeds: DEFAULT_SEEDS.to_vec(),
            tol: Tolerances::default(),
            jobs: 0,
        }
    }
}

impl PeriodicOptions {
    pub fn final_nodes_per_unit(&self) -> usize {
        self.nodes_per_unit << self.refine
    }

    pub fn validate(&self) -> Result<()> {
        self.tol.validate()?;
        if self.nodes_per_unit < crate::action::MIN_NODES_PER_UNIT {
            return Err(Error::InvalidInput(format!(
                "nodes per unit must be at least {}",
                crate::action::MIN_NODES_PER_UNIT
            )));
        }
        if self.seeds.is_empty() || self.seeds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidInput(
                "seed amplitudes must be positive and non-empty".into(),
            ));
        }
        Ok(())
    }
}

/// A converged minimizer over the periodic class of `symbols`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub symbols: PeriodicSymbols,
    /// Periodic trajectory on `[0, N]`.
    pub traj: Trajectory,
    pub rho_hat: f64,
    pub grad_norm: f64,
    pub el_residual: f64,
    pub converged: bool,
    pub seed_amplitude: f64,
    pub iterations: usize,
    pub penalty_restart: bool,
}

/// On-disk form of [`PeriodicOrbit`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicOrbitJson {
    pub kind: String,
    pub symbols: String,
    pub rho_hat: f64,
    pub grad_norm: f64,
    pub el_residual: f64,
    pub converged: bool,
    pub seed_amplitude: f64,
    pub iterations: usize,
    pub penalty_restart: bool,
    pub trajectory: Trajectory,
}

pub const PERIODIC_KIND: &str = "periodic_orbit";

impl PeriodicOrbit {
    pub fn period(&self) -> usize {
        self.symbols.period()
    }

    /// `γ(t)` for any `t` on the grid, extended periodically.
    pub fn value_at_node(&self, i: i64) -> f64 {
        let n = self.traj.grid.segments() as i64;
        self.traj.values[i.rem_euclid(n) as usize]
    }

    /// Values at the nodes of `grid` (same resolution), extended periodically.
    pub fn sample_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        let m = grid.nodes_per_unit();
        if m != self.traj.grid.nodes_per_unit() {
            return Err(Error::InvalidInput(format!(
                "periodic orbit at M = {} sampled on a grid with M = {m}",
                self.traj.grid.nodes_per_unit()
            )));
        }
        let offset = grid.t_start() * m as i64;
        Ok((0..grid.len() as i64)
            .map(|i| self.value_at_node(offset + i))
            .collect())
    }

    pub fn to_json_value(&self) -> PeriodicOrbitJson {
        PeriodicOrbitJson {
            kind: PERIODIC_KIND.into(),
            symbols: self.symbols.to_string(),
            rho_hat: self.rho_hat,
            grad_norm: self.grad_norm,
            el_residual: self.el_residual,
            converged: self.converged,
            seed_amplitude: self.seed_amplitude,
            iterations: self.iterations,
            penalty_restart: self.penalty_restart,
            trajectory: self.traj.clone(),
        }
    }

    pub fn from_json_value(raw: PeriodicOrbitJson) -> Result<Self> {
        if raw.kind != PERIODIC_KIND {
            return Err(Error::InvalidInput(format!(
                "expected kind {PERIODIC_KIND:?}, found {:?}",
                raw.kind
            )));
        }
        let symbols: PeriodicSymbols = raw.symbols.parse()?;
        let t = raw.trajectory;
        let traj = Trajectory::new(t.grid, t.values, t.bc)?;
        if traj.bc != Bc::Periodic
            || traj.grid.t_start() != 0
            || traj.grid.t_end() != symbols.period() as i64
        {
            return Err(Error::InvalidInput(
                "periodic orbit must be a periodic trajectory on [0, N]".into(),
            ));
        }
        Ok(Self {
            symbols,
            traj,
            rho_hat: raw.rho_hat,
            grad_norm: raw.grad_norm,
            el_residual: raw.el_residual,
            converged: raw.converged,
            seed_amplitude: raw.seed_amplitude,
            iterations: raw.iterations,
            penalty_restart: raw.penalty_restart,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json_value())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_value(serde_json::from_str(text)?)
    }
}

/// Smooth admissible N-periodic seed with `y(n) = b_n y₀` and a single
/// monotone zero inside each sign-change interval.
pub fn seed_periodic(b: &PeriodicSymbols, grid: Grid, y0: f64) -> Result<Trajectory> {
    if grid.t_start() != 0 || grid.t_end() != b.period() as i64 {
        return Err(Error::InvalidInput(format!(
            "periodic seed needs the span [0, {}]",
            b.period()
        )));
    }
    Trajectory::from_fn(grid, Bc::Periodic, |t| {
        let n = t.floor();
        let theta = t - n;
        let n = n as i64;
        let (lo, hi) = (b.sign_at(n).value() * y0, b.sign_at(n + 1).value() * y0);
        // C¹ smoothstep between the integer values
        lo + (hi - lo) * theta * theta * (3.0 - 2.0 * theta)
    })
}

/// Minimizes the periodic action from one seed amplitude, with grid
/// continuation `M, 2M, …`.
pub fn minimize_periodic_from(
    drive: &KeplerDrive,
    b: &PeriodicSymbols,
    y0: f64,
    opts: &PeriodicOptions,
) -> Result<PeriodicOrbit> {
    opts.validate()?;
    let grid = Grid::new(opts.nodes_per_unit, 0, b.period() as i64)?;
    let seed = seed_periodic(b, grid, y0)?;
    minimize_periodic_seeded(drive, b, seed, y0, opts)
}

/// Same as [`minimize_periodic_from`] starting from an explicit trajectory.
pub fn minimize_periodic_seeded(
    drive: &KeplerDrive,
    b: &PeriodicSymbols,
    seed: Trajectory,
    seed_amplitude: f64,
    opts: &PeriodicOptions,
) -> Result<PeriodicOrbit> {
    if !admissible(&seed, b) {
        return Err(Error::InvalidInput("seed is not admissible".into()));
    }
    let mut traj = seed;
    let mut iterations = 0;
    let mut penalty_restart = false;
    let mut outcome = None;
    for level in 0..=opts.refine {
        if level > 0 {
            traj = traj.refined();
        }
        let action = DiscreteAction::new(drive, traj.grid);
        let layout = Layout {
            free: traj.free_range(),
            periodic: true,
        };
        let out = minimize_nodes(&action, b, &layout, &traj.values, &opts.tol);
        iterations += out.iterations;
        penalty_restart |= out.penalty_restart;
        traj.values = out.values.clone();
        info!(
            "periodic {b} y0 = {seed_amplitude}: M = {} action {:.12} grad {:.2e} ({} its)",
            traj.grid.nodes_per_unit(),
            out.value,
            out.grad_sup,
            out.iterations
        );
        outcome = Some(out);
    }
    let out = outcome.expect("at least one level");
    let el_residual = verification::el_residual(drive, &traj);
    Ok(PeriodicOrbit {
        symbols: b.clone(),
        converged: out.converged && admissible(&traj, b),
        traj,
        rho_hat: out.value,
        grad_norm: out.grad_sup,
        el_residual,
        seed_amplitude,
        iterations,
        penalty_restart,
    })
}

/// All multi-start minimizers for one symbol sequence.
#[derive(Debug, Clone)]
pub struct PeriodicFamily {
    pub orbits: Vec<PeriodicOrbit>,
    pub rho_tol: f64,
}

impl PeriodicFamily {
    fn converged(&self) -> impl Iterator<Item = &PeriodicOrbit> {
        self.orbits.iter().filter(|o| o.converged)
    }

    /// Smallest action among converged runs (all runs if none converged).
    pub fn rho_hat(&self) -> f64 {
        let pool: Vec<_> = if self.converged().next().is_some() {
            self.converged().collect()
        } else {
            self.orbits.iter().collect()
        };
        pool.iter().map(|o| o.rho_hat).fold(f64::INFINITY, f64::min)
    }

    /// Runs whose action is within `rho_tol` of the best.
    pub fn minimizers(&self) -> Vec<&PeriodicOrbit> {
        let rho = self.rho_hat();
        let mut out: Vec<_> = self
            .orbits
            .iter()
            .filter(|o| o.rho_hat <= rho + self.rho_tol)
            .collect();
        if out.iter().any(|o| o.converged) {
            out.retain(|o| o.converged);
        }
        out
    }

    /// Representative minimizer: the most symmetric one among ties.
    pub fn best(&self) -> &PeriodicOrbit {
        self.minimizers()
            .into_iter()
            .min_by(|a, b| {
                let da = reflection_defect(&a.traj);
                let db = reflection_defect(&b.traj);
                da.total_cmp(&db).then(a.rho_hat.total_cmp(&b.rho_hat))
            })
            .expect("family is non-empty")
    }

    /// Approximate `γ_max`: the minimizer with the largest value at `t = 0`.
    pub fn maximal(&self) -> &PeriodicOrbit {
        self.minimizers()
            .into_iter()
            .max_by(|a, b| a.traj.values[0].total_cmp(&b.traj.values[0]))
            .expect("family is non-empty")
    }

    /// Approximate `γ_min`: the minimizer with the smallest value at `t = 0`.
    pub fn minimal(&self) -> &PeriodicOrbit {
        self.minimizers()
            .into_iter()
            .min_by(|a, b| a.traj.values[0].total_cmp(&b.traj.values[0]))
            .expect("family is non-empty")
    }

    pub fn all_converged(&self) -> bool {
        self.orbits.iter().all(|o| o.converged)
    }
}

fn reflection_defect(traj: &Trajectory) -> f64 {
    let n = traj.grid.segments();
    (0..=n).fold(0.0, |m, j| {
        m.max((traj.values[j] - traj.values[n - j]).abs())
    })
}

/// Runs every seed amplitude of `opts`, in parallel.
pub fn multi_start(
    drive: &KeplerDrive,
    b: &PeriodicSymbols,
    opts: &PeriodicOptions,
) -> Result<PeriodicFamily> {
    opts.validate()?;
    let run = || -> Result<Vec<PeriodicOrbit>> {
        opts.seeds
            .par_iter()
            .map(|&y0| minimize_periodic_from(drive, b, y0, opts))
            .collect()
    };
    let orbits = if opts.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(run)?
    } else {
        run()?
    };
    Ok(PeriodicFamily {
        orbits,
        rho_tol: opts.tol.rho_tol,
    })
}

/// Minimizer cache keyed by symbol word and final resolution.
#[derive(Debug, Default)]
pub struct RhoCache {
    entries: Mutex<HashMap<(String, usize, usize), Arc<PeriodicFamily>>>,
}

impl RhoCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn family(
        &self,
        drive: &KeplerDrive,
        b: &PeriodicSymbols,
        opts: &PeriodicOptions,
    ) -> Result<Arc<PeriodicFamily>> {
        let key = (
            b.to_string(),
            opts.nodes_per_unit,
            opts.final_nodes_per_unit(),
        );
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let family = Arc::new(multi_start(drive, b, opts)?);
        self.entries
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| Arc::clone(&family));
        Ok(family)
    }

    /// `ρ̂(b)` at the final resolution of `opts`.
    pub fn rho(
        &self,
        drive: &KeplerDrive,
        b: &PeriodicSymbols,
        opts: &PeriodicOptions,
    ) -> Result<f64> {
        Ok(self.family(drive, b, opts)?.rho_hat())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `ρ̂(b)` without caching.
pub fn rho(drive: &KeplerDrive, b: &PeriodicSymbols, opts: &PeriodicOptions) -> Result<f64> {
    Ok(multi_start(drive, b, opts)?.rho_hat())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b8() -> PeriodicSymbols {
        "+++---++".parse().unwrap()
    }

    #[test]
    fn seed_is_admissible_and_periodic() {
        let b: PeriodicSymbols = "+++---".parse().unwrap();
        let grid = Grid::new(16, 0, 6).unwrap();
        let seed = seed_periodic(&b, grid, 0.5).unwrap();
        assert!(admissible(&seed, &b));
        assert_eq!(seed.values[0], seed.values[96]);
        for n in 0..3 {
            assert!(seed.at_integer(n).unwrap() > 0.0);
        }
        for n in 3..6 {
            assert!(seed.at_integer(n).unwrap() < 0.0);
        }
        assert!(seed_periodic(&b, Grid::new(16, 0, 5).unwrap(), 0.5).is_err());
    }

    #[test]
    fn converges_at_coarse_resolution() {
        let drive = KeplerDrive::new();
        let opts = PeriodicOptions {
            nodes_per_unit: 16,
            seeds: vec![0.5],
            ..Default::default()
        };
        let orbit = minimize_periodic_from(&drive, &b8(), 0.5, &opts).unwrap();
        assert!(orbit.converged, "grad {}", orbit.grad_norm);
        assert!(orbit.grad_norm <= 1e-10);
        assert!(orbit.rho_hat > 0.0);
        assert!(admissible(&orbit.traj, &b8()));
    }

    #[test]
    fn sign_flip_and_shift_preserve_rho() {
        let drive = KeplerDrive::new();
        let opts = PeriodicOptions {
            nodes_per_unit: 16,
            seeds: vec![0.5],
            ..Default::default()
        };
        let b = b8();
        let base = minimize_periodic_from(&drive, &b, 0.5, &opts).unwrap();
        let flipped = minimize_periodic_from(&drive, &b.flipped(), 0.5, &opts).unwrap();
        assert!((base.rho_hat - flipped.rho_hat).abs() < 1e-9);
        for (u, v) in base.traj.values.iter().zip(&flipped.traj.values) {
            assert!((u + v).abs() < 1e-6);
        }
        let shifted = minimize_periodic_from(&drive, &b.shifted(1), 0.5, &opts).unwrap();
        assert!((base.rho_hat - shifted.rho_hat).abs() < 1e-9);
        let m = 16;
        for i in 0..shifted.traj.grid.segments() as i64 {
            let u = base.value_at_node(i + m);
            assert!((u - shifted.value_at_node(i)).abs() < 1e-6);
        }
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let drive = KeplerDrive::new();
        let opts = PeriodicOptions {
            nodes_per_unit: 8,
            seeds: vec![1.0],
            ..Default::default()
        };
        let orbit = minimize_periodic_from(&drive, &b8(), 1.0, &opts).unwrap();
        let text = orbit.to_json().unwrap();
        let back = PeriodicOrbit::from_json(&text).unwrap();
        assert_eq!(back, orbit);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn cache_reuses_families() {
        let drive = KeplerDrive::new();
        let opts = PeriodicOptions {
            nodes_per_unit: 8,
            seeds: vec![0.5, 1.0],
            ..Default::default()
        };
        let cache = RhoCache::new();
        let a = cache.family(&drive, &b8(), &opts).unwrap();
        let b = cache.family(&drive, &b8(), &opts).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
        assert!(cache.rho(&drive, &b8(), &opts).unwrap() > 0.0);
    }

    #[test]
    fn rejects_inadmissible_seed() {
        let drive = KeplerDrive::new();
        let b = b8();
        let grid = Grid::new(8, 0, 8).unwrap();
        let seed = Trajectory::from_fn(grid, Bc::Periodic, |_| 1.0).unwrap();
        assert!(minimize_periodic_seeded(&drive, &b, seed, 1.0, &Default::default()).is_err());
    }
}
