//! Connecting orbits between two periodic minimizers.
//!
//! The renormalized functional `J(u) = Σ_p a_p(u)` with
//! `a_p(u) = A_{p,p+1}(u) - ρ(b^±)/N^±` is minimized over a finite window
//! whose ends are clamped to `γ⁻` and `γ⁺`. The window grows by one tail
//! period per side until the tails have settled onto the periodic orbits and
//! the windowed value of `J` has stopped changing.

use log::info;
use serde::{Deserialize, Serialize};

use crate::action::{admissible, Bc, DiscreteAction, Grid, Trajectory};
use crate::error::{Error, Result};
use crate::kepler::KeplerDrive;
use crate::periodic::{PeriodicOptions, PeriodicOrbit, PeriodicOrbitJson, RhoCache};
use crate::solve::{minimize_nodes, Layout};
use crate::symbolic::{ConnectionSpec, ConnectionSpecJson, PeriodicSymbols, Sign, Symbols};
use crate::verification::{self, ComparisonCheck, TailDecay};

pub const CONNECTING_KIND: &str = "connecting_orbit";

#[derive(Debug, Clone)]
pub struct ConnectionOptions {
    /// Resolution and tolerances; `γ±` are computed with these options and
    /// the connection is solved at their final resolution.
    pub periodic: PeriodicOptions,
    /// Tail periods on each side of `[K⁻, K⁺]` in the first window.
    pub initial_periods: usize,
}

impl Default for ConnectionOptions {
    fn default() -> Self {
        Self {
            periodic: PeriodicOptions::default(),
            initial_periods: 2,
        }
    }
}

impl ConnectionOptions {
    pub fn nodes_per_unit(&self) -> usize {
        self.periodic.final_nodes_per_unit()
    }

    pub fn validate(&self) -> Result<()> {
        self.periodic.validate()?;
        if self.initial_periods < 2 {
            return Err(Error::InvalidInput(
                "the first window needs at least two tail periods per side".into(),
            ));
        }
        Ok(())
    }
}

/// Which extreme of the minimizer set `N(b)` is used for a tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Maximal,
    Minimal,
    /// The defect sign does not select an extreme.
    Any,
}

/// Orientation rule at the defect `K`: maximal when `a_K = 1`, `b_K = -1`;
/// minimal when `a_K = -1`, `b_K = 1`.
pub fn orientation(a_k: Sign, b_k: Sign) -> Orientation {
    match (a_k, b_k) {
        (Sign::Plus, Sign::Minus) => Orientation::Maximal,
        (Sign::Minus, Sign::Plus) => Orientation::Minimal,
        _ => Orientation::Any,
    }
}

#[derive(Debug, Clone)]
pub struct ConnectionProblem {
    pub spec: ConnectionSpec,
    pub gamma_minus: PeriodicOrbit,
    pub gamma_plus: PeriodicOrbit,
    pub rho_minus: f64,
    pub rho_plus: f64,
    /// `[T⁻, T⁺]`, aligned to multiples of `N⁻` and `N⁺`.
    pub window: (i64, i64),
    pub nodes_per_unit: usize,
}

fn pick(family: &crate::periodic::PeriodicFamily, o: Orientation) -> &PeriodicOrbit {
    match o {
        Orientation::Maximal => family.maximal(),
        Orientation::Minimal => family.minimal(),
        Orientation::Any => family.best(),
    }
}

impl ConnectionProblem {
    pub fn new(
        drive: &KeplerDrive,
        spec: ConnectionSpec,
        opts: &ConnectionOptions,
        cache: &RhoCache,
    ) -> Result<Self> {
        opts.validate()?;
        let fam_minus = cache.family(drive, spec.b_minus(), &opts.periodic)?;
        let fam_plus = cache.family(drive, spec.b_plus(), &opts.periodic)?;
        for (name, fam) in [("b_minus", &fam_minus), ("b_plus", &fam_plus)] {
            if !fam.orbits.iter().any(|o| o.converged) {
                return Err(Error::NonConvergence(format!(
                    "no periodic minimizer converged for {name}"
                )));
            }
        }
        let (km, kp) = (spec.k_minus(), spec.k_plus());
        let o_minus = orientation(spec.sign_at(km), spec.b_minus().sign_at(km));
        let o_plus = orientation(spec.sign_at(kp), spec.b_plus().sign_at(kp));
        let gamma_minus = pick(&fam_minus, o_minus).clone();
        let gamma_plus = pick(&fam_plus, o_plus).clone();
        let (n_minus, n_plus) = (
            spec.b_minus().period() as i64,
            spec.b_plus().period() as i64,
        );
        let margin = opts.initial_periods as i64;
        // one extra unit so the seed can keep γ± up to K⁻ - 1 and from K⁺ + 1
        let t_minus = (km - 1 - margin * n_minus).div_euclid(n_minus) * n_minus;
        let t_plus = -((-(kp + 1 + margin * n_plus)).div_euclid(n_plus)) * n_plus;
        Ok(Self {
            rho_minus: fam_minus.rho_hat(),
            rho_plus: fam_plus.rho_hat(),
            spec,
            gamma_minus,
            gamma_plus,
            window: (t_minus, t_plus),
            nodes_per_unit: opts.nodes_per_unit(),
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nodes_per_unit, self.window.0, self.window.1)
    }

    /// Normalization `ρ(b^±)/N^±` of the unit interval `[p, p + 1]`.
    pub fn normalization(&self, p: i64) -> f64 {
        if p >= 0 {
            self.rho_plus / self.spec.b_plus().period() as f64
        } else {
            self.rho_minus / self.spec.b_minus().period() as f64
        }
    }

    /// `a_p(u)`.
    pub fn defect(&self, drive: &KeplerDrive, u: &Trajectory, p: i64) -> Result<f64> {
        if p < u.grid.t_start() || p + 1 > u.grid.t_end() {
            return Err(Error::InvalidInput(format!(
                "interval [{p}, {}] outside the trajectory",
                p + 1
            )));
        }
        let action = DiscreteAction::new(drive, u.grid);
        Ok(action.unit_action(&u.values, p) - self.normalization(p))
    }

    pub fn defects(&self, drive: &KeplerDrive, u: &Trajectory) -> Vec<(i64, f64)> {
        let action = DiscreteAction::new(drive, u.grid);
        (u.grid.t_start()..u.grid.t_end())
            .map(|p| (p, action.unit_action(&u.values, p) - self.normalization(p)))
            .collect()
    }

    /// `Σ a_p(u)` over the span of `u`.
    pub fn j_windowed(&self, drive: &KeplerDrive, u: &Trajectory) -> Result<f64> {
        let action = DiscreteAction::new(drive, u.grid);
        action.value(&u.values)?;
        Ok(self.defects(drive, u).iter().map(|(_, a)| a).sum())
    }

    fn gamma_values(&self, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            self.gamma_minus.sample_on(grid)?,
            self.gamma_plus.sample_on(grid)?,
        ))
    }

    /// `γ⁻` for `t ≤ K⁻ - 1`, `γ⁺` for `t ≥ K⁺ + 1`, and a cubic blend
    /// through `a_n · |γ|` at the integers in between.
    pub fn seed(&self) -> Result<Trajectory> {
        let grid = self.grid()?;
        let (gm, gp) = self.gamma_values(&grid)?;
        let m = grid.nodes_per_unit();
        let (km, kp) = (self.spec.k_minus(), self.spec.k_plus());
        let node = |n: i64| ((n - grid.t_start()) as usize) * m;
        let anchor = |n: i64| -> f64 {
            if n < km {
                gm[node(n)]
            } else if n > kp {
                gp[node(n)]
            } else {
                let amp = 0.5 * (gm[node(n)].abs() + gp[node(n)].abs());
                self.spec.sign_at(n).value() * amp
            }
        };
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let t = grid.time(i);
                if t <= (km - 1) as f64 {
                    gm[i]
                } else if t >= (kp + 1) as f64 {
                    gp[i]
                } else {
                    let n = grid.t_start() + (i / m) as i64;
                    let theta = (i % m) as f64 / m as f64;
                    let (lo, hi) = (anchor(n), anchor(n + 1));
                    lo + (hi - lo) * theta * theta * (3.0 - 2.0 * theta)
                }
            })
            .collect();
        let last = grid.segments();
        let bc = Bc::FixedEnds {
            left: values[0],
            right: values[last],
        };
        Trajectory::new(grid, values, bc)
    }

    /// Extends `u` by `periods` tail periods per side with `γ±` samples.
    fn extended(&self, u: &Trajectory, periods: i64) -> Result<Trajectory> {
        let (n_minus, n_plus) = (
            self.spec.b_minus().period() as i64,
            self.spec.b_plus().period() as i64,
        );
        let grid = u.grid.with_span(
            u.grid.t_start() - periods * n_minus,
            u.grid.t_end() + periods * n_plus,
        )?;
        let (gm, gp) = self.gamma_values(&grid)?;
        let m = grid.nodes_per_unit();
        let left = (periods * n_minus) as usize * m;
        let mut values = gm[..left].to_vec();
        values.extend_from_slice(&u.values);
        values.extend_from_slice(&gp[left + u.values.len()..]);
        let last = grid.segments();
        let bc = Bc::FixedEnds {
            left: values[0],
            right: values[last],
        };
        Trajectory::new(grid, values, bc)
    }

    /// Per-interval `L²` distance of `u` to `γ⁻` left of `K⁻` and to `γ⁺`
    /// from `K⁺` on.
    pub fn tail_decay(&self, u: &Trajectory) -> Result<TailDecay> {
        let grid = u.grid;
        let (gm, gp) = self.gamma_values(&grid)?;
        let m = grid.nodes_per_unit();
        let h = grid.step();
        let dist = |gamma: &[f64], p: i64| -> f64 {
            let lo = (p - grid.t_start()) as usize * m;
            let sq: f64 = (lo..lo + m)
                .map(|i| {
                    let (a, b) = (u.values[i] - gamma[i], u.values[i + 1] - gamma[i + 1]);
                    0.5 * h * (a * a + b * b)
                })
                .sum();
            sq.sqrt()
        };
        let (km, kp) = (self.spec.k_minus(), self.spec.k_plus());
        let left: Vec<(i64, f64)> = (grid.t_start()..km.min(grid.t_end()))
            .rev()
            .map(|p| (p, dist(&gm, p)))
            .collect();
        let right: Vec<(i64, f64)> = (kp.max(grid.t_start())..grid.t_end())
            .map(|p| (p, dist(&gp, p)))
            .collect();
        let outer = |v: &[(i64, f64)], width: i64| -> f64 {
            let n = v.len().saturating_sub(width as usize);
            v[n..].iter().fold(0.0, |m, (_, r)| m.max(*r))
        };
        Ok(TailDecay {
            left_max_outer: outer(&left, 2 * self.spec.b_minus().period() as i64),
            right_max_outer: outer(&right, 2 * self.spec.b_plus().period() as i64),
            left,
            right,
        })
    }

    /// Nodal comparison of `u` with `γ⁺` on `[K⁺, T⁺]`, when `a_{K⁺} ≠ b⁺_{K⁺}`.
    ///
    /// The signs at `K⁺` differ, so `u - γ⁺` has the sign of `a_{K⁺}` there;
    /// a crossing later on would let the tail be replaced by `γ⁺` without
    /// raising `J`.
    pub fn comparison(&self, u: &Trajectory) -> Result<Option<ComparisonCheck>> {
        let kp = self.spec.k_plus();
        let a = self.spec.sign_at(kp);
        if a == self.spec.b_plus().sign_at(kp) {
            return Ok(None);
        }
        let grid = u.grid;
        let gp = self.gamma_plus.sample_on(&grid)?;
        let start = grid
            .node_of(kp)
            .ok_or_else(|| Error::InvalidInput(format!("K⁺ = {kp} outside the trajectory")))?;
        let s = a.value();
        let min_margin = (start..grid.len())
            .map(|i| s * (u.values[i] - gp[i]))
            .fold(f64::INFINITY, f64::min);
        Ok(Some(ComparisonCheck {
            expected_sign: s,
            min_margin,
            upper_case: a == Sign::Plus,
        }))
    }

    /// Window-extension loop.
    pub fn solve(&self, drive: &KeplerDrive, opts: &ConnectionOptions) -> Result<ConnectingOrbit> {
        opts.validate()?;
        let tol = &opts.periodic.tol;
        let mut u = self.seed()?;
        if !admissible(&u, &self.spec) {
            return Err(Error::InvalidInput(
                "connection seed is not admissible".into(),
            ));
        }
        let seed_j = self.j_windowed(drive, &u)?;
        let mut log = Vec::new();
        let mut previous: Option<f64> = None;
        let mut converged = false;
        let mut last = None;
        for extension in 0..=tol.max_windows {
            if extension > 0 {
                u = self.extended(&u, 1)?;
            }
            let action = DiscreteAction::new(drive, u.grid);
            let layout = Layout {
                free: u.free_range(),
                periodic: false,
            };
            let out = minimize_nodes(&action, &self.spec, &layout, &u.values, tol);
            u.values = out.values;
            let j_hat = self.j_windowed(drive, &u)?;
            let tails = self.tail_decay(&u)?;
            let j_change = previous.map(|p| (j_hat - p).abs());
            let entry = WindowLog {
                window: (u.grid.t_start(), u.grid.t_end()),
                j_hat,
                j_change,
                grad_sup: out.grad_sup,
                tail_left: tails.left_max_outer,
                tail_right: tails.right_max_outer,
                iterations: out.iterations,
                penalty_restart: out.penalty_restart,
            };
            info!(
                "window [{}, {}]: J {:.12} grad {:.2e} tails {:.2e}/{:.2e}",
                entry.window.0,
                entry.window.1,
                j_hat,
                out.grad_sup,
                tails.left_max_outer,
                tails.right_max_outer
            );
            log.push(entry);
            previous = Some(j_hat);
            let tails_ok =
                tails.left_max_outer <= tol.tail_tol && tails.right_max_outer <= tol.tail_tol;
            let j_ok = j_change.is_some_and(|c| c <= tol.j_tol);
            last = Some((j_hat, out.grad_sup, out.converged, tails));
            if tails_ok && j_ok && out.converged {
                converged = true;
                break;
            }
        }
        let (j_hat, grad_sup, _, tails) = last.expect("at least one window");
        let el_residual = verification::el_residual(drive, &u);
        Ok(ConnectingOrbit {
            spec: self.spec.clone(),
            defects: self.defects(drive, &u),
            traj: u,
            j_hat,
            seed_j,
            grad_sup,
            tail_residuals: tails,
            el_residual,
            converged,
            log,
            gamma_minus: self.gamma_minus.clone(),
            gamma_plus: self.gamma_plus.clone(),
            rho_minus: self.rho_minus,
            rho_plus: self.rho_plus,
        })
    }

    /// Problem with the same tails for an existing orbit.
    pub fn for_orbit(orbit: &ConnectingOrbit) -> Self {
        Self {
            spec: orbit.spec.clone(),
            gamma_minus: orbit.gamma_minus.clone(),
            gamma_plus: orbit.gamma_plus.clone(),
            rho_minus: orbit.rho_minus,
            rho_plus: orbit.rho_plus,
            window: (orbit.traj.grid.t_start(), orbit.traj.grid.t_end()),
            nodes_per_unit: orbit.traj.grid.nodes_per_unit(),
        }
    }
}

/// One pass of the window-extension loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowLog {
    pub window: (i64, i64),
    pub j_hat: f64,
    pub j_change: Option<f64>,
    pub grad_sup: f64,
    pub tail_left: f64,
    pub tail_right: f64,
    pub iterations: usize,
    pub penalty_restart: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectingOrbit {
    pub spec: ConnectionSpec,
    /// Clamped trajectory on the final window.
    pub traj: Trajectory,
    pub j_hat: f64,
    /// Windowed `J` of the first seed.
    pub seed_j: f64,
    pub grad_sup: f64,
    /// `(p, a_p)` for every unit interval of the window.
    pub defects: Vec<(i64, f64)>,
    pub tail_residuals: TailDecay,
    pub el_residual: f64,
    pub converged: bool,
    pub log: Vec<WindowLog>,
    pub gamma_minus: PeriodicOrbit,
    pub gamma_plus: PeriodicOrbit,
    pub rho_minus: f64,
    pub rho_plus: f64,
}

/// On-disk form of [`ConnectingOrbit`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectingOrbitJson {
    pub kind: String,
    pub spec: ConnectionSpecJson,
    pub window: (i64, i64),
    pub j_hat: f64,
    pub seed_j: f64,
    pub grad_sup: f64,
    pub el_residual: f64,
    pub converged: bool,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub defects: Vec<(i64, f64)>,
    pub tail_residuals: TailDecay,
    pub log: Vec<WindowLog>,
    pub trajectory: Trajectory,
    pub gamma_minus: PeriodicOrbitJson,
    pub gamma_plus: PeriodicOrbitJson,
}

impl ConnectingOrbit {
    pub fn window(&self) -> (i64, i64) {
        (self.traj.grid.t_start(), self.traj.grid.t_end())
    }

    pub fn to_json_value(&self) -> ConnectingOrbitJson {
        ConnectingOrbitJson {
            kind: CONNECTING_KIND.into(),
            spec: self.spec.to_json_value(),
            window: self.window(),
            j_hat: self.j_hat,
            seed_j: self.seed_j,
            grad_sup: self.grad_sup,
            el_residual: self.el_residual,
            converged: self.converged,
            rho_minus: self.rho_minus,
            rho_plus: self.rho_plus,
            defects: self.defects.clone(),
            tail_residuals: self.tail_residuals.clone(),
            log: self.log.clone(),
            trajectory: self.traj.clone(),
            gamma_minus: self.gamma_minus.to_json_value(),
            gamma_plus: self.gamma_plus.to_json_value(),
        }
    }

    pub fn from_json_value(raw: ConnectingOrbitJson) -> Result<Self> {
        if raw.kind != CONNECTING_KIND {
            return Err(Error::InvalidInput(format!(
                "expected kind {CONNECTING_KIND:?}, found {:?}",
                raw.kind
            )));
        }
        let spec = ConnectionSpec::from_json_value(raw.spec)?;
        let t = raw.trajectory;
        let traj = Trajectory::new(t.grid, t.values, t.bc)?;
        if !matches!(traj.bc, Bc::FixedEnds { .. })
            || raw.window != (traj.grid.t_start(), traj.grid.t_end())
        {
            return Err(Error::InvalidInput(
                "connecting orbit must be a clamped trajectory on its window".into(),
            ));
        }
        let gamma_minus = PeriodicOrbit::from_json_value(raw.gamma_minus)?;
        let gamma_plus = PeriodicOrbit::from_json_value(raw.gamma_plus)?;
        check_tail(&gamma_minus, spec.b_minus(), "gamma_minus")?;
        check_tail(&gamma_plus, spec.b_plus(), "gamma_plus")?;
        Ok(Self {
            spec,
            traj,
            j_hat: raw.j_hat,
            seed_j: raw.seed_j,
            grad_sup: raw.grad_sup,
            defects: raw.defects,
            tail_residuals: raw.tail_residuals,
            el_residual: raw.el_residual,
            converged: raw.converged,
            log: raw.log,
            gamma_minus,
            gamma_plus,
            rho_minus: raw.rho_minus,
            rho_plus: raw.rho_plus,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json_value())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_value(serde_json::from_str(text)?)
    }
}

fn check_tail(gamma: &PeriodicOrbit, b: &PeriodicSymbols, name: &str) -> Result<()> {
    if &gamma.symbols != b {
        return Err(Error::InvalidInput(format!(
            "{name} has symbols {}, the spec says {b}",
            gamma.symbols
        )));
    }
    Ok(())
}

/// Builds the problem and runs the window loop.
pub fn minimize_connection(
    drive: &KeplerDrive,
    spec: ConnectionSpec,
    opts: &ConnectionOptions,
    cache: &RhoCache,
) -> Result<ConnectingOrbit> {
    ConnectionProblem::new(drive, spec, opts, cache)?.solve(drive, opts)
}

/// Tail residuals recomputed from the trajectory.
pub fn tail_decay(orbit: &ConnectingOrbit) -> Result<TailDecay> {
    ConnectionProblem::for_orbit(orbit).tail_decay(&orbit.traj)
}

/// Comparison with `γ⁺` recomputed from the trajectory.
pub fn comparison_check(orbit: &ConnectingOrbit) -> Result<Option<ComparisonCheck>> {
    ConnectionProblem::for_orbit(orbit).comparison(&orbit.traj)
}
