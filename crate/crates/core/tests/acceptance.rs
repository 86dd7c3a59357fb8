//! Acceptance criteria, one printed verdict per criterion.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see
//! the report.

use std::f64::consts::PI;
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sitnikov::action::admissible;
use sitnikov::connection::ConnectionProblem;
use sitnikov::periodic::{multi_start, PeriodicFamily};
use sitnikov::symbolic::Symbols;
use sitnikov::verification::{self, zero_crossings};
use sitnikov::{
    Bc, ConnectingOrbit, ConnectionOptions, ConnectionSpec, DiscreteAction, Grid, KeplerDrive,
    PeriodicOptions, PeriodicSymbols, RhoCache, Tolerances, Trajectory,
};

const MU: f64 = 0.125;

struct Verdict {
    id: usize,
    pass: bool,
    detail: String,
}

fn report(v: &Verdict) {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!("criterion {} [{tag}] {}", v.id, v.detail);
}

fn word(s: &str) -> PeriodicSymbols {
    s.parse().unwrap()
}

// ---------------------------------------------------------------- 1

/// RK4 for `ẍ = -mu/x²`.
fn rk4(x: f64, v: f64, dt: f64) -> (f64, f64) {
    let acc = |x: f64| -MU / (x * x);
    let (k1x, k1v) = (v, acc(x));
    let (k2x, k2v) = (v + 0.5 * dt * k1v, acc(x + 0.5 * dt * k1x));
    let (k3x, k3v) = (v + 0.5 * dt * k2v, acc(x + 0.5 * dt * k2x));
    let (k4x, k4v) = (v + dt * k3v, acc(x + dt * k3x));
    (
        x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

fn criterion_kepler() -> Verdict {
    let drive = KeplerDrive::new();
    let mut detail = String::new();
    let mut pass = true;

    let period_res = drive.period_equation_residual();
    let mut kepler_res: f64 = 0.0;
    for i in 0..20_000 {
        let tau = i as f64 / 20_000.0;
        let e = drive.solve_radial_kepler(tau).unwrap();
        // residual in the form that is exact for small E
        let lhs = if e < 1.0 {
            let e2 = e * e;
            let (mut term, mut sum, mut k) = (e * e2 / 6.0, 0.0, 1.0);
            while term.abs() > 1e-20 {
                sum += term;
                term *= -e2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
                k += 1.0;
            }
            sum
        } else {
            e - e.sin()
        };
        kepler_res = kepler_res.max((lhs - 2.0 * PI * tau).abs());
    }
    pass &= period_res <= 1e-14 && kepler_res <= 1e-14;
    let _ = write!(
        detail,
        "period eq {period_res:.1e}, anomaly {kepler_res:.1e}; "
    );

    let zeros = (-5..=5).all(|n| drive.x(n as f64) == 0.0);
    pass &= zeros;
    let _ = write!(detail, "x(n) = 0: {zeros}; ");

    // oracle: integrate from the apex x = 2a, ẋ = 0 and time the fall
    let a = (1.0 / (32.0 * PI * PI)).cbrt();
    let apex = drive.x(0.5);
    let c = (4.5 * MU).cbrt();
    let (mut x, mut v, mut t) = (2.0 * a, 0.0, 0.5);
    let mut max_dev: f64 = 0.0;
    let mut steps = 0u64;
    while x > 1e-2 {
        let (nx, nv) = rk4(x, v, 1e-6);
        x = nx;
        v = nv;
        steps += 1;
        t = 0.5 + steps as f64 * 1e-6;
        if steps.is_multiple_of(10_000) {
            max_dev = max_dev.max((x - drive.x(t)).abs());
        }
    }
    // near the collision, steps shrink with the remaining time
    while x > 1e-6 {
        let dt = 1e-4 * (x / c).powf(1.5);
        let (nx, nv) = rk4(x, v, dt);
        x = nx;
        v = nv;
        t += dt;
    }
    // the rest follows the collision asymptotics x ≈ c (t_c - t)^{2/3}
    let t_collision = t + (x / c).powf(1.5);
    let apex_err = (apex - 2.0 * a).abs() / (2.0 * a);
    let half_period_err = (t_collision - 1.0).abs();
    pass &= apex_err <= 1e-14 && half_period_err <= 1e-6 && max_dev <= 1e-8;
    let _ = write!(
        detail,
        "apex rel err {apex_err:.1e}, oracle collision at {t_collision:.9} (|Δ| {half_period_err:.1e}), oracle vs x(t) {max_dev:.1e}; "
    );

    // ODE residual by centered differences away from collisions
    let h = 1e-5;
    let mut ode: f64 = 0.0;
    for k in 0..=998 {
        let t = 1e-3 + k as f64 * 1e-3;
        let xm = drive.x(t - h);
        let x0 = drive.x(t);
        let xp = drive.x(t + h);
        let second = (xp - 2.0 * x0 + xm) / (h * h);
        let rhs = -MU / (x0 * x0);
        ode = ode.max(((second - rhs) / rhs).abs());
    }
    pass &= ode <= 1e-4;
    let _ = write!(detail, "ODE rel residual {ode:.1e}");
    Verdict {
        id: 1,
        pass,
        detail,
    }
}

// ---------------------------------------------------------------- 2

/// Independent evaluation of the two segments touching node `i`.
fn local_action(drive: &KeplerDrive, grid: &Grid, values: &[f64], i: usize, periodic: bool) -> f64 {
    let n = grid.segments();
    let h = grid.step();
    let v = |j: usize| {
        let t = grid.t_start() as f64 + j as f64 / grid.nodes_per_unit() as f64;
        let x = drive.x(t);
        1.0 / (x * x + values[j] * values[j]).sqrt()
    };
    let seg = |j: usize| {
        let d = values[j + 1] - values[j];
        d * d / (2.0 * h) + 0.5 * h * (v(j) + v(j + 1))
    };
    let mut s = 0.0;
    if i > 0 {
        s += seg(i - 1);
    }
    if i < n {
        s += seg(i);
    }
    if periodic && i == 0 {
        s += seg(n - 1);
    }
    s
}

fn random_trajectory(rng: &mut ChaCha8Rng, m: usize, periodic: bool) -> Trajectory {
    let units = 8;
    let grid = Grid::new(m, 0, units).unwrap();
    let signs: Vec<f64> = (0..=units)
        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let amps: Vec<f64> = (0..=units).map(|_| rng.gen_range(0.2..2.0)).collect();
    let modes: Vec<(f64, f64)> = (1..=3)
        .map(|k| {
            (
                rng.gen_range(-0.3..0.3) / k as f64,
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let bc = if periodic { Bc::Periodic } else { Bc::Free };
    Trajectory::from_fn(grid, bc, |t| {
        let k = (t.floor() as usize).min(units as usize - 1);
        let th = t - k as f64;
        let lo = signs[k] * amps[k];
        let hi = signs[k + 1] * amps[k + 1];
        let mut y = lo + (hi - lo) * th * th * (3.0 - 2.0 * th);
        for (j, (c, ph)) in modes.iter().enumerate() {
            y += c
                * ((j + 1) as f64 * PI * t / units as f64 * 2.0 + ph).sin()
                * (PI * t).sin().powi(2);
        }
        y
    })
    .unwrap()
}

fn criterion_gradient() -> Verdict {
    let drive = KeplerDrive::new();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for m in [16, 64, 256] {
        let mut worst_m: f64 = 0.0;
        for k in 0..20 {
            let periodic = k % 2 == 1;
            let traj = random_trajectory(&mut rng, m, periodic);
            let action = DiscreteAction::new(&drive, traj.grid);
            let g = action.gradient(&traj).unwrap();
            let n = traj.grid.segments();
            let nodes = if periodic { 0..n } else { 0..n + 1 };
            for i in nodes {
                let eps = 1e-4 * traj.values[i].abs().max(0.1);
                let at = |d: f64| {
                    let mut v = traj.values.clone();
                    v[i] += d;
                    if periodic && i == 0 {
                        v[n] = v[0];
                    }
                    local_action(&drive, &traj.grid, &v, i, periodic)
                };
                // fourth-order central difference
                let fd =
                    (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
                let scale = g[i].abs().max(fd.abs()).max(1e-12);
                worst_m = worst_m.max((g[i] - fd).abs() / scale);
            }
        }
        let _ = write!(detail, "M = {m}: max rel err {worst_m:.1e}; ");
        worst = worst.max(worst_m);
    }
    Verdict {
        id: 2,
        pass: worst <= 1e-6,
        detail: detail.trim_end_matches("; ").to_string(),
    }
}

// ---------------------------------------------------------------- 3

fn periodic_opts(m: usize) -> PeriodicOptions {
    PeriodicOptions {
        nodes_per_unit: m,
        ..Default::default()
    }
}

fn criterion_periodic() -> Verdict {
    let drive = KeplerDrive::new();
    let b = word("+++---++");
    let opts = PeriodicOptions {
        nodes_per_unit: 64,
        refine: 2,
        ..Default::default()
    };
    let family = multi_start(&drive, &b, &opts).unwrap();
    let orbit = family.best();
    let mut pass = orbit.converged && orbit.traj.grid.nodes_per_unit() == 256;
    let mut detail = format!("M = 256: grad {:.1e}; ", orbit.grad_norm);
    pass &= orbit.grad_norm <= 1e-10;

    let residuals: Vec<(usize, f64)> = [32, 64, 128, 256, 512]
        .into_iter()
        .map(|m| {
            let o = multi_start(&drive, &b, &periodic_opts(m)).unwrap();
            (m, verification::el_residual(&drive, &o.best().traj))
        })
        .collect();
    let orders: Vec<f64> = residuals
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).log2())
        .collect();
    let decreasing = residuals.windows(2).all(|w| w[1].1 < w[0].1);
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    pass &= decreasing && min_order >= 1.0;
    let _ = write!(
        detail,
        "EL residual {} (orders {}); ",
        residuals
            .iter()
            .map(|(m, r)| format!("{m}:{r:.2e}"))
            .collect::<Vec<_>>()
            .join(" "),
        orders
            .iter()
            .map(|o| format!("{o:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    );

    let crossings = zero_crossings(&orbit.traj);
    let mismatches = crossings.mismatches(&b);
    let expected: Vec<i64> = (0..8)
        .filter(|&n| b.sign_at(n) != b.sign_at(n + 1))
        .collect();
    let found: Vec<i64> = crossings
        .counts
        .iter()
        .filter(|(_, c)| *c > 0)
        .map(|(n, _)| *n)
        .collect();
    pass &= mismatches.is_empty() && crossings.node_hits.is_empty() && found == expected;
    let _ = write!(detail, "crossings in intervals starting at {found:?}; ");

    let sym = verification::symmetry_defect(orbit).unwrap();
    pass &= sym <= 1e-6;
    let _ = write!(detail, "symmetry defect {sym:.1e}");
    Verdict {
        id: 3,
        pass,
        detail,
    }
}

// ---------------------------------------------------------------- 4

fn criterion_scaling() -> Verdict {
    let drive = KeplerDrive::new();
    let b = word("+++---++");
    let check = verification::scaling_check(&drive, &b, 2, &periodic_opts(256)).unwrap();
    let pass = check.defect <= 2e-8 && check.periodicity_defect <= 1e-6;
    Verdict {
        id: 4,
        pass,
        detail: format!(
            "rho(b) = {:.12}, rho(2b) = {:.12}, defect {:.1e}, N-periodicity defect {:.1e}",
            check.rho, check.rho_k, check.defect, check.periodicity_defect
        ),
    }
}

// ---------------------------------------------------------------- 5

fn criterion_lower_bound() -> Verdict {
    let drive = KeplerDrive::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pass = true;
    let mut detail = String::new();
    for s in ["+++---++", "++---+"] {
        let b = word(s);
        let family = multi_start(&drive, &b, &periodic_opts(64)).unwrap();
        let orbit = family.best();
        let (violations, gap) =
            verification::lower_bound_violations(&drive, orbit, 1000, 1e-6, &mut rng).unwrap();
        pass &= violations == 0 && orbit.converged;
        let _ = write!(
            detail,
            "{s}: {violations}/1000 below rho - 1e-6 (min gap {gap:.1e}); "
        );
    }
    Verdict {
        id: 5,
        pass,
        detail: detail.trim_end_matches("; ").to_string(),
    }
}

// ---------------------------------------------------------------- 6, 7

struct ConnectionRun {
    orbit: ConnectingOrbit,
    problem: ConnectionProblem,
}

fn connect(spec: ConnectionSpec, cache: &RhoCache) -> ConnectionRun {
    let drive = KeplerDrive::new();
    let opts = ConnectionOptions::default();
    let problem = ConnectionProblem::new(&drive, spec, &opts, cache).unwrap();
    let orbit = problem.solve(&drive, &opts).unwrap();
    ConnectionRun { orbit, problem }
}

fn connection_contract(run: &ConnectionRun, detail: &mut String) -> bool {
    let o = &run.orbit;
    let t = &o.tail_residuals;
    let crossings = zero_crossings(&o.traj);
    let crossing_ok = crossings.mismatches(&o.spec).is_empty() && crossings.node_hits.is_empty();
    let tails_ok = t.left_max_outer <= 1e-6 && t.right_max_outer <= 1e-6;
    let windows = o.log.len() - 1;
    let _ = write!(
        detail,
        "converged {} after {windows} extensions, window {:?}, J {:.10}, tails {:.1e}/{:.1e}, crossings ok {crossing_ok}, grad {:.1e}",
        o.converged,
        o.window(),
        o.j_hat,
        t.left_max_outer,
        t.right_max_outer,
        o.grad_sup
    );
    o.converged
        && windows <= 20
        && tails_ok
        && crossing_ok
        && admissible(&o.traj, &o.spec)
        && o.grad_sup <= 1e-10
}

fn criterion_homoclinic(cache: &RhoCache) -> Verdict {
    let b = word("+++---++");
    // one extra "---" block between two copies of the tail
    let spec =
        ConnectionSpec::new(b.clone(), b.clone(), "---+++---+++---".parse().unwrap(), 9).unwrap();
    let run = connect(spec, cache);
    let mut detail = String::new();
    let mut pass = connection_contract(&run, &mut detail);

    // the same sequence with all signs flipped has a_{K⁺} = 1, b⁺_{K⁺} = -1
    let flipped = ConnectionSpec::new(
        b.flipped(),
        b.flipped(),
        "+++---+++---+++".parse().unwrap(),
        9,
    )
    .unwrap();
    let run_flipped = connect(flipped, cache);
    let mut ignored = String::new();
    pass &= connection_contract(&run_flipped, &mut ignored);
    for (name, r) in [("original", &run), ("flipped", &run_flipped)] {
        let c = r
            .problem
            .comparison(&r.orbit.traj)
            .unwrap()
            .expect("signs differ at K+");
        let rel = if c.expected_sign > 0.0 { ">" } else { "<" };
        pass &= c.min_margin >= -sitnikov::tolerances::ORDER_TOL;
        let _ = write!(
            detail,
            "; {name}: a_K+ = {:+}, y* {rel} gamma+ on [K+, T+] with min margin {:.1e}",
            c.expected_sign as i64, c.min_margin
        );
    }
    Verdict {
        id: 6,
        pass,
        detail,
    }
}

fn criterion_heteroclinic(cache: &RhoCache) -> Verdict {
    let spec =
        ConnectionSpec::new(word("+++---++"), word("++---+"), "++".parse().unwrap(), 0).unwrap();
    let run = connect(spec, cache);
    let mut detail = String::new();
    let mut pass = connection_contract(&run, &mut detail);
    // each tail approaches its own periodic orbit, not the other one
    let o = &run.orbit;
    let first = o.tail_residuals.left.first().map_or(f64::NAN, |x| x.1);
    let last = o.tail_residuals.right.first().map_or(f64::NAN, |x| x.1);
    let distinct = run.problem.gamma_minus.symbols != run.problem.gamma_plus.symbols;
    pass &= distinct && first.is_finite() && last.is_finite();
    let _ = write!(
        detail,
        "; gamma- period {}, gamma+ period {}",
        o.spec.b_minus().period(),
        o.spec.b_plus().period()
    );
    Verdict {
        id: 7,
        pass,
        detail,
    }
}

// ---------------------------------------------------------------- 8

fn criterion_mutation(cache: &RhoCache) -> Verdict {
    let drive = KeplerDrive::new();
    let tol = Tolerances::default();
    let b = word("+++---++");
    let family: std::sync::Arc<PeriodicFamily> =
        cache.family(&drive, &b, &periodic_opts(64)).unwrap();
    let orbit = family.best().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let clean = verification::verify_periodic(&drive, &orbit, &tol, 100, &mut rng).unwrap();
    let mut pass = clean.passed();
    let mut caught = 0;
    let mut tried = 0;
    let n = orbit.traj.grid.segments();
    for i in [0, 64, 100, 150, 191, 300, 448, n - 1] {
        let mut bad = orbit.clone();
        bad.traj.values[i] = -bad.traj.values[i];
        if i == 0 {
            bad.traj.values[n] = bad.traj.values[0];
        }
        tried += 1;
        let r = verification::verify_periodic(&drive, &bad, &tol, 100, &mut rng).unwrap();
        if !r.passed() {
            caught += 1;
        }
    }

    let spec =
        ConnectionSpec::new(b.clone(), b.clone(), "---+++---+++---".parse().unwrap(), 9).unwrap();
    let run = connect(spec, cache);
    let clean_conn = verification::verify_connection(&drive, &run.orbit, &tol).unwrap();
    pass &= clean_conn.passed();
    let len = run.orbit.traj.values.len();
    for i in [1, len / 3, len / 2, len - 2] {
        let mut bad = run.orbit.clone();
        bad.traj.values[i] = -bad.traj.values[i];
        tried += 1;
        let r = verification::verify_connection(&drive, &bad, &tol).unwrap();
        if !r.passed() {
            caught += 1;
        }
    }
    pass &= caught == tried;
    Verdict {
        id: 8,
        pass,
        detail: format!(
            "clean orbits pass ({} / {}); {caught}/{tried} single-node sign flips detected",
            clean.passed(),
            clean_conn.passed()
        ),
    }
}

#[test]
fn acceptance() {
    let cache = RhoCache::new();
    let verdicts = vec![
        criterion_kepler(),
        criterion_gradient(),
        criterion_periodic(),
        criterion_scaling(),
        criterion_lower_bound(),
        criterion_homoclinic(&cache),
        criterion_heteroclinic(&cache),
        criterion_mutation(&cache),
    ];
    for v in &verdicts {
        report(v);
    }
    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
