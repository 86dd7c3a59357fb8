use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use sitnikov::connection::ConnectionProblem;
use sitnikov::export::{self, Series};
use sitnikov::periodic::{self, PeriodicOrbit};
use sitnikov::verification::{self, VerificationReport};
use sitnikov::{
    ConnectingOrbit, ConnectionOptions, ConnectionSpec, Error, KeplerDrive, PeriodicOptions,
    PeriodicSymbols, RhoCache, Tolerances,
};

mod output;

use output::{read_text, write_atomic};

const EXIT_VALIDATION: u8 = 2;
const EXIT_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sitnikov",
    version,
    about = "Variational orbits of the planar Sitnikov problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the primaries' height x(t) and velocity as CSV.
    SampleX {
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize the action over the periodic class of a symbol word.
    Periodic {
        #[arg(long)]
        symbols: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "orbit.json")]
        out: PathBuf,
        /// Also write an SVG plot of the orbit.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Also write the trajectory as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compute a connecting orbit for a spec file.
    Connect {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = sitnikov::tolerances::TAIL_TOL)]
        tail_tol: f64,
        #[arg(long, default_value_t = sitnikov::tolerances::J_TOL)]
        j_tol: f64,
        #[arg(long, default_value_t = sitnikov::tolerances::MAX_WINDOWS)]
        max_windows: usize,
        #[arg(long, default_value = "conn.json")]
        out: PathBuf,
        /// SVG overlay of the orbit and both periodic tails.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Check a stored orbit; exit 0 iff every applicable check passes.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Spec the connecting orbit must have been computed for.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Random admissible samples for the lower-bound check.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Seed of the sampling generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also check ρ(kb) = kρ(b) for this k (re-solves).
        #[arg(long)]
        scaling: Option<usize>,
        /// Also compare the minimizers of a fresh multi-start.
        #[arg(long)]
        ordering: bool,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Print the minimal periodic action for a symbol word.
    Rho {
        #[arg(long)]
        symbols: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Nodes per unit time of the first grid.
    #[arg(long, default_value_t = 64)]
    nodes: usize,
    /// Grid doublings after the first solve.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    /// Comma-separated seed amplitudes for multi-start.
    #[arg(long, value_delimiter = ',', default_values_t = periodic::DEFAULT_SEEDS)]
    seeds: Vec<f64>,
    #[arg(long, default_value_t = sitnikov::tolerances::GRAD_TOL)]
    grad_tol: f64,
    #[arg(long, default_value_t = sitnikov::tolerances::RHO_TOL)]
    rho_tol: f64,
    #[arg(long, default_value_t = sitnikov::tolerances::MAX_ITER)]
    max_iter: usize,
    /// Worker threads for multi-start (0: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl SolverArgs {
    fn options(&self, tol: Tolerances) -> Result<PeriodicOptions> {
        let opts = PeriodicOptions {
            nodes_per_unit: self.nodes,
            refine: self.refine,
            seeds: self.seeds.clone(),
            tol: Tolerances {
                grad_tol: self.grad_tol,
                rho_tol: self.rho_tol,
                max_iter: self.max_iter,
                ..tol
            },
            jobs: self.jobs,
        };
        opts.validate()?;
        Ok(opts)
    }
}

/// Failure that maps to exit code 3.
#[derive(Debug)]
struct Unconverged(String);

impl std::fmt::Display for Unconverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Unconverged {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SITNIKOV_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Unconverged>().is_some() {
        return EXIT_FAILED;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::NonConvergence(_)) => EXIT_FAILED,
        _ => EXIT_VALIDATION,
    }
}

fn run(command: Command) -> Result<()> {
    let drive = KeplerDrive::new();
    match command {
        Command::SampleX {
            step,
            from,
            to,
            out,
        } => {
            if !(step > 0.0 && step.is_finite() && to >= from) {
                return Err(Error::InvalidInput(format!(
                    "need step > 0 and from <= to, got step {step}, [{from}, {to}]"
                ))
                .into());
            }
            let csv = export::drive_csv(&drive, from, to, step);
            match out {
                Some(path) => write_atomic(&path, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Periodic {
            symbols,
            solver,
            out,
            plot,
            csv,
        } => {
            let b: PeriodicSymbols = symbols.parse()?;
            let opts = solver.options(Tolerances::default())?;
            let family = periodic::multi_start(&drive, &b, &opts)?;
            let orbit = family.best();
            info!(
                "{} of {} starts converged; rho = {:.12}",
                family.orbits.iter().filter(|o| o.converged).count(),
                family.orbits.len(),
                orbit.rho_hat
            );
            write_atomic(&out, &orbit.to_json()?)?;
            if let Some(path) = plot {
                let series = [Series::from_trajectory("y(t)", "black", &orbit.traj)];
                write_atomic(
                    &path,
                    &export::svg_plot(&format!("periodic orbit {b}"), &series),
                )?;
            }
            if let Some(path) = csv {
                write_atomic(&path, &export::trajectory_csv(&orbit.traj))?;
            }
            println!("{:.15e}", orbit.rho_hat);
            if !orbit.converged {
                return Err(Unconverged(format!(
                    "no start reached the gradient tolerance (best {:.3e})",
                    orbit.grad_norm
                ))
                .into());
            }
        }
        Command::Connect {
            spec,
            solver,
            tail_tol,
            j_tol,
            max_windows,
            out,
            plot,
        } => {
            let text = read_text(&spec)?;
            let spec = ConnectionSpec::from_json(&text)
                .with_context(|| format!("invalid spec {}", spec.display()))?;
            let tol = Tolerances {
                tail_tol,
                j_tol,
                max_windows,
                ..Tolerances::default()
            };
            let opts = ConnectionOptions {
                periodic: solver.options(tol)?,
                ..Default::default()
            };
            let cache = RhoCache::new();
            let problem = ConnectionProblem::new(&drive, spec, &opts, &cache)?;
            let orbit = problem.solve(&drive, &opts)?;
            write_atomic(&out, &orbit.to_json()?)?;
            if let Some(path) = plot {
                write_atomic(&path, &connection_plot(&problem, &orbit)?)?;
            }
            println!("{:.15e}", orbit.j_hat);
            if !orbit.converged {
                let last = orbit.log.last().expect("at least one window");
                return Err(Unconverged(format!(
                    "window loop did not settle after {} windows: tails {:.3e}/{:.3e}, J change {:?}, gradient {:.3e}",
                    orbit.log.len(),
                    last.tail_left,
                    last.tail_right,
                    last.j_change,
                    last.grad_sup
                ))
                .into());
            }
        }
        Command::Verify {
            input,
            against,
            samples,
            seed,
            scaling,
            ordering,
            report,
            jobs,
        } => {
            let text = read_text(&input)?;
            let result = verify(
                &drive,
                &text,
                against.as_deref(),
                VerifyArgs {
                    samples,
                    seed,
                    scaling,
                    ordering,
                    jobs,
                },
            )?;
            let json = serde_json::to_string_pretty(&result)?;
            match report {
                Some(path) => write_atomic(&path, &json)?,
                None => println!("{json}"),
            }
            eprint!("{}", result.summary());
            if !result.passed() {
                return Err(Unconverged(format!("{} checks failed", result.failures.len())).into());
            }
        }
        Command::Rho { symbols, solver } => {
            let b: PeriodicSymbols = symbols.parse()?;
            let opts = solver.options(Tolerances::default())?;
            let family = periodic::multi_start(&drive, &b, &opts)?;
            println!("{:.15e}", family.rho_hat());
            if !family.orbits.iter().any(|o| o.converged) {
                return Err(Unconverged("no start converged".into()).into());
            }
        }
    }
    Ok(())
}

struct VerifyArgs {
    samples: usize,
    seed: u64,
    scaling: Option<usize>,
    ordering: bool,
    jobs: usize,
}

fn verify(
    drive: &KeplerDrive,
    text: &str,
    against: Option<&Path>,
    args: VerifyArgs,
) -> Result<VerificationReport> {
    let raw: serde_json::Value = serde_json::from_str(text).map_err(Error::from)?;
    let kind = raw.get("kind").and_then(|k| k.as_str()).unwrap_or_default();
    let tol = Tolerances::default();
    let expected_spec = against
        .map(|path| -> Result<ConnectionSpec> {
            let text = read_text(path)?;
            ConnectionSpec::from_json(&text)
                .with_context(|| format!("invalid spec {}", path.display()))
        })
        .transpose()?;
    match kind {
        periodic::PERIODIC_KIND => {
            if expected_spec.is_some() {
                return Err(Error::InvalidInput(
                    "--against applies to connecting orbits only".into(),
                )
                .into());
            }
            let orbit = PeriodicOrbit::from_json(text)?;
            let mut rng = verification::sampling_rng(args.seed);
            let mut report =
                verification::verify_periodic(drive, &orbit, &tol, args.samples, &mut rng)?;
            let opts = PeriodicOptions {
                nodes_per_unit: orbit.traj.grid.nodes_per_unit(),
                jobs: args.jobs,
                tol,
                ..Default::default()
            };
            if let Some(k) = args.scaling {
                verification::add_scaling(&mut report, drive, &orbit, k, &opts)?;
            }
            if args.ordering {
                verification::add_ordering(&mut report, drive, &orbit, &opts)?;
            }
            Ok(report)
        }
        sitnikov::connection::CONNECTING_KIND => {
            let orbit = ConnectingOrbit::from_json(text)?;
            let mut report = verification::verify_connection(drive, &orbit, &tol)?;
            if let Some(spec) = expected_spec {
                if spec != orbit.spec {
                    report
                        .failures
                        .push("orbit was computed for a different spec".into());
                }
            }
            Ok(report)
        }
        other => Err(Error::InvalidInput(format!("unknown orbit kind {other:?}")).into()),
    }
}

fn connection_plot(problem: &ConnectionProblem, orbit: &ConnectingOrbit) -> Result<String> {
    let grid = orbit.traj.grid;
    let times: Vec<f64> = orbit.traj.times().collect();
    let gm = problem.gamma_minus.sample_on(&grid)?;
    let gp = problem.gamma_plus.sample_on(&grid)?;
    let series = [
        Series {
            label: "γ⁻",
            color: "#1f77b4",
            points: times.iter().copied().zip(gm).collect(),
        },
        Series {
            label: "γ⁺",
            color: "#d62728",
            points: times.iter().copied().zip(gp).collect(),
        },
        Series::from_trajectory("y*", "black", &orbit.traj),
    ];
    let kind = if orbit.spec.is_homoclinic() {
        "homoclinic"
    } else {
        "heteroclinic"
    };
    Ok(export::svg_plot(&format!("{kind} orbit"), &series))
}
