//! Command-line front end: canonical forms, nullification, simulation,
//! zero-order-hold discretization, sampling-period sweeps and the invariant
//! suite. Exit codes: 0 success, 1 validation failure, 2 algorithm-stage
//! failure, 3 invariant violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ltvctl::canonical::canonical_transform;
use ltvctl::checks::run_invariant_suite;
use ltvctl::ct::{delta_sweep, discretize};
use ltvctl::error::{Error, ErrorClass};
use ltvctl::io::{
    discrete_to_json_string, load_system, schedule_from_json, schedule_to_json_string, sweep_csv,
    trajectory_csv, transform_to_json_string, LoadedSystem,
};
use ltvctl::nullify::{nullify_all, nullify_state, NullifyOptions};
use ltvctl::scalar::{parse_scalar, Scalar, ScalarMode, Tol};
use ltvctl::system::{simulate, LtvSystem, SimInput};

#[derive(Parser)]
#[command(name = "ltvctl", version, about = "Linear time-varying SISO control: canonical forms, output-feedback nullification, sampled-data analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Rational,
    Float,
}

impl From<ModeArg> for ScalarMode {
    fn from(m: ModeArg) -> ScalarMode {
        match m {
            ModeArg::Rational => ScalarMode::Rational,
            ModeArg::Float => ScalarMode::Float,
        }
    }
}

#[derive(Args)]
struct ToleranceArg {
    /// Relative zero tolerance for float-mode rank and zero decisions.
    #[arg(long, default_value_t = 1e-10)]
    zero_tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the controller canonical form and the transform that reaches it.
    Canon {
        #[arg(long)]
        system: PathBuf,
        /// Index range "lo:hi" for the canonical output; defaults to one
        /// period (periodic systems) or the largest computable sub-window.
        #[arg(long)]
        range: Option<String>,
        #[arg(long, value_enum, default_value = "rational")]
        mode: ModeArg,
        #[command(flatten)]
        tol: ToleranceArg,
        /// Output path for the canonical system file.
        #[arg(long)]
        out_system: PathBuf,
        /// Output path for the transform file.
        #[arg(long)]
        out_transform: PathBuf,
    },
    /// Nullify a given state (--state) or every state (--all) by memoryless
    /// output feedback; prints the schedule JSON on stdout.
    Nullify {
        #[arg(long)]
        system: PathBuf,
        /// Start index k.
        #[arg(long)]
        time: i64,
        /// Initial state "v1,v2,...,vn"; mutually exclusive with --all.
        #[arg(long, conflicts_with = "all")]
        state: Option<String>,
        /// Nullify every initial state at the start index.
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum, default_value = "rational")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tol: ToleranceArg,
        /// Trajectory CSV output (single-state runs).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the schedule JSON to a file.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Simulate the recursion from a given state, open loop or under a
    /// feedback schedule.
    Simulate {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        time: i64,
        #[arg(long)]
        state: String,
        /// Number of zero-input steps; mutually exclusive with --feedback.
        #[arg(long, conflicts_with = "feedback")]
        steps: Option<usize>,
        /// Feedback schedule JSON file to close the loop with.
        #[arg(long)]
        feedback: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "rational")]
        mode: ModeArg,
        /// Trajectory CSV output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-order-hold sample a continuous-time system file.
    Discretize {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        delta: f64,
        /// Sample index range "lo:hi".
        #[arg(long)]
        k_range: String,
        /// Integrator local tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the sampling period and report controllability and decoupling
    /// diagnostics as CSV.
    Sweep {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        delta_min: f64,
        #[arg(long)]
        delta_max: f64,
        #[arg(long)]
        delta_steps: usize,
        /// Sample index range "lo:hi".
        #[arg(long)]
        k_range: String,
        /// Integrator local tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Relative threshold for singular-value and decoupling zero tests.
        #[arg(long, default_value_t = 1e-9)]
        zero_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suite; exits nonzero on any violation.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Validation => ExitCode::from(1),
                ErrorClass::Algorithm => ExitCode::from(2),
            }
        }
    }
}

fn parse_range(text: &str) -> Result<(i64, i64), Error> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| Error::Schema(format!("range '{text}' must look like lo:hi")))?;
    let lo: i64 =
        lo.trim().parse().map_err(|_| Error::Schema(format!("bad range bound '{lo}'")))?;
    let hi: i64 =
        hi.trim().parse().map_err(|_| Error::Schema(format!("bad range bound '{hi}'")))?;
    if lo > hi {
        return Err(Error::Schema(format!("empty range [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

fn parse_state(text: &str, n: usize, mode: ScalarMode) -> Result<Vec<Scalar>, Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "state has {} components, system has {n}",
            parts.len()
        )));
    }
    parts.iter().map(|p| parse_scalar(p, mode)).collect()
}

fn load_discrete(path: &Path, mode: ScalarMode) -> Result<LtvSystem, Error> {
    match load_system(path, mode)? {
        LoadedSystem::Discrete(sys) => Ok(sys),
        LoadedSystem::Continuous(_) => Err(Error::Schema(format!(
            "{} is a continuous-time system file; this subcommand needs a discrete one",
            path.display()
        ))),
    }
}

fn load_continuous(path: &Path) -> Result<ltvctl::ct::CtSystem, Error> {
    match load_system(path, ScalarMode::Float)? {
        LoadedSystem::Continuous(ct) => Ok(ct),
        LoadedSystem::Discrete(_) => Err(Error::Schema(format!(
            "{} is a discrete-time system file; this subcommand needs a continuous one",
            path.display()
        ))),
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents)?;
    Ok(())
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Canon { system, range, mode, tol, out_system, out_transform } => {
            let mode = ScalarMode::from(mode);
            let sys = load_discrete(&system, mode)?;
            let n = sys.dim() as i64;
            let (lo, hi) = match range {
                Some(text) => parse_range(&text)?,
                None => match sys.extension() {
                    ltvctl::system::Extension::Periodic(p) => (sys.k_min(), sys.k_min() + p - 1),
                    ltvctl::system::Extension::None => {
                        let lo = sys.k_min() + 2 * n - 1;
                        let hi = sys.k_max() - n + 1;
                        if lo > hi {
                            return Err(Error::InvalidSystem(format!(
                                "window too short for a canonical range (need at least {} indices)",
                                3 * n
                            )));
                        }
                        (lo, hi)
                    }
                },
            };
            let dec = canonical_transform(&sys, lo, hi, &Tol::new(tol.zero_tol))?;
            write_output(&out_system, &discrete_to_json_string(&dec.canonical))?;
            write_output(&out_transform, &transform_to_json_string(&dec.transform))?;
            println!(
                "canonical form over [{lo}, {hi}]: structure residual {:.3e}",
                dec.max_structure_residual
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Nullify { system, time, state, all, mode, seed, tol, out, schedule } => {
            let mode = ScalarMode::from(mode);
            let sys = load_discrete(&system, mode)?;
            let opts = NullifyOptions {
                seed,
                tol: Tol::new(tol.zero_tol),
                ..Default::default()
            };
            if all {
                let outcome = nullify_all(&sys, time, &opts)?;
                let json = schedule_to_json_string(&outcome.schedule);
                if let Some(path) = &schedule {
                    write_output(path, &json)?;
                }
                println!("{json}");
                let max_entry = outcome.closed_loop_product.max_abs();
                println!(
                    "closed-loop product over {} steps: max |entry| = {:e} (bounds: {} fixed start, {} any start)",
                    outcome.schedule.len(),
                    max_entry,
                    outcome.bound_fixed_start,
                    outcome.bound_any_start,
                );
                Ok(ExitCode::SUCCESS)
            } else {
                let state = state.ok_or_else(|| {
                    Error::Schema("provide --state \"v1,...,vn\" or --all".into())
                })?;
                let x0 = parse_state(&state, sys.dim(), mode)?;
                let outcome = nullify_state(&sys, time, &x0, &opts)?;
                let json = schedule_to_json_string(&outcome.schedule);
                if let Some(path) = &schedule {
                    write_output(path, &json)?;
                }
                println!("{json}");
                println!(
                    "nullified in {} steps (k0 = {}, bound {})",
                    outcome.steps,
                    outcome.k0,
                    ltvctl::nullify::single_state_bound(sys.dim())
                );
                if let Some(path) = &out {
                    let csv = trajectory_csv(&sys, &outcome.trajectory, "F", &outcome.schedule.gains);
                    write_output(path, &csv)?;
                }
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Simulate { system, time, state, steps, feedback, mode, out } => {
            let mode = ScalarMode::from(mode);
            let sys = load_discrete(&system, mode)?;
            let x0 = parse_state(&state, sys.dim(), mode)?;
            let (input, label, inputs) = match (steps, feedback) {
                (_, Some(path)) => {
                    let text = std::fs::read_to_string(&path)?;
                    let sched = schedule_from_json(&text, mode)?;
                    let gains = sched.gains.clone();
                    (SimInput::Feedback(sched), "F", gains)
                }
                (Some(steps), None) => (SimInput::Free { steps }, "u", Vec::new()),
                (None, None) => {
                    return Err(Error::Schema("provide --steps or --feedback".into()));
                }
            };
            let traj = simulate(&sys, time, &x0, &input)?;
            let csv = trajectory_csv(&sys, &traj, label, &inputs);
            match out {
                Some(path) => write_output(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Discretize { system, delta, k_range, tol, out } => {
            let ct = load_continuous(&system)?;
            let (lo, hi) = parse_range(&k_range)?;
            let sampled = discretize(&ct, delta, lo, hi, tol)?;
            write_output(&out, &discrete_to_json_string(&sampled.system))?;
            let worst = sampled
                .reports
                .iter()
                .map(|r| r.max_error_estimate)
                .fold(0.0f64, f64::max);
            let all_invertible = sampled.reports.iter().all(|r| r.invertible);
            println!(
                "sampled {} steps at delta = {delta}: worst local error {:.3e}, A_delta invertible: {all_invertible}",
                sampled.reports.len(),
                worst
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { system, delta_min, delta_max, delta_steps, k_range, tol, zero_tol, out } => {
            let ct = load_continuous(&system)?;
            let (lo, hi) = parse_range(&k_range)?;
            if delta_steps == 0 {
                return Err(Error::Schema("delta-steps must be positive".into()));
            }
            if !(delta_min > 0.0) || delta_max <= delta_min {
                return Err(Error::Schema(
                    "need 0 < delta-min < delta-max for the sweep grid".into(),
                ));
            }
            let grid: Vec<f64> = (0..delta_steps)
                .map(|i| {
                    delta_min
                        + (delta_max - delta_min) * i as f64 / (delta_steps - 1).max(1) as f64
                })
                .collect();
            let report = delta_sweep(&ct, &grid, lo, hi, tol, &Tol::new(zero_tol))?;
            write_output(&out, &sweep_csv(&report))?;
            let singular: Vec<f64> = report
                .summaries
                .iter()
                .filter(|s| !s.controllable)
                .map(|s| s.delta)
                .collect();
            println!(
                "swept {} periods over [{delta_min}, {delta_max}]: {} lose controllability {:?}",
                report.summaries.len(),
                singular.len(),
                singular
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { seed } => {
            let outcomes = run_invariant_suite(seed)?;
            let mut all_ok = true;
            for o in &outcomes {
                println!(
                    "check {}: {} ({})",
                    o.name,
                    if o.passed { "PASS" } else { "FAIL" },
                    o.detail
                );
                all_ok &= o.passed;
            }
            if all_ok {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
    }
}
