mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use limdep::validation::{gen_dataset, run_battery, BatteryConfig, DgpConfig};
use limdep::{fit, Dataset, Error, FitOptions, ModelKind};

use crate::io::{dgp_summary, parse_list, read_table, write_dataset, write_json, InputError};
use crate::report::{
    FitReport, SimulateSidecar, ValidateReport, SIMULATE_SCHEMA, VALIDATE_SCHEMA, VERSION,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;
const EXIT_SINGULAR: u8 = 5;
const EXIT_BATTERY: u8 = 6;

/// Truncated and Tobit regression by maximum likelihood.
#[derive(Debug, Parser)]
#[command(name = "limdep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a CSV file with a `y` column.
    Fit(FitArgs),
    /// Draw a dataset from known parameters.
    Simulate(SimulateArgs),
    /// Run the validation battery.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Convergence tolerance on the sup-norm of the average score.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

impl SolverArgs {
    fn options(&self, seed: u64) -> FitOptions {
        FitOptions {
            grad_tol: self.tol,
            max_iter: self.max_iter,
            seed,
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    model: ModelKind,
    /// Truncation or censoring point.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c: f64,
    #[arg(long)]
    input: PathBuf,
    /// JSON report path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Prepend a constant regressor.
    #[arg(long)]
    intercept: bool,
    /// Seed for the perturbed starting points.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct DgpArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Comma-separated coefficients; the first multiplies the constant.
    #[arg(long, default_value = "1,0.5", allow_hyphen_values = true)]
    beta: String,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl DgpArgs {
    fn config(&self) -> anyhow::Result<DgpConfig> {
        let beta = parse_list(&self.beta).map_err(|e| Error::Config(e.to_string()))?;
        let dgp = DgpConfig::intercept_normal(beta, self.sigma, self.c, self.n, self.seed);
        dgp.validate()?;
        Ok(dgp)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: ModelKind,
    /// CSV path; the true parameters go to `<output>.json`.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    dgp: DgpArgs,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, default_value = "tobit")]
    model: ModelKind,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Monte Carlo draws for the score checks.
    #[arg(long, default_value_t = 200_000)]
    n_mc: usize,
    /// Evaluate every check at the truth with gamma doubled; the battery
    /// should then fail.
    #[arg(long)]
    perturb_theta: bool,
    /// JSON report path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Per-replication estimates as CSV.
    #[arg(long)]
    estimates: Option<PathBuf>,
    #[command(flatten)]
    dgp: DgpArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::TruncationViolation { .. }
            | Error::BelowCensoringPoint { .. }
            | Error::InconsistentCensoring { .. }
            | Error::NonFinite { .. }
            | Error::Dimension(_) => EXIT_INPUT,
            Error::Collinearity { .. } | Error::Degenerate(_) | Error::Singular { .. } => {
                EXIT_SINGULAR
            }
            Error::Domain { .. } | Error::Config(_) | Error::PathologicalDgp(_) => EXIT_CONFIG,
            Error::Quadrature(_) => EXIT_BATTERY,
        };
    }
    // unreadable or malformed input, and failed writes
    EXIT_INPUT
}

/// Rewrites zero-based data-row errors in terms of CSV line numbers.
fn cite_line(e: Error) -> anyhow::Error {
    let row = match &e {
        Error::TruncationViolation { row, .. }
        | Error::BelowCensoringPoint { row, .. }
        | Error::InconsistentCensoring { row, .. }
        | Error::NonFinite { row } => *row,
        _ => return e.into(),
    };
    let text = e.to_string();
    let detail = text.split_once(": ").map_or(text.as_str(), |(_, d)| d);
    InputError(format!("line {}: {detail}", row + 2)).into()
}

fn cmd_fit(args: &FitArgs) -> anyhow::Result<u8> {
    let opts = args.solver.options(args.seed);
    opts.validate()?;
    let mut table = read_table(&args.input)?;
    if args.intercept {
        table.prepend_intercept();
    }
    if table.k() == 0 {
        return Err(InputError(
            "no regressor columns; pass --intercept for a constant-only model".into(),
        )
        .into());
    }
    let k = table.k();
    let data = Dataset::new(args.model, args.c, table.y, table.x, k).map_err(cite_line)?;
    let result = fit(&data, &opts)?;
    let report = FitReport::new(
        &result,
        args.c,
        table.names,
        data.n_censored(),
        data.n_clamped(),
        args.seed,
    );
    write_json(args.output.as_deref(), &report)?;
    if !result.converged {
        log::error!(
            "no convergence after {} iterations (average score norm {:e})",
            result.n_iter,
            result.avg_score_norm
        );
        return Ok(EXIT_NO_CONVERGENCE);
    }
    if result.avar_hessian.is_none() {
        log::error!(
            "average Hessian is numerically singular (min eigenvalue {:e})",
            result.min_eig_neg_avg_hessian
        );
        return Ok(EXIT_SINGULAR);
    }
    Ok(0)
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<u8> {
    let dgp = args.dgp.config()?;
    let data = gen_dataset(args.model, &dgp)?;
    write_dataset(&args.output, &data)?;
    let truth = dgp.truth();
    let sidecar = SimulateSidecar {
        schema: SIMULATE_SCHEMA,
        version: VERSION,
        seed: dgp.seed,
        model: args.model,
        n: dgp.n,
        c: dgp.c,
        beta: dgp.beta0.clone(),
        sigma: dgp.sigma0,
        theta: truth.to_vector().iter().copied().collect(),
        n_censored: data.n_censored(),
        columns: std::iter::once("y".to_string())
            .chain((1..=dgp.k()).map(|j| format!("x{j}")))
            .collect(),
    };
    let mut side = args.output.clone().into_os_string();
    side.push(".json");
    write_json(Some(PathBuf::from(side).as_path()), &sidecar)?;
    log::info!("simulated {} {}", args.model, dgp_summary(&dgp));
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs) -> anyhow::Result<u8> {
    let dgp = args.dgp.config()?;
    let mut cfg = BatteryConfig::new(args.model, dgp);
    cfg.n_reps = args.reps;
    cfg.n_mc = args.n_mc;
    cfg.fit = args.solver.options(args.dgp.seed);
    cfg.perturb_theta = args.perturb_theta;
    if cfg.n_reps < limdep::validation::normality::MIN_REPS {
        return Err(Error::Config(format!(
            "--reps must be at least {}",
            limdep::validation::normality::MIN_REPS
        ))
        .into());
    }
    let report = run_battery(&cfg)?;
    if let Some(path) = &args.estimates {
        io::write_atomic(path, |w| {
            report.replications.write_estimates_csv(w)?;
            Ok(())
        })?;
    }
    let failing: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    for c in &report.checks {
        log::info!(
            "{}: {} ({:e} vs {:e})",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            c.value,
            c.threshold
        );
    }
    let doc = ValidateReport {
        schema: VALIDATE_SCHEMA,
        version: VERSION,
        seed: args.dgp.seed,
        pass: report.pass,
        failing_checks: failing.clone(),
        report: &report,
    };
    write_json(args.output.as_deref(), &doc)?;
    if report.pass {
        Ok(0)
    } else {
        eprintln!("validation failed: {}", failing.join(", "));
        Ok(EXIT_BATTERY)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Fit(a) => cmd_fit(a).context("fit"),
        Command::Simulate(a) => cmd_simulate(a).context("simulate"),
        Command::Validate(a) => cmd_validate(a).context("validate"),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
