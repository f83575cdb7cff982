//! `seqproj` command line.
//!
//! Structured output goes to stdout as JSON; logs and errors go to stderr.
//! Exit codes: 0 success, 1 validation error, 2 runtime error, 3 a
//! statistical check failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::bounds::{self, PlanParams};
use crate::distributions::{
    self, BetaLawParams, ProjectionVector, SphereSampler, SubGaussianSpec, DEFAULT_LAMBDA_GRID,
};
use crate::harness::{self, ExperimentConfig, SweepConfig};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "seqproj", version = build_id(), about = "Sequential random projection sketches and their concentration checks")]
struct Cli {
    /// Worker threads for Monte Carlo runs (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

fn build_id() -> &'static str {
    concat!(env!("CARGO_PKG_VERSION"), " (", env!("CARGO_PKG_NAME"), ")")
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the planned dimension, mixture scale and B² bound as JSON.
    Plan(PlanArgs),
    /// Run one Monte Carlo experiment from a JSON config.
    Simulate(RunArgs),
    /// Run a parameter sweep from a JSON sweep config.
    Sweep(RunArgs),
    /// Run the distributional oracles for the sphere sampler.
    CheckDist(CheckDistArgs),
    /// Evaluate the anytime boundary and the mixture value.
    Bound(BoundArgs),
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long = "cx", visible_alias = "c_x")]
    c_x: f64,
    #[arg(long = "x0sq", visible_alias = "x0_sq")]
    x0_sq: f64,
    #[arg(long = "T")]
    horizon: usize,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and CSV files.
    #[arg(long = "out")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckDistArgs {
    /// Sphere dimensions to test.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 25])]
    dims: Vec<usize>,
    /// Samples for the goodness-of-fit test.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Samples for each MGF check.
    #[arg(long, default_value_t = 1_000_000)]
    mgf_n: usize,
    /// KS significance level.
    #[arg(long, default_value_t = 1e-3)]
    significance: f64,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long = "A", allow_hyphen_values = true)]
    a: f64,
    #[arg(long = "Bsq")]
    b_sq: f64,
    #[arg(long = "L")]
    l: f64,
    #[arg(long)]
    delta: f64,
}

/// Runs the CLI against the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_VALIDATION
                }
            };
        }
    };
    init_logging(cli.verbose);
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn emit(out: &mut dyn Write, value: &serde_json::Value) -> crate::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    writeln!(out, "{text}").map_err(|source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> crate::Result<i32> {
    match &cli.command {
        Command::Plan(a) => {
            let p = PlanParams {
                eps: a.eps,
                delta: a.delta,
                c0: a.c0,
                c_x: a.c_x,
                x0_sq: a.x0_sq,
                horizon: a.horizon,
            };
            let r = bounds::plan_dimension(&p)?;
            let baseline = bounds::union_bound_baseline(p.eps, p.delta, p.horizon, p.c0)?;
            emit(
                out,
                &json!({
                    "M": r.dim,
                    "L_T": r.mixture_scale,
                    "B_sq_bound": r.b_sq_as_bound,
                    "baseline_M": baseline,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Bound(a) => {
            let boundary = bounds::boundary(a.b_sq, a.l, a.delta)?;
            let mixture = bounds::mixture_value(a.a, a.b_sq, a.l);
            emit(
                out,
                &json!({
                    "boundary": boundary,
                    "mixture_value": mixture,
                    "crossed": a.a.abs() > boundary,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Simulate(a) => simulate(cli, a, out),
        Command::Sweep(a) => sweep(cli, a, out),
        Command::CheckDist(a) => check_dist(cli, a, out),
    }
}

fn simulate(cli: &Cli, args: &RunArgs, out: &mut dyn Write) -> crate::Result<i32> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &args.out {
        config.output_dir = Some(dir.clone());
    }
    log::info!("running {} trials", config.n_trials);
    let run = harness::run_experiment(&config, cli.workers)?;
    if let Some(dir) = &config.output_dir {
        run.write_to(dir)?;
        log::info!("wrote report to {}", dir.display());
    }
    let report = &run.report;
    emit(out, &serde_json::to_value(report).expect("reports serialize"))?;
    if !report.invalid_trials.is_empty() {
        log::error!("{} invalid trials", report.invalid_trials.len());
        return Ok(EXIT_RUNTIME);
    }
    if !report.guarantee.passed {
        log::warn!(
            "failure rate {} exceeds {}",
            report.failure.rate,
            report.guarantee.threshold
        );
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}

fn sweep(cli: &Cli, args: &RunArgs, out: &mut dyn Write) -> crate::Result<i32> {
    let mut sweep = SweepConfig::load(&args.config)?;
    if let Some(seed) = cli.seed {
        sweep.base.seed = seed;
    }
    let configs = sweep.expand();
    let labels: Vec<Option<String>> = sweep.points.iter().map(|p| p.label.clone()).collect();
    let results = harness::sweep(&configs, cli.workers);
    let dir = args.out.clone().or(sweep.base.output_dir.clone());
    if let Some(dir) = &dir {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        harness::write_sweep_csv(&dir.join("sweep.csv"), &labels, &results)?;
    }
    let summary: Vec<serde_json::Value> = results
        .iter()
        .enumerate()
        .map(|(i, r)| match r {
            Ok(rep) => json!({
                "index": i,
                "label": labels[i],
                "M": rep.dim,
                "planned_M": rep.planned_dim,
                "eps": rep.config.plan.eps,
                "strategy": rep.strategy,
                "failure": rep.failure,
                "boundary_crossing": rep.boundary_crossing,
                "guarantee": rep.guarantee,
            }),
            Err(e) => json!({ "index": i, "label": labels[i], "error": e.to_string() }),
        })
        .collect();
    emit(out, &serde_json::Value::Array(summary))?;
    let any_failed_check = results
        .iter()
        .any(|r| matches!(r, Ok(rep) if !rep.guarantee.passed));
    Ok(if any_failed_check { EXIT_CHECK_FAILED } else { EXIT_OK })
}

fn check_dist(cli: &Cli, args: &CheckDistArgs, out: &mut dyn Write) -> crate::Result<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
    let mut all_ok = true;
    let mut sphere = Vec::new();
    for &dim in &args.dims {
        let e1 = ProjectionVector::basis(dim, 0)?;
        let mgf = distributions::check_subgaussian_mgf(
            &SphereSampler::new(dim)?,
            SubGaussianSpec::sphere(dim)?,
            e1.coords(),
            &DEFAULT_LAMBDA_GRID,
            args.mgf_n,
            &mut rng,
        )?;
        all_ok &= mgf.passed();
        let law = if dim >= 2 {
            let check = distributions::check_sphere_law(dim, e1.coords(), args.n, args.significance, &mut rng)?;
            all_ok &= check.passed();
            serde_json::to_value(check).expect("serializable")
        } else {
            serde_json::Value::Null
        };
        sphere.push(json!({ "M": dim, "law": law, "subgaussian_mgf": mgf }));
    }
    let mut beta = Vec::new();
    let mut beta_dims: Vec<f64> = args.dims.iter().filter(|&&d| d >= 2).map(|&d| (d as f64 - 1.0) / 2.0).collect();
    beta_dims.dedup();
    for a in beta_dims {
        let params = BetaLawParams::new(a, a)?;
        let rep = distributions::check_beta_mgf(params, &DEFAULT_LAMBDA_GRID, args.mgf_n, &mut rng)?;
        all_ok &= rep.passed();
        beta.push(json!({ "alpha": a, "beta": a, "mgf": rep }));
    }
    emit(
        out,
        &json!({ "passed": all_ok, "sphere": sphere, "beta": beta }),
    )?;
    Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}
