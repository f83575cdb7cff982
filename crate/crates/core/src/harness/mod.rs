//! Seeded Monte Carlo runner.
//!
//! Trial `i` draws its projection vectors from ChaCha stream `2i` and feeds
//! its strategy from stream `2i + 1`, both keyed by the master seed, so each
//! trial is reproducible in isolation and independent of the worker count.

mod config;
mod io;
mod report;

pub use config::{DistributionKind, Experiment, ExperimentConfig, SweepConfig, SweepPoint};
pub use io::{write_sweep_csv, write_trace_csv, write_trials_csv, TRACE_HEADER, TRIALS_HEADER};
pub use report::{
    aggregate, ExperimentReport, GuaranteeCheck, InvalidTrial, InvariantCounts, ProfilePoint,
    SupermartingaleEstimate, SUPERMARTINGALE_LAMBDAS,
};

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::History;
use crate::bounds::{b_sq_path_bound, BoundAccumulator};
use crate::distributions::{ProjectionSampler, ProjectionVector};
use crate::sketch::{check_trigger_identity, SketchState};
use crate::{Error, Result};

/// Relative slack for the floating-point comparisons of the `B²` bounds and
/// the boundary/mixture identity.
pub const FLOAT_REL_TOL: f64 = 1e-9;

/// Outcome of one simulated path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    /// Some step `t <= T` left the good event.
    pub failed: bool,
    pub tau: Option<usize>,
    pub max_distortion: f64,
    #[serde(rename = "final_S")]
    pub final_sum_sq: f64,
    #[serde(rename = "final_A")]
    pub final_a: f64,
    #[serde(rename = "final_B_sq")]
    pub final_b_sq: f64,
    pub boundary_crossed: bool,
    pub trigger_identity_ok: bool,
    /// First step at which `|A_t|` exceeded the boundary.
    pub crossing_step: Option<usize>,
    /// `S_{T∧τ}`.
    pub stopped_sum_sq: f64,
    /// `Y_T` from the recursion.
    pub final_deviation: f64,
    /// `‖s_T‖² - S_T` recomputed directly.
    pub final_direct_deviation: f64,
    pub b_sq_as_bound_ok: bool,
    pub b_sq_path_bound_ok: bool,
}

/// One row of a per-step trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub x: f64,
    pub inner: f64,
    pub deviation: f64,
    pub sum_sq: f64,
    pub distortion: f64,
    pub good: bool,
    pub tau_set: bool,
    pub a: f64,
    pub b_sq: f64,
    pub boundary: f64,
}

/// Everything a trial produces.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    /// Distortion at each `t = 0..=T`.
    pub distortions: Vec<f64>,
    pub trace: Option<Vec<TraceRow>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    ChooseInput,
    DrawProjection,
}

/// Enforces that `x_t` is fixed before `z_t` is drawn.
#[derive(Debug)]
pub struct Sequencer {
    trial: u64,
    step: usize,
    phase: Phase,
}

impl Sequencer {
    pub fn new(trial: u64) -> Self {
        Self {
            trial,
            step: 1,
            phase: Phase::ChooseInput,
        }
    }

    pub fn input_chosen(&mut self, step: usize) -> Result<()> {
        self.advance(step, Phase::ChooseInput, Phase::DrawProjection, "input chosen out of order")
    }

    pub fn projection_drawn(&mut self, step: usize) -> Result<()> {
        self.advance(step, Phase::DrawProjection, Phase::ChooseInput, "projection drawn before input")?;
        self.step += 1;
        Ok(())
    }

    fn advance(&mut self, step: usize, want: Phase, next: Phase, detail: &'static str) -> Result<()> {
        if step != self.step || self.phase != want {
            return Err(Error::Sequencing {
                trial: self.trial,
                step,
                detail,
            });
        }
        self.phase = next;
        Ok(())
    }
}

/// Derives the two independent generators of a trial.
pub fn trial_rngs(master_seed: u64, trial_id: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut projections = ChaCha8Rng::seed_from_u64(master_seed);
    projections.set_stream(2 * trial_id);
    let mut inputs = ChaCha8Rng::seed_from_u64(master_seed);
    inputs.set_stream(2 * trial_id + 1);
    (projections, inputs)
}

fn finite(trial: u64, step: usize, v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { trial, step, what })
    }
}

/// Simulates `t = 0..=T` for one trial.
pub fn run_trial(exp: &Experiment, trial_id: u64, keep_trace: bool) -> Result<TrialOutcome> {
    let params = exp.params();
    let horizon = params.horizon;
    let delta = params.delta;
    let (mut z_rng, mut x_rng) = trial_rngs(exp.config.seed, trial_id);

    let x0 = params.x0();
    let z0 = exp.sampler.sample(&mut z_rng);
    let mut state = SketchState::init(x0, z0.coords(), params.eps)?
        .with_recompute_every(exp.config.recompute_every);
    let mut acc = BoundAccumulator::from_plan(&exp.plan, params)?;
    let mut sequencer = Sequencer::new(trial_id);

    let mut xs = Vec::with_capacity(horizon + 1);
    let mut zs: Vec<ProjectionVector> = Vec::with_capacity(horizon + 1);
    xs.push(x0);
    zs.push(z0);
    let mut goods = Vec::with_capacity(horizon + 1);
    goods.push(state.is_good());
    let mut distortions = Vec::with_capacity(horizon + 1);
    distortions.push(state.distortion()?);
    let mut stopped_sum_sq = if state.tau().is_some() { Some(state.sum_sq()) } else { None };
    let mut crossing_step = None;

    let mut trace = keep_trace.then(Vec::new);
    if let Some(rows) = trace.as_mut() {
        rows.push(TraceRow {
            t: 0,
            x: x0,
            inner: 0.0,
            deviation: state.deviation(),
            sum_sq: state.sum_sq(),
            distortion: distortions[0],
            good: goods[0],
            tau_set: state.tau().is_some(),
            a: 0.0,
            b_sq: 0.0,
            boundary: acc.boundary(delta)?,
        });
    }

    for t in 1..=horizon {
        let x = {
            let history = History::from_state(&state, &xs, &zs);
            exp.strategy.next_x(&history, &mut x_rng)
        };
        finite(trial_id, t, x, "x_t")?;
        sequencer.input_chosen(t)?;
        let z = exp.sampler.sample(&mut z_rng);
        sequencer.projection_drawn(t)?;

        let outcome = state.update(x, &z)?;
        finite(trial_id, t, state.sum_sq(), "S_t")?;
        finite(trial_id, t, state.deviation(), "Y_t")?;
        acc.record(&outcome, x);
        finite(trial_id, t, acc.a, "A_t")?;
        finite(trial_id, t, acc.b_sq, "B_sq_t")?;

        if stopped_sum_sq.is_none() && state.tau().is_some() {
            stopped_sum_sq = Some(state.sum_sq());
        }
        let boundary = acc.boundary(delta)?;
        if crossing_step.is_none() && acc.a.abs() > boundary {
            let log_threshold = -delta.ln();
            let log_mixture =
                crate::bounds::log_mixture_value(acc.a, acc.b_sq, acc.mixture_scale);
            // mixture >= (1/δ)(1 - tol)
            if log_mixture < log_threshold + (1.0 - FLOAT_REL_TOL).ln() {
                return Err(Error::Invariant {
                    trial: trial_id,
                    detail: format!(
                        "boundary crossed at t = {t} but ln mixture {log_mixture} < ln(1/δ) {log_threshold}"
                    ),
                });
            }
            crossing_step = Some(t);
        }
        let distortion = state.distortion()?;
        distortions.push(distortion);
        goods.push(outcome.good);
        if let Some(rows) = trace.as_mut() {
            rows.push(TraceRow {
                t,
                x,
                inner: outcome.inner,
                deviation: state.deviation(),
                sum_sq: state.sum_sq(),
                distortion,
                good: outcome.good,
                tau_set: state.tau().is_some(),
                a: acc.a,
                b_sq: acc.b_sq,
                boundary,
            });
        }
        xs.push(x);
        zs.push(z);
    }

    let tau = state.tau();
    let trigger_identity_ok = check_trigger_identity(&goods);
    if !trigger_identity_ok {
        return Err(Error::Invariant {
            trial: trial_id,
            detail: "trigger identity failed".into(),
        });
    }
    // {∃t <= T: ¬E_t} = {τ <= T} = ¬E_{T∧τ}
    let failed = tau.is_some();
    let at = tau.map_or(horizon, |tau| tau.min(horizon));
    if failed != !goods[at] || failed != goods.iter().any(|g| !g) {
        return Err(Error::Invariant {
            trial: trial_id,
            detail: "failure indicator disagrees with the stopped path".into(),
        });
    }

    let stopped_sum_sq = stopped_sum_sq.unwrap_or(state.sum_sq());
    let slack = |bound: f64| bound * (1.0 + FLOAT_REL_TOL) + f64::MIN_POSITIVE;
    let b_sq_as_bound_ok = acc.b_sq <= slack(exp.plan.b_sq_as_bound);
    let path_bound = b_sq_path_bound(params.c0, params.eps, exp.dim(), stopped_sum_sq, params.x0_sq);
    let b_sq_path_bound_ok = acc.b_sq <= slack(path_bound);

    let max_distortion = distortions.iter().copied().fold(0.0, f64::max);
    Ok(TrialOutcome {
        record: TrialRecord {
            trial_id,
            failed,
            tau,
            max_distortion,
            final_sum_sq: state.sum_sq(),
            final_a: acc.a,
            final_b_sq: acc.b_sq,
            boundary_crossed: crossing_step.is_some(),
            trigger_identity_ok,
            crossing_step,
            stopped_sum_sq,
            final_deviation: state.deviation(),
            final_direct_deviation: state.direct_deviation(),
            b_sq_as_bound_ok,
            b_sq_path_bound_ok,
        },
        distortions,
        trace,
    })
}

/// Records, traces and the aggregated report of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub records: Vec<TrialRecord>,
    pub traces: Vec<(u64, Vec<TraceRow>)>,
}

impl ExperimentRun {
    /// Writes `report.json`, `trials.csv` and any `trace_<id>.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let report_path = dir.join("report.json");
        let json = serde_json::to_string_pretty(&self.report).map_err(|source| Error::Json {
            path: report_path.clone(),
            source,
        })?;
        std::fs::write(&report_path, json + "\n").map_err(io_err(&report_path))?;
        let trials_path = dir.join("trials.csv");
        write_trials_csv(&trials_path, &self.records)?;
        for (id, rows) in &self.traces {
            write_trace_csv(&dir.join(format!("trace_{id}.csv")), rows)?;
        }
        Ok(())
    }
}

/// Runs every trial of `config` on `workers` threads (default: all cores).
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentRun> {
    let exp = config.resolve()?;
    let started = Instant::now();
    let trace_every = config.trace_every;
    let simulate = || -> Vec<Result<TrialOutcome>> {
        (0..config.n_trials)
            .into_par_iter()
            .map(|id| run_trial(&exp, id, trace_every.is_some_and(|n| id % n == 0)))
            .collect()
    };
    let outcomes = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(simulate),
        None => simulate(),
    };
    let mut run = aggregate(&exp, outcomes);
    run.report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(run)
}

/// Runs each configuration independently; one failing point does not stop the rest.
pub fn sweep(
    configs: &[Result<ExperimentConfig>],
    workers: Option<usize>,
) -> Vec<Result<ExperimentReport>> {
    configs
        .iter()
        .map(|cfg| match cfg {
            Ok(cfg) => run_experiment(cfg, workers).map(|run| run.report),
            Err(e) => Err(Error::Config(e.to_string())),
        })
        .collect()
}
