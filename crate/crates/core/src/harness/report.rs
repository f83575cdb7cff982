use serde::{Deserialize, Serialize};

use super::{Experiment, ExperimentConfig, ExperimentRun, TrialOutcome};
use crate::bounds::{mixture_value, union_bound_baseline, PlanResult};
use crate::stats::{binomial_se, wilson_interval, MeanEstimate, Proportion, RunningMoments, Z_95};
use crate::Result;

/// λ values at which the exponential supermartingale is averaged.
pub const SUPERMARTINGALE_LAMBDAS: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvalidTrial {
    pub trial_id: u64,
    pub error: String,
}

/// Empirical failure rate against `δ + 3 SE(δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeCheck {
    pub delta: f64,
    pub threshold: f64,
    pub applies: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub t: usize,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupermartingaleEstimate {
    pub lambda: f64,
    #[serde(flatten)]
    pub estimate: MeanEstimate,
}

/// Per-trial invariant violations; all zero on a healthy run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantCounts {
    pub trigger_identity: u64,
    pub b_sq_as_bound: u64,
    pub b_sq_path_bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    #[serde(rename = "M")]
    pub dim: usize,
    #[serde(rename = "planned_M")]
    pub planned_dim: usize,
    #[serde(rename = "baseline_M")]
    pub baseline_dim: usize,
    pub plan: PlanResult,
    pub strategy: String,
    pub n_trials: u64,
    pub n_valid: u64,
    pub invalid_trials: Vec<InvalidTrial>,
    pub failure: Proportion,
    pub guarantee: GuaranteeCheck,
    pub boundary_crossing: Proportion,
    /// `stopping_time_histogram[t]` counts trials with `τ = t`.
    pub stopping_time_histogram: Vec<u64>,
    pub never_stopped: u64,
    pub distortion_profile: Vec<ProfilePoint>,
    pub supermartingale: Vec<SupermartingaleEstimate>,
    pub mixture: MeanEstimate,
    pub invariant_violations: InvariantCounts,
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    /// Equality ignoring wall-clock time.
    pub fn same_results(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_clock_secs = other.wall_clock_secs;
        a == *other
    }
}

/// Folds trial outcomes in trial-index order.
pub fn aggregate(exp: &Experiment, outcomes: Vec<Result<TrialOutcome>>) -> ExperimentRun {
    let params = exp.params();
    let horizon = params.horizon;
    let mut records = Vec::with_capacity(outcomes.len());
    let mut traces = Vec::new();
    let mut invalid = Vec::new();
    let mut histogram = vec![0u64; horizon + 1];
    let mut never_stopped = 0;
    let mut profile_sum = vec![0.0; horizon + 1];
    let mut profile_max = vec![0.0f64; horizon + 1];
    let mut sm = vec![RunningMoments::new(); SUPERMARTINGALE_LAMBDAS.len()];
    let mut mixture = RunningMoments::new();
    let mut invariants = InvariantCounts::default();
    let (mut failures, mut crossings) = (0u64, 0u64);

    for (id, outcome) in outcomes.into_iter().enumerate() {
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                invalid.push(InvalidTrial {
                    trial_id: id as u64,
                    error: e.to_string(),
                });
                continue;
            }
        };
        let r = &outcome.record;
        failures += r.failed as u64;
        crossings += r.boundary_crossed as u64;
        match r.tau {
            Some(t) => histogram[t] += 1,
            None => never_stopped += 1,
        }
        for (t, &d) in outcome.distortions.iter().enumerate() {
            profile_sum[t] += d;
            profile_max[t] = profile_max[t].max(d);
        }
        for (m, &lambda) in sm.iter_mut().zip(&SUPERMARTINGALE_LAMBDAS) {
            m.push((lambda * r.final_a - lambda * lambda * r.final_b_sq / 2.0).exp());
        }
        mixture.push(mixture_value(r.final_a, r.final_b_sq, exp.plan.mixture_scale));
        invariants.trigger_identity += !r.trigger_identity_ok as u64;
        invariants.b_sq_as_bound += !r.b_sq_as_bound_ok as u64;
        invariants.b_sq_path_bound += !r.b_sq_path_bound_ok as u64;
        if let Some(trace) = outcome.trace {
            traces.push((r.trial_id, trace));
        }
        records.push(outcome.record);
    }

    let n_valid = records.len() as u64;
    let failure = wilson_interval(failures, n_valid, Z_95);
    let threshold = params.delta + 3.0 * binomial_se(params.delta, n_valid.max(1));
    let applies = exp.guarantee_applies();
    let report = ExperimentReport {
        config: exp.config.clone(),
        dim: exp.dim(),
        planned_dim: exp.planned_dim,
        baseline_dim: union_bound_baseline(params.eps, params.delta, horizon, params.c0)
            .unwrap_or(0),
        plan: exp.plan,
        strategy: exp.strategy.kind.name().to_string(),
        n_trials: exp.config.n_trials,
        n_valid,
        invalid_trials: invalid,
        failure,
        guarantee: GuaranteeCheck {
            delta: params.delta,
            threshold,
            applies,
            passed: !applies || failure.rate <= threshold,
        },
        boundary_crossing: wilson_interval(crossings, n_valid, Z_95),
        stopping_time_histogram: histogram,
        never_stopped,
        distortion_profile: (0..=horizon)
            .map(|t| ProfilePoint {
                t,
                mean: if n_valid > 0 { profile_sum[t] / n_valid as f64 } else { 0.0 },
                max: profile_max[t],
            })
            .collect(),
        supermartingale: SUPERMARTINGALE_LAMBDAS
            .iter()
            .zip(&sm)
            .map(|(&lambda, m)| SupermartingaleEstimate {
                lambda,
                estimate: m.summary(),
            })
            .collect(),
        mixture: mixture.summary(),
        invariant_violations: invariants,
        wall_clock_secs: 0.0,
    };
    ExperimentRun {
        report,
        records,
        traces,
    }
}
