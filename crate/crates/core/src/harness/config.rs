use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{StrategyConfig, StrategySpec};
use crate::bounds::{plan_dimension, plan_for_dimension, PlanParams, PlanResult};
use crate::distributions::SphereSampler;
use crate::sketch::DEFAULT_RECOMPUTE_EVERY;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    #[default]
    Sphere,
}

fn default_recompute_every() -> Option<usize> {
    Some(DEFAULT_RECOMPUTE_EVERY)
}

/// One Monte Carlo experiment, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plan: PlanParams,
    /// Run with this `M` instead of the planned one.
    #[serde(default, rename = "M_override", skip_serializing_if = "Option::is_none")]
    pub m_override: Option<usize>,
    pub strategy: StrategyConfig,
    pub n_trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub distribution: DistributionKind,
    /// Directory receiving `report.json`, `trials.csv` and traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Keep a full per-step trace for every N-th trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<u64>,
    /// Steps between direct recomputations of `Y`; `null` disables it.
    #[serde(default = "default_recompute_every")]
    pub recompute_every: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(plan: PlanParams, strategy: StrategyConfig, n_trials: u64, seed: u64) -> Self {
        Self {
            plan,
            m_override: None,
            strategy,
            n_trials,
            seed,
            distribution: DistributionKind::Sphere,
            output_dir: None,
            trace_every: None,
            recompute_every: default_recompute_every(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Validates the config and resolves the dimension and strategy.
    pub fn resolve(&self) -> Result<Experiment> {
        self.plan.validate()?;
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if self.trace_every == Some(0) {
            return Err(Error::Config("trace_every must be positive".into()));
        }
        let strategy = self.strategy.resolve(self.plan.c_x)?;
        if strategy.c_x > self.plan.c_x {
            return Err(Error::Config(format!(
                "strategy c_x = {} exceeds the planned square bound c_x = {}",
                strategy.c_x, self.plan.c_x
            )));
        }
        let planned = plan_dimension(&self.plan)?;
        let dim = self.m_override.unwrap_or(planned.dim);
        let plan = plan_for_dimension(&self.plan, dim)?;
        let sampler = match self.distribution {
            DistributionKind::Sphere => SphereSampler::new(dim)?,
        };
        Ok(Experiment {
            config: self.clone(),
            planned_dim: planned.dim,
            plan,
            strategy,
            sampler,
        })
    }
}

/// A validated experiment ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub planned_dim: usize,
    /// Derived quantities for the dimension actually used.
    pub plan: PlanResult,
    pub strategy: StrategySpec,
    pub sampler: SphereSampler,
}

impl Experiment {
    pub fn dim(&self) -> usize {
        self.plan.dim
    }

    pub fn params(&self) -> &PlanParams {
        &self.config.plan
    }

    /// Whether the dimension meets the planner's requirement.
    pub fn guarantee_applies(&self) -> bool {
        self.dim() >= self.planned_dim
    }
}

/// One point of a parameter sweep; unset fields inherit from the base config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, rename = "M_override", skip_serializing_if = "Option::is_none")]
    pub m_override: Option<usize>,
    /// `M = max(1, round(fraction * planned M))`.
    #[serde(default, rename = "M_fraction", skip_serializing_if = "Option::is_none")]
    pub m_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub points: Vec<SweepPoint>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Materializes each point into a full experiment config.
    pub fn expand(&self) -> Vec<Result<ExperimentConfig>> {
        self.points.iter().map(|p| self.expand_point(p)).collect()
    }

    fn expand_point(&self, point: &SweepPoint) -> Result<ExperimentConfig> {
        let mut cfg = self.base.clone();
        if let Some(eps) = point.eps {
            cfg.plan.eps = eps;
        }
        if let Some(delta) = point.delta {
            cfg.plan.delta = delta;
        }
        if let Some(t) = point.horizon {
            cfg.plan.horizon = t;
        }
        if let Some(strategy) = &point.strategy {
            cfg.strategy = strategy.clone();
        }
        if let Some(n) = point.n_trials {
            cfg.n_trials = n;
        }
        match (point.m_override, point.m_fraction) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "a sweep point may set M_override or M_fraction, not both".into(),
                ))
            }
            (Some(m), None) => cfg.m_override = Some(m),
            (None, Some(frac)) => {
                if !(frac > 0.0 && frac.is_finite()) {
                    return Err(Error::Config(format!("M_fraction must be positive, got {frac}")));
                }
                let planned = plan_dimension(&cfg.plan)?.dim as f64;
                cfg.m_override = Some(((frac * planned).round() as usize).max(1));
            }
            (None, None) => {}
        }
        Ok(cfg)
    }
}
