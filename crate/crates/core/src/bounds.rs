//! Dimension planning and the self-normalized concentration machinery.
//!
//! For the stopped increments `X_t = (Y_t - Y_{t-1}) 1{t <= τ}` the pair
//!
//! ```text
//! A_t = Σ X_i,    B_t² = Σ (4 c0 / M) x_i² (1 + ε) S_{i-1} 1{i <= τ}
//! ```
//!
//! makes `exp(λ A_t - λ² B_t² / 2)` a supermartingale with mean at most one.
//! Mixing over `λ ~ N(0, 1/L)` gives the closed form [`mixture_value`], and
//! Markov's inequality on it yields the anytime [`boundary`].

use serde::{Deserialize, Serialize};

use crate::sketch::StepOutcome;
use crate::{Error, Result};

/// Inputs of the dimension planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanParams {
    pub eps: f64,
    pub delta: f64,
    pub c0: f64,
    pub c_x: f64,
    pub x0_sq: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
}

impl PlanParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !unit(self.eps) {
            return Err(Error::InvalidParams(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !unit(self.delta) {
            return Err(Error::InvalidParams(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        for (name, v) in [("c0", self.c0), ("c_x", self.c_x), ("x0_sq", self.x0_sq)] {
            if !positive(v) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParams("T must be at least 1".into()));
        }
        Ok(())
    }

    /// `x0 = +sqrt(x0_sq)`.
    pub fn x0(&self) -> f64 {
        self.x0_sq.sqrt()
    }
}

/// Planner output for a given (or overridden) dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    #[serde(rename = "M")]
    pub dim: usize,
    /// Mixture precision `L_T = 2 c0 (1 + ε) x0⁴ / M`.
    #[serde(rename = "L_T")]
    pub mixture_scale: f64,
    /// Almost-sure bound on `B_T²` for a `c_x`-square-bounded stream.
    #[serde(rename = "B_sq_bound")]
    pub b_sq_as_bound: f64,
}

/// Ceiling that ignores floating-point noise just above an integer.
fn ceil_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Smallest `M` with `M >= 16 c0 (1+ε)/ε² · (ln(1/δ) + ln(1 + c_x T / x0²))`.
pub fn plan_dimension(p: &PlanParams) -> Result<PlanResult> {
    p.validate()?;
    let log_terms = -p.delta.ln() + (p.c_x * p.horizon as f64 / p.x0_sq).ln_1p();
    let required = 16.0 * p.c0 * (1.0 + p.eps) / (p.eps * p.eps) * log_terms;
    let dim = ceil_snapped(required).max(1.0);
    if !dim.is_finite() || dim > usize::MAX as f64 {
        return Err(Error::InvalidParams(format!("planned dimension overflows: {required}")));
    }
    plan_for_dimension(p, dim as usize)
}

/// Mixture scale and `B²` bound when running with a fixed dimension.
pub fn plan_for_dimension(p: &PlanParams, dim: usize) -> Result<PlanResult> {
    p.validate()?;
    if dim == 0 {
        return Err(Error::InvalidDimension("M must be at least 1".into()));
    }
    let m = dim as f64;
    let t = p.horizon as f64;
    Ok(PlanResult {
        dim,
        mixture_scale: 2.0 * p.c0 * (1.0 + p.eps) * p.x0_sq * p.x0_sq / m,
        b_sq_as_bound: 4.0 * p.c0 * (1.0 + p.eps) / m
            * (p.c_x * p.x0_sq * t + p.c_x * p.c_x * t * t / 2.0),
    })
}

/// Baseline dimension for a stream independent of the projections: a
/// per-step JL bound with union over `T + 1` steps,
/// `ceil(8 c0 / ε² · ln(2 (T + 1) / δ))`.
///
/// The constants are a convention for comparison plots, not a derived result.
pub fn union_bound_baseline(eps: f64, delta: f64, horizon: usize, c0: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0 && c0 > 0.0 && horizon >= 1) {
        return Err(Error::InvalidParams(format!(
            "baseline needs eps, delta in (0,1), c0 > 0, T >= 1; got ({eps}, {delta}, {horizon}, {c0})"
        )));
    }
    let v = 8.0 * c0 / (eps * eps) * (2.0 * (horizon as f64 + 1.0) / delta).ln();
    Ok(ceil_snapped(v) as usize)
}

/// `(4 c0 (1+ε) / M) (S - x0²) S`, the path-wise bound on `B²` at `S = S_{T∧τ}`.
pub fn b_sq_path_bound(c0: f64, eps: f64, dim: usize, stopped_sum_sq: f64, x0_sq: f64) -> f64 {
    4.0 * c0 * (1.0 + eps) / dim as f64 * (stopped_sum_sq - x0_sq) * stopped_sum_sq
}

/// Running `(A_t, B_t²)` of the stopped process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundAccumulator {
    pub a: f64,
    pub b_sq: f64,
    pub mixture_scale: f64,
    pub dim: usize,
    pub c0: f64,
    pub eps: f64,
}

impl BoundAccumulator {
    pub fn new(dim: usize, c0: f64, eps: f64, mixture_scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("M must be at least 1".into()));
        }
        if !(mixture_scale > 0.0) {
            return Err(Error::InvalidParams(format!("L must be positive, got {mixture_scale}")));
        }
        Ok(Self {
            a: 0.0,
            b_sq: 0.0,
            mixture_scale,
            dim,
            c0,
            eps,
        })
    }

    pub fn from_plan(plan: &PlanResult, params: &PlanParams) -> Result<Self> {
        Self::new(plan.dim, params.c0, params.eps, plan.mixture_scale)
    }

    /// `(C_t)² = (4 c0 / M) x_t² (1+ε) S_{t-1}` before the indicator.
    pub fn variance_increment(&self, x: f64, sum_sq_prev: f64) -> f64 {
        4.0 * self.c0 / self.dim as f64 * x * x * (1.0 + self.eps) * sum_sq_prev
    }

    /// Adds one step; `stopped` means the step lies past `τ`.
    pub fn accumulate(&mut self, stopped_increment: f64, x: f64, sum_sq_prev: f64, stopped: bool) {
        if stopped {
            return;
        }
        self.a += stopped_increment;
        self.b_sq += self.variance_increment(x, sum_sq_prev);
    }

    pub fn record(&mut self, outcome: &StepOutcome, x: f64) {
        self.accumulate(outcome.stopped_increment, x, outcome.sum_sq_prev, outcome.stopped);
    }

    /// `exp(λ A - λ² B² / 2)`.
    pub fn exponential_value(&self, lambda: f64) -> f64 {
        (lambda * self.a - lambda * lambda * self.b_sq / 2.0).exp()
    }

    pub fn mixture_value(&self) -> f64 {
        mixture_value(self.a, self.b_sq, self.mixture_scale)
    }

    pub fn boundary(&self, delta: f64) -> Result<f64> {
        boundary(self.b_sq, self.mixture_scale, delta)
    }

    /// `|A| > boundary(B², L, δ)`.
    pub fn crosses(&self, delta: f64) -> Result<bool> {
        Ok(self.a.abs() > self.boundary(delta)?)
    }
}

/// `sqrt(2 (B² + L) ln((1/δ) sqrt((B² + L) / L)))`.
pub fn boundary(b_sq: f64, mixture_scale: f64, delta: f64) -> Result<f64> {
    if !(mixture_scale > 0.0) || !mixture_scale.is_finite() {
        return Err(Error::InvalidParams(format!("L must be positive, got {mixture_scale}")));
    }
    if !(b_sq >= 0.0) {
        return Err(Error::InvalidParams(format!("B² must be nonnegative, got {b_sq}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!("delta must lie in (0, 1), got {delta}")));
    }
    let total = b_sq + mixture_scale;
    let log_arg = -delta.ln() + 0.5 * (total / mixture_scale).ln();
    Ok((2.0 * total * log_arg.max(0.0)).sqrt())
}

/// `ln` of [`mixture_value`]; finite even when the value itself overflows.
pub fn log_mixture_value(a: f64, b_sq: f64, mixture_scale: f64) -> f64 {
    let total = mixture_scale + b_sq;
    0.5 * (mixture_scale / total).ln() + a * a / (2.0 * total)
}

/// `∫ exp(λA - λ²B²/2) dN(0, 1/L)(λ) = sqrt(L / (L + B²)) exp(A² / (2 (L + B²)))`.
pub fn mixture_value(a: f64, b_sq: f64, mixture_scale: f64) -> f64 {
    log_mixture_value(a, b_sq, mixture_scale).exp()
}
