//! The incremental sequential projection sketch.
//!
//! The state tracks `s_t = Σ x_i z_i`, `S_t = Σ x_i²` and the centered
//! deviation `Y_t = ‖s_t‖² - S_t`. Each step updates `Y` through
//!
//! ```text
//! Y_t - Y_{t-1} = 2 x_t <z_t, s_{t-1}> + x_t² (‖z_t‖² - 1)
//! ```
//!
//! so a step costs one inner product. The good event at step `t` is
//! `|Y_t| <= ε S_t`; the stopping time `τ` is the first step where it fails.

use serde::{Deserialize, Serialize};

use crate::distributions::{dot, ProjectionVector};
use crate::{Error, Result};

/// Default number of steps between direct recomputations of `Y`.
pub const DEFAULT_RECOMPUTE_EVERY: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SketchState {
    t: usize,
    projected: Vec<f64>,
    sum_sq: f64,
    deviation: f64,
    eps: f64,
    tau: Option<usize>,
    recompute_every: Option<usize>,
}

/// What happened on one call to [`SketchState::update`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Step index of the new state.
    pub t: usize,
    /// `Y_t - Y_{t-1}` as given by the recursion.
    pub y_increment: f64,
    /// `<z_t, s_{t-1}>`.
    pub inner: f64,
    /// Whether `|Y_t| <= ε S_t`.
    pub good: bool,
    /// `y_increment` while `t <= τ`, zero afterwards.
    pub stopped_increment: f64,
    /// True when `τ < t`, i.e. this step lies past the stopping time.
    pub stopped: bool,
    /// `S_{t-1}`.
    pub sum_sq_prev: f64,
}

impl SketchState {
    /// Starts a sketch at `t = 0` with `s = x0 z0`.
    ///
    /// `z0` need not be exactly unit-norm, but must satisfy
    /// `|‖z0‖² - 1| <= ε/2`, which keeps step 0 inside the good event.
    pub fn init(x0: f64, z0: &[f64], eps: f64) -> Result<Self> {
        if !(x0 != 0.0 && x0.is_finite()) {
            return Err(Error::InvalidParams(format!("x0 must be nonzero and finite, got {x0}")));
        }
        validate_eps(eps)?;
        if z0.is_empty() {
            return Err(Error::InvalidDimension("M must be at least 1".into()));
        }
        let z_norm_sq = dot(z0, z0);
        if !((z_norm_sq - 1.0).abs() <= eps / 2.0) {
            return Err(Error::Precondition(format!(
                "initial vector must satisfy |‖z0‖² - 1| <= ε/2, got ‖z0‖² = {z_norm_sq}"
            )));
        }
        let projected: Vec<f64> = z0.iter().map(|z| x0 * z).collect();
        let sum_sq = x0 * x0;
        let mut state = Self {
            t: 0,
            projected,
            sum_sq,
            deviation: sum_sq * (z_norm_sq - 1.0),
            eps,
            tau: None,
            recompute_every: Some(DEFAULT_RECOMPUTE_EVERY),
        };
        if !state.is_good() {
            state.tau = Some(0);
        }
        Ok(state)
    }

    /// Sets how often `Y` is recomputed from scratch; `None` disables it.
    pub fn with_recompute_every(mut self, every: Option<usize>) -> Self {
        self.recompute_every = every.filter(|&k| k > 0);
        self
    }

    /// Folds `(x_t, z_t)` into the sketch and advances `t`.
    pub fn update(&mut self, x: f64, z: &ProjectionVector) -> Result<StepOutcome> {
        self.update_raw(x, z.coords())
    }

    pub(crate) fn update_raw(&mut self, x: f64, z: &[f64]) -> Result<StepOutcome> {
        if z.len() != self.projected.len() {
            return Err(Error::DimensionMismatch {
                expected: self.projected.len(),
                got: z.len(),
            });
        }
        let mut inner = 0.0;
        let mut z_norm_sq = 0.0;
        for (&zi, si) in z.iter().zip(self.projected.iter_mut()) {
            inner += zi * *si;
            z_norm_sq += zi * zi;
            *si += x * zi;
        }
        let y_increment = 2.0 * x * inner + x * x * (z_norm_sq - 1.0);
        let sum_sq_prev = self.sum_sq;
        let stopped = self.tau.is_some();

        self.t += 1;
        self.sum_sq += x * x;
        self.deviation += y_increment;
        if let Some(k) = self.recompute_every {
            if self.t % k == 0 {
                self.deviation = self.direct_deviation();
            }
        }
        let good = self.is_good();
        if !good && self.tau.is_none() {
            self.tau = Some(self.t);
        }
        Ok(StepOutcome {
            t: self.t,
            y_increment,
            inner,
            good,
            stopped_increment: if stopped { 0.0 } else { y_increment },
            stopped,
            sum_sq_prev,
        })
    }

    /// Current step index.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.projected.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The running sum `s_t = Σ x_i z_i`.
    pub fn projected(&self) -> &[f64] {
        &self.projected
    }

    /// `‖s_t‖²`.
    pub fn projected_norm_sq(&self) -> f64 {
        dot(&self.projected, &self.projected)
    }

    /// `S_t = Σ x_i²`.
    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    /// `Y_t` as maintained by the recursion.
    pub fn deviation(&self) -> f64 {
        self.deviation
    }

    /// `Y_t` recomputed as `‖s_t‖² - S_t`.
    pub fn direct_deviation(&self) -> f64 {
        self.projected_norm_sq() - self.sum_sq
    }

    /// First step at which the good event failed, if any.
    pub fn tau(&self) -> Option<usize> {
        self.tau
    }

    pub fn is_good(&self) -> bool {
        self.deviation.abs() <= self.eps * self.sum_sq
    }

    /// Realized distortion `|Y_t| / S_t`; the sandwich
    /// `(1-ε) S_t <= ‖s_t‖² <= (1+ε) S_t` holds iff this is at most `ε`.
    pub fn distortion(&self) -> Result<f64> {
        distortion(self.deviation, self.sum_sq)
    }

    /// History length `t + 1`.
    pub fn history_len(&self) -> usize {
        self.t + 1
    }
}

fn validate_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// `|y| / sum_sq`.
pub fn distortion(deviation: f64, sum_sq: f64) -> Result<f64> {
    if !(sum_sq > 0.0) {
        return Err(Error::UndefinedDistortion);
    }
    Ok(deviation.abs() / sum_sq)
}

/// First index whose event failed, or `None` if every event held.
pub fn stopping_time(path: &[bool]) -> Option<usize> {
    path.iter().position(|good| !good)
}

/// Checks `{τ <= t} = ¬E_{t∧τ}` at every index of `path`, where `path[t]`
/// says whether the event at step `t` held and an absent `τ` counts as ∞.
pub fn check_trigger_identity(path: &[bool]) -> bool {
    let tau = stopping_time(path);
    (0..path.len()).all(|t| {
        let stopped_by_t = tau.is_some_and(|tau| tau <= t);
        let at = tau.map_or(t, |tau| tau.min(t));
        stopped_by_t == !path[at]
    })
}
