//! Projection-vector samplers and the distributional oracles behind them.
//!
//! The uniform law on `S^{M-1}` is drawn by normalizing `M` independent
//! standard normals. Its one-dimensional marginals are `2 Beta(a, a) - 1`
//! with `a = (M - 1) / 2`, which gives an analytic reference CDF for
//! goodness-of-fit tests and a variance of exactly `1 / M`.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::stats::{self, KsResult, RunningMoments};
use crate::{Error, Result};

/// Relative tolerance on `‖z‖ = 1` for a [`ProjectionVector`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Raw Gaussian draws with a norm below this are redrawn.
const MIN_RAW_NORM: f64 = 1e-300;

/// A unit-norm direction in `R^M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionVector {
    coords: Vec<f64>,
}

impl ProjectionVector {
    /// Wraps `coords`, checking `M >= 1` and `|‖coords‖ - 1| <= 1e-12`.
    pub fn from_unit(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension("M must be at least 1".into()));
        }
        let norm = l2_norm(&coords);
        if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
            return Err(Error::Precondition(format!(
                "projection vector must have unit norm, got {norm}"
            )));
        }
        Ok(Self { coords })
    }

    /// Normalizes `coords` to unit length.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        let norm = l2_norm(&coords);
        if coords.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Precondition(
                "cannot normalize an empty, zero or non-finite vector".into(),
            ));
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(Self { coords })
    }

    /// Standard basis vector `e_index` in `R^dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 || index >= dim {
            return Err(Error::InvalidDimension(format!(
                "basis index {index} out of range for M = {dim}"
            )));
        }
        let mut coords = vec![0.0; dim];
        coords[index] = 1.0;
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.coords, &self.coords)
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.coords, other)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }
}

impl AsRef<[f64]> for ProjectionVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Draws a uniform point on `S^{M-1}`.
pub fn sample_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ProjectionVector> {
    if dim == 0 {
        return Err(Error::InvalidDimension("M must be at least 1".into()));
    }
    let mut coords = vec![0.0; dim];
    fill_sphere(&mut coords, rng);
    Ok(ProjectionVector { coords })
}

/// Overwrites `buf` with a uniform point on the sphere of dimension `buf.len()`.
pub(crate) fn fill_sphere<R: Rng + ?Sized>(buf: &mut [f64], rng: &mut R) {
    loop {
        let mut sq = 0.0;
        for c in buf.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *c = g;
            sq += g * g;
        }
        let norm = sq.sqrt();
        if norm >= MIN_RAW_NORM {
            buf.iter_mut().for_each(|c| *c /= norm);
            return;
        }
    }
}

/// Variance proxy of a `sqrt(c0 / M)`-sub-Gaussian vector law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubGaussianSpec {
    pub c0: f64,
    pub dim: usize,
}

impl SubGaussianSpec {
    pub fn new(c0: f64, dim: usize) -> Result<Self> {
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(Error::InvalidParams(format!("c0 must be positive, got {c0}")));
        }
        if dim == 0 {
            return Err(Error::InvalidDimension("M must be at least 1".into()));
        }
        Ok(Self { c0, dim })
    }

    /// The uniform sphere is `sqrt(1/M)`-sub-Gaussian.
    pub fn sphere(dim: usize) -> Result<Self> {
        Self::new(1.0, dim)
    }

    pub fn sigma_sq(&self) -> f64 {
        self.c0 / self.dim as f64
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_sq().sqrt()
    }
}

/// A source of projection vectors of a fixed dimension.
pub trait ProjectionSampler: Sync {
    fn dim(&self) -> usize;

    fn sample_into(&self, buf: &mut [f64], rng: &mut dyn rand::RngCore);

    fn sample(&self, rng: &mut dyn rand::RngCore) -> ProjectionVector {
        let mut coords = vec![0.0; self.dim()];
        self.sample_into(&mut coords, rng);
        ProjectionVector { coords }
    }
}

/// Uniform distribution on the unit sphere `S^{M-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereSampler {
    dim: usize,
}

impl SphereSampler {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("M must be at least 1".into()));
        }
        Ok(Self { dim })
    }
}

impl ProjectionSampler for SphereSampler {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_into(&self, buf: &mut [f64], rng: &mut dyn rand::RngCore) {
        debug_assert_eq!(buf.len(), self.dim);
        fill_sphere(buf, rng);
    }
}

/// Shape parameters of a Beta law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaLawParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaLawParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "Beta parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    pub fn cdf(&self, y: f64) -> f64 {
        stats::beta_cdf(self.alpha, self.beta, y)
    }
}

/// Law of `<z, v>` for `z` uniform on `S^{M-1}`: `scale * Beta(a, a) + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerProductLaw {
    pub beta: BetaLawParams,
    pub scale: f64,
    pub shift: f64,
}

impl InnerProductLaw {
    /// Maps a Beta draw `y` to the inner-product scale.
    pub fn map(&self, y: f64) -> f64 {
        self.scale * y + self.shift
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.beta.cdf((x - self.shift) / self.scale)
    }

    pub fn mean(&self) -> f64 {
        self.map(self.beta.mean())
    }

    pub fn variance(&self) -> f64 {
        self.scale * self.scale * self.beta.variance()
    }
}

/// `<z, v> ~ 2 Beta((M-1)/2, (M-1)/2) - 1` for `M >= 2`.
pub fn inner_product_law(dim: usize) -> Result<InnerProductLaw> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "the inner-product law is a Beta law only for M >= 2 (got {dim}); M = 1 is the two-point law"
        )));
    }
    let a = (dim as f64 - 1.0) / 2.0;
    Ok(InnerProductLaw {
        beta: BetaLawParams { alpha: a, beta: a },
        scale: 2.0,
        shift: -1.0,
    })
}

/// One row of an MGF check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfEntry {
    pub lambda: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfReport {
    pub n_samples: usize,
    pub slack_se: f64,
    pub entries: Vec<MgfEntry>,
}

impl MgfReport {
    pub fn violations(&self) -> usize {
        self.entries.iter().filter(|e| !e.passed).count()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

/// Number of standard errors of Monte Carlo slack allowed by the MGF checks.
pub const MGF_SLACK_SE: f64 = 3.0;

/// The λ grid used by the default MGF checks.
pub const DEFAULT_LAMBDA_GRID: [f64; 9] = [-5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0];

fn mgf_report(
    samples: impl Iterator<Item = f64>,
    lambdas: &[f64],
    n: usize,
    bound_for: impl Fn(f64) -> f64,
) -> MgfReport {
    let mut moments = vec![RunningMoments::new(); lambdas.len()];
    for x in samples {
        for (m, &lambda) in moments.iter_mut().zip(lambdas) {
            m.push((lambda * x).exp());
        }
    }
    let entries = lambdas
        .iter()
        .zip(&moments)
        .map(|(&lambda, m)| {
            let bound = bound_for(lambda);
            let (empirical, std_error) = (m.mean(), m.std_error());
            MgfEntry {
                lambda,
                empirical,
                std_error,
                bound,
                passed: empirical <= bound + MGF_SLACK_SE * std_error,
            }
        })
        .collect();
    MgfReport {
        n_samples: n,
        slack_se: MGF_SLACK_SE,
        entries,
    }
}

/// Monte Carlo check of `E exp(λ(X - EX)) <= exp(λ² Var X / 2)` for `X ~ Beta(α, β)`, `α >= β`.
pub fn check_beta_mgf<R: Rng + ?Sized>(
    params: BetaLawParams,
    lambdas: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<MgfReport> {
    if !(params.alpha >= params.beta && params.beta > 0.0) {
        return Err(Error::Precondition(format!(
            "the Beta MGF bound requires alpha >= beta > 0, got ({}, {})",
            params.alpha, params.beta
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParams("n_samples must be positive".into()));
    }
    let law = Beta::new(params.alpha, params.beta)
        .map_err(|e| Error::InvalidParams(format!("Beta({}, {}): {e}", params.alpha, params.beta)))?;
    let (mean, var) = (params.mean(), params.variance());
    let samples = (0..n_samples).map(|_| law.sample(rng) - mean);
    Ok(mgf_report(samples, lambdas, n_samples, |l| {
        (l * l * var / 2.0).exp()
    }))
}

/// Monte Carlo check of `E exp(λ<z, v>) <= exp(λ² σ² / 2)` for `z` drawn from `sampler`.
pub fn check_subgaussian_mgf(
    sampler: &dyn ProjectionSampler,
    spec: SubGaussianSpec,
    direction: &[f64],
    lambdas: &[f64],
    n_samples: usize,
    rng: &mut dyn rand::RngCore,
) -> Result<MgfReport> {
    check_direction(sampler.dim(), direction)?;
    if spec.dim != sampler.dim() {
        return Err(Error::DimensionMismatch {
            expected: sampler.dim(),
            got: spec.dim,
        });
    }
    if n_samples == 0 {
        return Err(Error::InvalidParams("n_samples must be positive".into()));
    }
    let sigma_sq = spec.sigma_sq();
    let samples = inner_product_samples(sampler, direction, n_samples, rng)?;
    Ok(mgf_report(samples.into_iter(), lambdas, n_samples, |l| {
        (l * l * sigma_sq / 2.0).exp()
    }))
}

fn check_direction(dim: usize, direction: &[f64]) -> Result<()> {
    if direction.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: direction.len(),
        });
    }
    let norm = l2_norm(direction);
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(Error::Precondition(format!(
            "direction must have unit norm, got {norm}"
        )));
    }
    Ok(())
}

/// Draws `n` values of `<z, v>`.
pub fn inner_product_samples(
    sampler: &dyn ProjectionSampler,
    direction: &[f64],
    n: usize,
    rng: &mut dyn rand::RngCore,
) -> Result<Vec<f64>> {
    check_direction(sampler.dim(), direction)?;
    let mut buf = vec![0.0; sampler.dim()];
    Ok((0..n)
        .map(|_| {
            sampler.sample_into(&mut buf, rng);
            dot(&buf, direction)
        })
        .collect())
}

/// Goodness-of-fit summary for the inner-product law of the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereLawCheck {
    pub dim: usize,
    pub n_samples: usize,
    pub ks: KsResult,
    pub significance: f64,
    pub ks_passed: bool,
    pub sample_mean: f64,
    pub mean_std_error: f64,
    pub sample_variance: f64,
    pub variance_std_error: f64,
    pub expected_variance: f64,
    pub variance_passed: bool,
}

impl SphereLawCheck {
    pub fn passed(&self) -> bool {
        self.ks_passed && self.variance_passed
    }
}

/// KS test of `<z, v>` against `2 Beta((M-1)/2, (M-1)/2) - 1` and a 3-SE check of its variance.
pub fn check_sphere_law(
    dim: usize,
    direction: &[f64],
    n_samples: usize,
    significance: f64,
    rng: &mut dyn rand::RngCore,
) -> Result<SphereLawCheck> {
    let law = inner_product_law(dim)?;
    if n_samples < 2 {
        return Err(Error::InvalidParams("need at least two samples".into()));
    }
    let sampler = SphereSampler::new(dim)?;
    let xs = inner_product_samples(&sampler, direction, n_samples, rng)?;
    let ks = stats::ks_test(&xs, |x| law.cdf(x));

    let first: RunningMoments = xs.iter().copied().collect();
    let mean = first.mean();
    let squared: RunningMoments = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let nf = n_samples as f64;
    let sample_variance = first.variance();
    // SE of the sample variance from the spread of squared deviations.
    let variance_std_error = squared.std_error() * nf / (nf - 1.0);
    let expected_variance = law.variance();
    Ok(SphereLawCheck {
        dim,
        n_samples,
        ks,
        significance,
        ks_passed: !ks.rejects(significance),
        sample_mean: mean,
        mean_std_error: first.std_error(),
        sample_variance,
        variance_std_error,
        expected_variance,
        variance_passed: (sample_variance - expected_variance).abs() <= 3.0 * variance_std_error,
    })
}
