//! wasm-bindgen entry points for the browser demo in `www/`.
//!
//! Each export returns a JSON string; the page parses it and draws on a
//! canvas. The `*_json` functions hold the logic so they can be tested on
//! the host.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use seqproj::adversary::StrategyConfig;
use seqproj::bounds::{plan_dimension, union_bound_baseline, PlanParams};
use seqproj::distributions::{inner_product_law, inner_product_samples, ProjectionVector, SphereSampler};
use seqproj::harness::{run_trial, ExperimentConfig};

#[derive(Serialize)]
struct PlanView {
    #[serde(rename = "M")]
    dim: usize,
    #[serde(rename = "L_T")]
    mixture_scale: f64,
    #[serde(rename = "B_sq_bound")]
    b_sq_bound: f64,
    #[serde(rename = "baseline_M")]
    baseline: usize,
}

pub fn plan_json(eps: f64, delta: f64, c0: f64, c_x: f64, x0_sq: f64, horizon: usize) -> Result<String, String> {
    let p = PlanParams {
        eps,
        delta,
        c0,
        c_x,
        x0_sq,
        horizon,
    };
    let r = plan_dimension(&p).map_err(|e| e.to_string())?;
    let baseline = union_bound_baseline(eps, delta, horizon, c0).map_err(|e| e.to_string())?;
    let view = PlanView {
        dim: r.dim,
        mixture_scale: r.mixture_scale,
        b_sq_bound: r.b_sq_as_bound,
        baseline,
    };
    Ok(serde_json::to_string(&view).expect("plan view serializes"))
}

#[derive(Serialize)]
struct PathView {
    #[serde(rename = "M")]
    dim: usize,
    planned_m: usize,
    eps: f64,
    tau: Option<usize>,
    failed: bool,
    crossing_step: Option<usize>,
    t: Vec<usize>,
    distortion: Vec<f64>,
    a: Vec<f64>,
    boundary: Vec<f64>,
    x: Vec<f64>,
}

/// Simulates one path; `dim = 0` uses the planned dimension.
#[allow(clippy::too_many_arguments)]
pub fn simulate_path_json(
    eps: f64,
    delta: f64,
    c_x: f64,
    horizon: usize,
    dim: usize,
    strategy: &str,
    seed: u64,
) -> Result<String, String> {
    let plan = PlanParams {
        eps,
        delta,
        c0: 1.0,
        c_x,
        x0_sq: 1.0,
        horizon,
    };
    let mut cfg = ExperimentConfig::new(plan, StrategyConfig::named(strategy), 1, seed);
    cfg.m_override = (dim > 0).then_some(dim);
    let exp = cfg.resolve().map_err(|e| e.to_string())?;
    let out = run_trial(&exp, 0, true).map_err(|e| e.to_string())?;
    let trace = out.trace.unwrap_or_default();
    let view = PathView {
        dim: exp.dim(),
        planned_m: exp.planned_dim,
        eps,
        tau: out.record.tau,
        failed: out.record.failed,
        crossing_step: out.record.crossing_step,
        t: trace.iter().map(|r| r.t).collect(),
        distortion: trace.iter().map(|r| r.distortion).collect(),
        a: trace.iter().map(|r| r.a).collect(),
        boundary: trace.iter().map(|r| r.boundary).collect(),
        x: trace.iter().map(|r| r.x).collect(),
    };
    Ok(serde_json::to_string(&view).expect("path view serializes"))
}

#[derive(Serialize)]
struct HistogramView {
    #[serde(rename = "M")]
    dim: usize,
    n: usize,
    edges: Vec<f64>,
    observed: Vec<u64>,
    expected: Vec<f64>,
    sample_variance: f64,
    expected_variance: f64,
}

/// Histogram of `<z, e1>` for `z` uniform on `S^{M-1}` beside the Beta-law expectation.
pub fn sphere_histogram_json(dim: usize, n: usize, bins: usize, seed: u64) -> Result<String, String> {
    if bins == 0 || n == 0 {
        return Err("bins and n must be positive".into());
    }
    let law = inner_product_law(dim).map_err(|e| e.to_string())?;
    let sampler = SphereSampler::new(dim).map_err(|e| e.to_string())?;
    let e1 = ProjectionVector::basis(dim, 0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = inner_product_samples(&sampler, e1.coords(), n, &mut rng).map_err(|e| e.to_string())?;

    let width = 2.0 / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| -1.0 + i as f64 * width).collect();
    let mut observed = vec![0u64; bins];
    for &x in &xs {
        let i = (((x + 1.0) / width) as usize).min(bins - 1);
        observed[i] += 1;
    }
    let expected = edges
        .windows(2)
        .map(|w| n as f64 * (law.cdf(w[1]) - law.cdf(w[0])))
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sample_variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    let view = HistogramView {
        dim,
        n,
        edges,
        observed,
        expected,
        sample_variance,
        expected_variance: law.variance(),
    };
    Ok(serde_json::to_string(&view).expect("histogram view serializes"))
}

#[wasm_bindgen]
pub fn plan(eps: f64, delta: f64, c0: f64, c_x: f64, x0_sq: f64, horizon: usize) -> Result<String, JsError> {
    plan_json(eps, delta, c0, c_x, x0_sq, horizon).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate_path(
    eps: f64,
    delta: f64,
    c_x: f64,
    horizon: usize,
    dim: usize,
    strategy: &str,
    seed: u64,
) -> Result<String, JsError> {
    simulate_path_json(eps, delta, c_x, horizon, dim, strategy, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sphere_histogram(dim: usize, n: usize, bins: usize, seed: u64) -> Result<String, JsError> {
    sphere_histogram_json(dim, n, bins, seed).map_err(|e| JsError::new(&e))
}
