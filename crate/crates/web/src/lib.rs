//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain strings and numbers and returns a JSON string, so
//! the page needs nothing beyond the generated glue.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use robust_xbar::io::parse_dataset;
use robust_xbar::simulation::{plan_sizes, run_length_study, RunLengthConfig, ScenarioConfig};
use robust_xbar::{
    control_limits, phase1_estimate, sensitivity_sweep, svg, ControlLimits, FactorTable, Method, PoolingType,
    SensitivitySweepSpec, SweepPlacement,
};

#[derive(Serialize)]
struct LimitsOut {
    method: Method,
    pooling: PoolingType,
    mu_hat: f64,
    sigma_hat: f64,
    limits: ControlLimits,
    subgroup_ids: Vec<String>,
    subgroup_means: Vec<f64>,
    svg: String,
}

#[derive(Serialize)]
struct SweepRow {
    delta: f64,
    method: Method,
    lcl: f64,
    cl: f64,
    ucl: f64,
}

#[derive(Serialize)]
struct SweepOut {
    rows: Vec<SweepRow>,
    /// UCL range (max − min) per method, in method order.
    ucl_ranges: Vec<(Method, f64)>,
    svg: String,
}

#[derive(Serialize)]
struct RunLengthOut {
    arl: f64,
    sdrl: f64,
    prl: f64,
    percentile: f64,
    skewness: f64,
    censored: u64,
    replications: u64,
    arl_std_error: f64,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn limits_json(csv: &str, method: &str, pooling: &str, nk: usize, g: f64) -> Result<String, String> {
    let samples = parse_dataset(csv, "input").map_err(|e| e.to_string())?;
    let method: Method = method.parse().map_err(|e: robust_xbar::Error| e.to_string())?;
    let pooling: PoolingType = pooling.parse().map_err(|e: robust_xbar::Error| e.to_string())?;
    let est = phase1_estimate(&samples, method, pooling, FactorTable::builtin()).map_err(|e| e.to_string())?;
    let limits = control_limits(&est, nk, g).map_err(|e| e.to_string())?;
    let means: Vec<f64> = samples
        .iter()
        .map(|s| s.values().iter().sum::<f64>() / s.n() as f64)
        .collect();
    let title = format!("Method {method} / pooling {pooling}, n_k = {nk}");
    to_json(&LimitsOut {
        method,
        pooling,
        mu_hat: est.mu_hat,
        sigma_hat: est.sigma_hat,
        limits,
        subgroup_ids: samples.iter().map(|s| s.id.clone()).collect(),
        svg: svg::xbar_chart(&means, &limits, &title),
        subgroup_means: means,
    })
}

/// `replace_observation` of 0 appends the swept value instead of overwriting.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity_json(
    csv: &str,
    sample: usize,
    start: f64,
    stop: f64,
    step: f64,
    replace_observation: usize,
    pooling: &str,
    nk: usize,
) -> Result<String, String> {
    let samples = parse_dataset(csv, "input").map_err(|e| e.to_string())?;
    let pooling: PoolingType = pooling.parse().map_err(|e: robust_xbar::Error| e.to_string())?;
    let spec = SensitivitySweepSpec {
        start,
        stop,
        step,
        sample_index: sample,
        placement: match replace_observation {
            0 => SweepPlacement::Append,
            i => SweepPlacement::Replace { observation_index: i },
        },
        methods: Method::ALL.to_vec(),
        pooling,
        n_k: nk,
        g: robust_xbar::DEFAULT_G,
    };
    let rows = sensitivity_sweep(&samples, &spec, FactorTable::builtin()).map_err(|e| e.to_string())?;
    let ucl_ranges = Method::ALL
        .iter()
        .map(|&m| {
            let (lo, hi) = rows
                .iter()
                .filter(|r| r.method == m)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.limits.ucl), hi.max(r.limits.ucl)));
            (m, hi - lo)
        })
        .collect();
    let title = format!("Limits vs value placed in subgroup {sample}");
    to_json(&SweepOut {
        svg: svg::sensitivity_chart(&rows, &title),
        ucl_ranges,
        rows: rows
            .iter()
            .map(|r| SweepRow {
                delta: r.delta,
                method: r.method,
                lcl: r.limits.lcl,
                cl: r.limits.cl,
                ucl: r.limits.ucl,
            })
            .collect(),
    })
}

pub fn run_length_json(
    plan: u8,
    method: &str,
    pooling: &str,
    replications: u64,
    seed: u64,
    nk: usize,
) -> Result<String, String> {
    let method: Method = method.parse().map_err(|e: robust_xbar::Error| e.to_string())?;
    let pooling: PoolingType = pooling.parse().map_err(|e: robust_xbar::Error| e.to_string())?;
    let scenario = ScenarioConfig {
        sizes: plan_sizes(plan).map_err(|e| e.to_string())?,
        mu0: 0.0,
        sigma0: 1.0,
        replications,
        master_seed: seed,
        contamination: None,
    };
    let cell = run_length_study(&RunLengthConfig::new(scenario, nk), method, pooling, FactorTable::builtin())
        .map_err(|e| e.to_string())?;
    let s = cell.summary;
    to_json(&RunLengthOut {
        arl_std_error: s.arl_std_error(),
        arl: s.arl,
        sdrl: s.sdrl,
        prl: s.prl,
        percentile: s.percentile,
        skewness: s.skewness,
        censored: s.censored_count,
        replications: s.replications,
    })
}

#[wasm_bindgen]
pub fn limits(csv: &str, method: &str, pooling: &str, nk: usize, g: f64) -> Result<String, JsValue> {
    limits_json(csv, method, pooling, nk, g).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn sensitivity(
    csv: &str,
    sample: usize,
    start: f64,
    stop: f64,
    step: f64,
    replace_observation: usize,
    pooling: &str,
    nk: usize,
) -> Result<String, JsValue> {
    sensitivity_json(csv, sample, start, stop, step, replace_observation, pooling, nk).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn run_length(plan: u8, method: &str, pooling: &str, replications: u32, seed: u32, nk: usize) -> Result<String, JsValue> {
    run_length_json(plan, method, pooling, replications as u64, seed as u64, nk).map_err(|e| JsValue::from_str(&e))
}
