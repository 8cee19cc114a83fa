//! Experiment configuration, either as JSON or as `key = value` lines.
//!
//! ```text
//! # plan 1, contaminated last observation of subgroup 15
//! plan = 1
//! mu0 = 100
//! sigma0 = 5
//! replications = 20000
//! seed = 42
//! contamination = 15:last:100
//! methods = I,III
//! poolings = A,B,C
//! nk = 10
//! ```

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    plan_sizes, scenario_sizes, ContaminationSpec, ObservationIndex, RunLengthConfig, RunLengthMode,
    ScenarioConfig, DEFAULT_RL_CAP,
};
use crate::charts::{Method, DEFAULT_G};
use crate::error::{Error, Result};
use crate::pooling::PoolingType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sizes: Vec<usize>,
    pub mu0: f64,
    pub sigma0: f64,
    pub replications: u64,
    pub seed: u64,
    pub contamination: Option<ContaminationSpec>,
    pub methods: Vec<Method>,
    pub poolings: Vec<PoolingType>,
    pub nk: usize,
    pub g: f64,
    pub rl_cap: u64,
    pub percentile: f64,
    pub mode: RunLengthMode,
}

impl ExperimentConfig {
    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            sizes: self.sizes.clone(),
            mu0: self.mu0,
            sigma0: self.sigma0,
            replications: self.replications,
            master_seed: self.seed,
            contamination: self.contamination,
        }
    }

    pub fn run_length_config(&self) -> RunLengthConfig {
        RunLengthConfig {
            scenario: self.scenario(),
            n_k: self.nk,
            rl_cap: self.rl_cap,
            percentile: self.percentile,
            g: self.g,
            mode: self.mode,
        }
    }

    /// Every requested (method, pooling) pair.
    pub fn cells(&self) -> Vec<(Method, PoolingType)> {
        self.methods
            .iter()
            .flat_map(|&m| self.poolings.iter().map(move |&p| (m, p)))
            .collect()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    sizes: Option<Vec<usize>>,
    plan: Option<u8>,
    scenario: Option<char>,
    mu0: Option<f64>,
    sigma0: Option<f64>,
    replications: Option<u64>,
    seed: Option<u64>,
    contamination: Option<ContaminationSpec>,
    methods: Option<Vec<Method>>,
    poolings: Option<Vec<PoolingType>>,
    nk: Option<usize>,
    g: Option<f64>,
    rl_cap: Option<u64>,
    percentile: Option<f64>,
    mode: Option<RunLengthMode>,
}

impl Raw {
    fn resolve(self) -> Result<ExperimentConfig> {
        let given = [self.sizes.is_some(), self.plan.is_some(), self.scenario.is_some()];
        if given.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::invalid("config needs exactly one of `sizes`, `plan` or `scenario`"));
        }
        let sizes = match (self.sizes, self.plan, self.scenario) {
            (Some(s), _, _) => s,
            (_, Some(p), _) => plan_sizes(p)?,
            (_, _, Some(c)) => scenario_sizes(c)?,
            _ => unreachable!(),
        };
        let cfg = ExperimentConfig {
            sizes,
            mu0: self.mu0.unwrap_or(0.0),
            sigma0: self.sigma0.unwrap_or(1.0),
            replications: self.replications.unwrap_or(10_000),
            seed: self.seed.unwrap_or(0),
            contamination: self.contamination,
            methods: self.methods.unwrap_or_else(|| Method::ALL.to_vec()),
            poolings: self.poolings.unwrap_or_else(|| PoolingType::ABC.to_vec()),
            nk: self.nk.unwrap_or(10),
            g: self.g.unwrap_or(DEFAULT_G),
            rl_cap: self.rl_cap.unwrap_or(DEFAULT_RL_CAP),
            percentile: self.percentile.unwrap_or(99.0),
            mode: self.mode.unwrap_or_default(),
        };
        cfg.scenario().validate()?;
        if cfg.methods.is_empty() || cfg.poolings.is_empty() {
            return Err(Error::invalid("`methods` and `poolings` must not be empty"));
        }
        Ok(cfg)
    }
}

/// Parses a config; text starting with `{` is JSON, anything else `key = value`.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig> {
    let parse_err = |message: String| Error::Parse {
        path: origin.to_string(),
        message,
    };
    let raw = if text.trim_start().starts_with('{') {
        serde_json::from_str::<Raw>(text).map_err(|e| parse_err(e.to_string()))?
    } else {
        parse_key_values(text).map_err(parse_err)?
    };
    raw.resolve().map_err(|e| match e {
        Error::InvalidInput(m) => parse_err(m),
        other => other,
    })
}

fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| e.to_string()))
        .collect()
}

fn scalar<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| e.to_string())
}

fn contamination(v: &str) -> std::result::Result<ContaminationSpec, String> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let [sample, obs, delta] = parts[..] else {
        return Err("expected sample:observation:delta, e.g. 15:last:100".into());
    };
    let observation_index = if obs.eq_ignore_ascii_case("last") {
        ObservationIndex::LAST
    } else {
        ObservationIndex::At(scalar(obs)?)
    };
    Ok(ContaminationSpec {
        sample_index: scalar(sample)?,
        observation_index,
        delta: scalar(delta)?,
    })
}

fn parse_key_values(text: &str) -> std::result::Result<Raw, String> {
    let mut raw = Raw::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {lineno}: expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let field = |e: String| format!("line {lineno}, field `{key}`: {e}");
        match key {
            "sizes" => raw.sizes = Some(list(value).map_err(field)?),
            "plan" => raw.plan = Some(scalar(value).map_err(field)?),
            "scenario" => raw.scenario = Some(scalar(value).map_err(field)?),
            "mu0" => raw.mu0 = Some(scalar(value).map_err(field)?),
            "sigma0" => raw.sigma0 = Some(scalar(value).map_err(field)?),
            "replications" => raw.replications = Some(scalar(value).map_err(field)?),
            "seed" => raw.seed = Some(scalar(value).map_err(field)?),
            "contamination" => raw.contamination = Some(contamination(value).map_err(field)?),
            "methods" => raw.methods = Some(list(value).map_err(field)?),
            "poolings" => raw.poolings = Some(list(value).map_err(field)?),
            "nk" => raw.nk = Some(scalar(value).map_err(field)?),
            "g" => raw.g = Some(scalar(value).map_err(field)?),
            "rl_cap" => raw.rl_cap = Some(scalar(value).map_err(field)?),
            "percentile" => raw.percentile = Some(scalar(value).map_err(field)?),
            "mode" => {
                raw.mode = Some(match value.to_ascii_lowercase().as_str() {
                    "geometric" => RunLengthMode::Geometric,
                    "direct" => RunLengthMode::Direct,
                    other => return Err(field(format!("unknown mode {other:?}"))),
                })
            }
            other => return Err(format!("line {lineno}: unknown field `{other}`")),
        }
    }
    Ok(raw)
}
