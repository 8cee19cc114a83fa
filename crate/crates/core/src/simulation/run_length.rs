use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{summarize_run_lengths, to_subgroups, RunLengthSummary, ScenarioConfig};
use crate::charts::{signal_probability, ControlLimits, Method, SubgroupStats, DEFAULT_G};
use crate::error::{Error, Result};
use crate::estimators::Scratch;
use crate::factors::FactorTable;
use crate::parallel::{self, domain};
use crate::pooling::PoolingType;

pub const DEFAULT_RL_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunLengthMode {
    /// Conditional on the Phase-I limits the run length is geometric; draw it directly.
    #[default]
    Geometric,
    /// Simulate every Phase-II subgroup mean until a signal.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthConfig {
    pub scenario: ScenarioConfig,
    pub n_k: usize,
    pub rl_cap: u64,
    /// PRL percentile in percent.
    pub percentile: f64,
    pub g: f64,
    pub mode: RunLengthMode,
}

impl RunLengthConfig {
    pub fn new(scenario: ScenarioConfig, n_k: usize) -> Self {
        RunLengthConfig {
            scenario,
            n_k,
            rl_cap: DEFAULT_RL_CAP,
            percentile: 99.0,
            g: DEFAULT_G,
            mode: RunLengthMode::Geometric,
        }
    }

    fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.n_k == 0 {
            return Err(Error::invalid("n_k must be at least 1"));
        }
        if self.rl_cap == 0 {
            return Err(Error::invalid("rl_cap must be at least 1"));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::invalid("g must be positive"));
        }
        if !(0.0..=100.0).contains(&self.percentile) {
            return Err(Error::invalid("percentile must lie in [0, 100]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthCell {
    pub method: Method,
    pub pooling: PoolingType,
    #[serde(flatten)]
    pub summary: RunLengthSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthGrid {
    pub config: RunLengthConfig,
    pub cells: Vec<RunLengthCell>,
}

impl RunLengthGrid {
    pub fn cell(&self, method: Method, pooling: PoolingType) -> Option<&RunLengthCell> {
        self.cells.iter().find(|c| c.method == method && c.pooling == pooling)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,pooling,arl,sdrl,prl,percentile,skewness,censored,replications\n");
        for c in &self.cells {
            let s = &c.summary;
            out.push_str(&format!(
                "{},{},{:.4},{:.4},{:.4},{},{:.6},{},{}\n",
                c.method, c.pooling, s.arl, s.sdrl, s.prl, s.percentile, s.skewness, s.censored_count, s.replications
            ));
        }
        out
    }
}

/// Run length with per-subgroup signal probability `p`, capped at `cap`.
fn draw_run_length<R: Rng + ?Sized>(
    rng: &mut R,
    limits: &ControlLimits,
    mu: f64,
    sigma: f64,
    p: f64,
    cap: u64,
    mode: RunLengthMode,
) -> (u64, bool) {
    match mode {
        RunLengthMode::Geometric => {
            if p >= 1.0 {
                return (1, false);
            }
            if p <= 0.0 {
                return (cap, true);
            }
            let u = 1.0 - rng.random::<f64>();
            let rl = (u.ln() / (-p).ln_1p()).ceil().max(1.0);
            if rl > cap as f64 {
                (cap, true)
            } else {
                (rl as u64, false)
            }
        }
        RunLengthMode::Direct => {
            let se = sigma / (limits.n_k as f64).sqrt();
            for t in 1..=cap {
                let z: f64 = StandardNormal.sample(rng);
                if !limits.contains(mu + se * z) {
                    return (t, false);
                }
            }
            (cap, true)
        }
    }
}

/// In-control run-length distribution of every (method, pooling) cell, with
/// every cell of a replication sharing the same Phase-I data.
pub fn run_length_grid(
    config: &RunLengthConfig,
    cells: &[(Method, PoolingType)],
    table: &FactorTable,
) -> Result<RunLengthGrid> {
    config.validate()?;
    if cells.is_empty() {
        return Err(Error::invalid("no (method, pooling) cells requested"));
    }
    let sc = &config.scenario;
    if sc.sizes.iter().any(|&n| n < 2) {
        return Err(Error::invalid("run-length studies need Phase-I subgroup sizes >= 2"));
    }
    let offset = sc.contamination.map(|c| c.offset(&sc.sizes)).transpose()?;
    let mut methods: Vec<Method> = cells.iter().map(|c| c.0).collect();
    methods.sort();
    methods.dedup();

    let per_rep = |r: u64| -> Result<Vec<(u64, bool)>> {
        let mut rng = parallel::stream(sc.master_seed, domain::PHASE1, r);
        let mut flat = Vec::with_capacity(sc.total());
        sc.draw_into(&mut rng, &mut flat);
        if let (Some(off), Some(c)) = (offset, sc.contamination) {
            flat[off] += c.delta;
        }
        let samples = to_subgroups(&flat, &sc.sizes);
        let mut scratch = Scratch::default();
        let stats = methods
            .iter()
            .map(|m| SubgroupStats::compute(&samples, m.location(), m.scale(), table, &mut scratch))
            .collect::<Result<Vec<_>>>()?;
        cells
            .iter()
            .map(|&(method, pooling)| {
                let st = &stats[methods.binary_search(&method).expect("method listed")];
                let (mu, sigma) = st.pool(method.location(), method.scale(), pooling, &samples, table)?;
                let limits = ControlLimits::known(mu, sigma.max(0.0), config.n_k, config.g)?;
                let p = if sigma > 0.0 {
                    signal_probability(&limits, sc.mu0, sc.sigma0, config.n_k)?
                } else {
                    // zero-width limits: any continuous Phase-II mean signals
                    1.0
                };
                let index = r * 16 + method as u64 * 4 + pooling as u64;
                let mut rl_rng = parallel::stream(sc.master_seed, domain::RUN_LENGTH, index);
                Ok(draw_run_length(&mut rl_rng, &limits, sc.mu0, sc.sigma0, p, config.rl_cap, config.mode))
            })
            .collect()
    };
    let per_rep_results = parallel::map_indices(sc.replications, per_rep)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let out = cells
        .iter()
        .enumerate()
        .map(|(i, &(method, pooling))| {
            let (rls, censored): (Vec<u64>, Vec<bool>) = per_rep_results.iter().map(|v| v[i]).unzip();
            Ok(RunLengthCell {
                method,
                pooling,
                summary: summarize_run_lengths(&rls, &censored, config.percentile)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunLengthGrid {
        config: config.clone(),
        cells: out,
    })
}

/// Single-cell convenience wrapper around [`run_length_grid`].
pub fn run_length_study(
    config: &RunLengthConfig,
    method: Method,
    pooling: PoolingType,
    table: &FactorTable,
) -> Result<RunLengthCell> {
    let mut grid = run_length_grid(config, &[(method, pooling)], table)?;
    Ok(grid.cells.remove(0))
}

/// Run lengths of the chart with known parameters, limits 0 ± g/√n_k.
pub fn known_limits_study(
    n_k: usize,
    g: f64,
    replications: u64,
    master_seed: u64,
    rl_cap: u64,
    mode: RunLengthMode,
) -> Result<RunLengthSummary> {
    if replications == 0 || rl_cap == 0 {
        return Err(Error::invalid("replications and rl_cap must be at least 1"));
    }
    let limits = ControlLimits::known(0.0, 1.0, n_k, g)?;
    let p = signal_probability(&limits, 0.0, 1.0, n_k)?;
    let (rls, censored): (Vec<u64>, Vec<bool>) = parallel::map_indices(replications, |r| {
        let mut rng = parallel::stream(master_seed, domain::KNOWN_LIMITS, r);
        draw_run_length(&mut rng, &limits, 0.0, 1.0, p, rl_cap, mode)
    })
    .into_iter()
    .unzip();
    summarize_run_lengths(&rls, &censored, 99.0)
}
