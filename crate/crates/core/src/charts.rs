//! Phase-I estimation and X̄ control limits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{LocationKind, ScaleKind, Scratch, Subgroup};
use crate::factors::FactorTable;
use crate::normal;
use crate::pooling::{self, PoolingType};

/// Default limit multiplier ("three sigma").
pub const DEFAULT_G: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Mean and standard deviation.
    I,
    /// Median and MAD.
    II,
    /// Hodges-Lehmann (HL1) and Shamos.
    III,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::I, Method::II, Method::III];

    pub fn location(self) -> LocationKind {
        match self {
            Method::I => LocationKind::Mean,
            Method::II => LocationKind::Median,
            Method::III => LocationKind::Hl1,
        }
    }

    pub fn scale(self) -> ScaleKind {
        match self {
            Method::I => ScaleKind::StdDev,
            Method::II => ScaleKind::Mad,
            Method::III => ScaleKind::Shamos,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::I => "I",
            Method::II => "II",
            Method::III => "III",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Method::I),
            "II" | "2" => Ok(Method::II),
            "III" | "3" => Ok(Method::III),
            other => Err(Error::invalid(format!("unknown method {other:?} (expected I, II or III)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseIEstimate {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub method: Method,
    pub pooling: PoolingType,
    pub m: usize,
    pub sizes: Vec<usize>,
    pub factor_version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlLimits {
    pub lcl: f64,
    pub cl: f64,
    pub ucl: f64,
    pub g: f64,
    pub n_k: usize,
}

impl ControlLimits {
    /// Limits fixed at known parameters, μ ± gσ/√n_k.
    pub fn known(mu: f64, sigma: f64, n_k: usize, g: f64) -> Result<Self> {
        limits_from(mu, sigma, n_k, g)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ucl - self.lcl)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lcl && x <= self.ucl
    }
}

/// Per-subgroup estimates for one method, reusable across pooling types.
#[derive(Debug, Clone)]
pub(crate) struct SubgroupStats {
    pub sizes: Vec<usize>,
    pub location: Vec<f64>,
    pub scale: Vec<f64>,
    pub nu_sq: Vec<f64>,
    pub gamma: Vec<f64>,
    pub tau_sq: Vec<f64>,
}

impl SubgroupStats {
    pub fn compute(
        samples: &[Subgroup],
        location: LocationKind,
        scale: ScaleKind,
        table: &FactorTable,
        scratch: &mut Scratch,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("need at least one Phase-I subgroup"));
        }
        let m = samples.len();
        let mut stats = SubgroupStats {
            sizes: Vec::with_capacity(m),
            location: Vec::with_capacity(m),
            scale: Vec::with_capacity(m),
            nu_sq: Vec::with_capacity(m),
            gamma: Vec::with_capacity(m),
            tau_sq: Vec::with_capacity(m),
        };
        for s in samples {
            let n = s.n();
            if n < 2 {
                return Err(Error::invalid(format!(
                    "subgroup {:?} has {n} observation(s); scale estimation needs at least 2",
                    s.id
                )));
            }
            stats.sizes.push(n);
            stats.location.push(location.estimate_unchecked(s.values(), scratch));
            stats.scale.push(scale.estimate_unchecked(s.values(), scratch));
            stats.nu_sq.push(table.nu_sq(location, n)?);
            let entry = table.get(crate::factors::Estimator::Scale(scale), n)?;
            stats.gamma.push(entry.gamma);
            stats.tau_sq.push(entry.var_std);
        }
        Ok(stats)
    }

    pub fn pool(
        &self,
        location: LocationKind,
        scale: ScaleKind,
        pooling: PoolingType,
        samples: &[Subgroup],
        table: &FactorTable,
    ) -> Result<(f64, f64)> {
        // Type D is a scale-only construction; the centre line stays BLUE.
        let loc_pooling = if pooling == PoolingType::D { PoolingType::C } else { pooling };
        let mu = pooling::pool_location(location, &self.location, &self.sizes, &self.nu_sq, loc_pooling)?;
        let sigma = match pooling {
            PoolingType::D => pooling::pool_scale_pooled_data(scale, samples, table)?,
            p => pooling::pool_scale(scale, &self.scale, &self.sizes, &self.gamma, &self.tau_sq, p)?,
        };
        Ok((mu.value, sigma.value))
    }
}

/// Pooled (μ̂, σ̂) from Phase-I subgroups.
pub fn phase1_estimate(
    samples: &[Subgroup],
    method: Method,
    pooling: PoolingType,
    table: &FactorTable,
) -> Result<PhaseIEstimate> {
    let (location, scale) = (method.location(), method.scale());
    let stats = SubgroupStats::compute(samples, location, scale, table, &mut Scratch::default())?;
    let (mu_hat, sigma_hat) = stats.pool(location, scale, pooling, samples, table)?;
    Ok(PhaseIEstimate {
        mu_hat,
        // constant data can leave a −0.0 or a round-off negative in a weighted sum
        sigma_hat: sigma_hat.max(0.0),
        method,
        pooling,
        m: samples.len(),
        sizes: stats.sizes,
        factor_version: table.version.clone(),
    })
}

fn limits_from(mu: f64, sigma: f64, n_k: usize, g: f64) -> Result<ControlLimits> {
    if n_k == 0 {
        return Err(Error::invalid("Phase-II subgroup size n_k must be at least 1"));
    }
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::invalid(format!("limit multiplier g must be positive, got {g}")));
    }
    if !(sigma.is_finite() && sigma >= 0.0) || !mu.is_finite() {
        return Err(Error::invalid("non-finite or negative process estimate"));
    }
    let h = g * sigma / (n_k as f64).sqrt();
    Ok(ControlLimits {
        lcl: mu - h,
        cl: mu,
        ucl: mu + h,
        g,
        n_k,
    })
}

pub fn control_limits(est: &PhaseIEstimate, n_k: usize, g: f64) -> Result<ControlLimits> {
    limits_from(est.mu_hat, est.sigma_hat, n_k, g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunLength {
    /// 1-based index of the first signalling subgroup.
    Signal(u64),
    /// No signal among this many subgroups.
    Censored(u64),
}

impl RunLength {
    pub fn signal_index(&self) -> Option<u64> {
        match self {
            RunLength::Signal(i) => Some(*i),
            RunLength::Censored(_) => None,
        }
    }
}

/// First Phase-II mean strictly outside [LCL, UCL].
pub fn monitor(limits: &ControlLimits, phase2_means: &[f64]) -> RunLength {
    phase2_means
        .iter()
        .position(|&x| !limits.contains(x))
        .map(|i| RunLength::Signal(i as u64 + 1))
        .unwrap_or(RunLength::Censored(phase2_means.len() as u64))
}

/// Probability a subgroup mean from N(μ, σ²/n_k) falls outside the limits.
pub fn signal_probability(limits: &ControlLimits, mu: f64, sigma: f64, n_k: usize) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if n_k == 0 {
        return Err(Error::invalid("n_k must be at least 1"));
    }
    let se = sigma / (n_k as f64).sqrt();
    let p = normal::cdf((limits.lcl - mu) / se) + normal::sf((limits.ucl - mu) / se);
    Ok(p.min(1.0))
}

/// Where the swept contaminating value goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPlacement {
    /// Append δ as an extra observation of the target subgroup.
    Append,
    /// Overwrite the given 1-based observation with δ.
    Replace { observation_index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySweepSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// 1-based subgroup index.
    pub sample_index: usize,
    pub placement: SweepPlacement,
    pub methods: Vec<Method>,
    pub pooling: PoolingType,
    pub n_k: usize,
    pub g: f64,
}

impl SensitivitySweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid("sweep step must be positive"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start > self.stop {
            return Err(Error::invalid("sweep needs finite start <= stop"));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| {
                let d = self.start + i as f64 * self.step;
                (d * 1e9).round() / 1e9
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub delta: f64,
    pub method: Method,
    pub limits: ControlLimits,
}

/// Limits recomputed with one contaminating value placed at each δ of the grid.
pub fn sensitivity_sweep(
    samples: &[Subgroup],
    spec: &SensitivitySweepSpec,
    table: &FactorTable,
) -> Result<Vec<SensitivityRow>> {
    if spec.methods.is_empty() {
        return Err(Error::invalid("sensitivity sweep needs at least one method"));
    }
    let target = spec
        .sample_index
        .checked_sub(1)
        .filter(|&i| i < samples.len())
        .ok_or_else(|| {
            Error::invalid(format!(
                "sample index {} out of range 1..={}",
                spec.sample_index,
                samples.len()
            ))
        })?;
    if let SweepPlacement::Replace { observation_index } = spec.placement {
        if observation_index == 0 || observation_index > samples[target].n() {
            return Err(Error::invalid(format!(
                "observation index {observation_index} out of range 1..={}",
                samples[target].n()
            )));
        }
    }
    let grid = spec.grid()?;
    let mut rows = Vec::with_capacity(grid.len() * spec.methods.len());
    let mut data = samples.to_vec();
    for &delta in &grid {
        {
            let values = data[target].values_mut();
            values.clear();
            values.extend_from_slice(samples[target].values());
            match spec.placement {
                SweepPlacement::Append => values.push(delta),
                SweepPlacement::Replace { observation_index } => values[observation_index - 1] = delta,
            }
        }
        for &method in &spec.methods {
            let est = phase1_estimate(&data, method, spec.pooling, table)?;
            rows.push(SensitivityRow {
                delta,
                method,
                limits: control_limits(&est, spec.n_k, spec.g)?,
            });
        }
    }
    Ok(rows)
}
