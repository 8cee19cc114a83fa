//! Pooling per-subgroup estimates across subgroups of unequal size.
//!
//! Location estimates are pooled as Σ wᵢ μ̂ᵢ with Σ wᵢ = 1 and scale estimates
//! as Σ wᵢ σ̂ᵢ with Σ wᵢ γᵢ = 1, where γᵢ = E[σ̂ᵢ]/σ. Scale inputs are the raw
//! (Fisher-consistent but finite-sample biased) estimates; the unbiasing is
//! carried entirely by the weights.
//!
//! | type | location weight      | scale weight               |
//! |------|----------------------|----------------------------|
//! | A    | 1/m                  | 1/(m γᵢ)                   |
//! | B    | nᵢ/N                 | 1/Σγⱼ                      |
//! | C    | (1/νᵢ²)/Σ(1/νⱼ²)     | (γᵢ/τᵢ²)/Σ(γⱼ²/τⱼ²)        |
//!
//! Type D applies the estimator to the concatenated data (scale only, for the
//! standard deviation and MAD).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::estimators::{self, LocationKind, ScaleKind, Scratch, Subgroup};
use crate::factors::{c4, Estimator, FactorTable};
use crate::normal::PHI_INV_3_4;

/// Tolerance on the weight constraints.
const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PoolingType {
    A,
    B,
    C,
    D,
}

impl PoolingType {
    pub const ABC: [PoolingType; 3] = [PoolingType::A, PoolingType::B, PoolingType::C];
}

impl fmt::Display for PoolingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PoolingType::A => "A",
            PoolingType::B => "B",
            PoolingType::C => "C",
            PoolingType::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for PoolingType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(PoolingType::A),
            "B" => Ok(PoolingType::B),
            "C" => Ok(PoolingType::C),
            "D" => Ok(PoolingType::D),
            other => Err(Error::invalid(format!("unknown pooling type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Location,
    Scale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledEstimate {
    pub value: f64,
    /// Per-subgroup weights; empty for type D, which is not a linear pool.
    pub weights: Vec<f64>,
    pub estimator: Estimator,
    pub pooling: PoolingType,
    /// Var(pooled)/σ² under normality.
    pub theoretical_var_factor: f64,
}

impl PooledEstimate {
    pub fn kind(&self) -> EstimateKind {
        match self.estimator {
            Estimator::Location(_) => EstimateKind::Location,
            Estimator::Scale(_) => EstimateKind::Scale,
        }
    }
}

fn check_positive(what: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid(format!("{what}: need at least one subgroup")));
    }
    if let Some(x) = xs.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::invalid(format!("{what} must be positive and finite, got {x}")));
    }
    Ok(())
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::invalid("need at least one subgroup"));
    }
    if sizes.contains(&0) {
        return Err(Error::invalid("subgroup sizes must be positive"));
    }
    Ok(())
}

/// Minimum-variance weights: proportional to 1/νᵢ², summing to one.
pub fn blue_location_weights(nu_sq: &[f64]) -> Result<Vec<f64>> {
    check_positive("location variance", nu_sq)?;
    let total: f64 = nu_sq.iter().map(|v| 1.0 / v).sum();
    Ok(nu_sq.iter().map(|v| (1.0 / v) / total).collect())
}

/// Weights proportional to γᵢ/τᵢ² satisfying Σ wᵢ γᵢ = 1.
pub fn blue_scale_weights(gamma: &[f64], tau_sq: &[f64]) -> Result<Vec<f64>> {
    check_len("tau_sq", tau_sq.len(), gamma.len())?;
    check_positive("unbiasing factor", gamma)?;
    check_positive("scale variance", tau_sq)?;
    let total: f64 = gamma.iter().zip(tau_sq).map(|(g, t)| g * g / t).sum();
    Ok(gamma.iter().zip(tau_sq).map(|(g, t)| (g / t) / total).collect())
}

pub fn location_weights(pooling: PoolingType, sizes: &[usize], nu_sq: &[f64]) -> Result<Vec<f64>> {
    check_sizes(sizes)?;
    check_len("nu_sq", nu_sq.len(), sizes.len())?;
    let m = sizes.len() as f64;
    match pooling {
        PoolingType::A => Ok(vec![1.0 / m; sizes.len()]),
        PoolingType::B => {
            let total: usize = sizes.iter().sum();
            Ok(sizes.iter().map(|&n| n as f64 / total as f64).collect())
        }
        PoolingType::C => blue_location_weights(nu_sq),
        PoolingType::D => Err(Error::InvalidForLocation),
    }
}

pub fn scale_weights(pooling: PoolingType, gamma: &[f64], tau_sq: &[f64]) -> Result<Vec<f64>> {
    check_len("tau_sq", tau_sq.len(), gamma.len())?;
    check_positive("unbiasing factor", gamma)?;
    let m = gamma.len() as f64;
    match pooling {
        PoolingType::A => Ok(gamma.iter().map(|g| 1.0 / (m * g)).collect()),
        PoolingType::B => {
            let total: f64 = gamma.iter().sum();
            Ok(vec![1.0 / total; gamma.len()])
        }
        PoolingType::C => blue_scale_weights(gamma, tau_sq),
        PoolingType::D => Err(Error::UnsupportedCombination(
            "pooling type D needs the raw subgroups (use pool_scale_pooled_data)".into(),
        )),
    }
}

/// Σ wᵢ² vᵢ after checking the weights satisfy the unbiasedness constraint.
pub fn pooled_variance_factor(
    weights: &[f64],
    gamma: &[f64],
    var_std: &[f64],
    kind: EstimateKind,
) -> Result<f64> {
    check_len("var_std", var_std.len(), weights.len())?;
    let constraint = match kind {
        EstimateKind::Location => weights.iter().sum::<f64>(),
        EstimateKind::Scale => {
            check_len("gamma", gamma.len(), weights.len())?;
            weights.iter().zip(gamma).map(|(w, g)| w * g).sum()
        }
    };
    if (constraint - 1.0).abs() > CONSTRAINT_TOL {
        return Err(Error::invalid(format!(
            "weights violate the unbiasedness constraint (got {constraint})"
        )));
    }
    Ok(weights.iter().zip(var_std).map(|(w, v)| w * w * v).sum())
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

pub fn pool_location(
    kind: LocationKind,
    estimates: &[f64],
    sizes: &[usize],
    nu_sq: &[f64],
    pooling: PoolingType,
) -> Result<PooledEstimate> {
    check_len("estimates", estimates.len(), sizes.len())?;
    let weights = location_weights(pooling, sizes, nu_sq)?;
    check_positive("location variance", nu_sq)?;
    let factor = pooled_variance_factor(&weights, &[], nu_sq, EstimateKind::Location)?;
    Ok(PooledEstimate {
        value: dot(&weights, estimates),
        weights,
        estimator: Estimator::Location(kind),
        pooling,
        theoretical_var_factor: factor,
    })
}

/// Pools raw per-subgroup scale estimates with types A, B or C.
pub fn pool_scale(
    kind: ScaleKind,
    estimates: &[f64],
    sizes: &[usize],
    gamma: &[f64],
    tau_sq: &[f64],
    pooling: PoolingType,
) -> Result<PooledEstimate> {
    check_sizes(sizes)?;
    check_len("estimates", estimates.len(), sizes.len())?;
    check_len("gamma", gamma.len(), sizes.len())?;
    check_positive("scale variance", tau_sq)?;
    let weights = scale_weights(pooling, gamma, tau_sq)?;
    let factor = pooled_variance_factor(&weights, gamma, tau_sq, EstimateKind::Scale)?;
    Ok(PooledEstimate {
        value: dot(&weights, estimates),
        weights,
        estimator: Estimator::Scale(kind),
        pooling,
        theoretical_var_factor: factor,
    })
}

/// Type D: the estimator applied to all N observations at once.
///
/// Standard deviation: S_p / c4(N − m + 1) with S_p² the (N − m)-df pooled
/// variance. MAD: the MAD about the global median of all N values, divided
/// by c5(N) from the table.
pub fn pool_scale_pooled_data(
    kind: ScaleKind,
    samples: &[Subgroup],
    table: &FactorTable,
) -> Result<PooledEstimate> {
    if samples.is_empty() {
        return Err(Error::invalid("need at least one subgroup"));
    }
    let m = samples.len();
    let total: usize = samples.iter().map(Subgroup::n).sum();
    let estimator = Estimator::Scale(kind);
    match kind {
        ScaleKind::StdDev => {
            if total <= m {
                return Err(Error::invalid("pooled standard deviation needs N > m"));
            }
            let ss: f64 = samples
                .iter()
                .map(|s| {
                    let mu = estimators::mean_of(s.values());
                    s.values().iter().map(|x| (x - mu) * (x - mu)).sum::<f64>()
                })
                .sum();
            let sp = (ss / (total - m) as f64).sqrt();
            let c = c4(total - m + 1)?;
            Ok(PooledEstimate {
                value: sp / c,
                weights: Vec::new(),
                estimator,
                pooling: PoolingType::D,
                theoretical_var_factor: (1.0 - c * c) / (c * c),
            })
        }
        ScaleKind::Mad => {
            if total < 2 {
                return Err(Error::invalid("pooled MAD needs at least two observations"));
            }
            let all: Vec<f64> = samples.iter().flat_map(|s| s.values().iter().copied()).collect();
            let raw = estimators::raw_mad(&all, &mut Scratch::default()) / PHI_INV_3_4;
            let entry = table.get(estimator, total)?;
            Ok(PooledEstimate {
                value: raw / entry.gamma,
                weights: Vec::new(),
                estimator,
                pooling: PoolingType::D,
                theoretical_var_factor: entry.var_std / (entry.gamma * entry.gamma),
            })
        }
        ScaleKind::Shamos => Err(Error::UnsupportedCombination(
            "pooling type D is defined only for the standard deviation and MAD".into(),
        )),
    }
}
