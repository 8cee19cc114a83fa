//! Deterministic Monte-Carlo studies: estimator efficiency under clean and
//! contaminated Phase-I data, and in-control run-length distributions of the
//! method × pooling chart variants.

mod config;
mod efficiency;
mod run_length;
mod summary;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Subgroup;

pub use config::{parse_config, ExperimentConfig};
pub use efficiency::{efficiency_study, Baseline, EfficiencyCell, EfficiencyReport};
pub use run_length::{
    known_limits_study, run_length_grid, run_length_study, RunLengthCell, RunLengthConfig,
    RunLengthGrid, RunLengthMode, DEFAULT_RL_CAP,
};
pub use summary::{summarize_run_lengths, RunLengthSummary};

/// Which observation of a subgroup to contaminate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservationIndex {
    /// 1-based position.
    At(usize),
    Last(LastTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LastTag {
    Last,
}

impl ObservationIndex {
    pub const LAST: ObservationIndex = ObservationIndex::Last(LastTag::Last);

    fn resolve(self, n: usize) -> Option<usize> {
        match self {
            ObservationIndex::At(i) if (1..=n).contains(&i) => Some(i - 1),
            ObservationIndex::At(_) => None,
            ObservationIndex::Last(_) => n.checked_sub(1),
        }
    }
}

/// A single additive shift δ on one Phase-I observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    /// 1-based subgroup index.
    pub sample_index: usize,
    pub observation_index: ObservationIndex,
    pub delta: f64,
}

impl ContaminationSpec {
    /// Flat offset of the contaminated value given subgroup sizes.
    pub(crate) fn offset(&self, sizes: &[usize]) -> Result<usize> {
        let i = self
            .sample_index
            .checked_sub(1)
            .filter(|&i| i < sizes.len())
            .ok_or_else(|| {
                Error::invalid(format!(
                    "contaminated sample index {} out of range 1..={}",
                    self.sample_index,
                    sizes.len()
                ))
            })?;
        let j = self.observation_index.resolve(sizes[i]).ok_or_else(|| {
            Error::invalid(format!(
                "contaminated observation {:?} out of range for subgroup of size {}",
                self.observation_index, sizes[i]
            ))
        })?;
        Ok(sizes[..i].iter().sum::<usize>() + j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub sizes: Vec<usize>,
    pub mu0: f64,
    pub sigma0: f64,
    pub replications: u64,
    pub master_seed: u64,
    pub contamination: Option<ContaminationSpec>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::invalid("scenario needs at least one subgroup size"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) || !self.mu0.is_finite() {
            return Err(Error::invalid("mu0 must be finite and sigma0 positive"));
        }
        if let Some(c) = &self.contamination {
            c.offset(&self.sizes)?;
            if !c.delta.is_finite() {
                return Err(Error::invalid("contamination delta must be finite"));
            }
        }
        Ok(())
    }

    pub(crate) fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Fills `buf` with one replication's Phase-I data, subgroup after subgroup.
    pub(crate) fn draw_into<R: rand::Rng + ?Sized>(&self, rng: &mut R, buf: &mut Vec<f64>) {
        buf.clear();
        for _ in 0..self.total() {
            let z: f64 = StandardNormal.sample(rng);
            buf.push(self.mu0 + self.sigma0 * z);
        }
    }
}

/// Sizes of the five fifteen-subgroup Phase-I plans.
pub fn plan_sizes(plan: u8) -> Result<Vec<usize>> {
    let (low, high) = match plan {
        1 => (3, 17),
        2 => (5, 15),
        3 => (7, 13),
        4 => (9, 11),
        5 => (10, 10),
        other => return Err(Error::invalid(format!("unknown plan {other} (expected 1..=5)"))),
    };
    Ok([low; 5].into_iter().chain([10; 5]).chain([high; 5]).collect())
}

/// Sizes of the three-subgroup efficiency scenarios (a) to (d).
pub fn scenario_sizes(label: char) -> Result<Vec<usize>> {
    match label.to_ascii_lowercase() {
        'a' => Ok(vec![3, 10, 17]),
        'b' => Ok(vec![5, 10, 15]),
        'c' => Ok(vec![7, 10, 13]),
        'd' => Ok(vec![9, 10, 11]),
        other => Err(Error::invalid(format!("unknown scenario {other:?} (expected a..=d)"))),
    }
}

/// Returns a copy of `dataset` with exactly one value shifted by δ.
pub fn inject_contamination(dataset: &[Subgroup], spec: &ContaminationSpec) -> Result<Vec<Subgroup>> {
    let sizes: Vec<usize> = dataset.iter().map(Subgroup::n).collect();
    spec.offset(&sizes)?;
    let mut out = dataset.to_vec();
    let i = spec.sample_index - 1;
    let j = spec.observation_index.resolve(sizes[i]).expect("validated");
    let v = &mut out[i].values_mut()[j];
    *v += spec.delta;
    if !v.is_finite() {
        return Err(Error::invalid("contaminated value is not finite"));
    }
    Ok(out)
}

/// Splits a flat buffer into subgroups with synthetic ids.
pub(crate) fn to_subgroups(flat: &[f64], sizes: &[usize]) -> Vec<Subgroup> {
    let mut start = 0;
    sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let s = Subgroup::new((i + 1).to_string(), flat[start..start + n].to_vec())
                .expect("simulated data is finite");
            start += n;
            s
        })
        .collect()
}
