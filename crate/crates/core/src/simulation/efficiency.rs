use serde::{Deserialize, Serialize};

use super::{ContaminationSpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::estimators::{self, LocationKind, ScaleKind, Scratch};
use crate::factors::{c4, Estimator, FactorTable};
use crate::normal::PHI_INV_3_4;
use crate::parallel::{self, domain, Moments};
use crate::pooling::{self, PoolingType};

/// Clean-data MSEs of the reference cells: (mean, C) and (SD, C).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub sizes: Vec<usize>,
    pub location_mse: f64,
    pub scale_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCell {
    pub estimator: Estimator,
    pub pooling: PoolingType,
    pub mean: f64,
    /// Empirical variance (1/I denominator), in squared measurement units.
    pub variance: f64,
    pub bias: f64,
    pub mse: f64,
    /// 100 · baseline MSE (clean) / this cell's MSE.
    pub re_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub sizes: Vec<usize>,
    pub mu0: f64,
    pub sigma0: f64,
    pub replications: u64,
    pub master_seed: u64,
    pub contamination: Option<ContaminationSpec>,
    pub baseline: Baseline,
    pub cells: Vec<EfficiencyCell>,
}

impl EfficiencyReport {
    pub fn cell(&self, estimator: Estimator, pooling: PoolingType) -> Option<&EfficiencyCell> {
        self.cells
            .iter()
            .find(|c| c.estimator == estimator && c.pooling == pooling)
    }

    /// Rows in the layout variance/bias/MSE/RE × pooling, columns by estimator.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("measure,pooling");
        for e in Estimator::ALL {
            out.push(',');
            out.push_str(e.name());
        }
        out.push('\n');
        let measures: [(&str, fn(&EfficiencyCell) -> f64); 4] = [
            ("variance", |c| c.variance),
            ("bias", |c| c.bias),
            ("mse", |c| c.mse),
            ("re_percent", |c| c.re_percent),
        ];
        for (name, get) in measures {
            for p in [PoolingType::A, PoolingType::B, PoolingType::C, PoolingType::D] {
                if !self.cells.iter().any(|c| c.pooling == p) {
                    continue;
                }
                out.push_str(&format!("{name},{p}"));
                for e in Estimator::ALL {
                    out.push(',');
                    if let Some(c) = self.cell(e, p) {
                        out.push_str(&format!("{:.6}", get(c)));
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

struct Plan {
    location_weights: Vec<(LocationKind, PoolingType, Vec<f64>)>,
    scale_weights: Vec<(ScaleKind, PoolingType, Vec<f64>)>,
    /// c4(N − m + 1) for the pooled SD.
    pooled_sd_c4: f64,
    /// c5(N), when the table covers N.
    pooled_mad_c5: Option<f64>,
}

impl Plan {
    fn new(sizes: &[usize], table: &FactorTable) -> Result<Self> {
        let mut location_weights = Vec::new();
        for kind in LocationKind::ALL {
            let nu: Vec<f64> = sizes.iter().map(|&n| table.nu_sq(kind, n)).collect::<Result<_>>()?;
            for p in PoolingType::ABC {
                location_weights.push((kind, p, pooling::location_weights(p, sizes, &nu)?));
            }
        }
        let mut scale_weights = Vec::new();
        for kind in ScaleKind::ALL {
            let g: Vec<f64> = sizes.iter().map(|&n| table.unbiasing_factor(kind, n)).collect::<Result<_>>()?;
            let t: Vec<f64> = sizes.iter().map(|&n| table.tau_sq(kind, n)).collect::<Result<_>>()?;
            for p in PoolingType::ABC {
                scale_weights.push((kind, p, pooling::scale_weights(p, &g, &t)?));
            }
        }
        let total: usize = sizes.iter().sum();
        Ok(Plan {
            location_weights,
            scale_weights,
            pooled_sd_c4: c4(total - sizes.len() + 1)?,
            pooled_mad_c5: table.unbiasing_factor(ScaleKind::Mad, total).ok(),
        })
    }

    fn cell_count(&self) -> usize {
        self.location_weights.len() + self.scale_weights.len() + 1 + self.pooled_mad_c5.is_some() as usize
    }

    fn cell_labels(&self) -> Vec<(Estimator, PoolingType)> {
        let mut v: Vec<_> = self
            .location_weights
            .iter()
            .map(|(k, p, _)| (Estimator::Location(*k), *p))
            .chain(self.scale_weights.iter().map(|(k, p, _)| (Estimator::Scale(*k), *p)))
            .collect();
        v.push((Estimator::Scale(ScaleKind::StdDev), PoolingType::D));
        if self.pooled_mad_c5.is_some() {
            v.push((Estimator::Scale(ScaleKind::Mad), PoolingType::D));
        }
        v
    }
}

/// Per-subgroup estimates of every estimator on one dataset.
struct Estimates {
    location: [Vec<f64>; 5],
    scale: [Vec<f64>; 3],
}

fn estimate_all(flat: &[f64], sizes: &[usize], scratch: &mut Scratch, out: &mut Estimates) {
    for v in out.location.iter_mut().chain(out.scale.iter_mut()) {
        v.clear();
    }
    let mut start = 0;
    for &n in sizes {
        let x = &flat[start..start + n];
        for (k, kind) in LocationKind::ALL.iter().enumerate() {
            out.location[k].push(kind.estimate_unchecked(x, scratch));
        }
        for (k, kind) in ScaleKind::ALL.iter().enumerate() {
            out.scale[k].push(kind.estimate_unchecked(x, scratch));
        }
        start += n;
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

fn pooled_sd(flat: &[f64], sizes: &[usize], c4_total: f64) -> f64 {
    let mut ss = 0.0;
    let mut start = 0;
    for &n in sizes {
        let x = &flat[start..start + n];
        let m = estimators::mean_of(x);
        ss += x.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        start += n;
    }
    let df = (flat.len() - sizes.len()) as f64;
    (ss / df).sqrt() / c4_total
}

/// Empirical variance, bias, MSE and relative efficiency of every
/// estimator × pooling cell.
///
/// Without an explicit `baseline`, the reference MSEs come from the same
/// draws before contamination, so a clean study has RE(mean, C) = RE(SD, C)
/// = 100 exactly.
pub fn efficiency_study(
    config: &ScenarioConfig,
    baseline: Option<&Baseline>,
    table: &FactorTable,
) -> Result<EfficiencyReport> {
    config.validate()?;
    if let Some(b) = baseline {
        if b.sizes != config.sizes {
            return Err(Error::invalid(format!(
                "baseline sizes {:?} do not match scenario sizes {:?}",
                b.sizes, config.sizes
            )));
        }
    }
    if config.sizes.iter().any(|&n| n < 2) {
        return Err(Error::invalid("efficiency studies need subgroup sizes >= 2"));
    }
    let plan = Plan::new(&config.sizes, table)?;
    let labels = plan.cell_labels();
    let k = plan.cell_count();
    let offset = config.contamination.map(|c| c.offset(&config.sizes)).transpose()?;
    let delta = config.contamination.map_or(0.0, |c| c.delta);

    // cells, then clean (mean, C) and clean (SD, C)
    let per_block = |range: std::ops::Range<u64>| {
        let mut acc = vec![Moments::default(); k + 2];
        let mut scratch = Scratch::with_capacity(config.sizes.iter().copied().max().unwrap_or(1));
        let mut flat = Vec::with_capacity(config.total());
        let mut est = Estimates {
            location: Default::default(),
            scale: Default::default(),
        };
        let (mean_c, sd_c) = (&plan.location_weights[2].2, &plan.scale_weights[2].2);
        for r in range {
            let mut rng = parallel::stream(config.master_seed, domain::PHASE1, r);
            config.draw_into(&mut rng, &mut flat);
            if let Some(off) = offset {
                let mut means = Vec::with_capacity(config.sizes.len());
                let mut sds = Vec::with_capacity(config.sizes.len());
                let mut start = 0;
                for &n in &config.sizes {
                    means.push(estimators::mean_of(&flat[start..start + n]));
                    sds.push(estimators::std_dev_of(&flat[start..start + n]));
                    start += n;
                }
                acc[k].push(dot(mean_c, &means));
                acc[k + 1].push(dot(sd_c, &sds));
                flat[off] += delta;
            }
            estimate_all(&flat, &config.sizes, &mut scratch, &mut est);
            let mut i = 0;
            for (kind, _, w) in &plan.location_weights {
                acc[i].push(dot(w, &est.location[*kind as usize]));
                i += 1;
            }
            for (kind, _, w) in &plan.scale_weights {
                acc[i].push(dot(w, &est.scale[*kind as usize]));
                i += 1;
            }
            acc[i].push(pooled_sd(&flat, &config.sizes, plan.pooled_sd_c4));
            i += 1;
            if let Some(c5) = plan.pooled_mad_c5 {
                acc[i].push(estimators::raw_mad(&flat, &mut scratch) / PHI_INV_3_4 / c5);
            }
        }
        acc
    };
    let acc = parallel::map_reduce_blocks(config.replications, per_block, |a, b| {
        a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()
    })
    .expect("replications > 0");

    let summarize = |m: &Moments, target: f64| {
        let variance = m.population_variance();
        let bias = m.mean - target;
        (m.mean, variance, bias, variance + bias * bias)
    };
    let baseline = match baseline {
        Some(b) => b.clone(),
        None if offset.is_some() => Baseline {
            sizes: config.sizes.clone(),
            location_mse: summarize(&acc[k], config.mu0).3,
            scale_mse: summarize(&acc[k + 1], config.sigma0).3,
        },
        None => Baseline {
            sizes: config.sizes.clone(),
            location_mse: summarize(&acc[2], config.mu0).3,
            scale_mse: summarize(&acc[LocationKind::ALL.len() * 3 + 2], config.sigma0).3,
        },
    };

    let cells = labels
        .iter()
        .zip(&acc)
        .map(|(&(estimator, pooling), m)| {
            let (target, reference) = match estimator {
                Estimator::Location(_) => (config.mu0, baseline.location_mse),
                Estimator::Scale(_) => (config.sigma0, baseline.scale_mse),
            };
            let (mean, variance, bias, mse) = summarize(m, target);
            EfficiencyCell {
                estimator,
                pooling,
                mean,
                variance,
                bias,
                mse,
                re_percent: 100.0 * reference / mse,
            }
        })
        .collect();

    Ok(EfficiencyReport {
        sizes: config.sizes.clone(),
        mu0: config.mu0,
        sigma0: config.sigma0,
        replications: config.replications,
        master_seed: config.master_seed,
        contamination: config.contamination,
        baseline,
        cells,
    })
}
