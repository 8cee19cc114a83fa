//! Per-subgroup location and scale estimators.
//!
//! Every estimator is a pure function of the subgroup values. Medians of even
//! length sets use the midpoint of the two central order statistics, including
//! the medians taken over Walsh averages and pairwise differences. Pairwise
//! sets are enumerated explicitly; subgroups in this domain are small.
//!
//! The hot Monte-Carlo loops go through [`Scratch`] to avoid reallocating the
//! pairwise buffers on every replication.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{PHI_INV_3_4, SQRT2_PHI_INV_3_4};

/// One Phase-I sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    pub id: String,
    values: Vec<f64>,
}

impl Subgroup {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if values.is_empty() {
            return Err(Error::invalid(format!("subgroup {id:?} is empty")));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "subgroup {id:?} contains non-finite value {bad}"
            )));
        }
        Ok(Self { id, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }
}

/// Hodges-Lehmann index-set variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HlVariant {
    /// k < ℓ
    Hl1,
    /// k ≤ ℓ
    Hl2,
    /// all (k, ℓ)
    Hl3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationKind {
    Mean,
    Median,
    Hl1,
    Hl2,
    Hl3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleKind {
    #[serde(rename = "sd")]
    StdDev,
    Mad,
    Shamos,
}

impl LocationKind {
    pub const ALL: [LocationKind; 5] = [
        LocationKind::Mean,
        LocationKind::Median,
        LocationKind::Hl1,
        LocationKind::Hl2,
        LocationKind::Hl3,
    ];

    /// Smallest subgroup the estimator accepts.
    pub fn min_n(self) -> usize {
        match self {
            LocationKind::Hl1 => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LocationKind::Mean => "mean",
            LocationKind::Median => "median",
            LocationKind::Hl1 => "hl1",
            LocationKind::Hl2 => "hl2",
            LocationKind::Hl3 => "hl3",
        }
    }

    pub fn estimate(self, values: &[f64]) -> Result<f64> {
        self.estimate_with(values, &mut Scratch::default())
    }

    pub fn estimate_with(self, values: &[f64], scratch: &mut Scratch) -> Result<f64> {
        check_values(values, self.min_n(), self.name())?;
        Ok(self.estimate_unchecked(values, scratch))
    }

    pub(crate) fn estimate_unchecked(self, values: &[f64], scratch: &mut Scratch) -> f64 {
        match self {
            LocationKind::Mean => mean_of(values),
            LocationKind::Median => {
                scratch.buf.clear();
                scratch.buf.extend_from_slice(values);
                median_in_place(&mut scratch.buf)
            }
            LocationKind::Hl1 => hl_unchecked(values, HlVariant::Hl1, scratch),
            LocationKind::Hl2 => hl_unchecked(values, HlVariant::Hl2, scratch),
            LocationKind::Hl3 => hl_unchecked(values, HlVariant::Hl3, scratch),
        }
    }
}

impl ScaleKind {
    pub const ALL: [ScaleKind; 3] = [ScaleKind::StdDev, ScaleKind::Mad, ScaleKind::Shamos];

    pub fn name(self) -> &'static str {
        match self {
            ScaleKind::StdDev => "sd",
            ScaleKind::Mad => "mad",
            ScaleKind::Shamos => "shamos",
        }
    }

    pub fn estimate(self, values: &[f64]) -> Result<f64> {
        self.estimate_with(values, &mut Scratch::default())
    }

    pub fn estimate_with(self, values: &[f64], scratch: &mut Scratch) -> Result<f64> {
        check_values(values, 2, self.name())?;
        Ok(self.estimate_unchecked(values, scratch))
    }

    pub(crate) fn estimate_unchecked(self, values: &[f64], scratch: &mut Scratch) -> f64 {
        match self {
            ScaleKind::StdDev => std_dev_of(values),
            ScaleKind::Mad => mad_unchecked(values, scratch),
            ScaleKind::Shamos => shamos_unchecked(values, scratch),
        }
    }
}

impl fmt::Display for LocationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LocationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(LocationKind::Mean),
            "median" => Ok(LocationKind::Median),
            "hl" | "hl1" => Ok(LocationKind::Hl1),
            "hl2" => Ok(LocationKind::Hl2),
            "hl3" => Ok(LocationKind::Hl3),
            other => Err(Error::invalid(format!("unknown location estimator {other:?}"))),
        }
    }
}

impl FromStr for ScaleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sd" | "stddev" | "std_dev" => Ok(ScaleKind::StdDev),
            "mad" => Ok(ScaleKind::Mad),
            "shamos" => Ok(ScaleKind::Shamos),
            other => Err(Error::invalid(format!("unknown scale estimator {other:?}"))),
        }
    }
}

/// Reusable buffers for pairwise enumeration.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    buf: Vec<f64>,
}

impl Scratch {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            buf: Vec::with_capacity(n * n),
        }
    }
}

fn check_values(values: &[f64], min_n: usize, name: &str) -> Result<()> {
    if values.len() < min_n {
        return Err(Error::invalid(format!(
            "{name} needs at least {min_n} observation(s), got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name}: non-finite observation")));
    }
    Ok(())
}

pub fn mean(values: &[f64]) -> Result<f64> {
    LocationKind::Mean.estimate(values)
}

pub fn median(values: &[f64]) -> Result<f64> {
    LocationKind::Median.estimate(values)
}

pub fn hodges_lehmann(values: &[f64], variant: HlVariant) -> Result<f64> {
    let kind = match variant {
        HlVariant::Hl1 => LocationKind::Hl1,
        HlVariant::Hl2 => LocationKind::Hl2,
        HlVariant::Hl3 => LocationKind::Hl3,
    };
    kind.estimate(values)
}

/// Sample standard deviation with the n − 1 denominator.
pub fn std_dev(values: &[f64]) -> Result<f64> {
    ScaleKind::StdDev.estimate(values)
}

/// Fisher-consistent MAD: median |x − median(x)| / Φ⁻¹(3/4).
pub fn mad(values: &[f64]) -> Result<f64> {
    ScaleKind::Mad.estimate(values)
}

/// Fisher-consistent Shamos: median over k < ℓ of |x_k − x_ℓ| / (√2 Φ⁻¹(3/4)).
pub fn shamos(values: &[f64]) -> Result<f64> {
    ScaleKind::Shamos.estimate(values)
}

pub(crate) fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn std_dev_of(values: &[f64]) -> f64 {
    let m = mean_of(values);
    let ss: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Median of a non-empty buffer; reorders it.
pub(crate) fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (left, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

fn hl_unchecked(values: &[f64], variant: HlVariant, scratch: &mut Scratch) -> f64 {
    let buf = &mut scratch.buf;
    buf.clear();
    let n = values.len();
    match variant {
        HlVariant::Hl1 => {
            for k in 0..n {
                for l in k + 1..n {
                    buf.push(0.5 * (values[k] + values[l]));
                }
            }
        }
        HlVariant::Hl2 => {
            for k in 0..n {
                for l in k..n {
                    buf.push(0.5 * (values[k] + values[l]));
                }
            }
        }
        HlVariant::Hl3 => {
            for &a in values {
                for &b in values {
                    buf.push(0.5 * (a + b));
                }
            }
        }
    }
    median_in_place(buf)
}

pub(crate) fn raw_mad(values: &[f64], scratch: &mut Scratch) -> f64 {
    let buf = &mut scratch.buf;
    buf.clear();
    buf.extend_from_slice(values);
    let center = median_in_place(buf);
    for v in buf.iter_mut() {
        *v = (*v - center).abs();
    }
    median_in_place(buf)
}

fn mad_unchecked(values: &[f64], scratch: &mut Scratch) -> f64 {
    raw_mad(values, scratch) / PHI_INV_3_4
}

fn shamos_unchecked(values: &[f64], scratch: &mut Scratch) -> f64 {
    let buf = &mut scratch.buf;
    buf.clear();
    let n = values.len();
    for k in 0..n {
        for l in k + 1..n {
            buf.push((values[k] - values[l]).abs());
        }
    }
    median_in_place(buf) / SQRT2_PHI_INV_3_4
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
    }

    /// Sort-based median, independent of the selection path.
    fn median_by_sort(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(mean(&[5.0]).unwrap(), 5.0);
        assert_eq!(mean(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap(), 5.0);
        assert!(matches!(mean(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(median(&[7.0; 5]).unwrap(), 7.0);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn hodges_lehmann_examples() {
        // Walsh sets {1.5, 2, 2.5} and {1, 1.5, 2, 2, 2.5, 3}
        assert_eq!(hodges_lehmann(&[1.0, 2.0, 3.0], HlVariant::Hl1).unwrap(), 2.0);
        assert_eq!(hodges_lehmann(&[1.0, 2.0, 3.0], HlVariant::Hl2).unwrap(), 2.0);
        assert_eq!(hodges_lehmann(&[4.25; 6], HlVariant::Hl1).unwrap(), 4.25);
        assert!(hodges_lehmann(&[1.0], HlVariant::Hl1).is_err());
        assert_eq!(hodges_lehmann(&[1.0], HlVariant::Hl2).unwrap(), 1.0);
        assert_eq!(hodges_lehmann(&[1.0], HlVariant::Hl3).unwrap(), 1.0);
    }

    #[test]
    fn hl_variants_differ_in_general() {
        let x = [0.0, 1.0, 5.0, 6.0];
        // HL1 set {0.5, 2.5, 3, 3, 3.5, 5.5} → 3
        assert_eq!(hodges_lehmann(&x, HlVariant::Hl1).unwrap(), 3.0);
        // HL2 adds the four points themselves → median of 10 values
        let mut hl2 = vec![0.5, 2.5, 3.0, 3.0, 3.5, 5.5, 0.0, 1.0, 5.0, 6.0];
        hl2.sort_by(f64::total_cmp);
        assert_eq!(
            hodges_lehmann(&x, HlVariant::Hl2).unwrap(),
            median_by_sort(hl2)
        );
    }

    #[test]
    fn std_dev_examples() {
        assert_eq!(std_dev(&[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(std_dev(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert!(close(std_dev(&[0.0, 2.0]).unwrap(), std::f64::consts::SQRT_2));
        assert!(std_dev(&[1.0]).is_err());
    }

    #[test]
    fn mad_examples() {
        let expected = 1.0 / 0.674489750196082;
        assert!((mad(&[1.0, 2.0, 3.0]).unwrap() - expected).abs() < 1e-12);
        assert!((mad(&[1.0, 1.0, 2.0, 2.0, 4.0, 6.0, 9.0]).unwrap() - expected).abs() < 1e-12);
        assert_eq!(mad(&[2.0; 4]).unwrap(), 0.0);
        assert!(mad(&[2.0]).is_err());
    }

    #[test]
    fn shamos_examples() {
        let expected = 1.0 / (std::f64::consts::SQRT_2 * 0.674489750196082);
        assert!((expected - 1.048358).abs() < 1e-6);
        assert!((shamos(&[1.0, 2.0, 3.0]).unwrap() - expected).abs() < 1e-12);
        assert!((shamos(&[0.0, 1.0]).unwrap() - expected).abs() < 1e-12);
        assert_eq!(shamos(&[8.0, 8.0]).unwrap(), 0.0);
        assert!(shamos(&[0.0]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(mean(&[1.0, f64::NAN]).is_err());
        assert!(mad(&[1.0, f64::INFINITY]).is_err());
        assert!(Subgroup::new("a", vec![1.0, f64::NAN]).is_err());
        assert!(Subgroup::new("a", vec![]).is_err());
    }

    #[test]
    fn hl_agree_on_symmetric_triples() {
        for &(c, d) in &[(0.0, 1.0), (10.5, 0.25), (-3.0, 7.0)] {
            let x = [c - d, c, c + d];
            let h1 = hodges_lehmann(&x, HlVariant::Hl1).unwrap();
            let h2 = hodges_lehmann(&x, HlVariant::Hl2).unwrap();
            let h3 = hodges_lehmann(&x, HlVariant::Hl3).unwrap();
            assert_eq!(h1, c);
            assert_eq!(h2, c);
            assert_eq!(h3, c);
        }
    }

    #[test]
    fn breakdown_sanity() {
        let clean: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut sorted = clean.clone();
        sorted.sort_by(f64::total_cmp);
        let spread = sorted[9] - sorted[0];
        for big in [1e3, 1e6, 1e9] {
            let mut dirty = clean.clone();
            dirty[3] = big;
            for kind in [LocationKind::Median, LocationKind::Hl1, LocationKind::Hl2] {
                let shift = (kind.estimate(&dirty).unwrap() - kind.estimate(&clean).unwrap()).abs();
                assert!(shift <= spread, "{kind} moved by {shift}");
            }
            for kind in [ScaleKind::Mad, ScaleKind::Shamos] {
                let d = kind.estimate(&dirty).unwrap();
                // bounded by the largest clean pairwise distance after unscaling
                assert!(d <= 2.0 * spread / PHI_INV_3_4, "{kind} = {d}");
            }
            let m = mean(&dirty).unwrap();
            assert!(m > big / 10.0 - 1.0);
            assert!(std_dev(&dirty).unwrap() > big / 10.0);
        }
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, 2..20)
    }

    proptest! {
        #[test]
        fn median_matches_sort(v in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            prop_assert_eq!(median(&v).unwrap(), median_by_sort(v.clone()));
        }

        #[test]
        fn location_equivariance(v in sample(), a in -100.0f64..100.0, b in 0.01f64..100.0) {
            let t: Vec<f64> = v.iter().map(|x| a + b * x).collect();
            for kind in LocationKind::ALL {
                let lhs = kind.estimate(&t).unwrap();
                let rhs = a + b * kind.estimate(&v).unwrap();
                let scale = 1.0 + a.abs() + b * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} {} {}", kind, lhs, rhs);
            }
        }

        #[test]
        fn scale_equivariance(v in sample(), a in -100.0f64..100.0, b in 0.01f64..100.0) {
            let t: Vec<f64> = v.iter().map(|x| a + b * x).collect();
            for kind in ScaleKind::ALL {
                let lhs = kind.estimate(&t).unwrap();
                let rhs = b * kind.estimate(&v).unwrap();
                let scale = 1.0 + a.abs() + b * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                prop_assert!((lhs - rhs).abs() <= 1e-11 * scale, "{} {} {}", kind, lhs, rhs);
            }
        }

        #[test]
        fn permutation_invariance(v in sample(), seed in any::<u64>()) {
            let mut p = v.clone();
            // deterministic shuffle
            let mut s = seed | 1;
            for i in (1..p.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                p.swap(i, (s % (i as u64 + 1)) as usize);
            }
            for kind in LocationKind::ALL {
                let a = kind.estimate(&v).unwrap();
                let b = kind.estimate(&p).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
            for kind in ScaleKind::ALL {
                let a = kind.estimate(&v).unwrap();
                let b = kind.estimate(&p).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }
}
