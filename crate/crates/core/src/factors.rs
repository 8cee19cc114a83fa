//! Standardized moments of the estimators under N(0, 1).
//!
//! For a location estimator the table stores its variance ν²(n); for a scale
//! estimator it stores the expectation γ(n) (the unbiasing factor: c4 for the
//! standard deviation, c5 for MAD, c6 for Shamos) and the variance τ²(n).
//! Mean and standard deviation are closed-form; the robust estimators are
//! tabulated by Monte Carlo and persisted as a versioned JSON document.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{LocationKind, ScaleKind, Scratch};
use crate::parallel::{self, domain, Moments};

pub const TABLE_VERSION: &str = "robust-xbar-factors/1";

/// Minimum replication count accepted by [`simulate_standard_moments`].
pub const MIN_REPLICATIONS: u64 = 10_000;

const BUILTIN_TABLE: &str = include_str!("../data/factors.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Location(LocationKind),
    Scale(ScaleKind),
}

impl Estimator {
    pub const ALL: [Estimator; 8] = [
        Estimator::Location(LocationKind::Mean),
        Estimator::Location(LocationKind::Median),
        Estimator::Location(LocationKind::Hl1),
        Estimator::Location(LocationKind::Hl2),
        Estimator::Location(LocationKind::Hl3),
        Estimator::Scale(ScaleKind::StdDev),
        Estimator::Scale(ScaleKind::Mad),
        Estimator::Scale(ScaleKind::Shamos),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Location(k) => k.name(),
            Estimator::Scale(k) => k.name(),
        }
    }

    pub fn min_n(self) -> usize {
        match self {
            Estimator::Location(k) => k.min_n(),
            Estimator::Scale(_) => 2,
        }
    }

    /// Mean and standard deviation have closed forms under normality.
    pub fn is_analytic(self) -> bool {
        matches!(
            self,
            Estimator::Location(LocationKind::Mean) | Estimator::Scale(ScaleKind::StdDev)
        )
    }

    fn apply(self, values: &[f64], scratch: &mut Scratch) -> f64 {
        match self {
            Estimator::Location(k) => k.estimate_unchecked(values, scratch),
            Estimator::Scale(k) => k.estimate_unchecked(values, scratch),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(k) = s.parse::<LocationKind>() {
            return Ok(Estimator::Location(k));
        }
        s.parse::<ScaleKind>()
            .map(Estimator::Scale)
            .map_err(|_| Error::invalid(format!("unknown estimator {s:?}")))
    }
}

impl Serialize for Estimator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Estimator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// c4(n) = √(2/(n−1)) · Γ(n/2) / Γ((n−1)/2), evaluated through log-gamma.
pub fn c4(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("c4 needs n >= 2, got {n}")));
    }
    let n = n as f64;
    let log_ratio = libm::lgamma(n / 2.0) - libm::lgamma((n - 1.0) / 2.0);
    Ok((2.0 / (n - 1.0)).sqrt() * log_ratio.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorEntry {
    pub estimator: Estimator,
    pub n: usize,
    /// E[estimator] under N(0, 1); zero for location estimators.
    pub gamma: f64,
    /// Var[estimator] under N(0, 1).
    pub var_std: f64,
    pub source: Source,
}

impl FactorEntry {
    pub fn analytic(estimator: Estimator, n: usize) -> Option<Self> {
        let (gamma, var_std) = match estimator {
            Estimator::Location(LocationKind::Mean) => (0.0, 1.0 / n as f64),
            Estimator::Scale(ScaleKind::StdDev) => {
                let c = c4(n).ok()?;
                (c, 1.0 - c * c)
            }
            _ => return None,
        };
        Some(Self {
            estimator,
            n,
            gamma,
            var_std,
            source: Source::Analytic,
        })
    }
}

/// Monte-Carlo estimate of an estimator's moments under N(0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardMoments {
    pub gamma: f64,
    pub var_std: f64,
    pub replications: u64,
}

impl StandardMoments {
    fn from_moments(m: Moments) -> Self {
        Self {
            gamma: m.mean,
            var_std: m.sample_variance(),
            replications: m.count,
        }
    }

    /// Standard error of `gamma`.
    pub fn gamma_std_error(&self) -> f64 {
        (self.var_std / self.replications as f64).sqrt()
    }
}

/// Draws `replications` N(0, 1) subgroups of size `n` and returns the
/// empirical mean and variance of the estimator.
pub fn simulate_standard_moments(
    estimator: Estimator,
    n: usize,
    replications: u64,
    seed: u64,
) -> Result<StandardMoments> {
    Ok(simulate_many(&[estimator], n, replications, seed)?[0])
}

/// Same draws as [`simulate_standard_moments`], shared across estimators.
pub fn simulate_many(
    estimators: &[Estimator],
    n: usize,
    replications: u64,
    seed: u64,
) -> Result<Vec<StandardMoments>> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::invalid(format!(
            "need at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    if let Some(e) = estimators.iter().find(|e| n < e.min_n()) {
        return Err(Error::invalid(format!("{e} is undefined for n = {n}")));
    }
    let k = estimators.len();
    let per_block = |range: std::ops::Range<u64>| {
        let mut rng = parallel::stream(
            seed,
            domain::FACTORS,
            ((n as u64) << 40) | (range.start / parallel::BLOCK),
        );
        let mut acc = vec![Moments::default(); k];
        let mut scratch = Scratch::with_capacity(n);
        let mut x = vec![0.0; n];
        for _ in range {
            for v in x.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            for (a, e) in acc.iter_mut().zip(estimators) {
                a.push(e.apply(&x, &mut scratch));
            }
        }
        acc
    };
    let merged = parallel::map_reduce_blocks(replications, per_block, |a, b| {
        a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()
    })
    .expect("replications > 0");
    Ok(merged.into_iter().map(StandardMoments::from_moments).collect())
}

/// Tabulated standardized moments for a grid of (estimator, n).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorTable {
    pub version: String,
    pub master_seed: u64,
    pub mc_replications: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub estimators: Vec<Estimator>,
    entries: BTreeMap<(Estimator, usize), FactorEntry>,
}

impl FactorTable {
    /// The table shipped with the crate (10⁷ replications, n = 2..=30).
    pub fn builtin() -> &'static FactorTable {
        static TABLE: OnceLock<FactorTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            FactorTable::from_json(BUILTIN_TABLE).expect("embedded factor table is valid")
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = &FactorEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, estimator: Estimator, n: usize) -> Result<FactorEntry> {
        if let Some(e) = self.entries.get(&(estimator, n)) {
            return Ok(*e);
        }
        FactorEntry::analytic(estimator, n).ok_or(Error::TableIncomplete { estimator, n })
    }

    pub fn contains(&self, estimator: Estimator, n: usize) -> bool {
        self.get(estimator, n).is_ok()
    }

    /// ν²(n) of a location estimator.
    pub fn nu_sq(&self, kind: LocationKind, n: usize) -> Result<f64> {
        Ok(self.get(Estimator::Location(kind), n)?.var_std)
    }

    /// γ(n) of a scale estimator: c4, c5 or c6.
    pub fn unbiasing_factor(&self, kind: ScaleKind, n: usize) -> Result<f64> {
        Ok(self.get(Estimator::Scale(kind), n)?.gamma)
    }

    /// τ²(n) of a scale estimator.
    pub fn tau_sq(&self, kind: ScaleKind, n: usize) -> Result<f64> {
        Ok(self.get(Estimator::Scale(kind), n)?.var_std)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = TableDocument {
            version: self.version.clone(),
            master_seed: self.master_seed,
            replications: self.mc_replications,
            n_min: self.n_min,
            n_max: self.n_max,
            estimators: self.estimators.clone(),
            checksum: self.checksum(),
            entries: self.entries.values().map(EntryRecord::from).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TableDocument = serde_json::from_str(text)?;
        if doc.version != TABLE_VERSION {
            return Err(Error::VersionMismatch {
                found: doc.version,
                expected: TABLE_VERSION.to_string(),
            });
        }
        let mut table = FactorTable {
            version: doc.version,
            master_seed: doc.master_seed,
            mc_replications: doc.replications,
            n_min: doc.n_min,
            n_max: doc.n_max,
            estimators: doc.estimators,
            entries: BTreeMap::new(),
        };
        for r in doc.entries {
            let entry = FactorEntry {
                estimator: r.estimator,
                n: r.n,
                gamma: r.gamma,
                var_std: r.var_std,
                source: r.source,
            };
            table.entries.insert((r.estimator, r.n), entry);
        }
        for &e in &table.estimators {
            for n in table.n_min.max(e.min_n())..=table.n_max {
                if !table.entries.contains_key(&(e, n)) {
                    return Err(Error::TableIncomplete { estimator: e, n });
                }
            }
        }
        if table.checksum() != doc.checksum {
            return Err(Error::ChecksumMismatch);
        }
        Ok(table)
    }

    fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!(
            "{}|{}|{}|{}|{}\n",
            self.version, self.master_seed, self.mc_replications, self.n_min, self.n_max
        ));
        for e in self.entries.values() {
            h.update(format!(
                "{}|{}|{:016x}|{:016x}\n",
                e.estimator,
                e.n,
                e.gamma.to_bits(),
                e.var_std.to_bits()
            ));
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Builds the table over `n_range` for the given estimators.
pub fn build_table(
    estimators: &[Estimator],
    n_range: std::ops::RangeInclusive<usize>,
    replications: u64,
    seed: u64,
    mut progress: impl FnMut(usize),
) -> Result<FactorTable> {
    let (n_min, n_max) = (*n_range.start(), *n_range.end());
    if n_min < 2 || n_min > n_max {
        return Err(Error::invalid(format!(
            "invalid n range {n_min}..={n_max} (need 2 <= n_min <= n_max)"
        )));
    }
    if estimators.is_empty() {
        return Err(Error::invalid("no estimators requested"));
    }
    let mut estimators = estimators.to_vec();
    estimators.sort();
    estimators.dedup();
    let simulated: Vec<Estimator> = estimators.iter().copied().filter(|e| !e.is_analytic()).collect();
    if !simulated.is_empty() && replications < MIN_REPLICATIONS {
        return Err(Error::invalid(format!(
            "need at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }

    let mut entries = BTreeMap::new();
    for n in n_range {
        for &e in estimators.iter().filter(|e| e.is_analytic()) {
            entries.insert((e, n), FactorEntry::analytic(e, n).expect("analytic"));
        }
        if !simulated.is_empty() {
            let moments = simulate_many(&simulated, n, replications, seed)?;
            for (&e, m) in simulated.iter().zip(moments) {
                let gamma = match e {
                    Estimator::Location(_) => 0.0,
                    Estimator::Scale(_) => m.gamma,
                };
                entries.insert(
                    (e, n),
                    FactorEntry {
                        estimator: e,
                        n,
                        gamma,
                        var_std: m.var_std,
                        source: Source::MonteCarlo,
                    },
                );
            }
        }
        progress(n);
    }
    Ok(FactorTable {
        version: TABLE_VERSION.to_string(),
        master_seed: seed,
        mc_replications: replications,
        n_min,
        n_max,
        estimators,
        entries,
    })
}

pub fn save_table(table: &FactorTable, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, table.to_json()?.as_bytes())
}

pub fn load_table(path: &Path) -> Result<FactorTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FactorTable::from_json(&text).map_err(|e| match e {
        Error::Json(source) => Error::Parse {
            path: path.display().to_string(),
            message: source.to_string(),
        },
        other => other,
    })
}

#[derive(Serialize, Deserialize)]
struct TableDocument {
    version: String,
    master_seed: u64,
    replications: u64,
    n_min: usize,
    n_max: usize,
    estimators: Vec<Estimator>,
    checksum: String,
    entries: Vec<EntryRecord>,
}

#[derive(Serialize, Deserialize)]
struct EntryRecord {
    estimator: Estimator,
    n: usize,
    #[serde(serialize_with = "crate::io::serialize_sig17")]
    gamma: f64,
    #[serde(serialize_with = "crate::io::serialize_sig17")]
    var_std: f64,
    source: Source,
}

impl From<&FactorEntry> for EntryRecord {
    fn from(e: &FactorEntry) -> Self {
        Self {
            estimator: e.estimator,
            n: e.n,
            gamma: e.gamma,
            var_std: e.var_std,
            source: e.source,
        }
    }
}
