//! Deterministic parallel Monte-Carlo plumbing.
//!
//! Every replication owns a ChaCha8 stream keyed by `(master_seed, domain)`
//! with the replication index as the stream id, so any replication can be
//! replayed in isolation. Reductions run over fixed-size blocks of
//! replication indices and the per-block results are combined in a pairwise
//! tree over block order, which makes floating-point output independent of
//! how many workers took part.

use std::ops::Range;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Replications per reduction block.
pub const BLOCK: u64 = 1024;

/// Domain tags separate the streams of unrelated experiments sharing a seed.
pub mod domain {
    pub const PHASE1: u64 = 0x5048_4153_4531;
    pub const RUN_LENGTH: u64 = 0x524c_454e;
    pub const FACTORS: u64 = 0x4641_4354;
    pub const KNOWN_LIMITS: u64 = 0x4b4e_4f57;
}

pub fn stream(master_seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(b"rbxbar01");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

fn block_ranges(total: u64) -> Vec<Range<u64>> {
    (0..total.div_ceil(BLOCK))
        .map(|b| b * BLOCK..((b + 1) * BLOCK).min(total))
        .collect()
}

/// Map fixed blocks of `0..total` and merge the results pairwise in block order.
pub fn map_reduce_blocks<T, M, C>(total: u64, map: M, combine: C) -> Option<T>
where
    T: Send,
    M: Fn(Range<u64>) -> T + Sync,
    C: Fn(T, T) -> T,
{
    let parts = map_blocks(block_ranges(total), &map);
    tree_combine(parts, &combine)
}

/// Apply `f` to every index and return the results in index order.
pub fn map_indices<T, F>(total: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let parts = map_blocks(block_ranges(total), &|r: Range<u64>| r.map(&f).collect::<Vec<T>>());
    parts.into_iter().flatten().collect()
}

#[cfg(feature = "parallel")]
fn map_blocks<T, M>(ranges: Vec<Range<u64>>, map: &M) -> Vec<T>
where
    T: Send,
    M: Fn(Range<u64>) -> T + Sync,
{
    use rayon::prelude::*;
    ranges.into_par_iter().map(map).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_blocks<T, M>(ranges: Vec<Range<u64>>, map: &M) -> Vec<T>
where
    M: Fn(Range<u64>) -> T,
{
    ranges.into_iter().map(map).collect()
}

fn tree_combine<T, C: Fn(T, T) -> T>(mut parts: Vec<T>, combine: &C) -> Option<T> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Running mean and centered second moment, mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Moments {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w,
        }
    }

    /// Variance with the 1/count denominator.
    pub fn population_variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    /// Variance with the 1/(count − 1) denominator.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.sample_variance() / self.count as f64).sqrt()
    }
}
