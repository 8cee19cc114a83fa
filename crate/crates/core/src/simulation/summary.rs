use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthSummary {
    pub arl: f64,
    pub sdrl: f64,
    /// Run-length quantile at `percentile` (linear interpolation).
    pub prl: f64,
    pub percentile: f64,
    /// Moment skewness g₁ = m₃ / m₂^{3/2}; zero when all run lengths agree.
    pub skewness: f64,
    pub censored_count: u64,
    pub replications: u64,
}

impl RunLengthSummary {
    /// Monte-Carlo standard error of the ARL.
    pub fn arl_std_error(&self) -> f64 {
        self.sdrl / (self.replications as f64).sqrt()
    }
}

/// Summarizes run lengths; censored values enter at their recorded length.
///
/// `percentile` is in percent (0 to 100).
pub fn summarize_run_lengths(rls: &[u64], censored: &[bool], percentile: f64) -> Result<RunLengthSummary> {
    if rls.is_empty() {
        return Err(Error::invalid("no run lengths to summarize"));
    }
    check_len("censored flags", censored.len(), rls.len())?;
    if !(0.0..=100.0).contains(&percentile) {
        return Err(Error::invalid(format!("percentile {percentile} outside [0, 100]")));
    }
    let n = rls.len() as f64;
    let arl = rls.iter().map(|&x| x as f64).sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &x in rls {
        let d = x as f64 - arl;
        m2 += d * d;
        m3 += d * d * d;
    }
    let sdrl = if rls.len() > 1 { (m2 / (n - 1.0)).sqrt() } else { 0.0 };
    let (pm2, pm3) = (m2 / n, m3 / n);
    let skewness = if pm2 > 0.0 { pm3 / pm2.powf(1.5) } else { 0.0 };

    let mut sorted = rls.to_vec();
    sorted.sort_unstable();
    let h = (n - 1.0) * percentile / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let prl = sorted[lo] as f64 + (h - lo as f64) * (sorted[hi] as f64 - sorted[lo] as f64);

    Ok(RunLengthSummary {
        arl,
        sdrl,
        prl,
        percentile,
        skewness,
        censored_count: censored.iter().filter(|&&c| c).count() as u64,
        replications: rls.len() as u64,
    })
}
