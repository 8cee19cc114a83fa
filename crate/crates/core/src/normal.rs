//! Standard normal constants and distribution function.

/// Φ⁻¹(3/4), the MAD consistency constant at the normal.
pub const PHI_INV_3_4: f64 = 0.674_489_750_196_081_7;

/// √2 · Φ⁻¹(3/4), the Shamos consistency constant at the normal.
pub const SQRT2_PHI_INV_3_4: f64 = 0.953_872_552_408_939_8;

/// Standard normal CDF, accurate in both tails.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail 1 − Φ(x) without cancellation.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}
