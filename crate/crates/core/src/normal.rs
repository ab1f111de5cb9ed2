//! Standard normal distribution function and two-sided z-test p-values.

use std::f64::consts::FRAC_1_SQRT_2;

use libm::erfc;

use crate::error::{Error, Result};

/// `Phi(x) = erfc(-x / sqrt(2)) / 2`.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("normal_cdf of non-finite {x}")));
    }
    Ok(0.5 * erfc(-x * FRAC_1_SQRT_2))
}

/// Two-sided p-value `2 (1 - Phi(|z|))`, computed as `erfc(|z| / sqrt(2))`
/// to keep precision in the tail.
pub fn two_sided_pvalue(z: f64) -> f64 {
    erfc(z.abs() * FRAC_1_SQRT_2).clamp(0.0, 1.0)
}
