//! Arithmetic cost of the sample-rate network: two operations per weight,
//! per sample.

use crate::error::{Error, Result};

/// Non-network cost per second (sampling, LPC, frame-rate net) quoted for
/// the reference configuration, in GFLOPS.
pub const OVERHEAD_GFLOPS: f64 = 0.5;

/// C = (3·d·N_A² + 3·N_B·(N_A + N_B) + 2·N_B·Q) · 2 · F_s, in GFLOPS.
pub fn complexity_gflops(n_a: usize, n_b: usize, q: usize, density: f64, rate: f64) -> Result<f64> {
    if !density.is_finite() || !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidValue {
            what: "density",
            detail: format!("{density} is outside [0, 1]"),
        });
    }
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::InvalidValue {
            what: "sample rate",
            detail: format!("{rate} must be positive"),
        });
    }
    Ok(flops_per_sample(n_a, n_b, q, density) * rate / 1e9)
}

/// Per-sample operation count behind [`complexity_gflops`].
pub fn flops_per_sample(n_a: usize, n_b: usize, q: usize, density: f64) -> f64 {
    let (n_a, n_b, q) = (n_a as f64, n_b as f64, q as f64);
    (3.0 * density * n_a * n_a + 3.0 * n_b * (n_a + n_b) + 2.0 * n_b * q) * 2.0
}
