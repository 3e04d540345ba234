//! Grünwald–Letnikov differ-integral over the full sample history.
//!
//! Independent of the Oustaloup path; used to validate band-limited
//! realizations.

use crate::error::{Error, Result};

/// Binomial weights `w_j = (-1)^j C(order, j)` via the recursion
/// `w_j = w_{j-1} (1 - (order + 1) / j)`.
pub fn gl_weights(order: f64, len: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(len);
    let mut prev = 1.0;
    for j in 0..len {
        if j > 0 {
            prev *= 1.0 - (order + 1.0) / j as f64;
        }
        w.push(prev);
    }
    w
}

/// `D^order f` at every sample of `samples` (spaced `sample_time` apart,
/// starting at `t = 0`), with zero history before the first sample.
pub fn gl_oracle(samples: &[f64], order: f64, sample_time: f64) -> Result<Vec<f64>> {
    if !(order.abs() < 2.0) {
        return Err(Error::Domain(format!("order must lie in (-2, 2), got {order}")));
    }
    if !(sample_time > 0.0) {
        return Err(Error::Domain(format!("sample time must be positive, got {sample_time}")));
    }
    let w = gl_weights(order, samples.len());
    let scale = sample_time.powf(-order);
    Ok((0..samples.len())
        .map(|k| {
            let acc: f64 = w[..=k]
                .iter()
                .zip(samples[..=k].iter().rev())
                .map(|(wj, x)| wj * x)
                .sum();
            scale * acc
        })
        .collect())
}
