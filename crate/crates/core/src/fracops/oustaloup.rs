use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency band and half-order used when rationalizing `s^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OustaloupBand {
    /// Lower fitting frequency, rad/s.
    pub omega_b: f64,
    /// Upper fitting frequency, rad/s.
    pub omega_h: f64,
    /// Half order `N`; the filter has `2N + 1` poles and zeros.
    pub half_order: usize,
}

impl Default for OustaloupBand {
    fn default() -> Self {
        Self {
            omega_b: 1e-2,
            omega_h: 1e2,
            half_order: 2,
        }
    }
}

impl OustaloupBand {
    pub fn synthesize(&self, gamma: f64) -> Result<OustaloupFilter> {
        OustaloupFilter::synthesize(gamma, self.omega_b, self.omega_h, self.half_order)
    }
}

/// Oustaloup recursive approximation of `s^gamma` over `[omega_b, omega_h]`:
///
/// ```text
/// G(s) = K * prod_{k=-N..N} (s + z_k) / (s + p_k)
/// p_k = wb * (wh/wb)^((k + N + (1 + gamma)/2) / (2N + 1))
/// z_k = wb * (wh/wb)^((k + N + (1 - gamma)/2) / (2N + 1))
/// K   = wh^gamma
/// ```
///
/// Poles and zeros are stored in increasing order of `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OustaloupFilter {
    pub gamma: f64,
    pub omega_b: f64,
    pub omega_h: f64,
    pub half_order: usize,
    pub zeros: Vec<f64>,
    pub poles: Vec<f64>,
    pub gain: f64,
}

impl OustaloupFilter {
    pub fn synthesize(gamma: f64, omega_b: f64, omega_h: f64, half_order: usize) -> Result<Self> {
        if !(omega_b > 0.0 && omega_h > omega_b && omega_h.is_finite()) {
            return Err(Error::Domain(format!(
                "band edges must satisfy 0 < omega_b < omega_h (got [{omega_b}, {omega_h}])"
            )));
        }
        if !(gamma.abs() < 1.0) {
            return Err(Error::Domain(format!(
                "Oustaloup order must lie in (-1, 1), got {gamma}"
            )));
        }
        if half_order == 0 {
            return Err(Error::Domain("half order N must be positive".into()));
        }

        let n = half_order as f64;
        let order = 2.0 * n + 1.0;
        let ratio = omega_h / omega_b;
        let corner = |offset: f64| -> Vec<f64> {
            (0..=2 * half_order)
                .map(|i| {
                    let k = i as f64 - n;
                    omega_b * ratio.powf((k + n + offset) / order)
                })
                .collect()
        };

        Ok(Self {
            gamma,
            omega_b,
            omega_h,
            half_order,
            zeros: corner(0.5 * (1.0 - gamma)),
            poles: corner(0.5 * (1.0 + gamma)),
            gain: omega_h.powf(gamma),
        })
    }

    /// Number of poles (and zeros), `2N + 1`.
    pub fn order(&self) -> usize {
        self.poles.len()
    }

    /// `G(j omega)` from the product form.
    pub fn frequency_response(&self, omega: f64) -> Result<Complex64> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
        }
        Ok(self.evaluate(Complex64::new(0.0, omega)))
    }

    /// Evaluates the rational function at an arbitrary complex `s`.
    pub fn evaluate(&self, s: Complex64) -> Complex64 {
        self.zeros
            .iter()
            .zip(&self.poles)
            .fold(Complex64::new(self.gain, 0.0), |acc, (&z, &p)| {
                acc * (s + z) / (s + p)
            })
    }

    /// Limit of `G(s)` as `s -> 0`.
    pub fn dc_gain(&self) -> f64 {
        self.zeros
            .iter()
            .zip(&self.poles)
            .fold(self.gain, |acc, (&z, &p)| acc * z / p)
    }
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

/// Magnitude in dB and phase in degrees of a complex gain.
pub fn bode_point(g: Complex64) -> (f64, f64) {
    (20.0 * g.norm().log10(), g.arg().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_is_omega_h_to_gamma() {
        let f = OustaloupFilter::synthesize(0.5, 0.01, 100.0, 2).unwrap();
        assert!((f.gain - 10.0).abs() < 1e-12);
        assert_eq!(f.order(), 5);
    }

    #[test]
    fn first_pole_matches_direct_evaluation() {
        let f = OustaloupFilter::synthesize(0.5, 0.01, 100.0, 2).unwrap();
        // k = -2: exponent (0 + 0.75) / 5 over a ratio of 1e4.
        let expected = 0.01 * 10f64.powf(0.6);
        assert!((f.poles[0] - expected).abs() < 1e-12);
        assert!((f.poles[0] - 0.039811).abs() < 1e-6);
    }

    #[test]
    fn zero_order_is_identity() {
        let f = OustaloupFilter::synthesize(0.0, 0.01, 100.0, 2).unwrap();
        assert_eq!(f.zeros, f.poles);
        assert_eq!(f.gain, 1.0);
        for w in log_space(1e-3, 1e3, 13) {
            let g = f.frequency_response(w).unwrap();
            assert!((g - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn corners_are_positive_and_increasing() {
        for &g in &[-0.9, -0.3, 0.0, 0.4, 0.95] {
            let f = OustaloupFilter::synthesize(g, 0.01, 100.0, 3).unwrap();
            for v in [&f.zeros, &f.poles] {
                assert!(v.iter().all(|&x| x > 0.0));
                assert!(v.windows(2).all(|w| w[1] > w[0]));
            }
        }
    }

    #[test]
    fn band_center_magnitude_and_phase() {
        for (gamma, phase) in [(0.5, 45.0), (-0.5, -45.0)] {
            let f = OustaloupFilter::synthesize(gamma, 0.01, 100.0, 2).unwrap();
            let (mag_db, ph) = bode_point(f.frequency_response(1.0).unwrap());
            assert!(mag_db.abs() < 0.5, "magnitude {mag_db} dB");
            assert!((ph - phase).abs() < 3.0, "phase {ph}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(OustaloupFilter::synthesize(1.0, 0.01, 100.0, 2).is_err());
        assert!(OustaloupFilter::synthesize(-1.2, 0.01, 100.0, 2).is_err());
        assert!(OustaloupFilter::synthesize(0.5, 0.0, 100.0, 2).is_err());
        assert!(OustaloupFilter::synthesize(0.5, 10.0, 1.0, 2).is_err());
        let f = OustaloupFilter::synthesize(0.5, 0.01, 100.0, 2).unwrap();
        assert!(f.frequency_response(0.0).is_err());
        assert!(f.frequency_response(-1.0).is_err());
    }
}
