use num_complex::Complex64;

use super::OustaloupFilter;
use crate::error::{Error, Result};

/// Discrete state-space filter
///
/// ```text
/// x[k+1] = A x[k] + B u[k]
/// y[k]   = C x[k] + D u[k]
/// ```
///
/// `A` is stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFilter {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: f64,
    sample_time: f64,
    state: Vec<f64>,
    scratch: Vec<f64>,
}

impl DiscreteFilter {
    /// Pure static gain with no state.
    pub fn gain(d: f64, sample_time: f64) -> Self {
        Self {
            dim: 0,
            a: Vec::new(),
            b: Vec::new(),
            c: Vec::new(),
            d,
            sample_time,
            state: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// First-order section `(s + zero) / (s + pole)` mapped with the bilinear rule
    /// `s = (2/h) (z - 1) / (z + 1)`.
    fn bilinear_section(zero: f64, pole: f64, h: f64) -> Self {
        let c = 2.0 / h;
        let b0 = (c + zero) / (c + pole);
        let b1 = (zero - c) / (c + pole);
        let a1 = (pole - c) / (c + pole);
        // Transposed direct form: y = s + b0 u, s' = (b1 - a1 b0) u - a1 s.
        Self {
            dim: 1,
            a: vec![-a1],
            b: vec![b1 - a1 * b0],
            c: vec![1.0],
            d: b0,
            sample_time: h,
            state: vec![0.0],
            scratch: vec![0.0],
        }
    }

    /// Series connection `self` followed by `next`.
    fn then(self, next: &Self) -> Self {
        let (n1, n2) = (self.dim, next.dim);
        let n = n1 + n2;
        let mut a = vec![0.0; n * n];
        for i in 0..n1 {
            for j in 0..n1 {
                a[i * n + j] = self.a[i * n1 + j];
            }
        }
        for i in 0..n2 {
            for j in 0..n1 {
                a[(n1 + i) * n + j] = next.b[i] * self.c[j];
            }
            for j in 0..n2 {
                a[(n1 + i) * n + n1 + j] = next.a[i * n2 + j];
            }
        }
        let mut b = self.b.clone();
        b.extend(next.b.iter().map(|&bi| bi * self.d));
        let mut c: Vec<f64> = self.c.iter().map(|&cj| next.d * cj).collect();
        c.extend_from_slice(&next.c);
        Self {
            dim: n,
            a,
            b,
            c,
            d: self.d * next.d,
            sample_time: self.sample_time,
            state: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    /// State-update matrix as rows.
    pub fn state_matrix(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.dim.max(1)).take(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// Largest eigenvalue magnitude of `A`.
    ///
    /// Cascaded first-order sections give a lower-triangular `A`, so the
    /// eigenvalues are its diagonal entries.
    pub fn spectral_radius(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.a[i * self.dim + i].abs())
            .fold(0.0, f64::max)
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn step(&mut self, u: f64) -> f64 {
        let n = self.dim;
        let y = self.c.iter().zip(&self.state).map(|(c, x)| c * x).sum::<f64>() + self.d * u;
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            self.scratch[i] =
                row.iter().zip(&self.state).map(|(a, x)| a * x).sum::<f64>() + self.b[i] * u;
        }
        std::mem::swap(&mut self.state, &mut self.scratch);
        y
    }

    /// `H(e^{j omega h})`, solved as `C (zI - A)^{-1} B + D` by forward
    /// substitution on the lower-triangular `A`.
    pub fn frequency_response(&self, omega: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, omega * self.sample_time);
        let n = self.dim;
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = Complex64::new(self.b[i], 0.0);
            for j in 0..i {
                acc += self.a[i * n + j] * x[j];
            }
            x[i] = acc / (z - self.a[i * n + i]);
        }
        self.c.iter().zip(&x).map(|(c, xi)| c * xi).sum::<Complex64>() + self.d
    }

    /// Steady-state gain for a constant input, `C (I - A)^{-1} B + D`.
    pub fn dc_gain(&self) -> f64 {
        self.frequency_response(0.0).re
    }
}

/// Bilinear (Tustin) discretization of an Oustaloup filter into a
/// `(2N + 1)`-dimensional state-space realization built from cascaded
/// first-order sections.
pub fn discretize(filter: &OustaloupFilter, sample_time: f64) -> Result<DiscreteFilter> {
    if !(sample_time > 0.0 && sample_time.is_finite()) {
        return Err(Error::Domain(format!("sample time must be positive, got {sample_time}")));
    }
    let sections = filter
        .zeros
        .iter()
        .zip(&filter.poles)
        .map(|(&z, &p)| DiscreteFilter::bilinear_section(z, p, sample_time));
    let out = sections.fold(DiscreteFilter::gain(filter.gain, sample_time), |acc, s| acc.then(&s));
    let rho = out.spectral_radius();
    if !(rho < 1.0) {
        return Err(Error::UnstableDiscretization(rho));
    }
    Ok(out)
}
