//! Benchmark processes with input transport delay, integrated with
//! fixed-step RK4 (input held constant across each step).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plant definition as it appears in scenario documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PlantModel {
    /// `y'' + damping y' + nonlinear y^2 = u(t - delay_s)`.
    NonlinearP1 {
        damping: f64,
        nonlinear: f64,
        delay_s: f64,
    },
    /// `num(s) / den(s) * exp(-delay_s s)`, coefficients highest power first.
    DelayedLti {
        num: Vec<f64>,
        den: Vec<f64>,
        delay_s: f64,
    },
}

impl PlantModel {
    /// Delayed second-order nonlinear process.
    pub fn p1() -> Self {
        PlantModel::NonlinearP1 {
            damping: 1.0,
            nonlinear: 0.25,
            delay_s: 0.5,
        }
    }

    /// Delayed open-loop unstable process `exp(-0.2 s) / (s - 1)`.
    pub fn p2() -> Self {
        PlantModel::DelayedLti {
            num: vec![1.0],
            den: vec![1.0, -1.0],
            delay_s: 0.2,
        }
    }

    pub fn delay(&self) -> f64 {
        match self {
            PlantModel::NonlinearP1 { delay_s, .. } | PlantModel::DelayedLti { delay_s, .. } => {
                *delay_s
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let delay = self.delay();
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(Error::Config(format!("plant delay must be >= 0, got {delay}")));
        }
        match self {
            PlantModel::NonlinearP1 { damping, nonlinear, .. } => {
                if !(damping.is_finite() && nonlinear.is_finite()) {
                    return Err(Error::Config("P1 coefficients must be finite".into()));
                }
            }
            PlantModel::DelayedLti { num, den, .. } => {
                let den = strip_leading_zeros(den);
                let num = strip_leading_zeros(num);
                if den.len() < 2 {
                    return Err(Error::Config("denominator must have degree >= 1".into()));
                }
                if num.len() > den.len() {
                    return Err(Error::Config(
                        "numerator degree exceeds denominator degree".into(),
                    ));
                }
                if num.iter().chain(den).any(|c| !c.is_finite()) {
                    return Err(Error::Config("transfer function coefficients must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

fn strip_leading_zeros(c: &[f64]) -> &[f64] {
    let first = c.iter().position(|&x| x != 0.0).unwrap_or(c.len());
    &c[first..]
}

/// Fixed-length transport delay. Output at step `k` is the input pushed at
/// step `k - len`; zero before that.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    buf: Vec<f64>,
    head: usize,
}

impl DelayLine {
    /// Delay of `round(delay / sample_time)` samples.
    pub fn new(delay: f64, sample_time: f64) -> Self {
        Self::with_len((delay / sample_time).round() as usize)
    }

    pub fn with_len(len: usize) -> Self {
        Self { buf: vec![0.0; len], head: 0 }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Value that the next [`DelayLine::push`] will return.
    pub fn peek(&self) -> Option<f64> {
        self.buf.get(self.head).copied()
    }

    pub fn push(&mut self, x: f64) -> f64 {
        if self.buf.is_empty() {
            return x;
        }
        let out = std::mem::replace(&mut self.buf[self.head], x);
        self.head = (self.head + 1) % self.buf.len();
        out
    }

    pub fn reset(&mut self) {
        self.buf.iter_mut().for_each(|x| *x = 0.0);
        self.head = 0;
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Dynamics {
    Nonlinear { damping: f64, nonlinear: f64 },
    /// Controllable canonical form of a monic denominator:
    /// `x' = A x + B u`, `y = C x + D u`.
    Canonical { a: Vec<f64>, c: Vec<f64>, d: f64 },
}

impl Dynamics {
    fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        match self {
            Dynamics::Nonlinear { damping, nonlinear } => {
                dx[0] = x[1];
                dx[1] = -damping * x[1] - nonlinear * x[0] * x[0] + u;
            }
            Dynamics::Canonical { a, .. } => {
                // x_i' = x_{i+1}; x_n' = -sum a_i x_i + u
                let n = x.len();
                dx[..n - 1].copy_from_slice(&x[1..]);
                dx[n - 1] = u - a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>();
            }
        }
    }
}

/// Single-owner simulation state of one plant.
#[derive(Debug, Clone)]
pub struct PlantState {
    dynamics: Dynamics,
    x: Vec<f64>,
    delay: DelayLine,
    h: f64,
    time: f64,
    threshold: f64,
    diverged: bool,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl PlantState {
    pub const DEFAULT_BLOWUP: f64 = 1e6;

    pub fn new(model: &PlantModel, sample_time: f64) -> Result<Self> {
        model.validate()?;
        if !(sample_time > 0.0 && sample_time.is_finite()) {
            return Err(Error::Config(format!("sample time must be positive, got {sample_time}")));
        }
        let delay = DelayLine::new(model.delay(), sample_time);
        let (dynamics, n) = match model {
            PlantModel::NonlinearP1 { damping, nonlinear, .. } => (
                Dynamics::Nonlinear {
                    damping: *damping,
                    nonlinear: *nonlinear,
                },
                2,
            ),
            PlantModel::DelayedLti { num, den, .. } => {
                let den = strip_leading_zeros(den);
                let lead = den[0];
                let n = den.len() - 1;
                // a[i] multiplies s^i; den is highest power first.
                let a: Vec<f64> = (0..n).map(|i| den[n - i] / lead).collect();
                let mut b = vec![0.0; n + 1];
                let num = strip_leading_zeros(num);
                for (i, &c) in num.iter().rev().enumerate() {
                    b[i] = c / lead;
                }
                let d = b[n];
                let c: Vec<f64> = (0..n).map(|i| b[i] - d * a[i]).collect();
                if d != 0.0 && delay.is_empty() {
                    return Err(Error::Config(
                        "biproper plant without input delay forms an algebraic loop".into(),
                    ));
                }
                (Dynamics::Canonical { a, c, d }, n)
            }
        };
        Ok(Self {
            dynamics,
            x: vec![0.0; n],
            delay,
            h: sample_time,
            time: 0.0,
            threshold: Self::DEFAULT_BLOWUP,
            diverged: false,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        })
    }

    pub fn with_blowup_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// Sets the initial output `y(0)`, with all other states at rest.
    pub fn with_initial_output(mut self, y0: f64) -> Self {
        match &self.dynamics {
            Dynamics::Nonlinear { .. } => self.x[0] = y0,
            Dynamics::Canonical { c, .. } => {
                // Place the deviation on the lowest-order state with a nonzero output weight.
                if let Some(i) = c.iter().position(|&ci| ci != 0.0) {
                    self.x[i] = y0 / c[i];
                }
            }
        }
        self
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn sample_time(&self) -> f64 {
        self.h
    }

    pub fn delay_samples(&self) -> usize {
        self.delay.len()
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// Current measured output.
    pub fn output(&self) -> f64 {
        match &self.dynamics {
            Dynamics::Nonlinear { .. } => self.x[0],
            Dynamics::Canonical { c, d, .. } => {
                let direct = if *d != 0.0 { d * self.delay.peek().unwrap_or(0.0) } else { 0.0 };
                c.iter().zip(&self.x).map(|(ci, xi)| ci * xi).sum::<f64>() + direct
            }
        }
    }

    /// Pushes `u + d` into the delay line, integrates one RK4 step with the
    /// delayed input held constant, and returns the new output.
    pub fn step(&mut self, u: f64, d: f64) -> f64 {
        let u_del = self.delay.push(u + d);
        let h = self.h;
        let n = self.x.len();

        self.dynamics.derivative(&self.x, u_del, &mut self.k[0]);
        for (stage, frac) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..n {
                self.tmp[i] = self.x[i] + frac * h * self.k[stage - 1][i];
            }
            let (_, rest) = self.k.split_at_mut(stage);
            self.dynamics.derivative(&self.tmp, u_del, &mut rest[0]);
        }
        for i in 0..n {
            self.x[i] += h / 6.0
                * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
        self.time += h;

        let y = self.output();
        if !y.is_finite() || self.x.iter().any(|v| !(v.abs() <= self.threshold)) {
            self.diverged = true;
        }
        y
    }
}
