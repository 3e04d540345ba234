//! PID, FOPID, fuzzy PID and fuzzy FOPID as stateful discrete-time blocks.
//!
//! ```text
//! FOPID:        u = Kp e + Ki I^lambda[e] + Kd D^mu[e]
//! fuzzy FOPID:  x1 = clamp(Ke e), x2 = clamp(Kd_sf D^mu[e])
//!               v  = FLC(x1, x2)
//!               u  = alpha v + beta I^lambda[v]
//! ```
//!
//! PID and fuzzy PID are the same blocks with `lambda = mu = 1`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::{DiscreteOperator, OustaloupBand};
use crate::fuzzy::FuzzyEngine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Pid,
    Fopid,
    FuzzyPid,
    FuzzyFopid,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::Pid,
        ControllerKind::Fopid,
        ControllerKind::FuzzyPid,
        ControllerKind::FuzzyFopid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Pid => "pid",
            ControllerKind::Fopid => "fopid",
            ControllerKind::FuzzyPid => "fuzzy_pid",
            ControllerKind::FuzzyFopid => "fuzzy_fopid",
        }
    }

    /// Names of the entries of the optimization vector, in order.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            ControllerKind::Pid => &["kp", "ki", "kd"],
            ControllerKind::Fopid => &["kp", "ki", "kd", "lambda", "mu"],
            ControllerKind::FuzzyPid => &["ke", "kd", "alpha", "beta"],
            ControllerKind::FuzzyFopid => &["ke", "kd", "alpha", "beta", "lambda", "mu"],
        }
    }

    pub fn dimension(self) -> usize {
        self.parameter_names().len()
    }

    pub fn is_fuzzy(self) -> bool {
        matches!(self, ControllerKind::FuzzyPid | ControllerKind::FuzzyFopid)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown controller kind `{s}` (expected pid, fopid, fuzzy_pid or fuzzy_fopid)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FopidParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Integral order.
    pub lambda: f64,
    /// Derivative order.
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyPidParams {
    /// Error scaling factor.
    pub ke: f64,
    /// Rate scaling factor.
    pub kd: f64,
    /// Direct output gain.
    pub alpha: f64,
    /// Integrated output gain.
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyFopidParams {
    pub ke: f64,
    pub kd: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// A parameter set tagged with its controller kind; serializes as
/// `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ControllerParams {
    Pid(PidParams),
    Fopid(FopidParams),
    FuzzyPid(FuzzyPidParams),
    FuzzyFopid(FuzzyFopidParams),
}

impl ControllerParams {
    pub fn kind(&self) -> ControllerKind {
        match self {
            ControllerParams::Pid(_) => ControllerKind::Pid,
            ControllerParams::Fopid(_) => ControllerKind::Fopid,
            ControllerParams::FuzzyPid(_) => ControllerKind::FuzzyPid,
            ControllerParams::FuzzyFopid(_) => ControllerKind::FuzzyFopid,
        }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        match *self {
            ControllerParams::Pid(p) => vec![p.kp, p.ki, p.kd],
            ControllerParams::Fopid(p) => vec![p.kp, p.ki, p.kd, p.lambda, p.mu],
            ControllerParams::FuzzyPid(p) => vec![p.ke, p.kd, p.alpha, p.beta],
            ControllerParams::FuzzyFopid(p) => {
                vec![p.ke, p.kd, p.alpha, p.beta, p.lambda, p.mu]
            }
        }
    }

    fn from_vector_unchecked(kind: ControllerKind, v: &[f64]) -> Self {
        match kind {
            ControllerKind::Pid => ControllerParams::Pid(PidParams { kp: v[0], ki: v[1], kd: v[2] }),
            ControllerKind::Fopid => ControllerParams::Fopid(FopidParams {
                kp: v[0],
                ki: v[1],
                kd: v[2],
                lambda: v[3],
                mu: v[4],
            }),
            ControllerKind::FuzzyPid => ControllerParams::FuzzyPid(FuzzyPidParams {
                ke: v[0],
                kd: v[1],
                alpha: v[2],
                beta: v[3],
            }),
            ControllerKind::FuzzyFopid => ControllerParams::FuzzyFopid(FuzzyFopidParams {
                ke: v[0],
                kd: v[1],
                alpha: v[2],
                beta: v[3],
                lambda: v[4],
                mu: v[5],
            }),
        }
    }
}

/// Search interval of every optimization variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParameterBounds {
    /// Interval for all gains and scaling factors.
    pub gain: (f64, f64),
    /// Interval for the integral order `lambda`.
    pub lambda: (f64, f64),
    /// Interval for the derivative order `mu`.
    pub mu: (f64, f64),
    /// Optional separate interval for the fuzzy input scaling factors
    /// `ke` and `kd`; `gain` applies when absent.
    pub input_scaling: Option<(f64, f64)>,
}

impl Default for ParameterBounds {
    fn default() -> Self {
        // Orders stop short of 2: the operator split only covers |order| < 2.
        Self {
            gain: (0.0, 100.0),
            lambda: (1e-3, 1.999),
            mu: (0.0, 1.999),
            input_scaling: None,
        }
    }
}

impl ParameterBounds {
    /// Per-gene `(lo, hi)` for `kind`, in vector order.
    pub fn for_kind(&self, kind: ControllerKind) -> Vec<(f64, f64)> {
        kind.parameter_names()
            .iter()
            .map(|&n| match n {
                "lambda" => self.lambda,
                "mu" => self.mu,
                "ke" | "kd" if kind.is_fuzzy() => self.input_scaling.unwrap_or(self.gain),
                _ => self.gain,
            })
            .collect()
    }
}

/// Maps an optimization vector onto a parameter set, rejecting vectors of
/// the wrong length and entries outside `bounds`.
pub fn decode_parameter_vector(
    kind: ControllerKind,
    raw: &[f64],
    bounds: &ParameterBounds,
) -> Result<ControllerParams> {
    if raw.len() != kind.dimension() {
        return Err(Error::Dimension {
            kind: kind.name(),
            expected: kind.dimension(),
            got: raw.len(),
        });
    }
    for ((&value, &(lo, hi)), &name) in raw
        .iter()
        .zip(&bounds.for_kind(kind))
        .zip(kind.parameter_names())
    {
        if !(value >= lo && value <= hi) {
            return Err(Error::Bound { name, value, lo, hi });
        }
    }
    Ok(ControllerParams::from_vector_unchecked(kind, raw))
}

/// Serialized controller document: `{kind, params, sample_time}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    #[serde(flatten)]
    pub params: ControllerParams,
    pub sample_time: f64,
}

#[derive(Debug, Clone)]
enum Law {
    Linear {
        kp: f64,
        ki: f64,
        kd: f64,
    },
    Fuzzy {
        ke: f64,
        kd: f64,
        alpha: f64,
        beta: f64,
        engine: Arc<FuzzyEngine>,
    },
}

/// Stateful controller. Each instance owns its operator states; clone a
/// freshly built block to run independent loops.
#[derive(Debug, Clone)]
pub struct ControllerBlock {
    params: ControllerParams,
    sample_time: f64,
    law: Law,
    derivative: DiscreteOperator,
    integral: DiscreteOperator,
}

impl ControllerBlock {
    pub fn new(
        params: ControllerParams,
        sample_time: f64,
        engine: Arc<FuzzyEngine>,
        band: &OustaloupBand,
    ) -> Result<Self> {
        let (law, lambda, mu) = match params {
            ControllerParams::Pid(p) => (Law::Linear { kp: p.kp, ki: p.ki, kd: p.kd }, 1.0, 1.0),
            ControllerParams::Fopid(p) => {
                (Law::Linear { kp: p.kp, ki: p.ki, kd: p.kd }, p.lambda, p.mu)
            }
            ControllerParams::FuzzyPid(p) => (
                Law::Fuzzy { ke: p.ke, kd: p.kd, alpha: p.alpha, beta: p.beta, engine },
                1.0,
                1.0,
            ),
            ControllerParams::FuzzyFopid(p) => (
                Law::Fuzzy { ke: p.ke, kd: p.kd, alpha: p.alpha, beta: p.beta, engine },
                p.lambda,
                p.mu,
            ),
        };
        if !(lambda > 0.0 && lambda < 2.0) {
            return Err(Error::Domain(format!("integral order must lie in (0, 2), got {lambda}")));
        }
        if !(mu >= 0.0 && mu < 2.0) {
            return Err(Error::Domain(format!("derivative order must lie in [0, 2), got {mu}")));
        }
        let gains_ok = params.to_vector().iter().all(|g| g.is_finite() && *g >= 0.0);
        if !gains_ok {
            return Err(Error::Domain(format!("gains must be finite and non-negative: {params:?}")));
        }
        Ok(Self {
            params,
            sample_time,
            law,
            derivative: DiscreteOperator::with_order(mu, band, sample_time)?,
            integral: DiscreteOperator::with_order(-lambda, band, sample_time)?,
        })
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    pub fn reset(&mut self) {
        self.derivative.reset();
        self.integral.reset();
    }

    /// Advances one sample with error `e` and returns the control signal.
    pub fn step(&mut self, e: f64) -> f64 {
        self.step_detailed(e).u
    }

    /// Like [`ControllerBlock::step`] but also exposes the fuzzy
    /// intermediate signal.
    pub fn step_detailed(&mut self, e: f64) -> ControlSample {
        let rate = self.derivative.step(e);
        match &self.law {
            Law::Linear { kp, ki, kd } => {
                let i = self.integral.step(e);
                ControlSample { u: kp * e + ki * i + kd * rate, flc: None }
            }
            Law::Fuzzy { ke, kd, alpha, beta, engine } => {
                let x1 = (ke * e).clamp(-1.0, 1.0);
                let x2 = (kd * rate).clamp(-1.0, 1.0);
                let v = engine.evaluate(x1, x2);
                let i = self.integral.step(v);
                ControlSample { u: alpha * v + beta * i, flc: Some(v) }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub u: f64,
    /// Defuzzified output before the output scaling, fuzzy kinds only.
    pub flc: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::build_standard_engine;

    fn block(params: ControllerParams) -> ControllerBlock {
        ControllerBlock::new(
            params,
            0.01,
            Arc::new(build_standard_engine()),
            &OustaloupBand::default(),
        )
        .unwrap()
    }

    #[test]
    fn decode_table_rows() {
        let b = ParameterBounds::default();
        let p = decode_parameter_vector(
            ControllerKind::FuzzyFopid,
            &[0.478803, 0.605029, 1.780246, 0.865874, 0.999794, 0.999598],
            &b,
        )
        .unwrap();
        assert_eq!(
            p,
            ControllerParams::FuzzyFopid(FuzzyFopidParams {
                ke: 0.478803,
                kd: 0.605029,
                alpha: 1.780246,
                beta: 0.865874,
                lambda: 0.999794,
                mu: 0.999598,
            })
        );
        let p = decode_parameter_vector(
            ControllerKind::Fopid,
            &[0.337983, 0.155569, 0.497122, 0.972147, 0.556586],
            &b,
        )
        .unwrap();
        assert_eq!(
            p,
            ControllerParams::Fopid(FopidParams {
                kp: 0.337983,
                ki: 0.155569,
                kd: 0.497122,
                lambda: 0.972147,
                mu: 0.556586,
            })
        );
        let p = decode_parameter_vector(ControllerKind::Pid, &[1.0, 0.0, 0.0], &b).unwrap();
        assert_eq!(p, ControllerParams::Pid(PidParams { kp: 1.0, ki: 0.0, kd: 0.0 }));
    }

    #[test]
    fn decode_rejects_bad_vectors() {
        let b = ParameterBounds::default();
        assert!(matches!(
            decode_parameter_vector(ControllerKind::Pid, &[1.0, 2.0], &b),
            Err(Error::Dimension { expected: 3, got: 2, .. })
        ));
        assert!(matches!(
            decode_parameter_vector(ControllerKind::Pid, &[1.0, -2.0, 0.0], &b),
            Err(Error::Bound { name: "ki", .. })
        ));
        assert!(matches!(
            decode_parameter_vector(ControllerKind::Fopid, &[1.0, 1.0, 1.0, 0.0, 0.5], &b),
            Err(Error::Bound { name: "lambda", .. })
        ));
        assert!(decode_parameter_vector(ControllerKind::FuzzyPid, &[f64::NAN, 1.0, 1.0, 1.0], &b)
            .is_err());
    }

    #[test]
    fn zero_error_gives_zero_control() {
        let all = [
            ControllerParams::Pid(PidParams { kp: 2.0, ki: 1.0, kd: 0.5 }),
            ControllerParams::Fopid(FopidParams { kp: 2.0, ki: 1.0, kd: 0.5, lambda: 0.7, mu: 1.3 }),
            ControllerParams::FuzzyPid(FuzzyPidParams { ke: 1.0, kd: 1.0, alpha: 1.0, beta: 1.0 }),
            ControllerParams::FuzzyFopid(FuzzyFopidParams {
                ke: 1.0,
                kd: 1.0,
                alpha: 1.0,
                beta: 1.0,
                lambda: 1.2,
                mu: 0.4,
            }),
        ];
        for p in all {
            let mut c = block(p);
            for _ in 0..100 {
                assert_eq!(c.step(0.0), 0.0);
            }
        }
    }

    #[test]
    fn proportional_only() {
        let mut c = block(ControllerParams::Pid(PidParams { kp: 1.0, ki: 0.0, kd: 0.0 }));
        for _ in 0..100 {
            assert_eq!(c.step(1.0), 1.0);
        }
    }

    #[test]
    fn fuzzy_intermediate_is_bounded() {
        let mut c = block(ControllerParams::FuzzyFopid(FuzzyFopidParams {
            ke: 50.0,
            kd: 80.0,
            alpha: 3.0,
            beta: 2.0,
            lambda: 0.6,
            mu: 0.8,
        }));
        for k in 0..500 {
            let e = 10.0 * ((k as f64) * 0.37).sin();
            let s = c.step_detailed(e);
            let v = s.flc.unwrap();
            assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn spec_document_shape() {
        let spec = ControllerSpec {
            params: ControllerParams::Pid(PidParams { kp: 1.0, ki: 0.5, kd: 0.1 }),
            sample_time: 0.01,
        };
        let v: serde_json::Value = serde_json::to_value(spec).unwrap();
        assert_eq!(v["kind"], "pid");
        assert_eq!(v["params"]["ki"], 0.5);
        assert_eq!(v["sample_time"], 0.01);
        let back: ControllerSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("fuzzy_fopid".parse::<ControllerKind>().unwrap(), ControllerKind::FuzzyFopid);
        assert!("pd".parse::<ControllerKind>().is_err());
    }
}
