use super::{discretize, DiscreteFilter, OustaloupBand, OustaloupFilter};
use crate::error::{Error, Result};

/// A differ-integral of real order in `(-2, 2)` decomposed into an exact
/// integer-order part and an Oustaloup-rationalized fractional remainder.
///
/// Positive orders differentiate, negative orders integrate. The integer
/// part is `floor(order)` clamped to `{-1, 0, 1}`, so every integration
/// order in `(0, 2)` keeps an exact integrator and only the remainder is
/// band-limited.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalOperator {
    pub order: f64,
    pub integer_part: i32,
    pub fractional_filter: Option<OustaloupFilter>,
}

impl FractionalOperator {
    pub fn gamma(&self) -> f64 {
        self.fractional_filter.as_ref().map_or(0.0, |f| f.gamma)
    }
}

/// Splits `order` into integer and fractional parts, rationalizing the
/// fractional part over `band`.
pub fn split_order(order: f64, band: &OustaloupBand) -> Result<FractionalOperator> {
    if !(order.abs() < 2.0) {
        return Err(Error::Domain(format!("operator order must lie in (-2, 2), got {order}")));
    }
    let integer_part = order.floor().clamp(-1.0, 1.0);
    let gamma = order - integer_part;
    let fractional_filter = if gamma == 0.0 {
        None
    } else {
        Some(band.synthesize(gamma)?)
    };
    Ok(FractionalOperator {
        order,
        integer_part: integer_part as i32,
        fractional_filter,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum IntegerStage {
    Identity,
    /// Trapezoidal accumulator, the bilinear image of `1/s`.
    Integrate { acc: f64, prev: f64 },
    /// Backward difference. The first sample seeds the memory, so the initial
    /// output is zero rather than an impulse of height `x[0] / h`.
    Differentiate { prev: Option<f64> },
}

/// Stateful discrete realization of a [`FractionalOperator`]: the
/// discretized fractional filter followed by the exact integer stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    order: f64,
    filter: Option<DiscreteFilter>,
    stage: IntegerStage,
    h: f64,
}

impl DiscreteOperator {
    pub fn new(op: &FractionalOperator, sample_time: f64) -> Result<Self> {
        if !(sample_time > 0.0 && sample_time.is_finite()) {
            return Err(Error::Domain(format!("sample time must be positive, got {sample_time}")));
        }
        let filter = op
            .fractional_filter
            .as_ref()
            .map(|f| discretize(f, sample_time))
            .transpose()?;
        let stage = match op.integer_part {
            0 => IntegerStage::Identity,
            -1 => IntegerStage::Integrate { acc: 0.0, prev: 0.0 },
            1 => IntegerStage::Differentiate { prev: None },
            n => return Err(Error::Domain(format!("integer part {n} not supported"))),
        };
        Ok(Self {
            order: op.order,
            filter,
            stage,
            h: sample_time,
        })
    }

    /// Shorthand for `split_order` followed by [`DiscreteOperator::new`].
    pub fn with_order(order: f64, band: &OustaloupBand, sample_time: f64) -> Result<Self> {
        Self::new(&split_order(order, band)?, sample_time)
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn sample_time(&self) -> f64 {
        self.h
    }

    pub fn reset(&mut self) {
        if let Some(f) = &mut self.filter {
            f.reset();
        }
        self.stage = match self.stage {
            IntegerStage::Identity => IntegerStage::Identity,
            IntegerStage::Integrate { .. } => IntegerStage::Integrate { acc: 0.0, prev: 0.0 },
            IntegerStage::Differentiate { .. } => IntegerStage::Differentiate { prev: None },
        };
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let v = match &mut self.filter {
            Some(f) => f.step(x),
            None => x,
        };
        match &mut self.stage {
            IntegerStage::Identity => v,
            IntegerStage::Integrate { acc, prev } => {
                *acc += 0.5 * self.h * (v + *prev);
                *prev = v;
                *acc
            }
            IntegerStage::Differentiate { prev } => {
                let last = prev.replace(v).unwrap_or(v);
                (v - last) / self.h
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> OustaloupBand {
        OustaloupBand::default()
    }

    #[test]
    fn split_examples() {
        let op = split_order(1.0, &band()).unwrap();
        assert_eq!(op.integer_part, 1);
        assert!(op.fractional_filter.is_none());

        let op = split_order(0.5, &band()).unwrap();
        assert_eq!(op.integer_part, 0);
        assert_eq!(op.gamma(), 0.5);

        let op = split_order(1.4, &band()).unwrap();
        assert_eq!(op.integer_part, 1);
        assert!((op.gamma() - 0.4).abs() < 1e-12);

        let op = split_order(-1.118352, &band()).unwrap();
        assert_eq!(op.integer_part, -1);
        assert!((op.gamma() + 0.118352).abs() < 1e-12);

        let op = split_order(-0.7, &band()).unwrap();
        assert_eq!(op.integer_part, -1);
        assert!((op.gamma() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn split_reconstructs_order() {
        for i in -199..200 {
            let order = i as f64 / 100.0;
            let op = split_order(order, &band()).unwrap();
            assert!((op.integer_part as f64 + op.gamma() - order).abs() < 1e-12);
            assert!(op.gamma().abs() < 1.0);
        }
    }

    #[test]
    fn split_rejects_out_of_range() {
        assert!(split_order(2.0, &band()).is_err());
        assert!(split_order(-2.5, &band()).is_err());
        assert!(split_order(f64::NAN, &band()).is_err());
    }

    #[test]
    fn zero_history_gives_zero() {
        for order in [-1.5, -1.0, -0.3, 0.0, 0.6, 1.0, 1.7] {
            let mut op = DiscreteOperator::with_order(order, &band(), 0.01).unwrap();
            for _ in 0..50 {
                assert_eq!(op.step(0.0), 0.0);
            }
        }
    }

    #[test]
    fn integrator_accumulates_one_second() {
        let mut op = DiscreteOperator::with_order(-1.0, &band(), 0.01).unwrap();
        let mut y = 0.0;
        for _ in 0..100 {
            y = op.step(1.0);
        }
        assert!((y - 1.0).abs() < 0.01, "{y}");
    }

    #[test]
    fn differentiator_has_no_initial_kick() {
        let mut op = DiscreteOperator::with_order(1.0, &band(), 0.01).unwrap();
        assert_eq!(op.step(1.0), 0.0);
        assert_eq!(op.step(1.0), 0.0);
        assert!((op.step(1.5) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn half_integral_of_step() {
        let h = 1e-3;
        let mut op = DiscreteOperator::with_order(-0.5, &band(), h).unwrap();
        let mut y = 0.0;
        for _ in 0..=1000 {
            y = op.step(1.0);
        }
        let exact = 2.0 / std::f64::consts::PI.sqrt();
        assert!((y - exact).abs() / exact < 0.05, "{y} vs {exact}");
    }

    #[test]
    fn reset_restores_initial_behaviour() {
        let mut op = DiscreteOperator::with_order(1.3, &band(), 0.01).unwrap();
        let xs: Vec<f64> = (0..100).map(|k| (k as f64 * 0.1).sin()).collect();
        let a: Vec<f64> = xs.iter().map(|&x| op.step(x)).collect();
        op.reset();
        let b: Vec<f64> = xs.iter().map(|&x| op.step(x)).collect();
        assert_eq!(a, b);
    }
}
