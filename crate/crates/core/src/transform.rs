//! Strictly increasing scalar transforms applied to objective values.
//!
//! A transformed objective keeps its argmin and the direction of its
//! gradient; only the gradient magnitude changes, by the positive factor
//! `h'(o(x))`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{Objective, ObjectiveRef};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneTransform {
    Identity,
    /// `sign(s) * |s|^exponent`, valid on the whole real line.
    SignedPower {
        exponent: f64,
    },
    /// `(s + shift)^exponent`, valid for `s > -shift`.
    ShiftedPower {
        shift: f64,
        exponent: f64,
    },
    Exponential,
}

fn pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

impl MonotoneTransform {
    pub fn signed_power(exponent: f64) -> Result<Self> {
        let t = MonotoneTransform::SignedPower { exponent };
        t.validate()?;
        Ok(t)
    }

    pub fn shifted_power(shift: f64, exponent: f64) -> Result<Self> {
        let t = MonotoneTransform::ShiftedPower { shift, exponent };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MonotoneTransform::SignedPower { exponent }
            | MonotoneTransform::ShiftedPower { exponent, .. }
                if !(exponent > 1.0) || !exponent.is_finite() =>
            {
                Err(Error::InvalidParameter(format!(
                    "power transform exponent must be finite and > 1, got {exponent}"
                )))
            }
            MonotoneTransform::ShiftedPower { shift, .. } if !shift.is_finite() => Err(
                Error::InvalidParameter(format!("shift must be finite, got {shift}")),
            ),
            _ => Ok(()),
        }
    }

    /// Open validity interval `(lo, hi)`.
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            MonotoneTransform::ShiftedPower { shift, .. } => (-shift, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        let (lo, hi) = self.interval();
        if !s.is_finite() || s <= lo || s >= hi {
            return Err(self.domain_error(s));
        }
        Ok(())
    }

    fn domain_error(&self, s: f64) -> Error {
        let (lo, hi) = self.interval();
        Error::Domain {
            transform: self.to_string(),
            value: s,
            interval: format!("({lo}, {hi})"),
        }
    }

    /// `h(s)`.
    pub fn apply(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        let out = match *self {
            MonotoneTransform::Identity => s,
            MonotoneTransform::SignedPower { exponent } => s.signum() * pow(s.abs(), exponent),
            MonotoneTransform::ShiftedPower { shift, exponent } => pow(s + shift, exponent),
            MonotoneTransform::Exponential => s.exp(),
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(self.domain_error(s))
        }
    }

    /// `h'(s)`.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        let out = match *self {
            MonotoneTransform::Identity => 1.0,
            MonotoneTransform::SignedPower { exponent } => exponent * pow(s.abs(), exponent - 1.0),
            MonotoneTransform::ShiftedPower { shift, exponent } => {
                exponent * pow(s + shift, exponent - 1.0)
            }
            MonotoneTransform::Exponential => s.exp(),
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(self.domain_error(s))
        }
    }
}

impl fmt::Display for MonotoneTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonotoneTransform::Identity => write!(f, "identity"),
            MonotoneTransform::SignedPower { exponent } => write!(f, "signed_power({exponent})"),
            MonotoneTransform::ShiftedPower { shift, exponent } => {
                write!(f, "shifted_power({shift}, {exponent})")
            }
            MonotoneTransform::Exponential => write!(f, "exponential"),
        }
    }
}

/// `h ∘ o` with gradient `h'(o(x)) * ∇o(x)`.
pub struct TransformedObjective {
    inner: ObjectiveRef,
    transform: MonotoneTransform,
    label: String,
}

impl TransformedObjective {
    pub fn transform(&self) -> MonotoneTransform {
        self.transform
    }

    pub fn inner(&self) -> &ObjectiveRef {
        &self.inner
    }
}

impl Objective for TransformedObjective {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.transform.apply(self.inner.value(x)?)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let scale = self.transform.derivative(self.inner.value(x)?)?;
        let mut g = self.inner.gradient(x)?;
        for gi in &mut g {
            *gi *= scale;
        }
        Ok(g)
    }
}

pub fn transform_objective(o: ObjectiveRef, t: MonotoneTransform) -> Result<ObjectiveRef> {
    t.validate()?;
    let label = format!("{t}[{}]", o.label());
    Ok(Arc::new(TransformedObjective {
        inner: o,
        transform: t,
        label,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FnObjective;

    fn square() -> ObjectiveRef {
        FnObjective::new("x^2", 1, |x| x[0] * x[0], |x| vec![2.0 * x[0]]).into_ref()
    }

    #[test]
    fn apply_examples() {
        let h = MonotoneTransform::signed_power(4.0).unwrap();
        assert_eq!(h.apply(-2.0).unwrap(), -16.0);
        assert_eq!(h.apply(2.0).unwrap(), 16.0);
        assert_eq!(MonotoneTransform::Identity.apply(3.7).unwrap(), 3.7);
        assert_eq!(MonotoneTransform::Exponential.apply(0.0).unwrap(), 1.0);
    }

    #[test]
    fn shifted_power_domain_is_enforced() {
        let h = MonotoneTransform::shifted_power(5.0, 4.0).unwrap();
        assert_eq!(h.apply(-4.0).unwrap(), 1.0);
        assert!(matches!(h.apply(-5.0), Err(Error::Domain { .. })));
        assert!(matches!(h.apply(-7.0), Err(Error::Domain { .. })));
        assert!(h.derivative(-6.0).is_err());
    }

    #[test]
    fn exponential_overflow_is_an_error() {
        assert!(MonotoneTransform::Exponential.apply(1000.0).is_err());
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(MonotoneTransform::signed_power(1.0).is_err());
        assert!(MonotoneTransform::signed_power(f64::NAN).is_err());
        assert!(MonotoneTransform::shifted_power(f64::INFINITY, 2.0).is_err());
    }

    #[test]
    fn strictly_increasing_on_grid() {
        let transforms = [
            MonotoneTransform::Identity,
            MonotoneTransform::signed_power(4.0).unwrap(),
            MonotoneTransform::signed_power(2.5).unwrap(),
            MonotoneTransform::shifted_power(5.0, 4.0).unwrap(),
            MonotoneTransform::Exponential,
        ];
        for t in transforms {
            let (lo, _) = t.interval();
            let start = if lo.is_finite() { lo + 1e-3 } else { -20.0 };
            let grid: Vec<f64> = (0..2001).map(|i| start + i as f64 * 0.02).collect();
            for w in grid.windows(2) {
                assert!(
                    t.apply(w[0]).unwrap() < t.apply(w[1]).unwrap(),
                    "{t} at {w:?}"
                );
                let mid = 0.5 * (w[0] + w[1]);
                if mid != 0.0 {
                    assert!(t.derivative(mid).unwrap() > 0.0, "{t} at {mid}");
                }
            }
        }
    }

    #[test]
    fn transformed_objective_chain_rule() {
        let cube =
            transform_objective(square(), MonotoneTransform::signed_power(3.0).unwrap()).unwrap();
        assert_eq!(cube.value(&[2.0]).unwrap(), 64.0);
        assert_eq!(cube.gradient(&[2.0]).unwrap(), vec![192.0]);

        let same = transform_objective(square(), MonotoneTransform::Identity).unwrap();
        assert_eq!(same.value(&[2.0]).unwrap(), 4.0);
        assert_eq!(same.gradient(&[2.0]).unwrap(), vec![4.0]);

        let g = cube.gradient(&[2.0]).unwrap();
        let g0 = square().gradient(&[2.0]).unwrap();
        assert_eq!(g[0] / g[0].abs(), 1.0);
        assert_eq!(g0[0] / g0[0].abs(), 1.0);
    }

    #[test]
    fn transformed_objective_propagates_domain_error() {
        let shifted = transform_objective(
            FnObjective::new("neg", 1, |x| -x[0], |_| vec![-1.0]).into_ref(),
            MonotoneTransform::shifted_power(5.0, 4.0).unwrap(),
        )
        .unwrap();
        assert!(shifted.value(&[6.0]).is_err());
        assert!(shifted.gradient(&[6.0]).is_err());
        assert!(shifted.gradient(&[1.0]).is_ok());
    }
}
