use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size sequence `alpha_k`, indexed from `k = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant {
        alpha: f64,
    },
    /// `alpha_k = c / (k + offset)`.
    RobbinsMonro {
        c: f64,
        offset: u64,
    },
}

impl StepSchedule {
    pub fn constant(alpha: f64) -> Result<Self> {
        let s = StepSchedule::Constant { alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn robbins_monro(c: f64, offset: u64) -> Result<Self> {
        let s = StepSchedule::RobbinsMonro { c, offset };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            StepSchedule::Constant { alpha } => ("constant step", alpha),
            StepSchedule::RobbinsMonro { c, .. } => ("Robbins-Monro scale", c),
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {v}"
            )))
        }
    }

    /// Step size for iteration `k` (1-based; `k = 0` is treated as 1).
    pub fn step(&self, k: u64) -> f64 {
        match *self {
            StepSchedule::Constant { alpha } => alpha,
            StepSchedule::RobbinsMonro { c, offset } => c / (k.max(1) + offset) as f64,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (1u64..).map(move |k| self.step(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_rm_values() {
        let s = StepSchedule::constant(0.1).unwrap();
        assert_eq!(s.step(1), 0.1);
        assert_eq!(s.step(1000), 0.1);
        let rm = StepSchedule::robbins_monro(2.0, 3).unwrap();
        assert_eq!(rm.step(1), 0.5);
        assert_eq!(rm.step(5), 0.25);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(StepSchedule::constant(0.0).is_err());
        assert!(StepSchedule::constant(-1.0).is_err());
        assert!(StepSchedule::robbins_monro(f64::NAN, 0).is_err());
    }

    #[test]
    fn robbins_monro_partial_sums() {
        let rm = StepSchedule::robbins_monro(1.0, 0).unwrap();
        let (mut sum, mut sq) = (0.0, 0.0);
        let mut checkpoints = Vec::new();
        for (k, a) in rm.iter().take(1_000_000).enumerate() {
            assert!(a > 0.0);
            sum += a;
            sq += a * a;
            if (k + 1) % 250_000 == 0 {
                checkpoints.push(sum);
            }
        }
        assert!(sum >= 13.0, "harmonic partial sum {sum}");
        assert!(sq <= 1.644_934_2, "sum of squares {sq}");
        assert!(checkpoints.windows(2).all(|w| w[1] > w[0] + 0.2));
    }
}
