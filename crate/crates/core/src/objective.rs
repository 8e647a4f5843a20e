use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A differentiable scalar cost with an analytic gradient.
///
/// Implementations must be pure: the same input always yields the same
/// output, and evaluation may happen from several threads at once.
pub trait Objective: Send + Sync {
    fn label(&self) -> &str;

    /// Dimension of the input space.
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

pub type ObjectiveRef = Arc<dyn Objective>;

impl fmt::Debug for dyn Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Objective({}, dim={})", self.label(), self.dim())
    }
}

pub(crate) fn check_input(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.len(),
        });
    }
    Ok(())
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// An objective assembled from a pair of closures.
pub struct FnObjective {
    label: String,
    dim: usize,
    value: Box<ValueFn>,
    gradient: Box<GradFn>,
}

impl FnObjective {
    pub fn new<V, G>(label: impl Into<String>, dim: usize, value: V, gradient: G) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        FnObjective {
            label: label.into(),
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
        }
    }

    pub fn into_ref(self) -> ObjectiveRef {
        Arc::new(self)
    }
}

impl Objective for FnObjective {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_input(self.dim, x)?;
        Ok((self.value)(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(self.dim, x)?;
        Ok((self.gradient)(x))
    }
}

/// Weighted separable quadratic `sum_j w_j (x_j - c_j)^2`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    label: String,
    center: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadratic {
    pub fn new(label: impl Into<String>, center: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if weights.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "quadratic weights must be positive and finite".into(),
            ));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("quadratic center".into()));
        }
        Ok(Quadratic {
            label: label.into(),
            center,
            weights,
        })
    }

    /// Isotropic bowl `||x - center||^2`.
    pub fn isotropic(label: impl Into<String>, center: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; center.len()];
        Quadratic::new(label, center, weights)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl Objective for Quadratic {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_input(self.dim(), x)?;
        Ok(x.iter()
            .zip(&self.center)
            .zip(&self.weights)
            .map(|((xi, ci), wi)| wi * (xi - ci) * (xi - ci))
            .sum())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(self.dim(), x)?;
        Ok(x.iter()
            .zip(&self.center)
            .zip(&self.weights)
            .map(|((xi, ci), wi)| 2.0 * wi * (xi - ci))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_value_and_gradient() {
        let q = Quadratic::new("q", vec![1.0, -1.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(q.value(&[2.0, 0.0]).unwrap(), 3.0);
        assert_eq!(q.gradient(&[2.0, 0.0]).unwrap(), vec![2.0, 4.0]);
        assert!(matches!(
            q.value(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn quadratic_rejects_bad_weights() {
        assert!(Quadratic::new("q", vec![0.0], vec![0.0]).is_err());
        assert!(Quadratic::new("q", vec![0.0], vec![f64::NAN]).is_err());
        assert!(Quadratic::new("q", vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
