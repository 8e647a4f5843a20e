//! Central finite differences, used to verify hand-coded gradients.

use crate::error::{Error, Result};
use crate::objective::Objective;

pub fn fd_gradient(o: &dyn Objective, p: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut x = p.to_vec();
    let mut out = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        x[i] = p[i] + step;
        let plus = o.value(&x)?;
        x[i] = p[i] - step;
        let minus = o.value(&x)?;
        x[i] = p[i];
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(out)
}

/// `||a - b|| / max(1, ||a||)`.
pub fn relative_error(analytic: &[f64], estimate: &[f64]) -> f64 {
    let diff: Vec<f64> = analytic.iter().zip(estimate).map(|(a, b)| a - b).collect();
    crate::norm(&diff) / crate::norm(analytic).max(1.0)
}

#[derive(Debug, Clone)]
pub struct GradientCheck {
    pub label: String,
    pub points_checked: usize,
    pub max_relative_error: f64,
    pub worst_point: Vec<f64>,
}

impl GradientCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative_error <= tol
    }
}

pub fn check_gradient(o: &dyn Objective, points: &[Vec<f64>], step: f64) -> Result<GradientCheck> {
    let mut report = GradientCheck {
        label: o.label().to_string(),
        points_checked: 0,
        max_relative_error: 0.0,
        worst_point: Vec::new(),
    };
    for p in points {
        let err = relative_error(&o.gradient(p)?, &fd_gradient(o, p, step)?);
        if !err.is_finite() {
            return Err(Error::NonFinite(format!("gradient check of {}", o.label())));
        }
        if err >= report.max_relative_error {
            report.max_relative_error = err;
            report.worst_point = p.clone();
        }
        report.points_checked += 1;
    }
    Ok(report)
}
