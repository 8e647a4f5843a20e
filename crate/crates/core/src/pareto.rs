//! Pareto stationarity certificates and 2-D front sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ObjectiveRef;
use crate::simplex::{min_norm_point, DEFAULT_FW_ITERS, DEFAULT_FW_TOL};

/// Result of `min_{beta in simplex} ||sum_i beta_i grad l_i(x)||`.
///
/// A point is Pareto stationary exactly when the residual is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityCertificate {
    pub residual: f64,
    pub beta: Vec<f64>,
    pub is_stationary: bool,
}

pub fn certificate_for_gradients(
    grads: &[Vec<f64>],
    tol: f64,
    max_fw_iters: usize,
    fw_tol: f64,
) -> StationarityCertificate {
    let sol = min_norm_point(grads, max_fw_iters, fw_tol);
    StationarityCertificate {
        residual: sol.norm,
        is_stationary: sol.norm <= tol,
        beta: sol.beta,
    }
}

pub fn stationarity_residual(
    objectives: &[ObjectiveRef],
    x: &[f64],
    tol: f64,
) -> Result<StationarityCertificate> {
    if objectives.is_empty() {
        return Err(Error::InvalidParameter("no objectives".into()));
    }
    let grads = objectives
        .iter()
        .map(|o| o.gradient(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(certificate_for_gradients(
        &grads,
        tol,
        DEFAULT_FW_ITERS,
        DEFAULT_FW_TOL,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub point: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSample {
    /// Non-dominated samples ordered by the first objective.
    pub points: Vec<FrontPoint>,
    /// Grid spacing per axis.
    pub resolution: [f64; 2],
}

/// True if `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Keeps the samples not dominated by any other, sorted by
/// `(values[0], values[1])`. Exact duplicates are kept once.
pub fn non_dominated_2d(mut samples: Vec<FrontPoint>) -> Vec<FrontPoint> {
    samples.sort_by(|a, b| {
        a.values[0]
            .total_cmp(&b.values[0])
            .then(a.values[1].total_cmp(&b.values[1]))
            .then_with(|| {
                a.point
                    .iter()
                    .zip(&b.point)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    samples.dedup();
    let mut front: Vec<FrontPoint> = Vec::new();
    let mut best_second = f64::INFINITY;
    let mut i = 0;
    while i < samples.len() {
        // Group samples sharing the first objective; only the ones with the
        // smallest second objective in the group can survive.
        let first = samples[i].values[0];
        let mut j = i;
        while j < samples.len() && samples[j].values[0] == first {
            j += 1;
        }
        let group_min = samples[i].values[1];
        if group_min < best_second {
            for s in &samples[i..j] {
                if s.values[1] == group_min {
                    front.push(s.clone());
                }
            }
            best_second = group_min;
        }
        i = j;
    }
    front
}

/// Samples a two-objective problem over a 2-D grid and returns the
/// non-dominated subset with its pre-images.
pub fn sample_front_2d(
    objectives: &[ObjectiveRef],
    lo: [f64; 2],
    hi: [f64; 2],
    steps_per_axis: usize,
) -> Result<FrontSample> {
    if objectives.len() != 2 || objectives.iter().any(|o| o.dim() != 2) {
        return Err(Error::InvalidParameter(
            "front sampling needs two objectives over a 2-D domain".into(),
        ));
    }
    if steps_per_axis < 2 {
        return Err(Error::InvalidParameter(format!(
            "front grid needs at least 2 steps per axis, got {steps_per_axis}"
        )));
    }
    if lo.iter().chain(&hi).any(|v| !v.is_finite()) || lo[0] > hi[0] || lo[1] > hi[1] {
        return Err(Error::InvalidParameter(
            "front grid bounds are invalid".into(),
        ));
    }
    let spacing = [
        (hi[0] - lo[0]) / (steps_per_axis - 1) as f64,
        (hi[1] - lo[1]) / (steps_per_axis - 1) as f64,
    ];
    let mut samples = Vec::with_capacity(steps_per_axis * steps_per_axis);
    for i in 0..steps_per_axis {
        let y = lo[1] + i as f64 * spacing[1];
        for j in 0..steps_per_axis {
            let x = lo[0] + j as f64 * spacing[0];
            let point = vec![x, y];
            let values = vec![objectives[0].value(&point)?, objectives[1].value(&point)?];
            if values.iter().all(|v| v.is_finite()) {
                samples.push(FrontPoint { point, values });
            }
        }
    }
    Ok(FrontSample {
        points: non_dominated_2d(samples),
        resolution: spacing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cert(grads: &[Vec<f64>]) -> StationarityCertificate {
        certificate_for_gradients(grads, 1e-9, DEFAULT_FW_ITERS, DEFAULT_FW_TOL)
    }

    #[test]
    fn opposed_gradients_are_stationary() {
        let c = cert(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert_eq!(c.residual, 0.0);
        assert_eq!(c.beta, vec![0.5, 0.5]);
        assert!(c.is_stationary);
    }

    #[test]
    fn aligned_gradients_hit_the_endpoint() {
        let c = cert(&[vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert_eq!(c.residual, 1.0);
        assert_eq!(c.beta, vec![1.0, 0.0]);
        assert!(!c.is_stationary);
    }

    #[test]
    fn dominance_relation() {
        assert!(dominates(&[1.0, 1.0], &[1.0, 2.0]));
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]));
        assert!(!dominates(&[0.0, 3.0], &[1.0, 2.0]));
    }

    #[test]
    fn filter_drops_dominated_and_ties() {
        let mk = |v0: f64, v1: f64, p: f64| FrontPoint {
            point: vec![p, 0.0],
            values: vec![v0, v1],
        };
        let front = non_dominated_2d(vec![
            mk(1.0, 5.0, 0.0),
            mk(2.0, 3.0, 1.0),
            mk(2.0, 4.0, 2.0),
            mk(3.0, 3.0, 3.0),
            mk(4.0, 1.0, 4.0),
            mk(4.0, 1.0, 5.0),
        ]);
        let pre: Vec<f64> = front.iter().map(|f| f.point[0]).collect();
        assert_eq!(pre, vec![0.0, 1.0, 4.0, 5.0]);
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        let q = crate::objective::Quadratic::isotropic("q", vec![0.0, 0.0]).unwrap();
        let objs: Vec<ObjectiveRef> = vec![std::sync::Arc::new(q.clone()), std::sync::Arc::new(q)];
        assert!(sample_front_2d(&objs, [0.0, 0.0], [1.0, 1.0], 1).is_err());
        assert!(sample_front_2d(&objs[..1], [0.0, 0.0], [1.0, 1.0], 4).is_err());
    }
}
