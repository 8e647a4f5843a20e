//! Gradient aggregators for multitask learning.
//!
//! Every aggregator maps the task gradients at the current shared
//! parameters to an update `delta` that the outer loop adds to the
//! parameters. Outputs are descent directions (already negated).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::StepSchedule;
use crate::simplex::min_norm_point;
use crate::DEFAULT_GRAD_FLOOR;

/// Task gradients at one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    grads: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl GradientBundle {
    pub fn new(grads: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..grads.len()).map(|i| format!("task_{i}")).collect();
        Self::with_labels(grads, labels)
    }

    pub fn with_labels(grads: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let first = grads
            .first()
            .ok_or_else(|| Error::InvalidParameter("gradient bundle is empty".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::EmptyPoint);
        }
        if labels.len() != grads.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} gradients",
                labels.len(),
                grads.len()
            )));
        }
        for g in &grads {
            if g.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: g.len(),
                });
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("task gradient".into()));
            }
        }
        Ok(GradientBundle { grads, labels })
    }

    pub fn grads(&self) -> &[Vec<f64>] {
        &self.grads
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grads[0].len()
    }

    /// Unit gradients; `None` for tasks whose norm is below the floor.
    fn unit_gradients(&self) -> Vec<Option<Vec<f64>>> {
        self.grads
            .iter()
            .map(|g| {
                let n = crate::norm(g);
                (n >= DEFAULT_GRAD_FLOOR).then(|| g.iter().map(|v| v / n).collect())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateFlag {
    /// Every task gradient was below the floor; the update is zero.
    AllGradientsVanished,
    /// IMTL-G's equal-projection system was singular; min-norm was used.
    ImtlFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub delta: Vec<f64>,
    pub flag: Option<AggregateFlag>,
}

impl Aggregate {
    fn plain(delta: Vec<f64>) -> Self {
        Aggregate { delta, flag: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregatorSpec {
    DibsSingle {
        epsilon: f64,
    },
    DibsMulti {
        epsilon: f64,
        inner_steps: usize,
        inner_schedule: StepSchedule,
    },
    Ls,
    MinNorm {
        max_fw_iters: usize,
        fw_tol: f64,
    },
    Pcgrad {
        seed: u64,
    },
    ImtlG,
}

/// Default inner step for multi-step DiBS-MTL.
pub const DEFAULT_INNER_STEP: f64 = 0.1;

impl AggregatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AggregatorSpec::DibsSingle { .. } => "dibs_single",
            AggregatorSpec::DibsMulti { .. } => "dibs_multi",
            AggregatorSpec::Ls => "ls",
            AggregatorSpec::MinNorm { .. } => "min_norm",
            AggregatorSpec::Pcgrad { .. } => "pcgrad",
            AggregatorSpec::ImtlG => "imtl_g",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match *self {
            AggregatorSpec::DibsSingle { epsilon } => positive("epsilon", epsilon),
            AggregatorSpec::DibsMulti {
                epsilon,
                inner_steps,
                inner_schedule,
            } => {
                positive("epsilon", epsilon)?;
                inner_schedule.validate()?;
                if inner_steps == 0 {
                    return Err(Error::InvalidParameter("inner_steps must be >= 1".into()));
                }
                Ok(())
            }
            AggregatorSpec::MinNorm {
                max_fw_iters,
                fw_tol,
            } => {
                positive("fw_tol", fw_tol)?;
                if max_fw_iters == 0 {
                    return Err(Error::InvalidParameter("max_fw_iters must be >= 1".into()));
                }
                Ok(())
            }
            AggregatorSpec::Ls | AggregatorSpec::Pcgrad { .. } | AggregatorSpec::ImtlG => Ok(()),
        }
    }

    pub fn aggregate(&self, b: &GradientBundle) -> Result<Aggregate> {
        self.validate()?;
        match *self {
            AggregatorSpec::DibsSingle { epsilon } => aggregate_dibs_single(b, epsilon),
            AggregatorSpec::DibsMulti {
                epsilon,
                inner_steps,
                inner_schedule,
            } => aggregate_dibs_multi(b, epsilon, inner_steps, &inner_schedule),
            AggregatorSpec::Ls => Ok(Aggregate::plain(aggregate_ls(b))),
            AggregatorSpec::MinNorm {
                max_fw_iters,
                fw_tol,
            } => Ok(Aggregate::plain(aggregate_min_norm(
                b,
                max_fw_iters,
                fw_tol,
            ))),
            AggregatorSpec::Pcgrad { seed } => Ok(Aggregate::plain(aggregate_pcgrad(b, seed))),
            AggregatorSpec::ImtlG => aggregate_imtl_g(b),
        }
    }
}

/// Single-step DiBS-MTL: `delta = -sum_i epsilon * g_i / ||g_i||`.
pub fn aggregate_dibs_single(b: &GradientBundle, epsilon: f64) -> Result<Aggregate> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let units = b.unit_gradients();
    let mut pull = vec![0.0; b.dim()];
    for u in units.iter().flatten() {
        for (p, ui) in pull.iter_mut().zip(u) {
            *p += epsilon * ui;
        }
    }
    let flag = units
        .iter()
        .all(Option::is_none)
        .then_some(AggregateFlag::AllGradientsVanished);
    Ok(Aggregate {
        delta: pull.into_iter().map(|p| -p).collect(),
        flag,
    })
}

/// Multi-step DiBS-MTL on the linearized subgame.
///
/// Starting from `delta_1 = 0`, runs
///
/// ```text
/// delta_{k+1} = delta_k - alpha_k * sum_i ||delta_k + epsilon u_i|| * u_i
/// ```
///
/// where `u_i` are the unit task gradients and `-epsilon u_i` is task `i`'s
/// preferred update on the `epsilon`-ball. With more than one inner step a
/// final iterate outside the ball is projected radially onto it; a single
/// step returns `delta_2` unprojected, which is exactly single-step DiBS-MTL.
pub fn aggregate_dibs_multi(
    b: &GradientBundle,
    epsilon: f64,
    inner_steps: usize,
    schedule: &StepSchedule,
) -> Result<Aggregate> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if inner_steps == 0 {
        return Err(Error::InvalidParameter("inner_steps must be >= 1".into()));
    }
    let units = b.unit_gradients();
    let mut delta = vec![0.0; b.dim()];
    for k in 1..=inner_steps as u64 {
        let at_origin = delta.iter().all(|d| *d == 0.0);
        let mut pull = vec![0.0; b.dim()];
        for u in units.iter().flatten() {
            // Preferred states sit on the epsilon-sphere, so the distance
            // from the origin is epsilon itself.
            let dist = if at_origin {
                epsilon
            } else {
                delta
                    .iter()
                    .zip(u)
                    .map(|(d, ui)| (d + epsilon * ui) * (d + epsilon * ui))
                    .sum::<f64>()
                    .sqrt()
            };
            for (p, ui) in pull.iter_mut().zip(u) {
                *p += dist * ui;
            }
        }
        let alpha = schedule.step(k);
        for (d, p) in delta.iter_mut().zip(&pull) {
            *d -= alpha * p;
        }
    }
    let n = crate::norm(&delta);
    if inner_steps > 1 && n > epsilon {
        for d in &mut delta {
            *d *= epsilon / n;
        }
    }
    let flag = units
        .iter()
        .all(Option::is_none)
        .then_some(AggregateFlag::AllGradientsVanished);
    Ok(Aggregate { delta, flag })
}

/// Linear scalarization: `-sum_i g_i`.
pub fn aggregate_ls(b: &GradientBundle) -> Vec<f64> {
    let mut out = vec![0.0; b.dim()];
    for g in b.grads() {
        for (o, gi) in out.iter_mut().zip(g) {
            *o -= gi;
        }
    }
    out
}

/// Negated minimum-norm point of the convex hull of the task gradients.
pub fn aggregate_min_norm(b: &GradientBundle, max_fw_iters: usize, fw_tol: f64) -> Vec<f64> {
    min_norm_point(b.grads(), max_fw_iters, fw_tol)
        .point
        .into_iter()
        .map(|v| -v)
        .collect()
}

/// Gradient surgery: each task gradient is projected off the normal plane
/// of every other task gradient it conflicts with.
pub fn aggregate_pcgrad(b: &GradientBundle, seed: u64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let grads = b.grads();
    let mut sum = vec![0.0; b.dim()];
    for &i in &order {
        let mut g = grads[i].clone();
        for &j in &order {
            if j == i {
                continue;
            }
            let other = &grads[j];
            let other_sq = crate::dot(other, other);
            if other_sq == 0.0 {
                continue;
            }
            let d = crate::dot(&g, other);
            if d < 0.0 {
                for (gi, oi) in g.iter_mut().zip(other) {
                    *gi -= d / other_sq * oi;
                }
            }
        }
        for (s, gi) in sum.iter_mut().zip(&g) {
            *s += gi;
        }
    }
    let n = b.len() as f64;
    sum.into_iter().map(|s| -s / n).collect()
}

/// Solves `A x = rhs` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot is negligible relative to the matrix scale.
fn solve_linear(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let eps = 1e-12 * scale;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= eps {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * p;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / a[row][row];
    }
    Some(x)
}

/// IMTL-G: the combination `d = sum_i w_i g_i` with `sum_i w_i = 1` whose
/// projections onto every unit task gradient are equal. Returns `-d`.
///
/// The weights are not constrained to be non-negative. When the shared
/// projection comes out negative, `d` is flipped so that the update
/// descends on every task; this also makes the direction independent of
/// positive per-task gradient scaling.
pub fn aggregate_imtl_g(b: &GradientBundle) -> Result<Aggregate> {
    if b.len() < 2 {
        return Err(Error::InvalidParameter(
            "IMTL-G needs at least two tasks".into(),
        ));
    }
    let fallback = || Aggregate {
        delta: aggregate_min_norm(
            b,
            crate::simplex::DEFAULT_FW_ITERS,
            crate::simplex::DEFAULT_FW_TOL,
        ),
        flag: Some(AggregateFlag::ImtlFallback),
    };
    let units = b.unit_gradients();
    let Some(units) = units.into_iter().collect::<Option<Vec<_>>>() else {
        return Ok(fallback());
    };
    // Solve in the unit gradients, which do not change under positive
    // rescaling: with a_1 = 1 - sum_{j>=2} a_j, e = u_1 + sum_j a_j (u_j - u_1)
    // and the constraints e . (u_1 - u_i) = 0 are linear in a_2..a_N.
    let n = b.len();
    let du: Vec<Vec<f64>> = (1..n)
        .map(|i| units[0].iter().zip(&units[i]).map(|(a, c)| a - c).collect())
        .collect();
    let a: Vec<Vec<f64>> = du
        .iter()
        .map(|row| du.iter().map(|col| -crate::dot(col, row)).collect())
        .collect();
    let rhs: Vec<f64> = du.iter().map(|row| -crate::dot(&units[0], row)).collect();
    let Some(w) = solve_linear(a, rhs) else {
        return Ok(fallback());
    };
    let mut e = units[0].clone();
    for (wj, col) in w.iter().zip(&du) {
        for (ei, ci) in e.iter_mut().zip(col) {
            *ei -= wj * ci;
        }
    }
    // e = sum_i a_i u_i = sum_i (a_i / |g_i|) g_i; rescale so the weights on
    // the raw gradients sum to one.
    let a1 = 1.0 - w.iter().sum::<f64>();
    let total: f64 = std::iter::once(a1)
        .chain(w.iter().copied())
        .zip(b.grads())
        .map(|(ai, g)| ai / crate::norm(g))
        .sum();
    if !(total.abs() > 0.0) || !total.is_finite() {
        return Ok(fallback());
    }
    let d: Vec<f64> = e.iter().map(|v| v / total).collect();
    let sign = if crate::dot(&d, &units[0]) < 0.0 {
        1.0
    } else {
        -1.0
    };
    Ok(Aggregate::plain(d.into_iter().map(|v| sign * v).collect()))
}
