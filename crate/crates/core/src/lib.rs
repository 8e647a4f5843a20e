//! Direction-based bargaining (DiBS) for multi-objective optimization.
//!
//! The crate provides:
//!
//! * the general DiBS iteration on a bargaining game, with an optional
//!   bounded switched variant that keeps iterates inside a ball ([`dibs`]);
//! * gradient aggregators for multitask learning: single-step and
//!   multi-step DiBS-MTL plus linear scalarization, min-norm, PCGrad and
//!   IMTL-G baselines ([`aggregators`]);
//! * a Pareto-stationarity certificate and a 2-D front sampler ([`pareto`]);
//! * monotone loss transforms with analytic chain-rule gradients
//!   ([`transform`]);
//! * built-in benchmark problems ([`problems`]) and an experiment harness
//!   that writes CSV trajectories, JSON reports and SVG plots ([`harness`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregators;
pub mod dibs;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod objective;
pub mod pareto;
pub mod point;
pub mod problems;
pub mod schedule;
pub mod simplex;
pub mod transform;

pub use error::{Error, Result};
pub use objective::{Objective, ObjectiveRef};
pub use point::Point;
pub use schedule::StepSchedule;
pub use transform::MonotoneTransform;

/// Gradients with a Euclidean norm below this value are treated as zero.
pub const DEFAULT_GRAD_FLOOR: f64 = 1e-12;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
