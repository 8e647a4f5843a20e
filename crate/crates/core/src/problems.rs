//! Built-in benchmark problems.
//!
//! * A two-objective nonconvex toy over `theta in R^2`, built from gated
//!   log-valley and quadratic pieces. Both losses vanish on the line
//!   `theta_2 = 0`.
//! * A symmetric quadratic pair whose Pareto-stationary set is the segment
//!   `x = 0, y in [-1, 1]`, but whose only balanced point is the origin.

use std::sync::Arc;

use crate::dibs::BargainingGame;
use crate::error::Result;
use crate::objective::{check_input, Objective, ObjectiveRef, Quadratic};
use crate::point::Point;
use crate::transform::{transform_objective, MonotoneTransform};

/// Plotting window used for the toy problem, per axis.
pub const TOY_WINDOW: ([f64; 2], [f64; 2]) = ([-10.0, -10.0], [10.0, 10.0]);

const LOG_CLAMP: f64 = 1e-6;

/// `max(tanh(sign * 0.5 * theta_2), 0)` and its derivative in `theta_2`.
/// At the tie `tanh(..) = 0` the `tanh` branch is taken.
fn gate(theta2: f64, sign: f64) -> (f64, f64) {
    let t = (sign * 0.5 * theta2).tanh();
    if t >= 0.0 {
        (t, sign * 0.5 * (1.0 - t * t))
    } else {
        (0.0, 0.0)
    }
}

/// `log(max(|u|, 1e-6)) + 6` with `u = 0.5 (-theta_1 + shift) - tanh(-theta_2) + offset`.
fn log_valley(theta: &[f64], shift: f64, offset: f64) -> (f64, [f64; 2]) {
    let th = (-theta[1]).tanh();
    let u = 0.5 * (-theta[0] + shift) - th + offset;
    if u.abs() >= LOG_CLAMP {
        // d/dtheta_2 of -tanh(-theta_2) is sech^2(theta_2) = 1 - tanh^2.
        let du = [-0.5, 1.0 - th * th];
        (u.abs().ln() + 6.0, [du[0] / u, du[1] / u])
    } else {
        (LOG_CLAMP.ln() + 6.0, [0.0, 0.0])
    }
}

/// `((-theta_1 + shift)^2 + 0.1 (-theta_2 - 8)^2) / 10 - 20`.
fn bowl(theta: &[f64], shift: f64) -> (f64, [f64; 2]) {
    let a = -theta[0] + shift;
    let b = -theta[1] - 8.0;
    (
        (a * a + 0.1 * b * b) / 10.0 - 20.0,
        [-2.0 * a / 10.0, -0.2 * b / 10.0],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ToyTask {
    First,
    Second,
}

/// One of the two toy losses `c_1 f_i + c_2 g_i`.
#[derive(Debug, Clone)]
pub struct ToyLoss {
    task: ToyTask,
    label: &'static str,
}

impl ToyLoss {
    fn eval(&self, theta: &[f64]) -> (f64, [f64; 2]) {
        let (c1, dc1) = gate(theta[1], 1.0);
        let (c2, dc2) = gate(theta[1], -1.0);
        let ((f, df), (g, dg)) = match self.task {
            ToyTask::First => (log_valley(theta, -7.0, 0.0), bowl(theta, 7.0)),
            ToyTask::Second => (log_valley(theta, 3.0, 2.0), bowl(theta, -7.0)),
        };
        let value = c1 * f + c2 * g;
        let grad = [
            c1 * df[0] + c2 * dg[0],
            dc1 * f + c1 * df[1] + dc2 * g + c2 * dg[1],
        ];
        (value, grad)
    }

    /// Distances to the non-smooth sets: `|theta_2|` and the log-valley
    /// argument `|u|`. Used to keep gradient checks off the kinks.
    pub fn kink_distance(&self, theta: &[f64]) -> f64 {
        let th = (-theta[1]).tanh();
        let u = match self.task {
            ToyTask::First => 0.5 * (-theta[0] - 7.0) - th,
            ToyTask::Second => 0.5 * (-theta[0] + 3.0) - th + 2.0,
        };
        theta[1].abs().min(u.abs())
    }
}

impl Objective for ToyLoss {
    fn label(&self) -> &str {
        self.label
    }

    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_input(2, x)?;
        Ok(self.eval(x).0)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(2, x)?;
        Ok(self.eval(x).1.to_vec())
    }
}

pub fn toy_loss_1() -> ToyLoss {
    ToyLoss {
        task: ToyTask::First,
        label: "L1",
    }
}

pub fn toy_loss_2() -> ToyLoss {
    ToyLoss {
        task: ToyTask::Second,
        label: "L2",
    }
}

pub fn toy_losses() -> (ObjectiveRef, ObjectiveRef) {
    (Arc::new(toy_loss_1()), Arc::new(toy_loss_2()))
}

#[derive(Debug, Clone)]
pub struct ToyProblem {
    pub losses: (ObjectiveRef, ObjectiveRef),
    pub domain_hint: ([f64; 2], [f64; 2]),
}

impl ToyProblem {
    pub fn nominal() -> Self {
        ToyProblem {
            losses: toy_losses(),
            domain_hint: TOY_WINDOW,
        }
    }

    /// The toy pair with `t` applied to the loss of `task` (0 or 1).
    pub fn transformed(task: usize, t: MonotoneTransform) -> Result<Self> {
        let mut objectives = ToyProblem::nominal().objectives();
        let target = objectives.get(task).cloned().ok_or_else(|| {
            crate::Error::InvalidParameter(format!("toy problem has no task {task}"))
        })?;
        objectives[task] = transform_objective(target, t)?;
        Ok(ToyProblem {
            losses: (objectives[0].clone(), objectives[1].clone()),
            domain_hint: TOY_WINDOW,
        })
    }

    pub fn objectives(&self) -> Vec<ObjectiveRef> {
        vec![self.losses.0.clone(), self.losses.1.clone()]
    }
}

/// Fixed starting points for toy-problem studies.
///
/// All are off the line `theta_2 = 0` and their descent paths stay clear of
/// the zero level set of `L1`, where a power transform has zero slope and
/// the transformed gradient underflows the zero-gradient floor.
pub fn toy_initializations() -> Vec<Point> {
    [
        [0.0, 9.0],
        [9.0, 9.0],
        [-7.5, -5.0],
        [9.0, -1.0],
        [-2.0, 6.0],
        [5.0, -8.0],
        [-9.0, -9.0],
    ]
    .iter()
    .map(|p| Point::new(p.to_vec()).expect("finite constants"))
    .collect()
}

/// `l_1 = x^2 + (y - 1)^2`, `l_2 = x^2 + (y + 1)^2`.
pub fn quad_pair_objectives() -> Vec<ObjectiveRef> {
    vec![
        Arc::new(Quadratic::isotropic("l1", vec![0.0, 1.0]).expect("valid")),
        Arc::new(Quadratic::isotropic("l2", vec![0.0, -1.0]).expect("valid")),
    ]
}

/// Domain of the quadratic pair, per axis.
pub const QUAD_PAIR_WINDOW: ([f64; 2], [f64; 2]) = ([-1.0, -1.0], [1.0, 1.0]);

/// The quadratic pair as a bargaining game with preferred states
/// `(0, 1)` and `(0, -1)`.
pub fn quad_pair() -> BargainingGame {
    BargainingGame::new(
        quad_pair_objectives(),
        vec![
            Point::new(vec![0.0, 1.0]).expect("finite"),
            Point::new(vec![0.0, -1.0]).expect("finite"),
        ],
    )
    .expect("exact minimizers")
}
