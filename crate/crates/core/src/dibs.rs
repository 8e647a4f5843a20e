//! The DiBS iteration on a bargaining game.
//!
//! Each agent `i` has a cost `l_i` and a preferred state `x*_i` (a local
//! minimizer of `l_i`). The direction at `x` is
//!
//! ```text
//! h(x) = sum_i ||x - x*_i|| * grad l_i(x) / ||grad l_i(x)||
//! ```
//!
//! and the iterate is `x_{k+1} = x_k - alpha_k h(x_k)`. Only normalized
//! gradients and preferred states enter `h`, so any strictly increasing
//! per-agent transform of the costs leaves the trajectory unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ObjectiveRef;
use crate::pareto::{certificate_for_gradients, StationarityCertificate};
use crate::point::Point;
use crate::schedule::StepSchedule;
use crate::simplex::{DEFAULT_FW_ITERS, DEFAULT_FW_TOL};

/// Gradient norm allowed at a preferred state.
pub const PREFERRED_STATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BargainingGame {
    objectives: Vec<ObjectiveRef>,
    preferred: Vec<Point>,
    feasible_radius: Option<f64>,
}

impl BargainingGame {
    /// Builds a game, checking that every preferred state is first-order
    /// stationary for its own cost to [`PREFERRED_STATE_TOL`].
    pub fn new(objectives: Vec<ObjectiveRef>, preferred: Vec<Point>) -> Result<Self> {
        Self::with_preferred_tolerance(objectives, preferred, PREFERRED_STATE_TOL)
    }

    /// Like [`BargainingGame::new`] with a caller-chosen first-order
    /// tolerance, for nonconvex costs whose minimizers are found numerically.
    pub fn with_preferred_tolerance(
        objectives: Vec<ObjectiveRef>,
        preferred: Vec<Point>,
        tol: f64,
    ) -> Result<Self> {
        if objectives.is_empty() {
            return Err(Error::InvalidParameter(
                "a game needs at least one agent".into(),
            ));
        }
        if preferred.len() != objectives.len() {
            return Err(Error::InvalidParameter(format!(
                "{} objectives but {} preferred states",
                objectives.len(),
                preferred.len()
            )));
        }
        let dim = objectives[0].dim();
        for (i, (o, p)) in objectives.iter().zip(&preferred).enumerate() {
            if o.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: o.dim(),
                });
            }
            p.check_dim(dim)?;
            let grad_norm = crate::norm(&o.gradient(p)?);
            if !(grad_norm <= tol) {
                return Err(Error::NotPreferred {
                    index: i,
                    grad_norm,
                });
            }
        }
        Ok(BargainingGame {
            objectives,
            preferred,
            feasible_radius: None,
        })
    }

    /// Restricts the feasible region to the ball `||x|| <= radius`.
    pub fn with_feasible_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "feasible radius must be positive, got {radius}"
            )));
        }
        self.feasible_radius = Some(radius);
        Ok(self)
    }

    /// Replaces every cost by `transforms[i] ∘ l_i`; preferred states are
    /// kept since strictly increasing transforms preserve minimizers.
    pub fn transformed(&self, transforms: &[crate::MonotoneTransform]) -> Result<Self> {
        if transforms.len() != self.objectives.len() {
            return Err(Error::InvalidParameter(format!(
                "{} transforms for {} agents",
                transforms.len(),
                self.objectives.len()
            )));
        }
        let objectives = self
            .objectives
            .iter()
            .zip(transforms)
            .map(|(o, t)| crate::transform::transform_objective(o.clone(), *t))
            .collect::<Result<Vec<_>>>()?;
        Ok(BargainingGame {
            objectives,
            preferred: self.preferred.clone(),
            feasible_radius: self.feasible_radius,
        })
    }

    pub fn objectives(&self) -> &[ObjectiveRef] {
        &self.objectives
    }

    pub fn preferred_states(&self) -> &[Point] {
        &self.preferred
    }

    pub fn feasible_radius(&self) -> Option<f64> {
        self.feasible_radius
    }

    pub fn num_agents(&self) -> usize {
        self.objectives.len()
    }

    pub fn dim(&self) -> usize {
        self.objectives[0].dim()
    }

    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.objectives.iter().map(|o| o.value(x)).collect()
    }

    pub fn gradients(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.objectives.iter().map(|o| o.gradient(x)).collect()
    }

    pub fn stationarity(&self, x: &[f64], tol: f64) -> Result<StationarityCertificate> {
        Ok(certificate_for_gradients(
            &self.gradients(x)?,
            tol,
            DEFAULT_FW_ITERS,
            DEFAULT_FW_TOL,
        ))
    }

    fn contains(&self, x: &Point) -> bool {
        self.feasible_radius.is_none_or(|r| x.norm() <= r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DibsDirection {
    /// `h(x)`, without the step size.
    pub vector: Vec<f64>,
    /// `||x - x*_i||` for every agent, including skipped ones.
    pub distances: Vec<f64>,
    /// Agents whose gradient norm fell below the floor.
    pub skipped: Vec<bool>,
}

impl DibsDirection {
    pub fn norm(&self) -> f64 {
        crate::norm(&self.vector)
    }
}

pub fn dibs_direction(game: &BargainingGame, x: &[f64], grad_floor: f64) -> Result<DibsDirection> {
    let grads = game.gradients(x)?;
    direction_from_gradients(game, x, &grads, grad_floor)
}

fn direction_from_gradients(
    game: &BargainingGame,
    x: &[f64],
    grads: &[Vec<f64>],
    grad_floor: f64,
) -> Result<DibsDirection> {
    if x.len() != game.dim() {
        return Err(Error::DimensionMismatch {
            expected: game.dim(),
            found: x.len(),
        });
    }
    let mut vector = vec![0.0; x.len()];
    let mut distances = Vec::with_capacity(grads.len());
    let mut skipped = Vec::with_capacity(grads.len());
    for (g, pref) in grads.iter().zip(&game.preferred) {
        let dist = pref.distance(x);
        distances.push(dist);
        let gn = crate::norm(g);
        if gn < grad_floor {
            skipped.push(true);
            continue;
        }
        skipped.push(false);
        for (v, gi) in vector.iter_mut().zip(g) {
            *v += dist * (gi / gn);
        }
    }
    Ok(DibsDirection {
        vector,
        distances,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DibsConfig {
    pub schedule: StepSchedule,
    pub max_iters: usize,
    pub stationarity_tol: f64,
    pub grad_floor: f64,
}

impl DibsConfig {
    pub fn new(schedule: StepSchedule, max_iters: usize, stationarity_tol: f64) -> Result<Self> {
        let cfg = DibsConfig {
            schedule,
            max_iters,
            stationarity_tol,
            grad_floor: crate::DEFAULT_GRAD_FLOOR,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if !(self.stationarity_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "stationarity_tol must be positive".into(),
            ));
        }
        if !(self.grad_floor > 0.0 && self.grad_floor <= 1e-8) {
            return Err(Error::InvalidParameter(
                "grad_floor must lie in (0, 1e-8]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIters,
    ResidualBelowTol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iter: usize,
    pub point: Vec<f64>,
    pub values: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub num_objectives: usize,
    pub records: Vec<TrajectoryRecord>,
    pub terminated_by: Termination,
}

impl Trajectory {
    pub fn new(dim: usize, num_objectives: usize) -> Self {
        Trajectory {
            dim,
            num_objectives,
            records: Vec::new(),
            terminated_by: Termination::MaxIters,
        }
    }

    /// Appends a record; iterations must strictly increase.
    pub fn push(&mut self, record: TrajectoryRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.iter <= last.iter {
                return Err(Error::InvalidParameter(format!(
                    "trajectory iteration {} does not follow {}",
                    record.iter, last.iter
                )));
            }
        }
        if record.point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: record.point.len(),
            });
        }
        if record.values.len() != self.num_objectives {
            return Err(Error::DimensionMismatch {
                expected: self.num_objectives,
                found: record.values.len(),
            });
        }
        self.records.push(record);
        Ok(())
    }

    pub fn last(&self) -> Option<&TrajectoryRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

struct Evaluation {
    values: Vec<f64>,
    certificate: StationarityCertificate,
    direction: DibsDirection,
}

fn evaluate(game: &BargainingGame, x: &[f64], cfg: &DibsConfig, iter: usize) -> Result<Evaluation> {
    let non_finite = |e: Error| match e {
        Error::Domain { .. } | Error::NonFinite(_) => Error::NonFiniteIterate { iter },
        other => other,
    };
    let values = game.values(x).map_err(non_finite)?;
    let grads = game.gradients(x).map_err(non_finite)?;
    if !finite(&values) || grads.iter().any(|g| !finite(g)) {
        return Err(Error::NonFiniteIterate { iter });
    }
    let certificate = certificate_for_gradients(
        &grads,
        cfg.stationarity_tol,
        DEFAULT_FW_ITERS,
        DEFAULT_FW_TOL,
    );
    let direction = direction_from_gradients(game, x, &grads, cfg.grad_floor)?;
    Ok(Evaluation {
        values,
        certificate,
        direction,
    })
}

/// A run stops once the iterate is certified Pareto stationary *and* the
/// DiBS direction has vanished to the same tolerance.
fn converged(eval: &Evaluation, tol: f64) -> bool {
    eval.certificate.residual <= tol && eval.direction.norm() <= tol
}

/// Runs `x_{k+1} = x_k - alpha_k h(x_k)` and records every iterate.
pub fn dibs_run(game: &BargainingGame, x0: &Point, cfg: &DibsConfig) -> Result<Trajectory> {
    cfg.validate()?;
    x0.check_dim(game.dim())?;
    if !game.contains(x0) {
        return Err(Error::InvalidParameter(
            "initial point lies outside the feasible region".into(),
        ));
    }
    let mut traj = Trajectory::new(game.dim(), game.num_agents());
    let mut x = x0.coords().to_vec();
    for iter in 0..=cfg.max_iters {
        let eval = evaluate(game, &x, cfg, iter)?;
        let done = converged(&eval, cfg.stationarity_tol);
        traj.push(TrajectoryRecord {
            iter,
            point: x.clone(),
            values: eval.values,
            residual: eval.certificate.residual,
        })?;
        if done {
            traj.terminated_by = Termination::ResidualBelowTol;
            return Ok(traj);
        }
        if iter == cfg.max_iters {
            break;
        }
        let alpha = cfg.schedule.step(iter as u64 + 1);
        for (xi, hi) in x.iter_mut().zip(&eval.direction.vector) {
            *xi -= alpha * hi;
        }
        if !finite(&x) {
            return Err(Error::NonFiniteIterate { iter: iter + 1 });
        }
    }
    traj.terminated_by = Termination::MaxIters;
    Ok(traj)
}

/// Gradient descent `x <- x - lr * grad o(x)` until `||grad o(x)|| <= tol`.
pub fn find_preferred_state(
    o: &dyn crate::Objective,
    x_start: &Point,
    lr: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Point> {
    if !(lr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    x_start.check_dim(o.dim())?;
    let mut x = x_start.coords().to_vec();
    for iter in 0..max_iters {
        let g = o.gradient(&x)?;
        if !finite(&g) {
            return Err(Error::NonFiniteIterate { iter });
        }
        if crate::norm(&g) <= tol {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= lr * gi;
        }
        let n = crate::norm(&x);
        if !(n <= 1e12) {
            return Err(Error::Diverged { iter, norm: n });
        }
    }
    Point::new(x)
}

/// Computes each agent's preferred state by gradient descent from `x_start`
/// and builds the game, checking first-order stationarity to `tol`.
pub fn game_from_start(
    objectives: Vec<ObjectiveRef>,
    x_start: &Point,
    lr: f64,
    max_iters: usize,
    tol: f64,
) -> Result<BargainingGame> {
    let preferred = objectives
        .iter()
        .map(|o| find_preferred_state(o.as_ref(), x_start, lr, max_iters, tol))
        .collect::<Result<Vec<_>>>()?;
    BargainingGame::with_preferred_tolerance(objectives, preferred, tol.max(PREFERRED_STATE_TOL))
}

/// Parameters of the bounded switched dynamics.
///
/// Inside `||x|| <= R` the plain DiBS update applies; outside
/// `||x|| >= R + r` the update is the radial contraction
/// `x - alpha x / ||x||`; the annulus in between blends the two with a
/// smooth bump and a small time-varying perturbation along `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedDynamicsConfig {
    pub inner_radius: f64,
    pub width: f64,
    pub alpha: f64,
    pub perturbation: Vec<f64>,
    /// Number of pre-update points seen strictly inside the annulus.
    pub annulus_clock: u64,
}

impl BoundedDynamicsConfig {
    /// Perturbation direction defaults to the all-ones vector scaled to
    /// unit norm.
    pub fn new(game: &BargainingGame, inner_radius: f64, width: f64, alpha: f64) -> Result<Self> {
        let dim = game.dim();
        let a = vec![1.0 / (dim as f64).sqrt(); dim];
        Self::with_perturbation(game, inner_radius, width, alpha, a)
    }

    pub fn with_perturbation(
        game: &BargainingGame,
        inner_radius: f64,
        width: f64,
        alpha: f64,
        perturbation: Vec<f64>,
    ) -> Result<Self> {
        for (name, v) in [("R", inner_radius), ("r", width), ("alpha", alpha)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if perturbation.len() != game.dim() {
            return Err(Error::DimensionMismatch {
                expected: game.dim(),
                found: perturbation.len(),
            });
        }
        if !finite(&perturbation) {
            return Err(Error::NonFinite("perturbation direction".into()));
        }
        let max_pref = game
            .preferred_states()
            .iter()
            .map(Point::norm)
            .fold(0.0, f64::max);
        if !(inner_radius > max_pref) {
            return Err(Error::InvalidParameter(format!(
                "R = {inner_radius} must exceed the largest preferred-state norm {max_pref}"
            )));
        }
        Ok(BoundedDynamicsConfig {
            inner_radius,
            width,
            alpha,
            perturbation,
            annulus_clock: 0,
        })
    }

    /// Bump weight on the radial branch; `s = (||x|| - R) / r` in `(0, 1)`.
    pub fn blend_weight(&self, norm: f64) -> f64 {
        let s = (norm - self.inner_radius) / self.width;
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        // e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)}), in logistic form.
        1.0 / (1.0 + (1.0 / s - 1.0 / (1.0 - s)).exp())
    }

    /// Scalar factor of the perturbation: `s (1 - s) sin(t)`.
    pub fn perturbation_scale(&self, norm: f64, clock: u64) -> f64 {
        let s = (norm - self.inner_radius) / self.width;
        s * (1.0 - s) * (clock as f64).sin()
    }
}

/// One step of the bounded switched dynamics at iteration `k` (1-based).
pub fn bounded_step(
    game: &BargainingGame,
    x: &[f64],
    cfg_d: &DibsConfig,
    cfg_b: &BoundedDynamicsConfig,
    k: u64,
) -> Result<(Vec<f64>, BoundedDynamicsConfig)> {
    let norm = crate::norm(x);
    let r_in = cfg_b.inner_radius;
    let r_out = r_in + cfg_b.width;
    let mut next_cfg = cfg_b.clone();

    let dibs_update = || -> Result<Vec<f64>> {
        let h = dibs_direction(game, x, cfg_d.grad_floor)?;
        let alpha = cfg_d.schedule.step(k);
        Ok(x.iter()
            .zip(&h.vector)
            .map(|(xi, hi)| xi - alpha * hi)
            .collect())
    };
    let radial_update = || -> Result<Vec<f64>> {
        if norm == 0.0 {
            return Err(Error::UndefinedDirection);
        }
        Ok(x.iter().map(|xi| xi - cfg_b.alpha * xi / norm).collect())
    };

    let next = if norm <= r_in {
        dibs_update()?
    } else if norm >= r_out {
        radial_update()?
    } else {
        next_cfg.annulus_clock += 1;
        let g = cfg_b.blend_weight(norm);
        let z = cfg_b.perturbation_scale(norm, next_cfg.annulus_clock);
        let f1 = dibs_update()?;
        let f2 = radial_update()?;
        f1.iter()
            .zip(&f2)
            .zip(&cfg_b.perturbation)
            .map(|((a, b), p)| (1.0 - g) * a + g * b + z * p)
            .collect()
    };
    Ok((next, next_cfg))
}

/// Iterates [`bounded_step`] from `x0` with the same stopping rule as
/// [`dibs_run`].
pub fn dibs_run_bounded(
    game: &BargainingGame,
    x0: &Point,
    cfg: &DibsConfig,
    bounds: &BoundedDynamicsConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    x0.check_dim(game.dim())?;
    let mut traj = Trajectory::new(game.dim(), game.num_agents());
    let mut x = x0.coords().to_vec();
    let mut state = bounds.clone();
    for iter in 0..=cfg.max_iters {
        let eval = evaluate(game, &x, cfg, iter)?;
        let inside = crate::norm(&x) <= state.inner_radius;
        let done = inside && converged(&eval, cfg.stationarity_tol);
        traj.push(TrajectoryRecord {
            iter,
            point: x.clone(),
            values: eval.values,
            residual: eval.certificate.residual,
        })?;
        if done {
            traj.terminated_by = Termination::ResidualBelowTol;
            return Ok(traj);
        }
        if iter == cfg.max_iters {
            break;
        }
        let (next, next_state) = bounded_step(game, &x, cfg, &state, iter as u64 + 1)?;
        if !finite(&next) {
            return Err(Error::NonFiniteIterate { iter: iter + 1 });
        }
        x = next;
        state = next_state;
    }
    traj.terminated_by = Termination::MaxIters;
    Ok(traj)
}
