use std::path::Path;
use std::sync::Arc;

use super::config::{parse_vector, Pairs, ProblemKind, TaskTransform};
use crate::error::{Error, Result};
use crate::objective::{ObjectiveRef, Quadratic};
use crate::point::Point;
use crate::problems::{self, QUAD_PAIR_WINDOW, TOY_WINDOW};
use crate::transform::transform_objective;

/// A problem ready to run: objectives with any transform applied.
#[derive(Debug, Clone)]
pub struct ResolvedProblem {
    pub name: String,
    pub objectives: Vec<ObjectiveRef>,
    pub builtin_inits: Vec<Point>,
    /// Plotting window `(lo, hi)` for 2-D problems.
    pub window: Option<([f64; 2], [f64; 2])>,
}

impl ResolvedProblem {
    pub fn dim(&self) -> usize {
        self.objectives[0].dim()
    }
}

/// Loads a custom problem: a sum of weighted separable quadratics.
///
/// ```text
/// objective.0.center = 1, 0
/// objective.0.weights = 1, 2    # optional, defaults to all ones
/// objective.0.label = left      # optional
/// objective.1.center = -1, 0
/// domain.lo = -2, -2            # optional plotting window (2-D only)
/// domain.hi = 2, 2
/// ```
///
/// Builtin initializations for a custom problem are the objective centers.
pub fn load_custom(path: &Path) -> Result<ResolvedProblem> {
    let text = std::fs::read_to_string(path)?;
    let mut p = Pairs::new(&text)?;
    let mut objectives: Vec<ObjectiveRef> = Vec::new();
    let mut centers = Vec::new();
    for i in 0.. {
        let Some((line, center)) = p.take(&format!("objective.{i}.center")) else {
            break;
        };
        let center = parse_vector(line, &center)?;
        let weights = match p.take(&format!("objective.{i}.weights")) {
            Some((l, w)) => parse_vector(l, &w)?,
            None => vec![1.0; center.len()],
        };
        let label = p
            .take(&format!("objective.{i}.label"))
            .map_or_else(|| format!("objective_{i}"), |(_, l)| l);
        let q = Quadratic::new(label, center.clone(), weights)
            .map_err(|e| Error::config(line, e.to_string()))?;
        if let Some(first) = objectives.first() {
            if first.dim() != center.len() {
                return Err(Error::config(line, "objectives have different dimensions"));
            }
        }
        centers.push(Point::new(center).map_err(|e| Error::config(line, e.to_string()))?);
        objectives.push(Arc::new(q));
    }
    if objectives.is_empty() {
        return Err(Error::config(
            0,
            "custom problem defines no `objective.0.center`",
        ));
    }
    let stray = p.keys_with_prefix("objective.");
    if let Some(k) = stray.first() {
        let (line, _) = p.take(k).unwrap();
        return Err(Error::config(
            line,
            format!("objective indices must be contiguous (`{k}`)"),
        ));
    }
    let window = match (p.take("domain.lo"), p.take("domain.hi")) {
        (Some((l1, lo)), Some((l2, hi))) => {
            let lo = parse_vector(l1, &lo)?;
            let hi = parse_vector(l2, &hi)?;
            if lo.len() != 2 || hi.len() != 2 {
                return Err(Error::config(l1, "domain bounds must be 2-D"));
            }
            Some(([lo[0], lo[1]], [hi[0], hi[1]]))
        }
        (None, None) => None,
        (Some((l, _)), None) | (None, Some((l, _))) => {
            return Err(Error::config(
                l,
                "domain needs both `domain.lo` and `domain.hi`",
            ))
        }
    };
    p.finish()?;
    Ok(ResolvedProblem {
        name: format!("custom({})", path.display()),
        objectives,
        builtin_inits: centers,
        window,
    })
}

pub fn resolve(kind: &ProblemKind, transform: Option<&TaskTransform>) -> Result<ResolvedProblem> {
    let mut problem = match kind {
        ProblemKind::Toy => ResolvedProblem {
            name: "toy".into(),
            objectives: problems::ToyProblem::nominal().objectives(),
            builtin_inits: problems::toy_initializations(),
            window: Some(TOY_WINDOW),
        },
        ProblemKind::QuadPair => ResolvedProblem {
            name: "quad_pair".into(),
            objectives: problems::quad_pair_objectives(),
            builtin_inits: quad_pair_initializations(),
            window: Some(QUAD_PAIR_WINDOW),
        },
        ProblemKind::Custom(path) => load_custom(path)?,
    };
    if let Some(t) = transform {
        let n = problem.objectives.len();
        if t.task >= n {
            return Err(Error::config(
                0,
                format!("transform.task = {} but the problem has {n} tasks", t.task),
            ));
        }
        problem.objectives[t.task] =
            transform_objective(problem.objectives[t.task].clone(), t.transform)?;
    }
    Ok(problem)
}

/// Starting points for the quadratic pair, spread over `[-1, 1]^2`.
pub fn quad_pair_initializations() -> Vec<Point> {
    [
        [0.5, 0.9],
        [-0.8, -0.6],
        [0.9, -0.9],
        [-0.5, 0.5],
        [0.0, 0.9],
    ]
    .iter()
    .map(|p| Point::new(p.to_vec()).expect("finite constants"))
    .collect()
}
