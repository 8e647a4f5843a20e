//! Experiment orchestration: problem × aggregator × transform ×
//! initialization, with CSV, JSON, text and SVG outputs.
//!
//! Each initialization runs the outer loop
//! `theta_{k+1} = theta_k + alpha_k * delta(theta_k)`, with `delta` produced
//! by the configured aggregator from the task gradients at `theta_k`.

pub mod config;
pub mod csv;
pub mod problem;
pub mod report;
pub mod svg;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{Initializations, ProblemKind, RunConfig, TaskTransform};
pub use report::{InitReport, RunReport};

use crate::aggregators::{AggregateFlag, AggregatorSpec, GradientBundle};
use crate::dibs::{Termination, Trajectory, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::objective::ObjectiveRef;
use crate::pareto::{certificate_for_gradients, sample_front_2d, StationarityCertificate};
use crate::point::Point;
use crate::schedule::StepSchedule;
use crate::simplex::{DEFAULT_FW_ITERS, DEFAULT_FW_TOL};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BARGAIN_OPT_THREADS";

#[derive(Debug, Clone, Copy)]
pub struct OuterLoop {
    pub aggregator: AggregatorSpec,
    pub schedule: StepSchedule,
    pub max_iters: usize,
    pub stationarity_tol: f64,
    pub early_stop: bool,
}

impl OuterLoop {
    pub fn from_config(cfg: &RunConfig) -> Self {
        OuterLoop {
            aggregator: cfg.aggregator,
            schedule: cfg.schedule,
            max_iters: cfg.max_iters,
            stationarity_tol: cfg.stationarity_tol,
            early_stop: cfg.early_stop,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OuterRun {
    pub trajectory: Trajectory,
    pub certificate: StationarityCertificate,
    pub flags: Vec<AggregateFlag>,
}

fn numeric(iter: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(_) => Error::NonFiniteIterate { iter },
        other => other,
    }
}

/// Runs the aggregator-driven outer loop from `x0`, recording every iterate.
pub fn run_outer_loop(
    objectives: &[ObjectiveRef],
    x0: &Point,
    spec: &OuterLoop,
) -> Result<OuterRun> {
    spec.aggregator.validate()?;
    spec.schedule.validate()?;
    let dim = objectives
        .first()
        .ok_or_else(|| Error::InvalidParameter("no objectives".into()))?
        .dim();
    x0.check_dim(dim)?;
    let labels: Vec<String> = objectives.iter().map(|o| o.label().to_string()).collect();
    let mut traj = Trajectory::new(dim, objectives.len());
    let mut flags = Vec::new();
    let mut x = x0.coords().to_vec();
    let mut iter = 0;
    loop {
        let values = objectives
            .iter()
            .map(|o| o.value(&x))
            .collect::<Result<Vec<_>>>()?;
        let grads = objectives
            .iter()
            .map(|o| o.gradient(&x))
            .collect::<Result<Vec<_>>>()?;
        if values
            .iter()
            .chain(grads.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFiniteIterate { iter });
        }
        let cert = certificate_for_gradients(
            &grads,
            spec.stationarity_tol,
            DEFAULT_FW_ITERS,
            DEFAULT_FW_TOL,
        );
        traj.push(TrajectoryRecord {
            iter,
            point: x.clone(),
            values,
            residual: cert.residual,
        })?;
        if spec.early_stop && cert.is_stationary {
            traj.terminated_by = Termination::ResidualBelowTol;
            return Ok(OuterRun {
                trajectory: traj,
                certificate: cert,
                flags,
            });
        }
        if iter == spec.max_iters {
            traj.terminated_by = Termination::MaxIters;
            return Ok(OuterRun {
                trajectory: traj,
                certificate: cert,
                flags,
            });
        }
        let bundle = GradientBundle::with_labels(grads, labels.clone()).map_err(numeric(iter))?;
        let agg = spec.aggregator.aggregate(&bundle)?;
        if let Some(f) = agg.flag {
            if !flags.contains(&f) {
                flags.push(f);
            }
        }
        let alpha = spec.schedule.step(iter as u64 + 1);
        for (xi, di) in x.iter_mut().zip(&agg.delta) {
            *xi += alpha * di;
        }
        iter += 1;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIterate { iter });
        }
    }
}

fn thread_count(n_inits: usize) -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .map_or(n_inits, |cap| cap.min(n_inits))
        .max(1)
}

/// Runs every initialization (in parallel) and returns the report without
/// writing anything.
pub fn execute(cfg: &RunConfig) -> Result<RunReport> {
    let problem = problem::resolve(&cfg.problem, cfg.transform.as_ref())?;
    let inits = match &cfg.initializations {
        Initializations::Builtin => problem.builtin_inits.clone(),
        Initializations::Points(p) => p.clone(),
    };
    for (index, p) in inits.iter().enumerate() {
        p.check_dim(problem.dim())
            .map_err(|e| Error::Initialization {
                index,
                source: Box::new(Error::config(0, e.to_string())),
            })?;
    }
    let spec = OuterLoop::from_config(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(inits.len()))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let runs: Vec<Result<InitReport>> = pool.install(|| {
        inits
            .par_iter()
            .enumerate()
            .map(|(index, x0)| {
                let start = Instant::now();
                let run = run_outer_loop(&problem.objectives, x0, &spec).map_err(|e| {
                    Error::Initialization {
                        index,
                        source: Box::new(e),
                    }
                })?;
                let last = run.trajectory.last().expect("at least one record");
                Ok(InitReport {
                    index,
                    initial_point: x0.coords().to_vec(),
                    final_point: last.point.clone(),
                    final_values: last.values.clone(),
                    certificate: run.certificate,
                    iterations: last.iter,
                    terminated_by: run.trajectory.terminated_by,
                    aggregator_flags: run.flags,
                    wall_time: start.elapsed(),
                    trajectory: run.trajectory,
                })
            })
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let stationary = runs.iter().filter(|r| r.certificate.is_stationary).count();
    Ok(RunReport {
        problem: problem.name.clone(),
        objective_labels: problem
            .objectives
            .iter()
            .map(|o| o.label().to_string())
            .collect(),
        aggregator: cfg.aggregator,
        transform: cfg.transform,
        schedule: cfg.schedule,
        max_iters: cfg.max_iters,
        stationarity_tol: cfg.stationarity_tol,
        seed: cfg.seed,
        stationary_fraction: if runs.is_empty() {
            0.0
        } else {
            stationary as f64 / runs.len() as f64
        },
        runs,
    })
}

pub fn trajectory_file_name(index: usize) -> String {
    format!("trajectory_{index:03}.csv")
}

/// Writes trajectories, `report.json`, `summary.txt` and, for two
/// objectives over a 2-D domain, `plot.svg` into `dir`.
pub fn write_outputs(cfg: &RunConfig, report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in &report.runs {
        csv::write_trajectory_csv(&r.trajectory, &dir.join(trajectory_file_name(r.index)))?;
    }
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    std::fs::write(dir.join("summary.txt"), report.summary())?;

    let problem = problem::resolve(&cfg.problem, cfg.transform.as_ref())?;
    if let (2, 2, Some((lo, hi))) = (problem.objectives.len(), problem.dim(), problem.window) {
        let front = sample_front_2d(&problem.objectives, lo, hi, cfg.front_steps)?;
        svg::render_plot_svg(report, &front, &dir.join("plot.svg"))?;
    }
    Ok(())
}

/// Runs the experiment and writes all outputs into `cfg.output_dir`.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunReport> {
    let report = execute(cfg)?;
    write_outputs(cfg, &report, &cfg.output_dir)?;
    Ok(report)
}
