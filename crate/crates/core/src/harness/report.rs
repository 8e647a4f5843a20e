use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use super::config::TaskTransform;
use super::csv::format_real;
use crate::aggregators::{AggregateFlag, AggregatorSpec};
use crate::dibs::{Termination, Trajectory};
use crate::pareto::StationarityCertificate;
use crate::schedule::StepSchedule;

#[derive(Debug, Clone, Serialize)]
pub struct InitReport {
    pub index: usize,
    pub initial_point: Vec<f64>,
    pub final_point: Vec<f64>,
    pub final_values: Vec<f64>,
    pub certificate: StationarityCertificate,
    /// Number of updates applied.
    pub iterations: usize,
    pub terminated_by: Termination,
    /// Flags raised by the aggregator at any iteration, in first-seen order.
    pub aggregator_flags: Vec<AggregateFlag>,
    /// Not serialized, so that reports are byte-reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub problem: String,
    pub objective_labels: Vec<String>,
    pub aggregator: AggregatorSpec,
    pub transform: Option<TaskTransform>,
    pub schedule: StepSchedule,
    pub max_iters: usize,
    pub stationarity_tol: f64,
    pub seed: u64,
    pub runs: Vec<InitReport>,
    /// Fraction of initializations whose final residual is within tolerance.
    pub stationary_fraction: f64,
}

impl RunReport {
    pub fn stationary_count(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| r.certificate.is_stationary)
            .count()
    }

    /// Plain-text summary. Residuals use the same formatting as the CSV.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "problem {} | aggregator {} | {} initializations | stationary {}/{}",
            self.problem,
            self.aggregator.name(),
            self.runs.len(),
            self.stationary_count(),
            self.runs.len()
        )
        .unwrap();
        for r in &self.runs {
            let point: Vec<String> = r.final_point.iter().map(|v| format_real(*v)).collect();
            writeln!(
                s,
                "init {}: iterations {} residual {} stationary {} final [{}]",
                r.index,
                r.iterations,
                format_real(r.certificate.residual),
                r.certificate.is_stationary,
                point.join(", ")
            )
            .unwrap();
        }
        s
    }
}
