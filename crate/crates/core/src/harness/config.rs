//! Flat `key = value` run configuration.
//!
//! One dotted key per line; `#` starts a comment. Example:
//!
//! ```text
//! problem = toy
//! aggregator.kind = dibs_single
//! aggregator.epsilon = 1
//! transform.task = 0
//! transform.kind = signed_power
//! transform.exponent = 4
//! schedule.kind = constant
//! schedule.alpha = 0.005
//! max_iters = 40000
//! stationarity_tol = 1e-3
//! initializations = builtin
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::aggregators::{AggregatorSpec, DEFAULT_INNER_STEP};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::schedule::StepSchedule;
use crate::simplex::{DEFAULT_FW_ITERS, DEFAULT_FW_TOL};
use crate::transform::MonotoneTransform;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Toy,
    QuadPair,
    Custom(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Initializations {
    Builtin,
    Points(Vec<Point>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskTransform {
    pub task: usize,
    pub transform: MonotoneTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub aggregator: AggregatorSpec,
    pub transform: Option<TaskTransform>,
    pub schedule: StepSchedule,
    pub max_iters: usize,
    pub stationarity_tol: f64,
    /// Stop an initialization as soon as its certificate is stationary.
    pub early_stop: bool,
    pub initializations: Initializations,
    pub seed: u64,
    #[serde(skip)]
    pub output_dir: PathBuf,
    /// Grid points per axis for the plotted Pareto front.
    pub front_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemKind::Toy,
            aggregator: AggregatorSpec::DibsSingle { epsilon: 1.0 },
            transform: None,
            schedule: StepSchedule::Constant { alpha: 5e-3 },
            max_iters: 40_000,
            stationarity_tol: 1e-3,
            early_stop: true,
            initializations: Initializations::Builtin,
            seed: 0,
            output_dir: PathBuf::from("out"),
            front_steps: 200,
        }
    }
}

/// Parses `key = value` lines into an ordered map, rejecting duplicates.
/// Values keep their line number for error reporting.
pub(crate) fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(line_no, format!("expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(Error::config(line_no, "empty key"));
        }
        if map
            .insert(key.clone(), (line_no, value.trim().to_string()))
            .is_some()
        {
            return Err(Error::config(line_no, format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

pub(crate) struct Pairs {
    map: BTreeMap<String, (usize, String)>,
}

impl Pairs {
    pub(crate) fn new(text: &str) -> Result<Self> {
        Ok(Pairs {
            map: parse_pairs(text)?,
        })
    }

    pub(crate) fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    pub(crate) fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(line, format!("invalid value `{v}` for `{key}`"))),
        }
    }

    pub(crate) fn keys_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.map
            .keys()
            .filter(|k| k.starts_with(prefix))
            .cloned()
            .collect()
    }

    pub(crate) fn finish(self) -> Result<()> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(Error::config(line, format!("unknown key `{key}`"))),
        }
    }
}

pub(crate) fn parse_vector(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(line, format!("invalid number `{}`", t.trim())))
        })
        .collect()
}

fn parse_points(line: usize, text: &str) -> Result<Vec<Point>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| Point::new(parse_vector(line, s)?).map_err(|e| Error::config(line, e.to_string())))
        .collect()
}

fn parse_bool(line: usize, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(
            line,
            format!("expected a boolean, got `{v}`"),
        )),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if let ProblemKind::Custom(p) = &cfg.problem {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.problem = ProblemKind::Custom(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Pairs::new(text)?;
        let mut cfg = RunConfig::default();

        if let Some((line, v)) = p.take("problem") {
            cfg.problem = match v.as_str() {
                "toy" => ProblemKind::Toy,
                "quad_pair" => ProblemKind::QuadPair,
                "custom" => {
                    let (_, file) = p.take("problem.file").ok_or_else(|| {
                        Error::config(line, "custom problem needs `problem.file`")
                    })?;
                    ProblemKind::Custom(PathBuf::from(file))
                }
                other => return Err(Error::config(line, format!("unknown problem `{other}`"))),
            };
        }
        if let Some(seed) = p.parse("seed")? {
            cfg.seed = seed;
        }

        let epsilon = p.parse("aggregator.epsilon")?.unwrap_or(1.0);
        let inner_steps = p.parse("aggregator.inner_steps")?.unwrap_or(10);
        let inner_step = p
            .parse("aggregator.inner_step")?
            .unwrap_or(DEFAULT_INNER_STEP);
        let max_fw_iters = p
            .parse("aggregator.max_fw_iters")?
            .unwrap_or(DEFAULT_FW_ITERS);
        let fw_tol = p.parse("aggregator.fw_tol")?.unwrap_or(DEFAULT_FW_TOL);
        let (agg_line, kind) = p
            .take("aggregator.kind")
            .unwrap_or((0, "dibs_single".to_string()));
        cfg.aggregator = match kind.as_str() {
            "dibs_single" => AggregatorSpec::DibsSingle { epsilon },
            "dibs_multi" => AggregatorSpec::DibsMulti {
                epsilon,
                inner_steps,
                inner_schedule: StepSchedule::Constant { alpha: inner_step },
            },
            "ls" => AggregatorSpec::Ls,
            "min_norm" => AggregatorSpec::MinNorm {
                max_fw_iters,
                fw_tol,
            },
            "pcgrad" => AggregatorSpec::Pcgrad { seed: cfg.seed },
            "imtl_g" => AggregatorSpec::ImtlG,
            other => {
                return Err(Error::config(
                    agg_line,
                    format!("unknown aggregator `{other}`"),
                ))
            }
        };
        cfg.aggregator
            .validate()
            .map_err(|e| Error::config(agg_line, e.to_string()))?;

        if let Some((line, kind)) = p.take("transform.kind") {
            let task = p.parse("transform.task")?.unwrap_or(0);
            let exponent = p.parse("transform.exponent")?.unwrap_or(4.0);
            let shift = p.parse("transform.shift")?.unwrap_or(5.0);
            let transform = match kind.as_str() {
                "identity" => Ok(MonotoneTransform::Identity),
                "signed_power" => MonotoneTransform::signed_power(exponent),
                "shifted_power" => MonotoneTransform::shifted_power(shift, exponent),
                "exponential" => Ok(MonotoneTransform::Exponential),
                other => return Err(Error::config(line, format!("unknown transform `{other}`"))),
            }
            .map_err(|e| Error::config(line, e.to_string()))?;
            cfg.transform = Some(TaskTransform { task, transform });
        }

        let (sched_line, sched_kind) = p
            .take("schedule.kind")
            .unwrap_or((0, "constant".to_string()));
        cfg.schedule = match sched_kind.as_str() {
            "constant" => StepSchedule::Constant {
                alpha: p.parse("schedule.alpha")?.unwrap_or(5e-3),
            },
            "robbins_monro" => StepSchedule::RobbinsMonro {
                c: p.parse("schedule.c")?.unwrap_or(1.0),
                offset: p.parse("schedule.offset")?.unwrap_or(0),
            },
            other => {
                return Err(Error::config(
                    sched_line,
                    format!("unknown schedule `{other}`"),
                ))
            }
        };
        cfg.schedule
            .validate()
            .map_err(|e| Error::config(sched_line, e.to_string()))?;

        if let Some(v) = p.parse("max_iters")? {
            cfg.max_iters = v;
        }
        if let Some((line, v)) = p.take("stationarity_tol") {
            cfg.stationarity_tol = v
                .parse()
                .ok()
                .filter(|t: &f64| *t >= 0.0)
                .ok_or_else(|| Error::config(line, format!("invalid tolerance `{v}`")))?;
        }
        if let Some((line, v)) = p.take("early_stop") {
            cfg.early_stop = parse_bool(line, &v)?;
        }
        if let Some((line, v)) = p.take("initializations") {
            cfg.initializations = if v == "builtin" {
                Initializations::Builtin
            } else {
                let pts = parse_points(line, &v)?;
                if pts.is_empty() {
                    return Err(Error::config(line, "no initializations given"));
                }
                Initializations::Points(pts)
            };
        }
        if let Some((_, v)) = p.take("output_dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some((line, v)) = p.take("plot.front_steps") {
            cfg.front_steps = v
                .parse()
                .ok()
                .filter(|s: &usize| *s >= 2)
                .ok_or_else(|| Error::config(line, format!("invalid front_steps `{v}`")))?;
        }
        p.finish()?;
        Ok(cfg)
    }

    /// Overrides the seed, including the one held by a PCGrad aggregator.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let AggregatorSpec::Pcgrad { seed: s } = &mut self.aggregator {
            *s = seed;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_text() {
        assert_eq!(
            RunConfig::parse("# nothing\n\n").unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn full_config() {
        let cfg = RunConfig::parse(
            "problem = quad_pair\n\
             aggregator.kind = dibs_multi\n\
             aggregator.epsilon = 0.5\n\
             aggregator.inner_steps = 3\n\
             transform.task = 1\n\
             transform.kind = shifted_power\n\
             transform.shift = 5\n\
             transform.exponent = 4\n\
             schedule.kind = robbins_monro\n\
             schedule.c = 0.5\n\
             schedule.offset = 2\n\
             max_iters = 10   # short\n\
             stationarity_tol = 1e-4\n\
             early_stop = false\n\
             initializations = 0.5, 0.9; -0.2,0.1\n\
             seed = 7\n\
             output_dir = /tmp/x\n",
        )
        .unwrap();
        assert_eq!(cfg.problem, ProblemKind::QuadPair);
        assert_eq!(
            cfg.aggregator,
            AggregatorSpec::DibsMulti {
                epsilon: 0.5,
                inner_steps: 3,
                inner_schedule: StepSchedule::Constant { alpha: 0.1 }
            }
        );
        let t = cfg.transform.unwrap();
        assert_eq!(t.task, 1);
        assert_eq!(
            t.transform,
            MonotoneTransform::ShiftedPower {
                shift: 5.0,
                exponent: 4.0
            }
        );
        assert_eq!(
            cfg.schedule,
            StepSchedule::RobbinsMonro { c: 0.5, offset: 2 }
        );
        assert_eq!(cfg.max_iters, 10);
        assert!(!cfg.early_stop);
        match cfg.initializations {
            Initializations::Points(p) => {
                assert_eq!(p.len(), 2);
                assert_eq!(p[1].coords(), &[-0.2, 0.1]);
            }
            _ => panic!("expected explicit points"),
        }
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = RunConfig::parse("problem = toy\naggregator.kind = nash\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        let err = RunConfig::parse("max_iters = 1\nmax_iters = 2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = RunConfig::parse("bogus.key = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
        let err = RunConfig::parse("schedule.alpha = -1\n").unwrap_err();
        assert!(err.is_config_error());
        let err = RunConfig::parse("no equals sign\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
        assert!(
            RunConfig::parse("transform.kind = signed_power\ntransform.exponent = 1\n").is_err()
        );
        assert!(RunConfig::parse("initializations = 1, nan\n").is_err());
    }

    #[test]
    fn pcgrad_takes_the_run_seed() {
        let mut cfg = RunConfig::parse("aggregator.kind = pcgrad\nseed = 3\n").unwrap();
        assert_eq!(cfg.aggregator, AggregatorSpec::Pcgrad { seed: 3 });
        cfg.set_seed(11);
        assert_eq!(cfg.aggregator, AggregatorSpec::Pcgrad { seed: 11 });
    }
}
