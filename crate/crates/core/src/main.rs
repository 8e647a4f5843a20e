use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bargain_opt::gradcheck::check_gradient;
use bargain_opt::harness::{self, svg, RunConfig};
use bargain_opt::pareto::sample_front_2d;
use bargain_opt::problems::{self, QUAD_PAIR_WINDOW, TOY_WINDOW};
use bargain_opt::{Error, ObjectiveRef};

#[derive(Parser)]
#[command(
    name = "bargain-opt",
    about = "Direction-based bargaining for multi-objective optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample the Pareto front of a built-in two-objective problem.
    Front {
        #[arg(long, default_value = "toy")]
        problem: String,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        /// `.svg` renders a plot; anything else writes CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic gradients with central finite differences.
    CheckGradients {
        #[arg(long)]
        problem: String,
    },
    /// Print the version
    Version,
}

type Window = ([f64; 2], [f64; 2]);

fn builtin(name: &str) -> Result<(Vec<ObjectiveRef>, Window), Error> {
    match name {
        "toy" => Ok((problems::ToyProblem::nominal().objectives(), TOY_WINDOW)),
        "quad_pair" => Ok((problems::quad_pair_objectives(), QUAD_PAIR_WINDOW)),
        other => Err(Error::InvalidParameter(format!(
            "unknown problem `{other}` (expected toy or quad_pair)"
        ))),
    }
}

fn front(problem: &str, steps: usize, out: &PathBuf) -> Result<(), Error> {
    let (objectives, (lo, hi)) = builtin(problem)?;
    let sample = sample_front_2d(&objectives, lo, hi, steps)?;
    if out.extension().is_some_and(|e| e == "svg") {
        let data = svg::PlotData {
            labels: [objectives[0].label().into(), objectives[1].label().into()],
            front: sample
                .points
                .iter()
                .map(|p| [p.values[0], p.values[1]])
                .collect(),
            ..Default::default()
        };
        std::fs::write(out, svg::render_svg(&data))?;
    } else {
        let mut text = String::from("x0,x1,loss_0,loss_1\n");
        for p in &sample.points {
            let row: Vec<String> = p
                .point
                .iter()
                .chain(&p.values)
                .map(|v| harness::csv::format_real(*v))
                .collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        std::fs::write(out, text)?;
    }
    println!(
        "{} front points written to {}",
        sample.points.len(),
        out.display()
    );
    Ok(())
}

/// Deterministic sample points for gradient checks: a 10x10 grid over the
/// window, nudged off the grid lines so that no point sits on an axis.
fn check_points(lo: [f64; 2], hi: [f64; 2]) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            let fx = (j as f64 + 0.37) / 10.0;
            let fy = (i as f64 + 0.61) / 10.0;
            pts.push(vec![
                lo[0] + fx * (hi[0] - lo[0]),
                lo[1] + fy * (hi[1] - lo[1]),
            ]);
        }
    }
    pts
}

fn check_gradients(problem: &str) -> Result<bool, Error> {
    let (objectives, (lo, hi)) = builtin(problem)?;
    let mut ok = true;
    for o in &objectives {
        let report = check_gradient(o.as_ref(), &check_points(lo, hi), 1e-6)?;
        let pass = report.passes(1e-5);
        ok &= pass;
        println!(
            "{}: {} points, max relative error {:.3e} at {:?} {}",
            report.label,
            report.points_checked,
            report.max_relative_error,
            report.worst_point,
            if pass { "ok" } else { "FAIL" }
        );
    }
    Ok(ok)
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_config_error() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = match RunConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(seed) = seed {
                cfg.set_seed(seed);
            }
            match harness::run_experiment(&cfg) {
                Ok(report) => {
                    print!("{}", report.summary());
                    for r in &report.runs {
                        println!("init {}: wall time {:.3?}", r.index, r.wall_time);
                    }
                    println!("outputs written to {}", cfg.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
        Command::Front {
            problem,
            steps,
            out,
        } => match front(&problem, steps, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => exit_for(&e),
        },
        Command::CheckGradients { problem } => match check_gradients(&problem) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => exit_for(&e),
        },
        Command::Version => {
            println!("bargain-opt {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
