//! Trajectory CSV: `iter,x0,..,x{n-1},loss_0,..,loss_{N-1},residual`.
//!
//! Reals are written with 17 significant digits so that parsing a file back
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::dibs::{Termination, Trajectory, TrajectoryRecord};
use crate::error::{Error, Result};

/// Round-trip safe decimal form of `v`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(dim: usize, n: usize) -> String {
    let mut cols = vec!["iter".to_string()];
    cols.extend((0..dim).map(|i| format!("x{i}")));
    cols.extend((0..n).map(|i| format!("loss_{i}")));
    cols.push("residual".into());
    cols.join(",")
}

pub fn trajectory_to_csv(t: &Trajectory) -> String {
    let mut out = header(t.dim, t.num_objectives);
    out.push('\n');
    for r in &t.records {
        write!(out, "{}", r.iter).unwrap();
        for v in r
            .point
            .iter()
            .chain(&r.values)
            .chain(std::iter::once(&r.residual))
        {
            out.push(',');
            out.push_str(&format_real(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory_csv(t: &Trajectory, path: &Path) -> Result<()> {
    std::fs::write(path, trajectory_to_csv(t))?;
    Ok(())
}

/// Parses a trajectory file. The termination reason is not part of the
/// format and is reported as [`Termination::MaxIters`].
pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)?;
    parse_trajectory_csv(&text).map_err(|msg| Error::Csv {
        path: path.to_path_buf(),
        msg,
    })
}

pub fn parse_trajectory_csv(text: &str) -> std::result::Result<Trajectory, String> {
    let mut lines = text.lines();
    let head = lines.next().ok_or("missing header")?;
    let cols: Vec<&str> = head.split(',').collect();
    let dim = cols.iter().filter(|c| c.starts_with('x')).count();
    let n = cols.iter().filter(|c| c.starts_with("loss_")).count();
    if head != header(dim, n) {
        return Err(format!("unexpected header `{head}`"));
    }
    let mut t = Trajectory::new(dim, n);
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(format!("row {} has {} fields", i + 1, fields.len()));
        }
        let iter = fields[0]
            .parse()
            .map_err(|_| format!("row {}: bad iteration `{}`", i + 1, fields[0]))?;
        let reals = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format!("row {}: {e}", i + 1))?;
        t.push(TrajectoryRecord {
            iter,
            point: reals[..dim].to_vec(),
            values: reals[dim..dim + n].to_vec(),
            residual: reals[dim + n],
        })
        .map_err(|e| format!("row {}: {e}", i + 1))?;
    }
    t.terminated_by = Termination::MaxIters;
    Ok(t)
}
