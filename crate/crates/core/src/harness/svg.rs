//! Standalone SVG plots in objective space.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pareto::FrontSample;

use super::report::RunReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 60.0;
/// Longest polyline drawn per trajectory; longer ones are subsampled.
const MAX_POLYLINE_POINTS: usize = 400;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotData {
    pub labels: [String; 2],
    pub front: Vec<[f64; 2]>,
    pub trajectories: Vec<Vec<[f64; 2]>>,
    pub inits: Vec<[f64; 2]>,
    pub finals: Vec<[f64; 2]>,
}

/// Axis ranges covering every plotted value with a 5% margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotLayout {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        let pad = 0.05 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    }
}

impl PlotLayout {
    pub fn from_data(data: &PlotData) -> Self {
        let all = data
            .front
            .iter()
            .chain(data.trajectories.iter().flatten())
            .chain(&data.inits)
            .chain(&data.finals)
            .filter(|p| p[0].is_finite() && p[1].is_finite());
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in all {
            for k in 0..2 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        if !min[0].is_finite() {
            min = [0.0; 2];
            max = [1.0; 2];
        }
        PlotLayout {
            x_range: padded(min[0], max[0]),
            y_range: padded(min[1], max[1]),
        }
    }

    fn project(&self, p: [f64; 2]) -> (f64, f64) {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let fx = (p[0] - self.x_range.0) / (self.x_range.1 - self.x_range.0);
        let fy = (p[1] - self.y_range.0) / (self.y_range.1 - self.y_range.0);
        (MARGIN_LEFT + fx * plot_w, MARGIN_TOP + (1.0 - fy) * plot_h)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-2..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn subsample(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if points.len() <= MAX_POLYLINE_POINTS {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(MAX_POLYLINE_POINTS - 1);
    let mut out: Vec<[f64; 2]> = points.iter().step_by(stride).copied().collect();
    if out.last() != points.last() {
        out.push(*points.last().unwrap());
    }
    out
}

fn polyline(layout: &PlotLayout, pts: &[[f64; 2]]) -> String {
    pts.iter()
        .filter(|p| p[0].is_finite() && p[1].is_finite())
        .map(|p| {
            let (x, y) = layout.project(*p);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_svg(data: &PlotData) -> String {
    let layout = PlotLayout::from_data(data);
    let mut s = String::new();
    writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();

    // Axes with five ticks each.
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    let (x1, y1) = (WIDTH - MARGIN_RIGHT, MARGIN_TOP);
    writeln!(
        s,
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    )
    .unwrap();
    s.push_str(r#"<g class="ticks" fill="black">"#);
    for i in 0..5 {
        let f = i as f64 / 4.0;
        let vx = layout.x_range.0 + f * (layout.x_range.1 - layout.x_range.0);
        let vy = layout.y_range.0 + f * (layout.y_range.1 - layout.y_range.0);
        let (sx, _) = layout.project([vx, layout.y_range.0]);
        let (_, sy) = layout.project([layout.x_range.0, vy]);
        write!(
            s,
            r#"<text x="{sx:.2}" y="{:.2}" text-anchor="middle">{}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            y0 + 16.0,
            tick_label(vx),
            x0 - 6.0,
            sy + 4.0,
            tick_label(vy)
        )
        .unwrap();
    }
    s.push_str("</g>\n");
    writeln!(
        s,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(&data.labels[0])
    )
    .unwrap();
    writeln!(
        s,
        r#"<text class="ylabel" x="15" y="{:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 15 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&data.labels[1])
    )
    .unwrap();

    if !data.front.is_empty() {
        writeln!(
            s,
            r##"<polyline class="front" fill="none" stroke="#7f7f7f" stroke-width="3" points="{}"/>"##,
            polyline(&layout, &data.front)
        )
        .unwrap();
    }
    for (i, t) in data.trajectories.iter().enumerate() {
        writeln!(
            s,
            r#"<polyline class="trajectory" fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            polyline(&layout, &subsample(t))
        )
        .unwrap();
    }
    for (i, p) in data.inits.iter().enumerate() {
        let (x, y) = layout.project(*p);
        writeln!(
            s,
            r#"<circle class="init" cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"/>"#,
            PALETTE[i % PALETTE.len()]
        )
        .unwrap();
    }
    for (i, p) in data.finals.iter().enumerate() {
        let (x, y) = layout.project(*p);
        writeln!(
            s,
            r#"<rect class="final" x="{:.2}" y="{:.2}" width="8" height="8" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            x - 4.0,
            y - 4.0,
            PALETTE[i % PALETTE.len()]
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Builds the objective-space plot data of a two-objective run.
pub fn plot_data(report: &RunReport, front: &FrontSample) -> Result<PlotData> {
    if report.objective_labels.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "plots need exactly two objectives, got {}",
            report.objective_labels.len()
        )));
    }
    let pair = |v: &[f64]| [v[0], v[1]];
    Ok(PlotData {
        labels: [
            report.objective_labels[0].clone(),
            report.objective_labels[1].clone(),
        ],
        front: front.points.iter().map(|p| pair(&p.values)).collect(),
        trajectories: report
            .runs
            .iter()
            .map(|r| {
                r.trajectory
                    .records
                    .iter()
                    .map(|rec| pair(&rec.values))
                    .collect()
            })
            .collect(),
        inits: report
            .runs
            .iter()
            .map(|r| {
                r.trajectory
                    .records
                    .first()
                    .map_or([f64::NAN; 2], |rec| pair(&rec.values))
            })
            .collect(),
        finals: report.runs.iter().map(|r| pair(&r.final_values)).collect(),
    })
}

pub fn render_plot_svg(report: &RunReport, front: &FrontSample, path: &Path) -> Result<()> {
    let data = plot_data(report, front)?;
    std::fs::write(path, render_svg(&data))?;
    Ok(())
}
