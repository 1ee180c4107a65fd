//! Run artifacts: trajectory log, summary document and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::Algorithm;
use crate::engine::{CollisionReport, LossInterval, RunResult};
use crate::geometry::{Point, Rect};
use crate::world::Arena;
use crate::ReportError;

pub const LOG_HEADER: [&str; 8] = ["step", "agent_id", "x", "y", "phi", "v", "mode", "event"];
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const XY_PLOT_FILE: &str = "trajectories.svg";
pub const DISTANCE_PLOT_FILE: &str = "distance.svg";

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: u64,
    pub agent_id: usize,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub v: f64,
    pub mode: String,
    /// Semicolon-separated event labels; empty when nothing happened.
    pub event: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub fn from_result(result: &RunResult) -> Self {
        let rows = result
            .records
            .iter()
            .flat_map(|record| {
                record.agents.iter().enumerate().map(move |(i, a)| LogRow {
                    step: record.step,
                    agent_id: i,
                    x: a.x,
                    y: a.y,
                    phi: a.phi,
                    v: a.v,
                    mode: a.mode.label().to_string(),
                    event: a.events.iter().map(|e| e.label()).collect::<Vec<_>>().join(";"),
                })
            })
            .collect();
        Self { rows }
    }

    pub fn agent_count(&self) -> usize {
        self.rows.iter().map(|r| r.agent_id + 1).max().unwrap_or(0)
    }

    pub fn last_step(&self) -> Option<u64> {
        self.rows.last().map(|r| r.step)
    }

    /// Rows of one agent in step order.
    pub fn agent_rows(&self, agent: usize) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(move |r| r.agent_id == agent)
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(LOG_HEADER).expect("in-memory write");
        for r in &self.rows {
            writer
                .write_record([
                    r.step.to_string(),
                    r.agent_id.to_string(),
                    r.x.to_string(),
                    r.y.to_string(),
                    r.phi.to_string(),
                    r.v.to_string(),
                    r.mode.clone(),
                    r.event.clone(),
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn parse_csv(text: &str) -> Result<Self, ReportError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| ReportError::Log(e.to_string()))?;
        if header.iter().ne(LOG_HEADER) {
            return Err(ReportError::Log(format!("unexpected header {header:?}")));
        }
        let rows = reader
            .deserialize()
            .collect::<Result<Vec<LogRow>, _>>()
            .map_err(|e| ReportError::Log(e.to_string()))?;
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub agent_id: usize,
    pub backtrack_count: u32,
    pub loss_intervals: Vec<LossInterval>,
    pub final_mode: String,
    pub final_x: f64,
    pub final_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub converged: bool,
    pub consensus_step: Option<u64>,
    pub consensus_time_s: Option<f64>,
    pub steps_executed: u64,
    pub step_seconds: f64,
    pub final_consensus_point: Point,
    pub min_clearance_px: f64,
    pub min_separation_px: f64,
    pub collision: Option<CollisionReport>,
    pub agents: Vec<AgentReport>,
}

impl Summary {
    pub fn from_result(result: &RunResult) -> Self {
        Self {
            scenario: result.scenario.clone(),
            algorithm: result.algorithm,
            seed: result.seed,
            converged: result.converged,
            consensus_step: result.consensus_step,
            consensus_time_s: result.consensus_time_s,
            steps_executed: result.steps_executed,
            step_seconds: result.step_seconds,
            final_consensus_point: result.final_consensus_point,
            min_clearance_px: result.min_clearance,
            min_separation_px: result.min_separation,
            collision: result.collision.clone(),
            agents: result
                .agents
                .iter()
                .enumerate()
                .map(|(i, a)| AgentReport {
                    agent_id: i,
                    backtrack_count: a.backtrack_count,
                    loss_intervals: a.loss_intervals.clone(),
                    final_mode: a.final_mode.label().to_string(),
                    final_x: a.final_state.x,
                    final_y: a.final_state.y,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Frame {
    width: f64,
    height: f64,
    margin: f64,
}

fn svg_open(out: &mut String, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = frame.width + 2.0 * frame.margin,
        h = frame.height + 2.0 * frame.margin,
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn polyline(out: &mut String, points: impl Iterator<Item = (f64, f64)>, color: &str) {
    let coords: Vec<String> = points.map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    if coords.is_empty() {
        return;
    }
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        coords.join(" ")
    );
}

/// Top-down view of the arena with obstacles, zones and every agent's path.
pub fn render_xy_plot(log: &TrajectoryLog, arena: &Arena) -> String {
    let scale = 800.0 / arena.width.max(arena.height);
    let frame = Frame { width: arena.width * scale, height: arena.height * scale, margin: 30.0 };
    // arena y grows upwards, SVG y grows downwards
    let map = |p: Point| (frame.margin + p.x * scale, frame.margin + (arena.height - p.y) * scale);
    let rect = |out: &mut String, r: &Rect, fill: &str, opacity: f64| {
        let (x, y) = map(Point::new(r.x, r.max_y()));
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}" fill-opacity="{opacity}"/>"#,
            r.width * scale,
            r.height * scale
        );
    };

    let mut out = String::new();
    svg_open(&mut out, &frame);
    let border = arena.interior();
    let (bx, by) = map(Point::new(border.x, border.max_y()));
    let _ = writeln!(
        out,
        r#"<rect x="{bx:.2}" y="{by:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        border.width * scale,
        border.height * scale
    );
    for zone in &arena.zones {
        rect(&mut out, &zone.rect, "#f4c542", 0.45);
    }
    for obstacle in &arena.obstacles {
        rect(&mut out, obstacle, "#777777", 1.0);
    }
    for agent in 0..log.agent_count() {
        let color = PALETTE[agent % PALETTE.len()];
        polyline(&mut out, log.agent_rows(agent).map(|r| map(Point::new(r.x, r.y))), color);
        if let Some(first) = log.agent_rows(agent).next() {
            let (x, y) = map(Point::new(first.x, first.y));
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 5.0, y - 5.0, agent + 1);
        }
        if let Some(last) = log.agent_rows(agent).last() {
            let (x, y) = map(Point::new(last.x, last.y));
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="{color}"/>"#,
                x - 3.0,
                y - 3.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Distance of each agent from the arena origin against time.
pub fn render_distance_plot(log: &TrajectoryLog, step_seconds: f64) -> String {
    let frame = Frame { width: 800.0, height: 400.0, margin: 45.0 };
    let t_max = (log.last_step().unwrap_or(0) as f64 * step_seconds).max(step_seconds);
    let d_max = log
        .rows
        .iter()
        .map(|r| Point::new(r.x, r.y).norm())
        .fold(1.0, f64::max)
        * 1.05;
    let map = |t: f64, d: f64| {
        (
            frame.margin + t / t_max * frame.width,
            frame.margin + (1.0 - d / d_max) * frame.height,
        )
    };

    let mut out = String::new();
    svg_open(&mut out, &frame);
    let (x0, y0) = map(0.0, 0.0);
    let (x1, y1) = map(t_max, d_max);
    let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">time (s)</text>"#, x1 - 50.0, y0 + 30.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">distance from origin (px)</text>"#, x0, y1 - 10.0);
    for tick in 0..=5 {
        let t = t_max * tick as f64 / 5.0;
        let (x, _) = map(t, 0.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.1}</text>"#, y0 + 15.0);
        let d = d_max * tick as f64 / 5.0;
        let (_, y) = map(0.0, d);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{d:.0}</text>"#, x0 - 4.0);
    }
    for agent in 0..log.agent_count() {
        polyline(
            &mut out,
            log.agent_rows(agent)
                .map(|r| map(r.step as f64 * step_seconds, Point::new(r.x, r.y).norm())),
            PALETTE[agent % PALETTE.len()],
        );
    }
    out.push_str("</svg>\n");
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    fs::write(path, contents).map_err(|source| ReportError::Io { path: path.display().to_string(), source })
}

/// Writes the log, summary and both plots into `out_dir`, creating it if needed.
pub fn emit_outputs(result: &RunResult, arena: &Arena, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(out_dir)
        .map_err(|source| ReportError::Io { path: out_dir.display().to_string(), source })?;
    let log = TrajectoryLog::from_result(result);
    let files = [
        (TRAJECTORY_FILE, log.to_csv()),
        (SUMMARY_FILE, Summary::from_result(result).to_json()?),
        (XY_PLOT_FILE, render_xy_plot(&log, arena)),
        (DISTANCE_PLOT_FILE, render_distance_plot(&log, result.step_seconds)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = out_dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}
