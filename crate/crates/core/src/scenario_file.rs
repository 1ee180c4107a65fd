//! TOML scenario files with unit-suffixed keys.
//!
//! ```toml
//! name = "demo"
//! seed = 3
//! T_s = 0.1
//!
//! [arena]
//! width_px = 1412.0
//! height_px = 773.0
//!
//! [topology]
//! preset = "a1"
//!
//! [[agents]]
//! x_px = 86.0
//! y_px = 244.0
//! ```
//!
//! Omitted motion and control fields take the reference defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comms::{DelayModel, DEFAULT_MAX_LINK_DELAY};
use crate::control::{Algorithm, ControlParams};
use crate::dynamics::MotionLimits;
use crate::geometry::{Point, Rect};
use crate::scenario::{AgentSpec, DelaySpec, Scenario};
use crate::topology::{AdjacencyMatrix, NoCommZone};
use crate::world::{Arena, DEFAULT_SENSOR_RANGE};
use crate::ScenarioError;

const DEFAULT_AGENT_RADIUS: f64 = 5.0;
const STEP_MAX_FIXED: u64 = 500;
const STEP_MAX_SWITCHING: u64 = 800;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    seed: u64,
    #[serde(rename = "T_s", default = "default_step_seconds")]
    step_seconds: f64,
    arena: FileArena,
    topology: FileTopology,
    agents: Vec<FileAgent>,
    #[serde(default)]
    params: FileParams,
    #[serde(default)]
    delays: FileDelays,
}

fn default_step_seconds() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileArena {
    width_px: f64,
    height_px: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    border_west_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    border_south_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    border_east_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    border_north_px: Option<f64>,
    #[serde(default = "default_radius")]
    agent_radius_px: f64,
    #[serde(default = "default_sensor_range")]
    sensor_range_px: f64,
    #[serde(default)]
    obstacles: Vec<FileRect>,
    #[serde(default)]
    zones: Vec<FileRect>,
}

fn default_radius() -> f64 {
    DEFAULT_AGENT_RADIUS
}

fn default_sensor_range() -> f64 {
    DEFAULT_SENSOR_RANGE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRect {
    x_px: f64,
    y_px: f64,
    width_px: f64,
    height_px: f64,
}

impl From<FileRect> for Rect {
    fn from(r: FileRect) -> Self {
        Rect::new(r.x_px, r.y_px, r.width_px, r.height_px)
    }
}

impl From<Rect> for FileRect {
    fn from(r: Rect) -> Self {
        Self { x_px: r.x, y_px: r.y, width_px: r.width, height_px: r.height }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTopology {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adjacency: Option<Vec<Vec<u8>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileAgent {
    x_px: f64,
    y_px: f64,
    #[serde(default)]
    heading_rad: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    algorithm: Option<Algorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ccr_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a_px_per_step2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_px_per_step2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_max_px_per_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_min_px_per_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega_max_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step_min: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b1: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b2: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi_b_rad: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDelays {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_self: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_link: Option<u32>,
    /// `g_link[sender][receiver]`, in steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_link: Option<Vec<Vec<u32>>>,
}

fn preset_topology(name: &str, n: usize) -> Result<AdjacencyMatrix, ScenarioError> {
    match name {
        "a1" if n == 6 => Ok(AdjacencyMatrix::reference_a1()),
        "a1" => Err(ScenarioError::Invalid(format!(
            "topology preset `a1` needs 6 agents, found {n}"
        ))),
        "complete" => Ok(AdjacencyMatrix::complete(n)),
        other => Err(ScenarioError::Invalid(format!(
            "topology: unknown preset `{other}` (expected a1 or complete)"
        ))),
    }
}

fn into_scenario(doc: FileDoc, fallback_name: &str) -> Result<Scenario, ScenarioError> {
    let n = doc.agents.len();
    let a = &doc.arena;
    let arena = Arena {
        width: a.width_px,
        height: a.height_px,
        west: a.border_west_px.unwrap_or(0.0),
        south: a.border_south_px.unwrap_or(0.0),
        east: a.border_east_px.unwrap_or(a.width_px),
        north: a.border_north_px.unwrap_or(a.height_px),
        obstacles: a.obstacles.iter().map(|&r| r.into()).collect(),
        zones: a.zones.iter().map(|&r| NoCommZone::new(r.into())).collect(),
        agent_radius: a.agent_radius_px,
        sensor_range: a.sensor_range_px,
    };

    let topology = match (&doc.topology.preset, &doc.topology.adjacency) {
        (Some(_), Some(_)) => {
            return Err(ScenarioError::Invalid(
                "topology: give either `preset` or `adjacency`, not both".into(),
            ))
        }
        (Some(preset), None) => preset_topology(preset, n)?,
        (None, Some(rows)) => {
            if rows.len() != n {
                return Err(ScenarioError::Invalid(format!(
                    "topology.adjacency has {} rows but there are {n} agents",
                    rows.len()
                )));
            }
            AdjacencyMatrix::from_rows(rows)?
        }
        (None, None) => {
            return Err(ScenarioError::Invalid(
                "topology: missing `preset` or `adjacency`".into(),
            ))
        }
    };

    let p = &doc.params;
    let base_limits = MotionLimits::default();
    let limits = MotionLimits {
        a: p.a_px_per_step2.unwrap_or(base_limits.a),
        d: p.d_px_per_step2.unwrap_or(base_limits.d),
        v_max: p.v_max_px_per_step.unwrap_or(base_limits.v_max),
        v_min: p.v_min_px_per_step.unwrap_or(base_limits.v_min),
        omega_max: p.omega_max_rad.unwrap_or(base_limits.omega_max),
    };
    let base_params = ControlParams::default();
    let default_step_max = if arena.zones.is_empty() { STEP_MAX_FIXED } else { STEP_MAX_SWITCHING };
    let params = ControlParams {
        ccr: p.ccr_px.unwrap_or(base_params.ccr),
        step_min: p.step_min.unwrap_or(base_params.step_min),
        step_max: p.step_max.unwrap_or(default_step_max),
        b1: p.b1.unwrap_or(base_params.b1),
        b2: p.b2.unwrap_or(base_params.b2),
        phi_b: p.phi_b_rad.unwrap_or(base_params.phi_b),
        algorithm: p.algorithm.unwrap_or(base_params.algorithm),
    };

    let g_self = doc.delays.g_self.unwrap_or(1);
    let delays = match &doc.delays.g_link {
        Some(g_link) => {
            if doc.delays.max_link.is_some() {
                return Err(ScenarioError::Invalid(
                    "delays: `max_link` only applies when `g_link` is absent".into(),
                ));
            }
            DelaySpec::Explicit(DelayModel { g_self, g_link: g_link.clone() })
        }
        None => DelaySpec::Seeded {
            g_self,
            max_link: doc.delays.max_link.unwrap_or(DEFAULT_MAX_LINK_DELAY),
        },
    };

    let scenario = Scenario {
        name: doc.name.unwrap_or_else(|| fallback_name.to_string()),
        arena,
        topology,
        agents: doc
            .agents
            .iter()
            .map(|a| AgentSpec { position: Point::new(a.x_px, a.y_px), heading: a.heading_rad })
            .collect(),
        limits,
        params,
        delays,
        step_seconds: doc.step_seconds,
        seed: doc.seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    parse_named(text, "scenario")
}

fn parse_named(text: &str, fallback_name: &str) -> Result<Scenario, ScenarioError> {
    let doc: FileDoc = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    into_scenario(doc, fallback_name)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse_named(&text, stem).map_err(|e| match e {
        ScenarioError::Parse(msg) => ScenarioError::Parse(format!("{}: {msg}", path.display())),
        ScenarioError::Invalid(msg) => ScenarioError::Invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Canonical, fully explicit text for `scenario`; parsing it back yields an equal value.
pub fn scenario_to_toml(scenario: &Scenario) -> String {
    let arena = &scenario.arena;
    let (g_self, max_link, g_link) = match &scenario.delays {
        DelaySpec::Explicit(model) => (model.g_self, None, Some(model.g_link.clone())),
        DelaySpec::Seeded { g_self, max_link } => (*g_self, Some(*max_link), None),
    };
    let doc = FileDoc {
        name: Some(scenario.name.clone()),
        seed: scenario.seed,
        step_seconds: scenario.step_seconds,
        arena: FileArena {
            width_px: arena.width,
            height_px: arena.height,
            border_west_px: Some(arena.west),
            border_south_px: Some(arena.south),
            border_east_px: Some(arena.east),
            border_north_px: Some(arena.north),
            agent_radius_px: arena.agent_radius,
            sensor_range_px: arena.sensor_range,
            obstacles: arena.obstacles.iter().map(|&r| r.into()).collect(),
            zones: arena.zones.iter().map(|z| z.rect.into()).collect(),
        },
        topology: FileTopology { preset: None, adjacency: Some(scenario.topology.rows()) },
        agents: scenario
            .agents
            .iter()
            .map(|a| FileAgent { x_px: a.position.x, y_px: a.position.y, heading_rad: a.heading })
            .collect(),
        params: FileParams {
            algorithm: Some(scenario.params.algorithm),
            ccr_px: Some(scenario.params.ccr),
            a_px_per_step2: Some(scenario.limits.a),
            d_px_per_step2: Some(scenario.limits.d),
            v_max_px_per_step: Some(scenario.limits.v_max),
            v_min_px_per_step: Some(scenario.limits.v_min),
            omega_max_rad: Some(scenario.limits.omega_max),
            step_min: Some(scenario.params.step_min),
            step_max: Some(scenario.params.step_max),
            b1: Some(scenario.params.b1),
            b2: Some(scenario.params.b2),
            phi_b_rad: Some(scenario.params.phi_b),
        },
        delays: FileDelays { g_self: Some(g_self), max_link, g_link },
    };
    toml::to_string(&doc).expect("scenario documents always serialize")
}
