//! Discrete-time simulator for positional consensus of unicycle agents over a
//! delayed communication network whose links drop out in no-comm zones.
//!
//! The pipeline for one step is: sample states into the delay buffers, mask
//! the base topology by agent position, build each agent's delayed view, run
//! its control policy, filter the requested turn through obstacle avoidance,
//! and integrate the kinematics. [`engine::run`] drives that loop;
//! [`batch::batch_compare`] sweeps scenarios, algorithms and seeds.

use thiserror::Error;

pub mod batch;
pub mod comms;
pub mod control;
pub mod dynamics;
pub mod engine;
pub mod generate;
pub mod geometry;
pub mod report;
pub mod scenario;
pub mod scenario_file;
pub mod topology;
pub mod world;

pub use batch::{batch_compare, BatchCell, ComparisonTable};
pub use comms::{DelayModel, DelayedStateBuffer, StampedState};
pub use control::{
    Algorithm, ControlOutput, ControlParams, ControlPolicyState, FeedbackVector, Mode,
};
pub use dynamics::{AgentKinematicState, MotionLimits};
pub use engine::{detect_global_consensus, run, RunResult, StepRecord};
pub use geometry::{Point, Rect};
pub use scenario::{AgentSpec, DelaySpec, Scenario};
pub use scenario_file::{load_scenario, parse_scenario, scenario_to_toml};
pub use topology::{AdjacencyMatrix, LaplacianMatrix, NoCommZone};
pub use world::{Arena, HeadingDecision, LaserScan};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("adjacency row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("adjacency entry ({row}, {col}) is {value}, expected 0 or 1")]
    NonBinary { row: usize, col: usize, value: u8 },
    #[error("adjacency diagonal entry {0} must be zero")]
    SelfLoop(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommsError {
    #[error("agent {agent}: expected sample for step {expected}, got step {got}")]
    OutOfOrder { agent: usize, expected: u64, got: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControlError {
    #[error("unknown algorithm `{0}` (expected memoryless, backtracking or history)")]
    UnknownAlgorithm(String),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("agent {agent} at ({x}, {y}): {reason}")]
    Geometry {
        agent: usize,
        x: f64,
        y: f64,
        reason: String,
    },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trajectory log: {0}")]
    Log(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
