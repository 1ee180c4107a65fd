//! Consensus feedback and the per-agent mode machines.
//!
//! Each agent steers toward the mean of the delayed positions it can see and
//! halts once that mean is inside its consensus circle. The three algorithms
//! differ only in how they react to losing every inbound link:
//!
//! * memoryless: halt and wait for data,
//! * back-tracking: halt, reverse for `b1` steps, halt, turn by `phi_b`, drive
//!   forward for `b2` steps, then re-aim,
//! * history following: keep driving toward the last estimate of the
//!   neighbour mean, halting there if it is reached while still disconnected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comms::StampedState;
use crate::dynamics::{halt_command, wrap_angle, MotionLimits};
use crate::geometry::Point;
use crate::ControlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Memoryless,
    Backtracking,
    History,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Memoryless, Algorithm::Backtracking, Algorithm::History];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Memoryless => "memoryless",
            Algorithm::Backtracking => "backtracking",
            Algorithm::History => "history",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = ControlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "memoryless" => Ok(Algorithm::Memoryless),
            "backtracking" => Ok(Algorithm::Backtracking),
            "history" => Ok(Algorithm::History),
            other => Err(ControlError::UnknownAlgorithm(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    /// Consensus circle radius, pixels.
    pub ccr: f64,
    pub step_min: u64,
    pub step_max: u64,
    pub b1: u32,
    pub b2: u32,
    /// Heading change after backing up, radians.
    pub phi_b: f64,
    pub algorithm: Algorithm,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            ccr: 30.0,
            step_min: 10,
            step_max: 800,
            b1: 5,
            b2: 10,
            phi_b: 45f64.to_radians(),
            algorithm: Algorithm::Backtracking,
        }
    }
}

impl ControlParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.ccr.is_finite() && self.ccr > 0.0) {
            return Err(format!("ccr must be positive, got {}", self.ccr));
        }
        if self.step_min == 0 || self.step_min > self.step_max {
            return Err(format!(
                "need 0 < step_min <= step_max, got {} and {}",
                self.step_min, self.step_max
            ));
        }
        if self.b1 == 0 || self.b2 == 0 {
            return Err("b1 and b2 must be at least 1".into());
        }
        if !self.phi_b.is_finite() {
            return Err("phi_b must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackVector {
    pub u_ix: f64,
    pub u_iy: f64,
    pub u_iv: f64,
}

impl FeedbackVector {
    pub fn offset_norm(&self) -> f64 {
        self.u_ix.hypot(self.u_iy)
    }
}

/// Raised by [`compute_feedback`] when no neighbour is visible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommunicationLoss;

/// Mean displacement from the agent's delayed position to its visible neighbours.
pub fn compute_feedback(
    neighbors: &[StampedState],
    own: &StampedState,
) -> Result<FeedbackVector, CommunicationLoss> {
    if neighbors.is_empty() {
        return Err(CommunicationLoss);
    }
    let count = neighbors.len() as f64;
    let (sx, sy) = neighbors
        .iter()
        .fold((0.0, 0.0), |(sx, sy), s| (sx + (s.x - own.x), sy + (s.y - own.y)));
    Ok(FeedbackVector {
        u_ix: sx / count,
        u_iy: sy / count,
        u_iv: own.v,
    })
}

pub fn consensus_test(f: &FeedbackVector, ccr: f64) -> bool {
    f.offset_norm() < ccr
}

/// Direction toward the neighbour mean, or `None` for a zero offset.
pub fn desired_heading(f: &FeedbackVector) -> Option<f64> {
    if f.u_ix == 0.0 && f.u_iy == 0.0 {
        None
    } else {
        Some(f.u_iy.atan2(f.u_ix))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    WarmUp,
    Seek,
    HaltLoss,
    Backtrack { steps_left: u32 },
    ReroutePause,
    Reroute { steps_left: u32 },
    HistoryFollow,
    HaltConsensus,
    Done,
}

impl Mode {
    /// Short label used in trajectory logs.
    pub fn label(&self) -> &'static str {
        match self {
            Mode::WarmUp => "WarmUp",
            Mode::Seek => "Seek",
            Mode::HaltLoss => "HaltLoss",
            Mode::Backtrack { .. } => "Backtrack",
            Mode::ReroutePause => "ReroutePause",
            Mode::Reroute { .. } => "Reroute",
            Mode::HistoryFollow => "HistoryFollow",
            Mode::HaltConsensus => "HaltConsensus",
            Mode::Done => "Done",
        }
    }

    /// Modes in which the agent drives forward under its own steering.
    pub fn is_cruising(&self) -> bool {
        matches!(self, Mode::Seek | Mode::Reroute { .. } | Mode::HistoryFollow)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurnDirection {
    Left,
    Right,
}

impl TurnDirection {
    fn sign(self) -> f64 {
        match self {
            TurnDirection::Left => 1.0,
            TurnDirection::Right => -1.0,
        }
    }

    fn flipped(self) -> Self {
        match self {
            TurnDirection::Left => TurnDirection::Right,
            TurnDirection::Right => TurnDirection::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPolicyState {
    pub mode: Mode,
    /// Last estimate of the neighbour mean (history following only).
    pub memory_point: Option<Point>,
    /// Loss intervals that triggered a back-tracking manoeuvre.
    pub backtrack_count: u32,
    /// Direction of the next re-route turn.
    pub turn_parity: TurnDirection,
    /// Heading change still owed by the current re-route.
    pub pending_turn: f64,
    /// Whether the previous step delivered neighbour data.
    pub connected: bool,
    /// Whether the current loss interval already started a manoeuvre.
    pub loss_counted: bool,
    /// Outcome of the most recent consensus test.
    pub last_consensus: bool,
}

impl Default for ControlPolicyState {
    fn default() -> Self {
        Self {
            mode: Mode::WarmUp,
            memory_point: None,
            backtrack_count: 0,
            turn_parity: TurnDirection::Left,
            pending_turn: 0.0,
            connected: true,
            loss_counted: false,
            last_consensus: false,
        }
    }
}

/// What one agent knows at step `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentView {
    pub k: u64,
    /// `None` when no neighbour data arrived this step.
    pub feedback: Option<FeedbackVector>,
    /// Own state as seen through the processing delay.
    pub own: StampedState,
    /// Current heading.
    pub heading: f64,
    /// Current velocity, used for exact stopping.
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlOutput {
    pub u1: f64,
    /// Heading change for this step, within the turn-rate limit.
    pub u2: f64,
    pub halted: bool,
    /// Unclamped heading change toward the current goal; the obstacle filter
    /// uses it to look along the intended direction of travel.
    pub desired_turn: f64,
}

impl ControlOutput {
    fn idle() -> Self {
        Self { u1: 0.0, u2: 0.0, halted: true, desired_turn: 0.0 }
    }

    fn halt(v: f64, limits: &MotionLimits) -> Self {
        Self {
            u1: halt_command(v, limits.d),
            u2: 0.0,
            halted: true,
            desired_turn: 0.0,
        }
    }

    fn drive(turn: f64, u_iv: f64, limits: &MotionLimits) -> Self {
        Self {
            u1: if u_iv < limits.v_max { limits.a } else { 0.0 },
            u2: turn.clamp(-limits.omega_max, limits.omega_max),
            halted: false,
            desired_turn: turn,
        }
    }
}

pub fn policy_step(
    state: &ControlPolicyState,
    view: &AgentView,
    params: &ControlParams,
    limits: &MotionLimits,
) -> (ControlOutput, ControlPolicyState) {
    match params.algorithm {
        Algorithm::Memoryless => policy_step_memoryless(state, view, params, limits),
        Algorithm::Backtracking => policy_step_backtrack(state, view, params, limits),
        Algorithm::History => policy_step_history(state, view, params, limits),
    }
}

pub fn policy_step_memoryless(
    state: &ControlPolicyState,
    view: &AgentView,
    params: &ControlParams,
    limits: &MotionLimits,
) -> (ControlOutput, ControlPolicyState) {
    step_machine(Algorithm::Memoryless, state, view, params, limits)
}

pub fn policy_step_backtrack(
    state: &ControlPolicyState,
    view: &AgentView,
    params: &ControlParams,
    limits: &MotionLimits,
) -> (ControlOutput, ControlPolicyState) {
    step_machine(Algorithm::Backtracking, state, view, params, limits)
}

pub fn policy_step_history(
    state: &ControlPolicyState,
    view: &AgentView,
    params: &ControlParams,
    limits: &MotionLimits,
) -> (ControlOutput, ControlPolicyState) {
    step_machine(Algorithm::History, state, view, params, limits)
}

fn turn_toward(target_heading: f64, heading: f64) -> f64 {
    wrap_angle(target_heading - heading)
}

fn step_machine(
    algorithm: Algorithm,
    state: &ControlPolicyState,
    view: &AgentView,
    params: &ControlParams,
    limits: &MotionLimits,
) -> (ControlOutput, ControlPolicyState) {
    let mut next = *state;
    let feedback = view.feedback;
    let u_iv = view.own.v;

    if let Some(f) = feedback {
        next.last_consensus = consensus_test(&f, params.ccr);
        next.loss_counted = false;
        if algorithm == Algorithm::History {
            next.memory_point = Some(Point::new(view.own.x + f.u_ix, view.own.y + f.u_iy));
        }
    }
    next.connected = feedback.is_some();

    // Each arm either settles on an output or moves to another mode and
    // re-dispatches. Every chain ends within a handful of hops.
    let mut mode = state.mode;
    let output = loop {
        match mode {
            Mode::WarmUp => {
                if view.k <= params.step_min {
                    break ControlOutput::idle();
                }
                mode = Mode::Seek;
            }
            Mode::Seek => match feedback {
                Some(f) if consensus_test(&f, params.ccr) => mode = Mode::HaltConsensus,
                Some(f) => {
                    let turn = desired_heading(&f)
                        .map(|h| turn_toward(h, view.heading))
                        .unwrap_or(0.0);
                    break ControlOutput::drive(turn, u_iv, limits);
                }
                None if algorithm == Algorithm::History && next.memory_point.is_some() => {
                    mode = Mode::HistoryFollow;
                }
                None => mode = Mode::HaltLoss,
            },
            Mode::HaltLoss => {
                if feedback.is_some() {
                    mode = Mode::Seek;
                } else if view.v != 0.0 {
                    break ControlOutput::halt(view.v, limits);
                } else if algorithm == Algorithm::Backtracking {
                    if !next.loss_counted {
                        next.backtrack_count += 1;
                        next.loss_counted = true;
                    }
                    mode = Mode::Backtrack { steps_left: params.b1 };
                } else {
                    break ControlOutput::idle();
                }
            }
            Mode::Backtrack { steps_left } => {
                if steps_left > 0 {
                    mode = Mode::Backtrack { steps_left: steps_left - 1 };
                    break ControlOutput {
                        u1: -limits.a,
                        u2: 0.0,
                        halted: false,
                        desired_turn: 0.0,
                    };
                }
                next.pending_turn = next.turn_parity.sign() * params.phi_b;
                next.turn_parity = next.turn_parity.flipped();
                mode = Mode::ReroutePause;
            }
            Mode::ReroutePause => {
                if view.v != 0.0 {
                    break ControlOutput::halt(view.v, limits);
                }
                if next.pending_turn != 0.0 {
                    let turn = next.pending_turn.clamp(-limits.omega_max, limits.omega_max);
                    next.pending_turn -= turn;
                    if next.pending_turn.abs() < 1e-12 {
                        next.pending_turn = 0.0;
                    }
                    break ControlOutput {
                        u1: 0.0,
                        u2: turn,
                        halted: true,
                        desired_turn: turn,
                    };
                }
                mode = Mode::Reroute { steps_left: params.b2 };
            }
            Mode::Reroute { steps_left } => {
                if steps_left > 0 {
                    mode = Mode::Reroute { steps_left: steps_left - 1 };
                    break ControlOutput::drive(0.0, u_iv, limits);
                }
                mode = Mode::Seek;
            }
            Mode::HistoryFollow => {
                if feedback.is_some() {
                    mode = Mode::Seek;
                    continue;
                }
                let Some(target) = next.memory_point else {
                    mode = Mode::HaltLoss;
                    continue;
                };
                let here = view.own.position();
                if here.distance(target) < params.ccr {
                    break ControlOutput::halt(view.v, limits);
                }
                let heading = (target.y - here.y).atan2(target.x - here.x);
                break ControlOutput::drive(turn_toward(heading, view.heading), u_iv, limits);
            }
            Mode::HaltConsensus => {
                if view.v != 0.0 {
                    break ControlOutput::halt(view.v, limits);
                }
                mode = Mode::Done;
            }
            Mode::Done => match feedback {
                Some(f) if !consensus_test(&f, params.ccr) => mode = Mode::Seek,
                _ if view.v != 0.0 => mode = Mode::HaltConsensus,
                _ => break ControlOutput::idle(),
            },
        }
    };
    next.mode = mode;
    (output, next)
}
