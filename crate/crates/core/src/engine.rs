//! The per-step simulation loop and run metrics.

use serde::{Deserialize, Serialize};

use crate::comms::{self, DelayedStateBuffer, StampedState};
use crate::control::{compute_feedback, policy_step, AgentView, ControlPolicyState, Mode};
use crate::dynamics::{halt_command, integrate_step, AgentKinematicState};
use crate::geometry::Point;
use crate::scenario::Scenario;
use crate::topology::{effective_topology, is_strongly_connected};
use crate::world::{Arena, avoid_heading, cast_ray, escape_turn, raycast_scan, HeadingDecision, Pose};
use crate::ScenarioError;

/// Gap kept behind an agent that is backing up, on top of its radius.
const REAR_MARGIN: f64 = 3.0;
const ESCAPE_TURN_DEG: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    LossStart,
    LossEnd,
    BacktrackStart,
    AvoidHalt,
    RearStop,
    Done,
}

impl Event {
    pub fn label(self) -> &'static str {
        match self {
            Event::LossStart => "loss_start",
            Event::LossEnd => "loss_end",
            Event::BacktrackStart => "backtrack_start",
            Event::AvoidHalt => "avoid_halt",
            Event::RearStop => "rear_stop",
            Event::Done => "done",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [
            Event::LossStart,
            Event::LossEnd,
            Event::BacktrackStart,
            Event::AvoidHalt,
            Event::RearStop,
            Event::Done,
        ]
        .into_iter()
        .find(|e| e.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStepRecord {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub v: f64,
    pub mode: Mode,
    pub events: Vec<Event>,
}

/// Snapshot of every agent at the start of a step together with the mode
/// chosen during that step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub agents: Vec<AgentStepRecord>,
    /// Row-major bitstring of the effective topology.
    pub topology: String,
    pub strongly_connected: bool,
}

/// Half-open loss interval `[start, end)`; `end` is `None` if still lost at termination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossInterval {
    pub start: u64,
    pub end: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub backtrack_count: u32,
    pub loss_intervals: Vec<LossInterval>,
    pub final_state: AgentKinematicState,
    pub final_mode: Mode,
    pub final_consensus_test: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub step: u64,
    pub agent: usize,
    pub x: f64,
    pub y: f64,
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: String,
    pub algorithm: crate::control::Algorithm,
    pub seed: u64,
    pub converged: bool,
    pub consensus_step: Option<u64>,
    pub consensus_time_s: Option<f64>,
    pub steps_executed: u64,
    pub step_seconds: f64,
    pub agents: Vec<AgentSummary>,
    pub final_consensus_point: Point,
    /// Smallest distance between an agent body and a wall or obstacle.
    pub min_clearance: f64,
    /// Smallest centre-to-centre distance between two agents.
    pub min_separation: f64,
    pub strongly_connected_steps: u64,
    pub collision: Option<CollisionReport>,
    pub records: Vec<StepRecord>,
}

impl RunResult {
    pub fn max_backtrack_count(&self) -> u32 {
        self.agents.iter().map(|a| a.backtrack_count).max().unwrap_or(0)
    }

    pub fn final_positions(&self) -> Vec<Point> {
        self.agents.iter().map(|a| a.final_state.position()).collect()
    }
}

/// True when every agent has finished its halt inside its consensus circle.
pub fn detect_global_consensus(states: &[AgentKinematicState], policies: &[ControlPolicyState]) -> bool {
    !policies.is_empty()
        && states
            .iter()
            .zip(policies)
            .all(|(s, p)| p.mode == Mode::Done && s.v == 0.0 && p.last_consensus)
}

fn stamp(i: usize, k: u64, s: &AgentKinematicState) -> StampedState {
    StampedState { agent_id: i, x: s.x, y: s.y, v: s.v, step: k }
}

/// Smallest range over the rear sector of an agent.
fn rear_range(position: Point, heading: f64, body_space: &Arena, others: &[Point]) -> f64 {
    (-30..=30)
        .step_by(5)
        .map(|b: i32| {
            let angle = heading + std::f64::consts::PI + (b as f64).to_radians();
            cast_ray(position, angle, body_space, others)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn run(scenario: &Scenario) -> Result<RunResult, ScenarioError> {
    scenario.validate()?;
    let n = scenario.n();
    let arena = &scenario.arena;
    let params = &scenario.params;
    let limits = &scenario.limits;
    let delays = scenario.delay_model();
    let body_space = arena.body_space();

    let mut states: Vec<AgentKinematicState> = scenario
        .agents
        .iter()
        .map(|a| AgentKinematicState::at_rest(a.position, a.heading))
        .collect();
    let mut buffers = vec![DelayedStateBuffer::for_delays(&delays); n];
    let mut policies = vec![ControlPolicyState::default(); n];
    let mut open_loss: Vec<Option<u64>> = vec![None; n];
    let mut intervals: Vec<Vec<LossInterval>> = vec![Vec::new(); n];

    let mut records = Vec::new();
    let mut min_clearance = f64::INFINITY;
    let mut min_separation = f64::INFINITY;
    let mut strongly_connected_steps = 0;
    let mut consensus_step = None;
    let mut collision = None;
    let mut steps_executed = 0;

    let mut track_geometry = |states: &[AgentKinematicState]| {
        for (i, s) in states.iter().enumerate() {
            min_clearance = min_clearance.min(arena.clearance(s.position()) - arena.agent_radius);
            for t in &states[i + 1..] {
                min_separation = min_separation.min(s.position().distance(t.position()));
            }
        }
    };
    track_geometry(&states);

    for k in 0..params.step_max {
        steps_executed = k + 1;
        for (i, s) in states.iter().enumerate() {
            buffers[i]
                .record(stamp(i, k, s))
                .expect("engine records consecutive steps");
        }
        let positions: Vec<Point> = states.iter().map(AgentKinematicState::position).collect();
        let effective = effective_topology(&scenario.topology, &positions, &arena.zones);
        let connected = is_strongly_connected(&effective);
        strongly_connected_steps += connected as u64;

        let mut commands = Vec::with_capacity(n);
        let mut agent_records = Vec::with_capacity(n);
        for i in 0..n {
            let neighbors = comms::visible_neighbor_states(i, k, &effective, &buffers, &delays);
            let own = comms::self_state(i, k, &buffers, &delays);
            let feedback = compute_feedback(&neighbors, &own).ok();
            let state = &states[i];
            let view = AgentView { k, feedback, own, heading: state.phi, v: state.v };
            let before = policies[i];
            let (mut out, next) = policy_step(&before, &view, params, limits);
            let mut events = Vec::new();

            match (feedback.is_some(), open_loss[i]) {
                (false, None) => {
                    open_loss[i] = Some(k);
                    events.push(Event::LossStart);
                }
                (true, Some(start)) => {
                    intervals[i].push(LossInterval { start, end: Some(k) });
                    open_loss[i] = None;
                    events.push(Event::LossEnd);
                }
                _ => {}
            }
            if matches!(next.mode, Mode::Backtrack { .. }) && !matches!(before.mode, Mode::Backtrack { .. }) {
                events.push(Event::BacktrackStart);
            }
            if next.mode == Mode::Done && before.mode != Mode::Done {
                events.push(Event::Done);
            }

            if next.mode.is_cruising() && !out.halted {
                let others: Vec<Point> = positions
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &p)| p)
                    .collect();
                let scan = raycast_scan(Pose { position: state.position(), heading: state.phi }, &body_space, &others);
                match avoid_heading(&scan, out.desired_turn) {
                    HeadingDecision::Keep => {}
                    HeadingDecision::Turn(turn) => out.u2 = turn,
                    HeadingDecision::Halt => {
                        out.u1 = halt_command(state.v, limits.d);
                        out.u2 = if state.v == 0.0 { escape_turn(&scan, ESCAPE_TURN_DEG) } else { 0.0 };
                        out.halted = true;
                        events.push(Event::AvoidHalt);
                    }
                }
            }

            let next_v = (state.v + out.u1).clamp(-limits.v_min, limits.v_max);
            if next_v < 0.0 {
                let others: Vec<Point> = positions
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &p)| p)
                    .collect();
                let rear = rear_range(state.position(), state.phi, &body_space, &others);
                if rear - next_v.abs() <= REAR_MARGIN {
                    out.u1 = halt_command(state.v, limits.d);
                    events.push(Event::RearStop);
                }
            }

            policies[i] = next;
            commands.push(out);
            agent_records.push(AgentStepRecord {
                x: state.x,
                y: state.y,
                phi: state.phi,
                v: state.v,
                mode: next.mode,
                events,
            });
        }
        records.push(StepRecord {
            step: k,
            agents: agent_records,
            topology: effective.fingerprint(),
            strongly_connected: connected,
        });

        if detect_global_consensus(&states, &policies) {
            consensus_step = Some(k);
            break;
        }

        for (state, out) in states.iter_mut().zip(&commands) {
            *state = integrate_step(state, out.u1, out.u2, limits);
        }
        track_geometry(&states);
        if let Some((agent, s)) = states
            .iter()
            .enumerate()
            .find(|(_, s)| arena.clearance(s.position()) < arena.agent_radius)
        {
            collision = Some(CollisionReport {
                step: k + 1,
                agent,
                x: s.x,
                y: s.y,
                clearance: arena.clearance(s.position()) - arena.agent_radius,
            });
            break;
        }
    }

    for (i, open) in open_loss.iter().enumerate() {
        if let Some(start) = open {
            intervals[i].push(LossInterval { start: *start, end: None });
        }
    }
    let agents: Vec<AgentSummary> = (0..n)
        .map(|i| AgentSummary {
            backtrack_count: policies[i].backtrack_count,
            loss_intervals: std::mem::take(&mut intervals[i]),
            final_state: states[i],
            final_mode: policies[i].mode,
            final_consensus_test: policies[i].last_consensus,
        })
        .collect();
    let final_consensus_point = Point::new(
        states.iter().map(|s| s.x).sum::<f64>() / n as f64,
        states.iter().map(|s| s.y).sum::<f64>() / n as f64,
    );
    let converged = consensus_step.is_some();
    Ok(RunResult {
        scenario: scenario.name.clone(),
        algorithm: params.algorithm,
        seed: scenario.seed,
        converged,
        consensus_step,
        consensus_time_s: consensus_step.map(|k| k as f64 * scenario.step_seconds),
        steps_executed,
        step_seconds: scenario.step_seconds,
        agents,
        final_consensus_point,
        min_clearance,
        min_separation,
        strongly_connected_steps,
        collision,
        records,
    })
}
