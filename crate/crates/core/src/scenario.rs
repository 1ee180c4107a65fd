use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::comms::{DelayModel, DEFAULT_MAX_LINK_DELAY};
use crate::control::{Algorithm, ControlParams};
use crate::dynamics::MotionLimits;
use crate::geometry::Point;
use crate::topology::AdjacencyMatrix;
use crate::world::Arena;
use crate::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub position: Point,
    /// Initial heading, radians.
    pub heading: f64,
}

impl AgentSpec {
    pub fn at(x: f64, y: f64) -> Self {
        Self { position: Point::new(x, y), heading: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DelaySpec {
    Explicit(DelayModel),
    /// Link delays drawn from `0..=max_link` by the scenario seed.
    Seeded { g_self: u32, max_link: u32 },
}

impl Default for DelaySpec {
    fn default() -> Self {
        DelaySpec::Seeded { g_self: 1, max_link: DEFAULT_MAX_LINK_DELAY }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub arena: Arena,
    pub topology: AdjacencyMatrix,
    pub agents: Vec<AgentSpec>,
    pub limits: MotionLimits,
    pub params: ControlParams,
    pub delays: DelaySpec,
    /// Seconds per simulation step.
    pub step_seconds: f64,
    pub seed: u64,
}

impl Scenario {
    /// Reference setup: 1412 x 773 arena, six agents on the reference
    /// topology, default limits and parameters, no zones.
    pub fn reference(agents: Vec<AgentSpec>) -> Self {
        Self {
            name: "reference".into(),
            arena: Arena::reference(),
            topology: AdjacencyMatrix::reference_a1(),
            agents,
            limits: MotionLimits::default(),
            params: ControlParams { step_max: 500, ..ControlParams::default() },
            delays: DelaySpec::default(),
            step_seconds: 0.1,
            seed: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.params.algorithm = algorithm;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Concrete delays; seeded specs are drawn from the scenario seed.
    pub fn delay_model(&self) -> DelayModel {
        match &self.delays {
            DelaySpec::Explicit(model) => model.clone(),
            DelaySpec::Seeded { g_self, max_link } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                DelayModel::sampled(self.n(), *g_self, *max_link, &mut rng)
            }
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: String| Err(ScenarioError::Invalid(msg));
        if self.agents.is_empty() {
            return invalid("at least one agent is required".into());
        }
        if self.topology.n() != self.n() {
            return invalid(format!(
                "topology is {0} x {0} but there are {1} agents",
                self.topology.n(),
                self.n()
            ));
        }
        if let DelaySpec::Explicit(model) = &self.delays {
            model.validate(self.n()).map_err(ScenarioError::Invalid)?;
        }
        self.arena.validate().map_err(ScenarioError::Invalid)?;
        self.limits.validate().map_err(ScenarioError::Invalid)?;
        self.params.validate().map_err(ScenarioError::Invalid)?;
        if !(self.step_seconds.is_finite() && self.step_seconds > 0.0) {
            return invalid(format!("T_s must be positive, got {}", self.step_seconds));
        }
        for (i, agent) in self.agents.iter().enumerate() {
            let p = agent.position;
            let geometry = |reason: &str| ScenarioError::Geometry {
                agent: i,
                x: p.x,
                y: p.y,
                reason: reason.into(),
            };
            if !(p.x.is_finite() && p.y.is_finite() && agent.heading.is_finite()) {
                return Err(geometry("non-finite pose"));
            }
            if !self.arena.interior().contains_closed(p) {
                return Err(geometry("outside the arena borders"));
            }
            if self.arena.inside_obstacle(p) {
                return Err(geometry("inside an obstacle"));
            }
            if self.arena.clearance(p) <= self.arena.agent_radius {
                return Err(geometry("closer than one agent radius to a wall or obstacle"));
            }
        }
        Ok(())
    }
}
