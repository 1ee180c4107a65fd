//! Delayed state sharing between agents.
//!
//! Every agent publishes one [`StampedState`] per step. A receiver `i` sees
//! sender `j` as it was `g_link[j][i]` steps ago and sees itself `g_self`
//! steps ago. Before enough history exists the oldest sample is returned.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::topology::AdjacencyMatrix;
use crate::CommsError;

/// Largest link delay in steps drawn for seeded delay models.
pub const DEFAULT_MAX_LINK_DELAY: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StampedState {
    pub agent_id: usize,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub step: u64,
}

impl StampedState {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayModel {
    /// Processing delay of every agent on its own state, in steps.
    pub g_self: u32,
    /// Link delays in steps, indexed `[sender][receiver]`.
    pub g_link: Vec<Vec<u32>>,
}

impl DelayModel {
    pub fn zero(n: usize) -> Self {
        Self {
            g_self: 0,
            g_link: vec![vec![0; n]; n],
        }
    }

    /// Link delays drawn uniformly from `0..=max_link`; diagonal left at zero.
    pub fn sampled<R: Rng>(n: usize, g_self: u32, max_link: u32, rng: &mut R) -> Self {
        let g_link = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| if i == j { 0 } else { rng.gen_range(0..=max_link) })
                    .collect()
            })
            .collect();
        Self { g_self, g_link }
    }

    pub fn link(&self, sender: usize, receiver: usize) -> u32 {
        self.g_link[sender][receiver]
    }

    pub fn max_delay(&self) -> u32 {
        self.g_link
            .iter()
            .flatten()
            .copied()
            .chain(std::iter::once(self.g_self))
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self, n: usize) -> Result<(), String> {
        if self.g_link.len() != n || self.g_link.iter().any(|r| r.len() != n) {
            return Err(format!("link delay matrix must be {n} x {n}"));
        }
        Ok(())
    }
}

/// Ring buffer of one agent's recent samples.
#[derive(Debug, Clone)]
pub struct DelayedStateBuffer {
    capacity: usize,
    samples: VecDeque<StampedState>,
}

impl DelayedStateBuffer {
    /// Capacity is raised to at least one sample.
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            capacity,
            samples: VecDeque::with_capacity(capacity),
        }
    }

    /// Buffer able to serve every delay of `delays`.
    pub fn for_delays(delays: &DelayModel) -> Self {
        Self::new(delays.max_delay() as usize + 1)
    }

    pub fn latest_step(&self) -> Option<u64> {
        self.samples.back().map(|s| s.step)
    }

    pub fn record(&mut self, state: StampedState) -> Result<(), CommsError> {
        if let Some(last) = self.latest_step() {
            if state.step != last + 1 {
                return Err(CommsError::OutOfOrder {
                    agent: state.agent_id,
                    expected: last + 1,
                    got: state.step,
                });
            }
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(state);
        Ok(())
    }

    /// Sample from step `k - delay`, clamped to the oldest sample held.
    ///
    /// Panics when the buffer is empty.
    pub fn lookup(&self, k: u64, delay: u32) -> StampedState {
        let oldest = self.samples.front().expect("lookup on empty buffer");
        let wanted = k.saturating_sub(delay as u64);
        if wanted <= oldest.step {
            return *oldest;
        }
        let idx = ((wanted - oldest.step) as usize).min(self.samples.len() - 1);
        self.samples[idx]
    }
}

/// Delayed samples of every in-neighbour of `i` in the effective topology.
pub fn visible_neighbor_states(
    i: usize,
    k: u64,
    effective: &AdjacencyMatrix,
    buffers: &[DelayedStateBuffer],
    delays: &DelayModel,
) -> Vec<StampedState> {
    effective
        .in_neighbors(i)
        .map(|j| buffers[j].lookup(k, delays.link(j, i)))
        .collect()
}

pub fn self_state(i: usize, k: u64, buffers: &[DelayedStateBuffer], delays: &DelayModel) -> StampedState {
    buffers[i].lookup(k, delays.g_self)
}
