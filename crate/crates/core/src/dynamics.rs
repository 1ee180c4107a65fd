//! Discrete-time unicycle kinematics with saturated speed and turn rate.
//!
//! One call to [`integrate_step`] advances an agent by one simulation step in
//! a fixed order: velocity, then heading, then position along the new heading.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentKinematicState {
    pub x: f64,
    pub y: f64,
    /// Heading in radians, kept in `(-pi, pi]`.
    pub phi: f64,
    /// Signed linear velocity, pixels per step.
    pub v: f64,
    /// Heading change applied on the last step, radians per step.
    pub omega: f64,
}

impl AgentKinematicState {
    pub fn at_rest(position: Point, phi: f64) -> Self {
        Self {
            x: position.x,
            y: position.y,
            phi: wrap_angle(phi),
            v: 0.0,
            omega: 0.0,
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Actuator limits, all per simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    pub a: f64,
    pub d: f64,
    pub v_max: f64,
    /// Magnitude of the largest reverse speed.
    pub v_min: f64,
    pub omega_max: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            a: 0.1,
            d: 0.5,
            v_max: 2.0,
            v_min: 2.0,
            omega_max: 30f64.to_radians(),
        }
    }
}

impl MotionLimits {
    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in [
            ("a", self.a),
            ("d", self.d),
            ("v_max", self.v_max),
            ("v_min", self.v_min),
            ("omega_max", self.omega_max),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if self.v_min > self.v_max {
            return Err(format!(
                "reverse speed bound {} exceeds forward bound {}",
                self.v_min, self.v_max
            ));
        }
        Ok(())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid can return exactly 2*pi for tiny negative inputs
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

pub fn integrate_step(
    state: &AgentKinematicState,
    u1: f64,
    u2: f64,
    limits: &MotionLimits,
) -> AgentKinematicState {
    let v = (state.v + u1).clamp(-limits.v_min, limits.v_max);
    let turn = u2.clamp(-limits.omega_max, limits.omega_max);
    let phi = wrap_angle(state.phi + turn);
    AgentKinematicState {
        x: state.x + v * phi.cos(),
        y: state.y + v * phi.sin(),
        phi,
        v,
        omega: turn,
    }
}

/// Acceleration that drives `v` toward zero at rate `d` without overshooting.
pub fn halt_command(v: f64, d: f64) -> f64 {
    if v > 0.0 {
        -d.min(v)
    } else if v < 0.0 {
        d.min(-v)
    } else {
        0.0
    }
}
