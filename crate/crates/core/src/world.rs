//! Arena geometry, the simulated 180 degree laser scanner, and the
//! sector-rule obstacle avoidance filter.

use serde::{Deserialize, Serialize};

use crate::geometry::{ray_circle, ray_exit_rect, ray_rect, Point, Rect};
use crate::topology::NoCommZone;

/// Beams per scan: one per degree over [-90, +90].
pub const SCAN_BEAMS: usize = 181;
pub const DEFAULT_SENSOR_RANGE: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
    /// Border lines as coordinates; the free interior is
    /// `[west, east] x [south, north]`.
    pub west: f64,
    pub south: f64,
    pub east: f64,
    pub north: f64,
    pub obstacles: Vec<Rect>,
    pub zones: Vec<NoCommZone>,
    pub agent_radius: f64,
    pub sensor_range: f64,
}

impl Arena {
    /// The 1412 x 773 reference arena with its borders and no obstacles.
    pub fn reference() -> Self {
        Self {
            width: 1412.0,
            height: 773.0,
            west: 26.0,
            south: 35.0,
            east: 1384.0,
            north: 747.0,
            obstacles: Vec::new(),
            zones: Vec::new(),
            agent_radius: 5.0,
            sensor_range: DEFAULT_SENSOR_RANGE,
        }
    }

    pub fn interior(&self) -> Rect {
        Rect::new(self.west, self.south, self.east - self.west, self.north - self.south)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Fraction of the arena area covered by no-comm zones (zones assumed disjoint).
    pub fn zone_fraction(&self) -> f64 {
        self.zones.iter().map(|z| z.rect.area()).sum::<f64>() / self.area()
    }

    /// Distance from `p` to the nearest border or obstacle surface.
    pub fn clearance(&self, p: Point) -> f64 {
        let interior = self.interior();
        if !interior.contains_closed(p) {
            return -interior.distance_to(p);
        }
        let border = (p.x - self.west)
            .min(self.east - p.x)
            .min(p.y - self.south)
            .min(self.north - p.y);
        self.obstacles
            .iter()
            .map(|o| if o.contains_open(p) { 0.0 } else { o.distance_to(p) })
            .fold(border, f64::min)
    }

    /// Configuration space of an agent body: borders pulled in and obstacles
    /// grown by the agent radius, other agents widened to twice the radius.
    /// Ranges scanned in it are gaps between bodies rather than centre distances.
    pub fn body_space(&self) -> Arena {
        let r = self.agent_radius;
        Arena {
            west: self.west + r,
            south: self.south + r,
            east: self.east - r,
            north: self.north - r,
            obstacles: self.obstacles.iter().map(|o| o.inflated(r)).collect(),
            zones: Vec::new(),
            agent_radius: 1.5 * r,
            ..self.clone()
        }
    }

    pub fn inside_obstacle(&self, p: Point) -> bool {
        self.obstacles.iter().any(|o| o.contains_closed(p))
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err("arena size must be positive".into());
        }
        if !(0.0 <= self.west && self.west < self.east && self.east <= self.width) {
            return Err("need 0 <= west < east <= width".into());
        }
        if !(0.0 <= self.south && self.south < self.north && self.north <= self.height) {
            return Err("need 0 <= south < north <= height".into());
        }
        if self.agent_radius.is_nan() || self.agent_radius <= 0.0 {
            return Err("agent_radius must be positive".into());
        }
        if self.sensor_range.is_nan() || self.sensor_range <= 0.0 {
            return Err("sensor_range must be positive".into());
        }
        let interior = self.interior();
        let inside = |r: &Rect| {
            r.width > 0.0
                && r.height > 0.0
                && r.x >= interior.x
                && r.y >= interior.y
                && r.max_x() <= interior.max_x()
                && r.max_y() <= interior.max_y()
        };
        if let Some(i) = self.obstacles.iter().position(|r| !inside(r)) {
            return Err(format!("obstacle {i} is empty or outside the borders"));
        }
        if let Some(i) = self.zones.iter().position(|z| !inside(&z.rect)) {
            return Err(format!("zone {i} is empty or outside the borders"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Point,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaserScan {
    /// Index `b + 90` holds the range at bearing `b` degrees (positive = left).
    pub ranges: Vec<f64>,
    pub max_range: f64,
    /// Set when the scanner origin sits inside an obstacle or outside the borders.
    pub collision: bool,
}

impl LaserScan {
    pub fn open(max_range: f64) -> Self {
        Self {
            ranges: vec![max_range; SCAN_BEAMS],
            max_range,
            collision: false,
        }
    }

    pub fn at(&self, bearing_deg: i32) -> f64 {
        self.ranges[(bearing_deg + 90) as usize]
    }

    pub fn set(&mut self, bearing_deg: i32, range: f64) {
        self.ranges[(bearing_deg + 90) as usize] = range;
    }

    fn bearings(&self, lo: i32, hi: i32) -> impl Iterator<Item = (i32, f64)> + '_ {
        (lo..=hi).map(move |b| (b, self.at(b)))
    }
}

/// Distance along one ray to the first border, obstacle or agent disc.
pub fn cast_ray(origin: Point, angle: f64, arena: &Arena, others: &[Point]) -> f64 {
    let dir = (angle.cos(), angle.sin());
    let mut range = arena.sensor_range.min(ray_exit_rect(origin, dir, &arena.interior()));
    for obstacle in &arena.obstacles {
        if let Some(t) = ray_rect(origin, dir, obstacle) {
            range = range.min(t);
        }
    }
    for &other in others {
        if let Some(t) = ray_circle(origin, dir, other, arena.agent_radius) {
            range = range.min(t);
        }
    }
    range
}

/// Front half-plane scan. `others` are the centres of the other agents,
/// rendered as discs of the agent radius.
pub fn raycast_scan(pose: Pose, arena: &Arena, others: &[Point]) -> LaserScan {
    let p = pose.position;
    if !arena.interior().contains_closed(p) || arena.obstacles.iter().any(|o| o.contains_open(p)) {
        return LaserScan {
            ranges: vec![0.0; SCAN_BEAMS],
            max_range: arena.sensor_range,
            collision: true,
        };
    }
    let ranges = (-90..=90)
        .map(|b: i32| cast_ray(p, pose.heading + (b as f64).to_radians(), arena, others))
        .collect();
    LaserScan {
        ranges,
        max_range: arena.sensor_range,
        collision: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadingDecision {
    Keep,
    /// Heading change in radians, positive to the left.
    Turn(f64),
    Halt,
}

/// Thresholds of the sector rules, in pixels and degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvoidanceRules {
    pub halt_range: f64,
    pub side_range: f64,
    pub frontal_range: f64,
    /// Lateral clearance defining the oblique corridor `clearance / sin(theta)`.
    pub lateral_clearance: f64,
    pub max_turn_deg: f64,
    pub min_turn_deg: f64,
}

impl Default for AvoidanceRules {
    fn default() -> Self {
        Self {
            halt_range: 5.0,
            side_range: 8.0,
            frontal_range: 150.0,
            lateral_clearance: 5.0,
            max_turn_deg: 30.0,
            min_turn_deg: 1.0,
        }
    }
}

/// Applies the sector rules with default thresholds.
pub fn avoid_heading(scan: &LaserScan, desired_turn: f64) -> HeadingDecision {
    avoid_heading_with(&AvoidanceRules::default(), scan, desired_turn)
}

/// Rules in priority order: halt, side turn, frontal re-aim, oblique corridor.
pub fn avoid_heading_with(rules: &AvoidanceRules, scan: &LaserScan, desired_turn: f64) -> HeadingDecision {
    if scan.ranges.iter().any(|&r| r <= rules.halt_range) {
        return HeadingDecision::Halt;
    }

    let left_side = side_min(scan.bearings(61, 90));
    let right_side = side_min(scan.bearings(-90, -61));
    match (left_side <= rules.side_range, right_side <= rules.side_range) {
        (true, false) => return HeadingDecision::Turn(-rules.max_turn_deg.to_radians()),
        (false, true) => return HeadingDecision::Turn(rules.max_turn_deg.to_radians()),
        (true, true) => {
            return if left_side < right_side {
                HeadingDecision::Turn(-rules.max_turn_deg.to_radians())
            } else if right_side < left_side {
                HeadingDecision::Turn(rules.max_turn_deg.to_radians())
            } else {
                HeadingDecision::Turn(0.0)
            };
        }
        (false, false) => {}
    }

    let aim = (desired_turn.to_degrees().round() as i32).clamp(-88, 88);
    if scan.bearings(aim - 2, aim + 2).any(|(_, r)| r <= rules.frontal_range) {
        let best = (-88..=88)
            .filter(|&c| scan.bearings(c - 2, c + 2).all(|(_, r)| r > rules.frontal_range))
            .min_by_key(|&c| ((c - aim).abs(), c.abs(), c < 0));
        return match best {
            Some(c) => HeadingDecision::Turn(
                (c as f64).clamp(-rules.max_turn_deg, rules.max_turn_deg).to_radians(),
            ),
            None => HeadingDecision::Halt,
        };
    }

    // Oblique corridor: a return at bearing theta closer than
    // clearance / sin(theta) lies inside the swept path.
    let mut nearest: Option<(f64, i32)> = None;
    let mut needed = [0.0f64; 2];
    for (b, r) in scan.bearings(-60, -3).chain(scan.bearings(3, 60)) {
        let theta = (b.abs() as f64).to_radians();
        if r <= rules.lateral_clearance / theta.sin() {
            let escape = (rules.lateral_clearance / r).min(1.0).asin().to_degrees() - b.abs() as f64;
            let side = usize::from(b > 0);
            needed[side] = needed[side].max(escape);
            if nearest.is_none_or(|(nr, _)| r < nr) {
                nearest = Some((r, b));
            }
        }
    }
    if let Some((_, b)) = nearest {
        let side = usize::from(b > 0);
        let magnitude = needed[side].clamp(rules.min_turn_deg, rules.max_turn_deg);
        // obstacle on the left (b > 0) means turning right
        let sign = if b > 0 { -1.0 } else { 1.0 };
        return HeadingDecision::Turn((sign * magnitude).to_radians());
    }

    HeadingDecision::Keep
}

/// In-place turn for a stopped agent that is blocked: rotate away from the
/// closest return, so it leaves the forward half-plane.
pub fn escape_turn(scan: &LaserScan, max_turn_deg: f64) -> f64 {
    let nearest = scan
        .bearings(-90, 90)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.abs().cmp(&b.0.abs())).then(b.0.cmp(&a.0)))
        .map_or(0, |(b, _)| b);
    let sign = if nearest > 0 { -1.0 } else { 1.0 };
    (sign * max_turn_deg).to_radians()
}

fn side_min(beams: impl Iterator<Item = (i32, f64)>) -> f64 {
    beams.map(|(_, r)| r).fold(f64::INFINITY, f64::min)
}
