//! Randomized scenarios for property suites and seeded experiment variants.
//!
//! Agent placement, zones and obstacles are drawn from separate streams of
//! one seed, so raising `loss_pct` only appends zones to the set produced
//! for a smaller percentage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::ControlParams;
use crate::geometry::{Point, Rect};
use crate::scenario::{AgentSpec, Scenario};
use crate::topology::{AdjacencyMatrix, NoCommZone};
use crate::world::Arena;
use crate::ScenarioError;

const PLACEMENT_STREAM: u64 = 1;
const ZONE_STREAM: u64 = 2;
const OBSTACLE_STREAM: u64 = 3;
const TOPOLOGY_STREAM: u64 = 4;
const MAX_ATTEMPTS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub agents: usize,
    /// Zone coverage as a percentage of the arena area.
    pub loss_pct: f64,
    pub seed: u64,
    pub obstacles: usize,
    pub zone_side: f64,
    /// Zones keep this distance from the centroid of the initial positions.
    pub centroid_clearance: f64,
    /// Distance kept between agents and the borders at placement.
    pub wall_margin: f64,
    pub min_agent_spacing: f64,
}

impl GeneratorConfig {
    pub fn new(agents: usize, loss_pct: f64, seed: u64) -> Self {
        Self {
            agents,
            loss_pct,
            seed,
            obstacles: 0,
            zone_side: 30.0,
            centroid_clearance: 150.0,
            wall_margin: 40.0,
            min_agent_spacing: 40.0,
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn centroid(points: &[Point]) -> Point {
    let n = points.len() as f64;
    Point::new(
        points.iter().map(|p| p.x).sum::<f64>() / n,
        points.iter().map(|p| p.y).sum::<f64>() / n,
    )
}

fn place_agents(config: &GeneratorConfig, arena: &Arena) -> Result<Vec<Point>, ScenarioError> {
    let mut rng = stream(config.seed, PLACEMENT_STREAM);
    let m = config.wall_margin;
    let mut points: Vec<Point> = Vec::with_capacity(config.agents);
    for _ in 0..MAX_ATTEMPTS {
        if points.len() == config.agents {
            break;
        }
        let p = Point::new(
            rng.gen_range(arena.west + m..arena.east - m),
            rng.gen_range(arena.south + m..arena.north - m),
        );
        if points.iter().all(|q| q.distance(p) >= config.min_agent_spacing) {
            points.push(p);
        }
    }
    if points.len() < config.agents {
        return Err(ScenarioError::Invalid(format!(
            "cannot place {} agents {} px apart",
            config.agents, config.min_agent_spacing
        )));
    }
    Ok(points)
}

fn random_rect(rng: &mut ChaCha8Rng, interior: &Rect, w: f64, h: f64, inset: f64) -> Rect {
    Rect::new(
        rng.gen_range(interior.x + inset..interior.max_x() - inset - w),
        rng.gen_range(interior.y + inset..interior.max_y() - inset - h),
        w,
        h,
    )
}

fn place_obstacles(config: &GeneratorConfig, arena: &Arena, agents: &[Point]) -> Vec<Rect> {
    let mut rng = stream(config.seed, OBSTACLE_STREAM);
    let interior = arena.interior();
    let center = centroid(agents);
    let mut obstacles: Vec<Rect> = Vec::new();
    for _ in 0..MAX_ATTEMPTS {
        if obstacles.len() == config.obstacles {
            break;
        }
        let w = rng.gen_range(30.0..120.0);
        let h = rng.gen_range(30.0..120.0);
        let r = random_rect(&mut rng, &interior, w, h, 60.0);
        let ok = agents.iter().all(|&p| r.distance_to(p) > 50.0)
            && r.distance_to(center) > config.centroid_clearance
            && obstacles.iter().all(|o| !o.intersects_with_margin(&r, 60.0));
        if ok {
            obstacles.push(r);
        }
    }
    obstacles
}

/// Scatters squares of side `zone_side` until they cover `loss_pct` percent
/// of the arena; the last square is cut short so the coverage is exact.
/// Zones stay clear of the agents, the obstacles, each other and the
/// neighbourhood of the agents' centroid.
pub fn scatter_zones(
    arena: &Arena,
    agents: &[Point],
    loss_pct: f64,
    zone_side: f64,
    centroid_clearance: f64,
    seed: u64,
) -> Result<Vec<NoCommZone>, ScenarioError> {
    let mut remaining = loss_pct / 100.0 * arena.area();
    let mut rng = stream(seed, ZONE_STREAM);
    let interior = arena.interior();
    let center = centroid(agents);
    let mut zones: Vec<Rect> = Vec::new();
    let mut attempts = 0;
    while remaining > 1e-9 {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(ScenarioError::Invalid(format!("cannot fit {loss_pct}% of no-comm zones")));
        }
        let full = random_rect(&mut rng, &interior, zone_side, zone_side, 20.0);
        let ok = full.distance_to(center) > centroid_clearance
            && agents.iter().all(|&p| full.distance_to(p) > 20.0)
            && arena.obstacles.iter().all(|o| !o.intersects_with_margin(&full, 25.0))
            && zones.iter().all(|z| !z.intersects_with_margin(&full, 25.0));
        if !ok {
            continue;
        }
        let rect = if full.area() <= remaining {
            full
        } else {
            Rect::new(full.x, full.y, full.width, remaining / full.width)
        };
        remaining -= rect.area();
        zones.push(rect);
    }
    Ok(zones.into_iter().map(NoCommZone::new).collect())
}

/// Bidirectional ring plus a few random chords.
fn ring_with_chords(n: usize, seed: u64) -> AdjacencyMatrix {
    let mut a = AdjacencyMatrix::empty(n);
    if n < 2 {
        return a;
    }
    for i in 0..n {
        let j = (i + 1) % n;
        a.set(i, j, true);
        a.set(j, i, true);
    }
    let mut rng = stream(seed, TOPOLOGY_STREAM);
    for _ in 0..n / 2 {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        a.set(i, j, true);
    }
    a
}

/// Builds a valid scenario on the reference arena.
pub fn generate_scenario(config: &GeneratorConfig) -> Result<Scenario, ScenarioError> {
    if config.agents == 0 {
        return Err(ScenarioError::Invalid("need at least one agent".into()));
    }
    if !(0.0..=30.0).contains(&config.loss_pct) {
        return Err(ScenarioError::Invalid(format!(
            "loss percentage must be within 0..=30, got {}",
            config.loss_pct
        )));
    }
    let mut arena = Arena::reference();
    let positions = place_agents(config, &arena)?;
    arena.obstacles = place_obstacles(config, &arena, &positions);
    arena.zones = scatter_zones(
        &arena,
        &positions,
        config.loss_pct,
        config.zone_side,
        config.centroid_clearance,
        config.seed,
    )?;
    let topology = if config.agents == 6 {
        AdjacencyMatrix::reference_a1()
    } else {
        ring_with_chords(config.agents, config.seed)
    };
    let step_max = if arena.zones.is_empty() { 500 } else { 800 };
    let scenario = Scenario {
        name: format!("gen-n{}-p{}-s{}", config.agents, config.loss_pct, config.seed),
        arena,
        topology,
        params: ControlParams { step_max, ..ControlParams::default() },
        ..Scenario::reference(positions.into_iter().map(|p| AgentSpec::at(p.x, p.y)).collect())
    }
    .with_seed(config.seed);
    scenario.validate()?;
    Ok(scenario)
}
