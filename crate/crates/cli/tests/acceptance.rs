//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use consim_core::comms::{self_state, visible_neighbor_states};
use consim_core::control::compute_feedback;
use consim_core::engine::Event;
use consim_core::generate::{generate_scenario, GeneratorConfig};
use consim_core::report::{Summary, SUMMARY_FILE, TRAJECTORY_FILE};
use consim_core::topology::{is_strongly_connected, laplacian};
use consim_core::{
    load_scenario, run, AdjacencyMatrix, Algorithm, DelayModel, DelayedStateBuffer, Mode, Point, RunResult, Scenario,
    StampedState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: std::ops::RangeInclusive<u64> = 1..=20;

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn bundled(name: &str) -> Scenario {
    load_scenario(scenarios_dir().join(name)).expect("bundled scenario loads")
}

fn generated(pct: f64, seed: u64) -> Scenario {
    generate_scenario(&GeneratorConfig::new(6, pct, seed)).expect("generator succeeds")
}

/// Runs every scenario on its own thread, keeping input order.
fn run_all(scenarios: Vec<Scenario>) -> Vec<RunResult> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios.iter().map(|s| scope.spawn(move || run(s).expect("run succeeds"))).collect();
        handles.into_iter().map(|h| h.join().expect("run thread")).collect()
    })
}

/// Clearance record of one acceptance run.
struct Safety {
    label: String,
    min_clearance: f64,
    collided: bool,
    halts: usize,
}

impl Safety {
    fn of(label: impl Into<String>, r: &RunResult) -> Self {
        let halts = r
            .records
            .iter()
            .flat_map(|rec| rec.agents.iter())
            .filter(|a| a.events.iter().any(|e| matches!(e, Event::AvoidHalt | Event::RearStop)))
            .count();
        Self { label: label.into(), min_clearance: r.min_clearance, collided: r.collision.is_some(), halts }
    }
}

struct Outcome {
    id: u8,
    pass: bool,
    detail: String,
}

fn outcome(id: u8, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, detail }
}

fn criterion_1(safety: &mut Vec<Safety>) -> Outcome {
    let results = run_all(SEEDS.map(|s| generated(0.0, s)).collect());
    let mut ok = 0;
    let mut worst = 0;
    for (seed, r) in SEEDS.zip(&results) {
        safety.push(Safety::of(format!("baseline seed {seed}"), r));
        if let Some(k) = r.consensus_step.filter(|_| r.converged) {
            worst = worst.max(k);
            if k <= 500 {
                ok += 1;
            }
        }
    }
    outcome(1, ok == 20, format!("baseline converged within 500 steps on {ok}/20 placements (slowest step {worst})"))
}

fn criterion_2(safety: &mut Vec<Safety>) -> Outcome {
    let r = run(&bundled("fig4.scenario").with_algorithm(Algorithm::Memoryless)).expect("fig4 runs");
    safety.push(Safety::of("fig4 memoryless", &r));
    let halted = r.agents.iter().filter(|a| a.final_mode == Mode::HaltLoss).count();
    outcome(
        2,
        !r.converged && halted >= 1,
        format!("fig4 memoryless converged={} with {halted} agent(s) ending in HaltLoss", r.converged),
    )
}

/// Runs of one algorithm over the seeded variants at one loss level.
struct Sweep {
    results: Vec<RunResult>,
}

impl Sweep {
    fn new(pct: f64, algorithm: Algorithm, safety: &mut Vec<Safety>) -> Self {
        let results = run_all(SEEDS.map(|s| generated(pct, s).with_algorithm(algorithm)).collect());
        for (seed, r) in SEEDS.zip(&results) {
            safety.push(Safety::of(format!("{algorithm} {pct}% seed {seed}"), r));
        }
        Self { results }
    }

    fn converged(&self, max_step: u64) -> usize {
        self.results.iter().filter(|r| r.converged && r.consensus_step.is_some_and(|k| k <= max_step)).count()
    }
}

fn matched_means(a: &Sweep, b: &Sweep) -> Option<(f64, f64, usize)> {
    let pairs: Vec<(f64, f64)> = a
        .results
        .iter()
        .zip(&b.results)
        .filter_map(|(x, y)| Some((x.consensus_time_s?, y.consensus_time_s?)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    Some((pairs.iter().map(|p| p.0).sum::<f64>() / n, pairs.iter().map(|p| p.1).sum::<f64>() / n, pairs.len()))
}

fn criterion_3(bt3: &Sweep, bt5: &Sweep) -> Outcome {
    let (c3, c5) = (bt3.converged(800), bt5.converged(800));
    outcome(3, c3 >= 19 && c5 >= 19, format!("backtracking converged within 800 steps on {c3}/20 (3%) and {c5}/20 (5%)"))
}

fn criterion_4(bt3: &Sweep, bt5: &Sweep, h3: &Sweep, h5: &Sweep) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, history, backtracking) in [("3%", h3, bt3), ("5%", h5, bt5)] {
        match matched_means(history, backtracking) {
            Some((h, b, n)) => {
                pass &= h < b;
                parts.push(format!("{label}: history {h:.1} s < backtracking {b:.1} s over {n} seeds"));
            }
            None => {
                pass = false;
                parts.push(format!("{label}: no matched seeds"));
            }
        }
    }
    match matched_means(bt5, bt3) {
        Some((high, low, n)) => {
            pass &= high >= low;
            parts.push(format!("backtracking 5% {high:.1} s >= 3% {low:.1} s over {n} seeds"));
        }
        None => {
            pass = false;
            parts.push("backtracking: no matched seeds across loss levels".into());
        }
    }
    outcome(4, pass, parts.join("; "))
}

fn criterion_5(safety: &mut Vec<Safety>) -> Outcome {
    let s = bundled("fig7.scenario");
    let r = run(&s).expect("fig7 runs");
    safety.push(Safety::of("fig7", &r));
    let stuck: Vec<usize> = r
        .agents
        .iter()
        .enumerate()
        .filter(|(_, a)| a.final_mode == Mode::HistoryFollow && a.final_state.v == 0.0)
        .map(|(i, _)| i)
        .collect();
    let outside = match stuck.as_slice() {
        [i] => {
            let p = r.agents[*i].final_state.position();
            let others: Vec<Point> =
                r.agents.iter().enumerate().filter(|(j, _)| j != i).map(|(_, a)| a.final_state.position()).collect();
            let n = others.len() as f64;
            let mean = Point::new(others.iter().map(|q| q.x).sum::<f64>() / n, others.iter().map(|q| q.y).sum::<f64>() / n);
            p.distance(mean) > s.params.ccr && others.iter().all(|q| q.distance(p) > s.params.ccr)
        }
        _ => false,
    };
    outcome(
        5,
        !r.converged && stuck.len() == 1 && outside,
        format!(
            "fig7 converged={}, agents halted in HistoryFollow: {stuck:?}, outside the others' circle: {outside}",
            r.converged
        ),
    )
}

fn closure_oracle(a: &AdjacencyMatrix) -> bool {
    let n = a.n();
    let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || a.get(i, j) == 1).collect()).collect();
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                reach[i][j] = reach[i][j] || (reach[i][m] && reach[m][j]);
            }
        }
    }
    reach.iter().all(|row| row.iter().all(|&r| r))
}

fn random_adjacency(n: usize, rng: &mut impl Rng) -> AdjacencyMatrix {
    let mut a = AdjacencyMatrix::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.5) {
                a.set(i, j, true);
            }
        }
    }
    a
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let row_sums_ok = (0..1000).all(|_| {
        let n = rng.gen_range(1..=10);
        laplacian(&random_adjacency(n, &mut rng)).row_sums().iter().all(|&s| s == 0)
    });

    let mut graphs = 0usize;
    let mut mismatches = 0usize;
    for n in 1..=4usize {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
        for mask in 0u32..(1 << slots.len()) {
            let mut a = AdjacencyMatrix::empty(n);
            for (bit, &(i, j)) in slots.iter().enumerate() {
                a.set(i, j, mask & (1 << bit) != 0);
            }
            graphs += 1;
            if is_strongly_connected(&a) != closure_oracle(&a) {
                mismatches += 1;
            }
        }
    }

    let l = laplacian(&AdjacencyMatrix::reference_a1());
    let a1_null = (0..6).all(|i| (0..6).map(|j| l.get(i, j)).sum::<i64>() == 0);
    outcome(
        6,
        row_sums_ok && mismatches == 0 && a1_null,
        format!(
            "random row sums zero: {row_sums_ok}; connectivity mismatches {mismatches}/{graphs} graphs (n <= 4); L(A1)*1 = 0: {a1_null}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut configs = 0;
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    let mut max_delay = 0;
    while configs < 1000 {
        let n = rng.gen_range(2..=8);
        let delays = DelayModel::sampled(n, rng.gen_range(0..=6), 6, &mut rng);
        let topology = random_adjacency(n, &mut rng);
        let steps = rng.gen_range(1..=16u64);
        let mut buffers = vec![DelayedStateBuffer::for_delays(&delays); n];
        let mut history: Vec<Vec<StampedState>> = Vec::new();
        for k in 0..steps {
            let row: Vec<StampedState> = (0..n)
                .map(|i| StampedState {
                    agent_id: i,
                    x: rng.gen_range(0.0..1412.0),
                    y: rng.gen_range(0.0..773.0),
                    v: rng.gen_range(-2.0..2.0),
                    step: k,
                })
                .collect();
            for (b, s) in buffers.iter_mut().zip(&row) {
                b.record(*s).expect("contiguous steps");
            }
            history.push(row);
        }
        let k = steps - 1;
        let seen = |agent: usize, delay: u32| history[k.saturating_sub(u64::from(delay)) as usize][agent];
        for i in 0..n {
            let own = seen(i, delays.g_self);
            let senders: Vec<usize> = (0..n).filter(|&j| topology.get(i, j) == 1).collect();
            let got = compute_feedback(
                &visible_neighbor_states(i, k, &topology, &buffers, &delays),
                &self_state(i, k, &buffers, &delays),
            );
            if senders.is_empty() {
                mismatches += usize::from(got.is_ok());
                continue;
            }
            let (mut dx, mut dy) = (0.0, 0.0);
            for &j in &senders {
                let g = delays.g_link[j][i];
                max_delay = max_delay.max(g);
                let s = seen(j, g);
                dx += s.x - own.x;
                dy += s.y - own.y;
            }
            let m = senders.len() as f64;
            match got {
                Ok(f) => {
                    let err = (f.u_ix - dx / m).abs().max((f.u_iy - dy / m).abs()).max((f.u_iv - own.v).abs());
                    worst = worst.max(err);
                }
                Err(_) => mismatches += 1,
            }
            configs += 1;
        }
    }
    outcome(
        7,
        worst <= 1e-12 && mismatches == 0 && max_delay == 6,
        format!("{configs} configurations, max error {worst:.2e}, loss mismatches {mismatches}, delays up to {max_delay} steps"),
    )
}

fn criterion_8(safety: &[Safety]) -> Outcome {
    let worst = safety.iter().min_by(|a, b| a.min_clearance.total_cmp(&b.min_clearance));
    let collisions: Vec<&str> = safety.iter().filter(|s| s.collided).map(|s| s.label.as_str()).collect();
    let halts: usize = safety.iter().map(|s| s.halts).sum();
    let pass = collisions.is_empty() && worst.is_some_and(|w| w.min_clearance > 0.0);
    let detail = match worst {
        Some(w) => format!(
            "{} runs, minimum clearance {:.2} px ({}), collisions {:?}, {halts} avoidance stops",
            safety.len(),
            w.min_clearance,
            w.label,
            collisions
        ),
        None => "no runs recorded".into(),
    };
    outcome(8, pass, detail)
}

fn run_binary(out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_consim"))
        .arg("run")
        .arg(scenarios_dir().join("fig4.scenario"))
        .args(["--seed", "7", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    std::fs::read(out.join(TRAJECTORY_FILE)).map_err(|e| e.to_string())
}

fn criterion_9(safety: &mut Vec<Safety>) -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let (a, b) = (dir.path().join("first"), dir.path().join("second"));
    match (run_binary(&a), run_binary(&b)) {
        (Ok(x), Ok(y)) => {
            if let Ok(text) = std::fs::read_to_string(a.join(SUMMARY_FILE)) {
                if let Ok(summary) = serde_json::from_str::<Summary>(&text) {
                    safety.push(Safety {
                        label: "fig4 seed 7 (binary)".into(),
                        min_clearance: summary.min_clearance_px,
                        collided: summary.collision.is_some(),
                        halts: 0,
                    });
                }
            }
            outcome(9, !x.is_empty() && x == y, format!("two runs of fig4 --seed 7 wrote {} and {} bytes, identical: {}", x.len(), y.len(), x == y))
        }
        (Err(e), _) | (_, Err(e)) => outcome(9, false, format!("binary run failed: {e}")),
    }
}

fn main() -> ExitCode {
    let mut safety = Vec::new();
    let mut outcomes = vec![criterion_1(&mut safety), criterion_2(&mut safety)];

    let bt3 = Sweep::new(3.0, Algorithm::Backtracking, &mut safety);
    let bt5 = Sweep::new(5.0, Algorithm::Backtracking, &mut safety);
    let h3 = Sweep::new(3.0, Algorithm::History, &mut safety);
    let h5 = Sweep::new(5.0, Algorithm::History, &mut safety);
    outcomes.push(criterion_3(&bt3, &bt5));
    outcomes.push(criterion_4(&bt3, &bt5, &h3, &h5));
    outcomes.push(criterion_5(&mut safety));
    outcomes.push(criterion_6());
    outcomes.push(criterion_7());
    let determinism = criterion_9(&mut safety);
    outcomes.push(criterion_8(&safety));
    outcomes.push(determinism);

    let mut failed = 0;
    for o in &outcomes {
        println!("{} criterion {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
