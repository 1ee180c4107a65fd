use consim_core::comms::{self_state, visible_neighbor_states, DEFAULT_MAX_LINK_DELAY};
use consim_core::control::compute_feedback;
use consim_core::topology::{effective_topology, is_strongly_connected, laplacian};
use consim_core::{AdjacencyMatrix, DelayModel, DelayedStateBuffer, NoCommZone, Point, Rect, StampedState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_adjacency(n: usize, density: f64, rng: &mut impl Rng) -> AdjacencyMatrix {
    let mut a = AdjacencyMatrix::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(density) {
                a.set(i, j, true);
            }
        }
    }
    a
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

fn adjacency_strategy(max_n: usize) -> impl Strategy<Value = AdjacencyMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
            let mut a = AdjacencyMatrix::empty(n);
            for i in 0..n {
                for j in 0..n {
                    if i != j && bits[i * n + j] {
                        a.set(i, j, true);
                    }
                }
            }
            a
        })
    })
}

proptest! {
    #[test]
    fn laplacian_annihilates_ones(a in adjacency_strategy(8)) {
        let l = laplacian(&a);
        prop_assert!(l.row_sums().iter().all(|&s| s == 0));
        for i in 0..a.n() {
            let in_degree = (0..a.n()).filter(|&j| a.get(i, j) == 1).count() as i64;
            prop_assert_eq!(l.get(i, i), in_degree);
        }
    }

    #[test]
    fn masking_is_idempotent_and_never_adds_links(
        a in adjacency_strategy(6),
        xs in proptest::collection::vec(0.0..200.0f64, 6),
        zone in (0.0..150.0f64, 0.0..150.0f64, 1.0..80.0f64),
    ) {
        let n = a.n();
        let positions: Vec<Point> = xs.iter().take(n).map(|&x| Point::new(x, x * 0.5)).collect();
        let zones = vec![NoCommZone::new(Rect::new(zone.0, zone.1 * 0.5, zone.2, zone.2))];
        let once = effective_topology(&a, &positions, &zones);
        prop_assert_eq!(&effective_topology(&once, &positions, &zones), &once);
        for i in 0..n {
            for j in 0..n {
                prop_assert!(once.get(i, j) <= a.get(i, j));
            }
        }
    }
}

#[test]
fn connectivity_matches_closure_on_random_six_agent_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut connected = 0;
    for t in 0..1000 {
        let density = 0.15 + 0.5 * (t % 10) as f64 / 10.0;
        let a = random_adjacency(6, density, &mut rng);
        let expected = closure_oracle(&a);
        assert_eq!(is_strongly_connected(&a), expected, "{:?}", a.rows());
        connected += usize::from(expected);
    }
    assert!(connected > 50 && connected < 950, "sample should mix both outcomes, got {connected}");
}

/// Position history indexed by `[step][agent]`.
struct History {
    states: Vec<Vec<StampedState>>,
}

impl History {
    /// Sample an agent delivers at step `k` under a delay: the exact past
    /// sample, or the very first one before that much history exists.
    fn seen(&self, agent: usize, k: u64, delay: u32) -> StampedState {
        let step = k.saturating_sub(u64::from(delay)) as usize;
        self.states[step][agent]
    }
}

#[test]
fn feedback_matches_brute_force_mean_of_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    let mut max_delay_seen = 0;
    while checked < 1000 {
        let n = rng.gen_range(2..=8);
        let g_self = rng.gen_range(0..=DEFAULT_MAX_LINK_DELAY);
        let delays = DelayModel::sampled(n, g_self, DEFAULT_MAX_LINK_DELAY, &mut rng);
        let topology = random_adjacency(n, 0.5, &mut rng);
        let steps = rng.gen_range(1..20u64);
        let mut buffers = vec![DelayedStateBuffer::for_delays(&delays); n];
        let mut history = History { states: Vec::new() };
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
            for (buffer, s) in buffers.iter_mut().zip(&row) {
                buffer.record(*s).unwrap();
            }
            history.states.push(row);
        }
        let k = steps - 1;
        for i in 0..n {
            let own = self_state(i, k, &buffers, &delays);
            let visible = visible_neighbor_states(i, k, &topology, &buffers, &delays);
            let feedback = compute_feedback(&visible, &own);

            let own_oracle = history.seen(i, k, delays.g_self);
            let senders: Vec<usize> = (0..n).filter(|&j| topology.get(i, j) == 1).collect();
            assert_eq!(own, own_oracle);
            if senders.is_empty() {
                assert!(feedback.is_err());
                continue;
            }
            let mut dx = 0.0;
            let mut dy = 0.0;
            for &j in &senders {
                let g = delays.g_link[j][i];
                max_delay_seen = max_delay_seen.max(g);
                let s = history.seen(j, k, g);
                dx += s.x - own_oracle.x;
                dy += s.y - own_oracle.y;
            }
            let m = senders.len() as f64;
            let f = feedback.unwrap();
            assert!((f.u_ix - dx / m).abs() <= 1e-12, "u_ix {} vs {}", f.u_ix, dx / m);
            assert!((f.u_iy - dy / m).abs() <= 1e-12, "u_iy {} vs {}", f.u_iy, dy / m);
            assert_eq!(f.u_iv, own_oracle.v);
            checked += 1;
        }
    }
    assert_eq!(max_delay_seen, DEFAULT_MAX_LINK_DELAY);
}

#[test]
fn zero_delays_equal_direct_sharing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 6;
    let delays = DelayModel::zero(n);
    let topology = AdjacencyMatrix::reference_a1();
    let mut buffers = vec![DelayedStateBuffer::for_delays(&delays); n];
    for k in 0..50 {
        let row: Vec<StampedState> = (0..n)
            .map(|i| StampedState { agent_id: i, x: rng.gen_range(0.0..100.0), y: rng.gen_range(0.0..100.0), v: 0.0, step: k })
            .collect();
        for (b, s) in buffers.iter_mut().zip(&row) {
            b.record(*s).unwrap();
        }
        for i in 0..n {
            let visible = visible_neighbor_states(i, k, &topology, &buffers, &delays);
            let direct: Vec<StampedState> = topology.in_neighbors(i).map(|j| row[j]).collect();
            assert_eq!(visible, direct);
            assert_eq!(
                compute_feedback(&visible, &self_state(i, k, &buffers, &delays)),
                compute_feedback(&direct, &row[i])
            );
        }
    }
}
