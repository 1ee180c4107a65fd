//! Communication graph: adjacency, Laplacian, connectivity and the
//! position-dependent link masking that switches the network topology.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Rect};
use crate::TopologyError;

/// Binary adjacency of the communication graph.
///
/// Stored row-major: `get(i, j) == 1` means agent `i` receives from agent `j`
/// (row `i` lists the in-neighbours of `i`). The diagonal is always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<u8>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            entries: vec![0; n * n],
        }
    }

    /// Builds a matrix from rows, checking shape, binary entries and zero diagonal.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, TopologyError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(TopologyError::NotSquare {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
            for (j, &a) in row.iter().enumerate() {
                if a > 1 {
                    return Err(TopologyError::NonBinary { row: i, col: j, value: a });
                }
                if i == j && a != 0 {
                    return Err(TopologyError::SelfLoop(i));
                }
                entries.push(a);
            }
        }
        Ok(Self { n, entries })
    }

    /// The six-agent topology used for the reference experiments.
    pub fn reference_a1() -> Self {
        Self::from_rows(&[
            vec![0, 1, 0, 1, 0, 1],
            vec![1, 0, 1, 0, 1, 0],
            vec![0, 1, 0, 1, 1, 1],
            vec![1, 0, 1, 0, 1, 0],
            vec![0, 1, 0, 1, 0, 1],
            vec![1, 1, 0, 1, 1, 0],
        ])
        .expect("reference topology is valid")
    }

    /// Every agent receives from every other agent.
    pub fn complete(n: usize) -> Self {
        let mut m = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.entries[i * n + j] = 1;
                }
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.n + j]
    }

    /// True when agent `i` receives data from agent `j`.
    pub fn receives(&self, i: usize, j: usize) -> bool {
        self.get(i, j) == 1
    }

    /// Sets the link `j -> i`. Self loops are ignored.
    pub fn set(&mut self, i: usize, j: usize, linked: bool) {
        if i != j {
            self.entries[i * self.n + j] = linked as u8;
        }
    }

    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.receives(i, j))
    }

    pub fn edge_count(&self) -> usize {
        self.entries.iter().map(|&a| a as usize).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.entries.chunks(self.n.max(1)).take(self.n).map(<[u8]>::to_vec).collect()
    }

    /// Compact bitstring (row-major) used as a topology fingerprint in logs.
    pub fn fingerprint(&self) -> String {
        self.entries.iter().map(|&a| if a == 1 { '1' } else { '0' }).collect()
    }
}

impl TryFrom<Vec<Vec<u8>>> for AdjacencyMatrix {
    type Error = TopologyError;

    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self, Self::Error> {
        Self::from_rows(&rows)
    }
}

impl From<AdjacencyMatrix> for Vec<Vec<u8>> {
    fn from(m: AdjacencyMatrix) -> Self {
        m.rows()
    }
}

/// Graph Laplacian `L = D - A` with `D` the in-degree diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaplacianMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl LaplacianMatrix {
    /// Wraps raw entries without checking the row-sum property.
    pub fn from_raw(n: usize, entries: Vec<i64>) -> Self {
        assert_eq!(entries.len(), n * n, "laplacian must be n x n");
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn row_sums(&self) -> Vec<i64> {
        self.entries
            .chunks(self.n.max(1))
            .take(self.n)
            .map(|row| row.iter().sum())
            .collect()
    }
}

pub fn laplacian(adjacency: &AdjacencyMatrix) -> LaplacianMatrix {
    let n = adjacency.n();
    let mut entries = vec![0i64; n * n];
    for i in 0..n {
        let mut degree = 0;
        for j in 0..n {
            if i != j {
                let a = adjacency.get(i, j) as i64;
                entries[i * n + j] = -a;
                degree += a;
            }
        }
        entries[i * n + i] = degree;
    }
    LaplacianMatrix { n, entries }
}

/// Exact integer check that the all-ones vector lies in the kernel of `L`.
pub fn zero_eigen_check(laplacian: &LaplacianMatrix) -> bool {
    laplacian.row_sums().iter().all(|&s| s == 0)
}

/// Nodes reachable from `start` following edges in the given direction.
fn reachable(adjacency: &AdjacencyMatrix, start: usize, forward: bool) -> Vec<bool> {
    let n = adjacency.n();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for (v, seen_v) in seen.iter_mut().enumerate() {
            // Data flows j -> i when receives(i, j).
            let edge = if forward {
                adjacency.receives(v, u)
            } else {
                adjacency.receives(u, v)
            };
            if edge && !*seen_v {
                *seen_v = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Double reachability from node 0: every node is reached along edges and
/// along reversed edges.
pub fn is_strongly_connected(adjacency: &AdjacencyMatrix) -> bool {
    let n = adjacency.n();
    if n <= 1 {
        return true;
    }
    reachable(adjacency, 0, true).into_iter().all(|r| r)
        && reachable(adjacency, 0, false).into_iter().all(|r| r)
}

/// Rectangle in which agents lose every inbound and outbound link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoCommZone {
    pub rect: Rect,
}

impl NoCommZone {
    pub fn new(rect: Rect) -> Self {
        Self { rect }
    }

    /// Closed-rectangle membership.
    pub fn contains(&self, p: Point) -> bool {
        self.rect.contains_closed(p)
    }
}

/// True when `p` lies inside (or on the edge of) any zone.
pub fn in_any_zone(p: Point, zones: &[NoCommZone]) -> bool {
    zones.iter().any(|z| z.contains(p))
}

/// Masks `base` by zeroing row and column `i` for every agent standing in a zone.
pub fn effective_topology(
    base: &AdjacencyMatrix,
    positions: &[Point],
    zones: &[NoCommZone],
) -> AdjacencyMatrix {
    assert_eq!(positions.len(), base.n(), "one position per agent");
    let n = base.n();
    let mut out = base.clone();
    for (i, &p) in positions.iter().enumerate() {
        if in_any_zone(p, zones) {
            for j in 0..n {
                out.set(i, j, false);
                out.set(j, i, false);
            }
        }
    }
    out
}
