//! Undirected contact networks and Erdos-Renyi generation.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Immutable undirected simple graph on nodes `0..n`, stored as compressed
/// adjacency. Every edge has an id in `0..edge_count()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    /// Edge id of each adjacency slot, aligned with `neighbors`.
    slot_edges: Vec<u32>,
    /// Endpoints `(u, v)` with `u < v`, sorted.
    edges: Vec<(u32, u32)>,
}

impl Network {
    /// Builds a network from an edge list. Self-loops and duplicates are
    /// dropped; endpoints must be `< n`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        assert!(n < u32::MAX as usize);
        let mut list: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| {
                assert!((u as usize) < n && (v as usize) < n, "edge ({u}, {v}) out of range");
                (u.min(v), u.max(v))
            })
            .collect();
        list.sort_unstable();
        list.dedup();

        let mut degree = vec![0usize; n];
        for &(u, v) in &list {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n]];
        let mut slot_edges = vec![0u32; offsets[n]];
        for (id, &(u, v)) in list.iter().enumerate() {
            for (a, b) in [(u, v), (v, u)] {
                let slot = &mut fill[a as usize];
                neighbors[*slot] = b;
                slot_edges[*slot] = id as u32;
                *slot += 1;
            }
        }
        Self {
            n,
            offsets,
            neighbors,
            slot_edges,
            edges: list,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, u: u32) -> usize {
        let u = u as usize;
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        let u = u as usize;
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    /// `(neighbor, edge id)` pairs of `u`.
    pub fn incident(&self, u: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        let u = u as usize;
        let range = self.offsets[u]..self.offsets[u + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.slot_edges[range].iter().copied())
    }

    /// Endpoints of edge `id`, smaller first.
    pub fn endpoints(&self, id: u32) -> (u32, u32) {
        self.edges[id as usize]
    }

    /// All edges as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).contains(&b)
    }

    /// Writes one `u v` line per edge, sorted.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}")?;
        }
        out.flush()
    }
}

/// `2 |E| / N`.
pub fn mean_degree(net: &Network) -> f64 {
    if net.n == 0 {
        return 0.0;
    }
    2.0 * net.edge_count() as f64 / net.n as f64
}

/// `G(n, p)`: each of the `n (n - 1) / 2` unordered pairs is an edge
/// independently with probability `p`.
///
/// Pairs are visited in row-major lower-triangular order and the gaps between
/// successive edges are drawn from the geometric distribution, so the cost is
/// `O(n + |E|)` rather than `O(n^2)`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Network {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1], got {p}");
    let mut edges = Vec::new();
    if p >= 1.0 {
        for v in 1..n as u32 {
            edges.extend((0..v).map(|w| (w, v)));
        }
    } else if p > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log_q = (-p).ln_1p();
        let (mut v, mut w) = (1i64, -1i64);
        let n = n as i64;
        while v < n {
            let r: f64 = rng.random();
            // r in [0, 1) so 1 - r in (0, 1] and the skip is finite.
            let skip = ((-r).ln_1p() / log_q).floor();
            w += 1 + skip.min(i64::MAX as f64 / 4.0) as i64;
            while w >= v && v < n {
                w -= v;
                v += 1;
            }
            if v < n {
                edges.push((w as u32, v as u32));
            }
        }
    }
    Network::from_edges(n, edges)
}

/// Edge probability giving expected mean degree `k` on `n` nodes.
pub fn probability_for_mean_degree(n: usize, k: f64) -> f64 {
    if n <= 1 {
        0.0
    } else {
        (k / (n - 1) as f64).clamp(0.0, 1.0)
    }
}
