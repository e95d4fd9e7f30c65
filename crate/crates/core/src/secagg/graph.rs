use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Edges `(i, j)`, `1 <= i < j <= n`, of the Harary graph on `n` vertices:
/// `i` and `j` are adjacent iff `(j - i) mod n <= (k + 1) / 2` or
/// `(j - i) mod n >= n - k / 2`, tested in either orientation.
///
/// For even `k` every vertex has degree exactly `k`; for odd `k < n - 1` the
/// forward reach of `(k + 1) / 2` yields degree `k + 1`.
pub fn harary(n: usize, k: usize) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::config(format!("Harary graph needs n >= 2, got {n}")));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::config(format!("degree k = {k} outside [1, {}]", n - 1)));
    }
    let n_f = n as f64;
    let k_f = k as f64;
    let adjacent = |d: usize| (d as f64) <= (k_f + 1.0) / 2.0 || (d as f64) >= n_f - k_f / 2.0;
    let reach: Vec<usize> = (1..n).filter(|&d| adjacent(d)).collect();
    let mut edges = BTreeSet::new();
    for i in 1..=n {
        for &d in &reach {
            let j = (i - 1 + d) % n + 1;
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    Ok(edges)
}

/// `min(n - 1, 2 * ceil(log2(n + 1)))`.
pub fn degree_for(n: usize) -> usize {
    let log = (usize::BITS - n.leading_zeros()) as usize; // ceil(log2(n + 1))
    (2 * log).min(n.saturating_sub(1))
}

/// Communication graph over clients `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    n: usize,
    k: usize,
    adjacency: Vec<Vec<usize>>,
    permutation: Vec<usize>,
}

impl CommGraph {
    /// A single client with no neighbours; aggregation degenerates to upload.
    pub fn singleton() -> Self {
        Self { n: 1, k: 0, adjacency: vec![Vec::new()], permutation: vec![0] }
    }

    /// Relabels one-based `edges` through a zero-based permutation.
    pub fn from_edges(n: usize, k: usize, edges: &[(usize, usize)], permutation: Vec<usize>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in edges {
            let (a, b) = (permutation[i - 1], permutation[j - 1]);
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self { n, k, adjacency, permutation }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, client: usize) -> &[usize] {
        &self.adjacency[client]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.adjacency
            .iter()
            .enumerate()
            .all(|(i, list)| list.iter().all(|&j| j != i && self.adjacency[j].binary_search(&i).is_ok()))
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Samples the communication graph: a Harary graph of degree
/// [`degree_for`]`(n)` under a uniformly random relabelling.
pub fn init_secure_agg(n: usize, seed: u64) -> Result<CommGraph> {
    if n < 2 {
        return Err(Error::config(format!("secure aggregation needs n >= 2, got {n}")));
    }
    let k = degree_for(n);
    let edges = harary(n, k)?;
    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    Ok(CommGraph::from_edges(n, k, &edges, permutation))
}
