//! Progressive Edge-Growth construction.
//!
//! Edges are placed one at a time; each new edge of a variable node goes to
//! the check node farthest from it in the current graph (unreachable checks
//! count as infinitely far), which greedily maximises the local girth. Ties
//! are broken by lowest current check degree, then lowest check index. Row
//! degrees follow the check distribution: a check that reached its target
//! degree is only used once no check below target remains.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DegreeDistribution, ParityCheckMatrix};
use crate::{Error, Result};

const UNREACHED: u32 = u32::MAX;

/// Builds an `n_rows x n_cols` parity-check matrix following `dist`.
///
/// The seed shuffles the processing order of variable nodes with equal
/// degree; everything else is deterministic.
pub fn peg_construct(
    n_cols: usize,
    n_rows: usize,
    dist: &DegreeDistribution,
    seed: u64,
) -> Result<ParityCheckMatrix> {
    if n_rows == 0 || n_rows >= n_cols {
        return Err(Error::Construction(format!(
            "need 0 < n_rows < n_cols, got {n_rows} x {n_cols}"
        )));
    }
    let var_degree = DegreeDistribution::node_degrees(&dist.variable_node_degrees, n_cols);
    if let Some(&max) = var_degree.last() {
        if max > n_rows {
            return Err(Error::Construction(format!(
                "variable degree {max} exceeds the {n_rows} available checks"
            )));
        }
    }
    let total_edges: usize = var_degree.iter().sum();
    let capacity = check_capacities(&dist.check_node_degrees, n_rows, total_edges);
    if capacity.iter().any(|&c| c > n_cols) {
        return Err(Error::Construction(format!(
            "check degree exceeds the {n_cols} available columns"
        )));
    }

    let mut order: Vec<usize> = Vec::with_capacity(n_cols);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = 0;
    while start < n_cols {
        let end = start + var_degree[start..].iter().take_while(|&&d| d == var_degree[start]).count();
        let mut class: Vec<usize> = (start..end).collect();
        class.shuffle(&mut rng);
        order.extend(class);
        start = end;
    }

    let mut graph = Graph::new(n_cols, n_rows);
    for v in order {
        for k in 0..var_degree[v] {
            if k > 0 {
                graph.bfs_from(v);
            }
            let c = graph
                .pick_check(v, &capacity, k == 0)
                .ok_or_else(|| Error::Construction(format!("no free check for column {v}")))?;
            graph.add_edge(v, c);
        }
    }

    let mut rows = graph.check_adj;
    for row in &mut rows {
        row.sort_unstable();
    }
    ParityCheckMatrix::from_rows(n_cols, rows)
}

/// Target row degrees from the check distribution, nudged so that they sum to
/// the number of edges implied by the variable distribution.
fn check_capacities(check: &[(usize, f64)], n_rows: usize, total_edges: usize) -> Vec<usize> {
    let mut cap = DegreeDistribution::node_degrees(check, n_rows);
    let mut sum: usize = cap.iter().sum();
    while sum < total_edges {
        let min = *cap.iter().min().unwrap();
        for c in cap.iter_mut().filter(|c| **c == min) {
            if sum == total_edges {
                break;
            }
            *c += 1;
            sum += 1;
        }
    }
    while sum > total_edges {
        let max = *cap.iter().max().unwrap();
        for c in cap.iter_mut().rev().filter(|c| **c == max) {
            if sum == total_edges || *c == 1 {
                break;
            }
            *c -= 1;
            sum -= 1;
        }
    }
    cap
}

struct Graph {
    var_adj: Vec<Vec<u32>>,
    check_adj: Vec<Vec<u32>>,
    check_stamp: Vec<u32>,
    check_dist: Vec<u32>,
    var_stamp: Vec<u32>,
    queue: Vec<u32>,
    epoch: u32,
}

impl Graph {
    fn new(n_cols: usize, n_rows: usize) -> Self {
        Graph {
            var_adj: vec![Vec::new(); n_cols],
            check_adj: vec![Vec::new(); n_rows],
            check_stamp: vec![0; n_rows],
            check_dist: vec![UNREACHED; n_rows],
            var_stamp: vec![0; n_cols],
            queue: Vec::with_capacity(n_rows),
            epoch: 0,
        }
    }

    fn add_edge(&mut self, v: usize, c: usize) {
        self.var_adj[v].push(c as u32);
        self.check_adj[c].push(v as u32);
    }

    fn distance(&self, c: usize) -> u32 {
        if self.check_stamp[c] == self.epoch {
            self.check_dist[c]
        } else {
            UNREACHED
        }
    }

    /// Breadth-first search from `v`, recording the depth of every reached
    /// check node (adjacent checks have depth 0).
    fn bfs_from(&mut self, v: usize) {
        self.epoch += 1;
        let epoch = self.epoch;
        let n_rows = self.check_adj.len();
        self.queue.clear();
        self.var_stamp[v] = epoch;
        for &c in &self.var_adj[v] {
            self.check_stamp[c as usize] = epoch;
            self.check_dist[c as usize] = 0;
            self.queue.push(c);
        }
        let mut head = 0;
        'search: while head < self.queue.len() {
            let c = self.queue[head] as usize;
            head += 1;
            let next = self.check_dist[c] + 1;
            for &u in &self.check_adj[c] {
                let u = u as usize;
                if self.var_stamp[u] == epoch {
                    continue;
                }
                self.var_stamp[u] = epoch;
                for &c2 in &self.var_adj[u] {
                    let c2 = c2 as usize;
                    if self.check_stamp[c2] != epoch {
                        self.check_stamp[c2] = epoch;
                        self.check_dist[c2] = next;
                        self.queue.push(c2 as u32);
                        if self.queue.len() == n_rows {
                            break 'search;
                        }
                    }
                }
            }
        }
    }

    /// Candidate order: checks below their target degree, then farthest, then
    /// lowest degree, then lowest index.
    fn pick_check(&self, v: usize, capacity: &[usize], first_edge: bool) -> Option<usize> {
        let mut best: Option<((bool, u32), usize, usize)> = None;
        for (c, (adj, &cap)) in self.check_adj.iter().zip(capacity).enumerate() {
            let dist = if first_edge { UNREACHED } else { self.distance(c) };
            if dist == 0 || (first_edge && self.var_adj[v].contains(&(c as u32))) {
                continue;
            }
            let degree = adj.len();
            let open = degree < cap;
            let key = (open, dist);
            let better = match best {
                None => true,
                Some((bkey, bdeg, _)) => key > bkey || (key == bkey && degree < bdeg),
            };
            if better {
                best = Some((key, degree, c));
            }
        }
        best.map(|(_, _, c)| c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_one_bookkeeping() {
        let dist = DegreeDistribution::regular(1, 2).unwrap();
        let h = peg_construct(4, 2, &dist, 1).unwrap();
        for c in 0..4 {
            assert_eq!(h.col(c).len(), 1);
        }
        assert_eq!(h.num_edges(), 4);
    }

    #[test]
    fn regular_three_six() {
        let dist = DegreeDistribution::regular(3, 6).unwrap();
        let h = peg_construct(16, 8, &dist, 7).unwrap();
        for c in 0..16 {
            assert_eq!(h.col(c).len(), 3, "column {c}");
        }
        for r in 0..8 {
            assert_eq!(h.row(r).len(), 6, "row {r}");
        }
        // Bipartite girth is even and >= 4 when there are no duplicate edges.
        let g = h.girth().expect("dense graph has cycles");
        assert!(g >= 4 && g.is_multiple_of(2));
    }

    #[test]
    fn deterministic_for_seed() {
        let dist = DegreeDistribution::column_weight_three(0.7);
        let a = peg_construct(200, 60, &dist, 11).unwrap();
        let b = peg_construct(200, 60, &dist, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_degree_is_rejected() {
        let dist = DegreeDistribution::regular(5, 10).unwrap();
        assert!(matches!(
            peg_construct(10, 4, &dist, 0),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn four_cycles_are_rare_on_sparse_graphs() {
        let dist = DegreeDistribution::column_weight_three(0.5);
        let h = peg_construct(2000, 1000, &dist, 3).unwrap();
        let mut cycles = 0;
        for r in 0..h.n_rows() {
            for (i, &a) in h.row(r).iter().enumerate() {
                for &b in &h.row(r)[i + 1..] {
                    let shared = h.col(a as usize).iter().filter(|x| h.col(b as usize).contains(x)).count();
                    cycles += usize::from(shared >= 2);
                }
            }
        }
        eprintln!("4-cycle column pairs: {cycles}");
        assert!(cycles <= 20, "{cycles} column pairs close a 4-cycle");
    }

    #[test]
    fn irregular_fractions_are_realised() {
        let dist = DegreeDistribution::new(vec![(2, 0.3), (3, 0.5), (6, 0.2)], vec![(8, 1.0)]).unwrap();
        let n = 300;
        let h = peg_construct(n, 120, &dist, 5).unwrap();
        for &(d, f) in &dist.variable_node_degrees {
            let count = (0..n).filter(|&c| h.col(c).len() == d).count();
            assert!((count as f64 / n as f64 - f).abs() <= 1.0 / n as f64);
        }
    }
}
