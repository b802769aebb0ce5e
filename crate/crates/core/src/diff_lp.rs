//! Exact solver for linear programs whose constraints are all of the form
//! `v_a - v_b <= c` and whose objective is `sum_k (v_{u_k} - v_{l_k})`.
//!
//! Such a program is the dual of an uncapacitated min-cost flow that ships one
//! unit from every `l_k` to its `u_k`. The flow is found by successive shortest
//! paths with node potentials; optimal primal values are then read off as
//! shortest-path distances in the final residual graph, which satisfy every
//! constraint and are tight on every edge carrying flow. A negative cycle in
//! the constraint graph means the program is infeasible.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};

/// `vars[a] - vars[b] <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Difference {
    pub a: usize,
    pub b: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffSolution {
    /// Variable values with `vars[anchor] == 0`.
    pub values: Vec<f64>,
    pub objective: f64,
}

const INF_CAP: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: usize,
    cap: u32,
    cost: f64,
}

struct Graph {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    fn new(n: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: u32, cost: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
    }

    /// Shortest distances from a virtual root joined to every node by a
    /// zero-cost edge, over edges with residual capacity. `None` signals a
    /// negative cycle.
    fn root_distances(&self, tol: f64) -> Option<Vec<f64>> {
        let n = self.adj.len();
        let mut dist = vec![0.0f64; n];
        let mut in_queue = vec![true; n];
        let mut relaxed = vec![0usize; n];
        let mut queue: VecDeque<usize> = (0..n).collect();
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for &e in &self.adj[u] {
                let edge = self.edges[e];
                if edge.cap == 0 {
                    continue;
                }
                let cand = dist[u] + edge.cost;
                if cand < dist[edge.to] - tol {
                    dist[edge.to] = cand;
                    relaxed[edge.to] += 1;
                    if relaxed[edge.to] > n {
                        return None;
                    }
                    if !in_queue[edge.to] {
                        in_queue[edge.to] = true;
                        queue.push_back(edge.to);
                    }
                }
            }
        }
        Some(dist)
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Minimizes `sum_k (vars[upper_k] - vars[lower_k])` over `num_vars`
/// variables subject to `constraints`, pinning `vars[anchor]` to 0.
///
/// Every `(lower, upper)` pair must be joined by some constraint path from
/// `lower` to `upper` (each net brackets at least one terminal), otherwise the
/// objective is unbounded and an error is returned.
pub fn solve(
    num_vars: usize,
    anchor: usize,
    constraints: &[Difference],
    objective_pairs: &[(usize, usize)],
) -> Result<DiffSolution> {
    if anchor >= num_vars {
        return Err(Error::invalid("anchor variable out of range"));
    }
    let scale = constraints
        .iter()
        .map(|c| c.bound.abs())
        .fold(1.0f64, f64::max);
    let tol = 1e-12 * scale;

    let source = num_vars;
    let sink = num_vars + 1;
    let nodes = num_vars + 2;
    let mut g = Graph::new(nodes);
    for c in constraints {
        if c.a >= num_vars || c.b >= num_vars {
            return Err(Error::invalid("constraint references an undeclared variable"));
        }
        g.add(c.a, c.b, INF_CAP, c.bound);
    }
    for &(lo, hi) in objective_pairs {
        g.add(source, lo, 1, 0.0);
        g.add(hi, sink, 1, 0.0);
    }

    let mut potential = g
        .root_distances(tol)
        .ok_or_else(|| Error::Infeasible("constraint graph has a negative cycle".into()))?;

    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev_edge = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    for _ in 0..objective_pairs.len() {
        dist.fill(f64::INFINITY);
        prev_edge.fill(usize::MAX);
        done.fill(false);
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem(0.0, source));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &e in &g.adj[u] {
                let edge = g.edges[e];
                if edge.cap == 0 || done[edge.to] {
                    continue;
                }
                let reduced = (edge.cost + potential[u] - potential[edge.to]).max(0.0);
                let cand = d + reduced;
                if cand < dist[edge.to] {
                    dist[edge.to] = cand;
                    prev_edge[edge.to] = e;
                    heap.push(HeapItem(cand, edge.to));
                }
            }
        }
        if !dist[sink].is_finite() {
            return Err(Error::invalid(
                "objective is unbounded: a net interval is not bracketed by any terminal",
            ));
        }
        let reach = dist
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0f64, f64::max);
        for (p, &d) in potential.iter_mut().zip(&dist) {
            *p += if d.is_finite() { d } else { reach };
        }
        let mut v = sink;
        while v != source {
            let e = prev_edge[v];
            if g.edges[e].cap != INF_CAP {
                g.edges[e].cap -= 1;
            }
            let back = e ^ 1;
            if g.edges[back].cap != INF_CAP {
                g.edges[back].cap += 1;
            }
            v = g.edges[back].to;
        }
    }

    // Distances in the optimal residual graph give primal values that are
    // feasible and complementary to the flow.
    let dist = g
        .root_distances(tol)
        .ok_or_else(|| Error::Numerical("residual graph has a negative cycle".into()))?;
    let values: Vec<f64> = (0..num_vars).map(|v| dist[anchor] - dist[v]).collect();
    let objective = objective_pairs
        .iter()
        .map(|&(lo, hi)| values[hi] - values[lo])
        .sum();
    Ok(DiffSolution { values, objective })
}
