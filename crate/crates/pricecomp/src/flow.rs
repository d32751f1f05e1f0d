//! Exact maximum flow on small directed networks.
//!
//! Edmonds-Karp (shortest augmenting path by BFS) over rationals, with a
//! deterministic ascending-vertex visit order so runs are reproducible.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use crate::rational::Rational;

/// Dense capacity network. Vertices are `0..n`; absent edges have capacity 0.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    pub n: usize,
    pub source: usize,
    pub sink: usize,
    pub capacity: Vec<Vec<Rational>>,
}

impl FlowGraph {
    pub fn new(n: usize, source: usize, sink: usize) -> Self {
        FlowGraph {
            n,
            source,
            sink,
            capacity: vec![vec![Rational::zero(); n]; n],
        }
    }

    pub fn set_capacity(&mut self, from: usize, to: usize, cap: Rational) {
        self.capacity[from][to] = cap;
    }
}

/// A feasible flow, stored skew-symmetrically: `f[u][v] = -f[v][u]`.
#[derive(Debug, Clone)]
pub struct Flow {
    pub f: Vec<Vec<Rational>>,
    pub value: Rational,
}

impl Flow {
    pub fn zero(n: usize) -> Self {
        Flow {
            f: vec![vec![Rational::zero(); n]; n],
            value: Rational::zero(),
        }
    }

    pub fn residual(&self, g: &FlowGraph, u: usize, v: usize) -> Rational {
        g.capacity[u][v].clone() - self.f[u][v].clone()
    }

    /// Checks capacity and conservation exactly.
    pub fn is_feasible(&self, g: &FlowGraph) -> bool {
        for u in 0..g.n {
            for v in 0..g.n {
                if self.f[u][v] > g.capacity[u][v] {
                    return false;
                }
                if self.f[u][v] != -self.f[v][u].clone() {
                    return false;
                }
            }
        }
        for u in 0..g.n {
            if u == g.source || u == g.sink {
                continue;
            }
            let net: Rational = (0..g.n).map(|v| self.f[u][v].clone()).sum();
            if !net.is_zero() {
                return false;
            }
        }
        true
    }
}

/// BFS over the residual graph; returns parent links for the shortest path
/// from source, or None if the sink is unreachable.
fn bfs_path(g: &FlowGraph, flow: &Flow) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; g.n];
    parent[g.source] = g.source;
    let mut queue = VecDeque::new();
    queue.push_back(g.source);
    while let Some(u) = queue.pop_front() {
        for v in 0..g.n {
            if parent[v] == usize::MAX && flow.residual(g, u, v).is_positive() {
                parent[v] = u;
                if v == g.sink {
                    let mut path = vec![v];
                    let mut cur = v;
                    while cur != g.source {
                        cur = parent[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(v);
            }
        }
    }
    None
}

pub fn augment(g: &FlowGraph, flow: &mut Flow, path: &[usize]) {
    let mut amount: Option<Rational> = None;
    for w in path.windows(2) {
        let r = flow.residual(g, w[0], w[1]);
        amount = Some(match amount {
            None => r,
            Some(a) => a.min(r),
        });
    }
    let amount = amount.expect("non-empty path");
    for w in path.windows(2) {
        flow.f[w[0]][w[1]] += amount.clone();
        flow.f[w[1]][w[0]] -= amount.clone();
    }
    flow.value += amount;
}

/// Maximum flow from source to sink. The empty or disconnected network
/// yields the zero flow.
pub fn max_flow(g: &FlowGraph) -> Flow {
    let mut flow = Flow::zero(g.n);
    while let Some(path) = bfs_path(g, &flow) {
        augment(g, &mut flow, &path);
    }
    flow
}

/// Vertices reachable from the source in the residual graph of a maximum
/// flow; (S, V \ S) is a minimum cut.
pub fn residual_reachable(g: &FlowGraph, flow: &Flow) -> Vec<bool> {
    let mut seen = vec![false; g.n];
    seen[g.source] = true;
    let mut queue = VecDeque::new();
    queue.push_back(g.source);
    while let Some(u) = queue.pop_front() {
        for v in 0..g.n {
            if !seen[v] && flow.residual(g, u, v).is_positive() {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Total capacity crossing from S to its complement.
pub fn cut_capacity(g: &FlowGraph, in_s: &[bool]) -> Rational {
    let mut total = Rational::zero();
    for u in 0..g.n {
        if !in_s[u] {
            continue;
        }
        for v in 0..g.n {
            if !in_s[v] {
                total += g.capacity[u][v].clone();
            }
        }
    }
    total
}
