//! Undirected interaction graph of a circuit and its edge connectivity.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dynamics::GeneCircuit;

/// Simple undirected graph; edges are stored as `(i, j)` with `i < j`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndirectedGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|&(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        assert!(edges.iter().all(|&(_, b)| b < n), "edge endpoint out of range");
        edges.sort_unstable();
        edges.dedup();
        Self { n, edges }
    }

    pub fn complete(n: usize) -> Self {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

/// Undirected edge `{i, j}` (i != j) iff `max(|W_ij|, |W_ji|) >= edge_tau`
/// and that weight is nonzero.
pub fn binarize(circuit: &GeneCircuit, edge_tau: f64) -> UndirectedGraph {
    let n = circuit.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = circuit.weight(i, j).abs().max(circuit.weight(j, i).abs());
            if m > 0.0 && m >= edge_tau {
                edges.push((i, j));
            }
        }
    }
    UndirectedGraph::new(n, edges)
}

/// Unit-capacity residual network for repeated s-t max-flow.
struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i32>,
}

impl FlowNetwork {
    fn from_graph(g: &UndirectedGraph) -> Self {
        let mut net = Self {
            head: vec![Vec::new(); g.n],
            to: Vec::new(),
            cap: Vec::new(),
        };
        for &(a, b) in &g.edges {
            // paired arcs a->b and b->a, each the other's reverse
            net.head[a].push(net.to.len());
            net.to.push(b);
            net.cap.push(1);
            net.head[b].push(net.to.len());
            net.to.push(a);
            net.cap.push(1);
        }
        net
    }

    fn max_flow(&self, s: usize, t: usize) -> usize {
        let mut cap = self.cap.clone();
        let n = self.head.len();
        let mut flow = 0;
        loop {
            let mut via = vec![usize::MAX; n];
            let mut queue = VecDeque::from([s]);
            let mut reached = false;
            while let Some(v) = queue.pop_front() {
                if v == t {
                    reached = true;
                    break;
                }
                for &e in &self.head[v] {
                    let w = self.to[e];
                    if cap[e] > 0 && w != s && via[w] == usize::MAX {
                        via[w] = e;
                        queue.push_back(w);
                    }
                }
            }
            if !reached {
                return flow;
            }
            let mut v = t;
            while v != s {
                let e = via[v];
                cap[e] -= 1;
                cap[e ^ 1] += 1;
                v = self.to[e ^ 1];
            }
            flow += 1;
        }
    }
}

/// Minimum number of edges whose removal disconnects the graph; 0 for
/// disconnected graphs and graphs with fewer than two nodes.
pub fn edge_connectivity(g: &UndirectedGraph) -> usize {
    if g.n < 2 {
        return 0;
    }
    let net = FlowNetwork::from_graph(g);
    (1..g.n).map(|t| net.max_flow(0, t)).min().unwrap_or(0)
}
