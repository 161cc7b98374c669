//! Successive-shortest-path min-cost flow with node potentials.
//!
//! Integer capacities, real costs. Each round runs Dijkstra on reduced costs
//! and pushes the bottleneck amount along the shortest path, so supplies of
//! size `D` cost one round instead of `D`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Relative slack for distance comparisons.
const EPS: f64 = 1e-12;

pub(crate) const INF_CAP: i64 = i64::MAX / 4;

#[derive(Debug, Clone)]
pub(crate) struct MinCostFlow {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // Max-heap: the smallest distance, then the lowest node index, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl MinCostFlow {
    pub(crate) fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
        }
    }

    /// Adds `u -> v` and its residual twin; returns the forward edge id.
    pub(crate) fn add_edge(&mut self, u: usize, v: usize, cap: i64, cost: f64) -> usize {
        let id = self.to.len();
        self.to.push(v);
        self.cap.push(cap);
        self.cost.push(cost);
        self.adj[u].push(id);
        self.to.push(u);
        self.cap.push(0);
        self.cost.push(-cost);
        self.adj[v].push(id + 1);
        id
    }

    /// Flow currently on forward edge `id`.
    pub(crate) fn flow(&self, id: usize) -> i64 {
        self.cap[id ^ 1]
    }

    fn initial_potentials(&self, source: usize) -> Vec<f64> {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        dist[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if !dist[u].is_finite() {
                    continue;
                }
                for &e in &self.adj[u] {
                    if self.cap[e] > 0 {
                        let v = self.to[e];
                        let nd = dist[u] + self.cost[e];
                        if nd < dist[v] - EPS * (1.0 + nd.abs()) {
                            dist[v] = nd;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // Unreachable nodes never become reachable; their potential is unused.
        dist.iter()
            .map(|d| if d.is_finite() { *d } else { 0.0 })
            .collect()
    }

    /// Pushes up to `limit` units from `source` to `sink` along successive
    /// shortest paths. With `profitable_only`, stops as soon as the cheapest
    /// remaining path has non-negative cost. Returns the amount pushed.
    ///
    /// Each phase runs Dijkstra on reduced costs, then saturates shortest
    /// paths (zero reduced cost edges) by depth-first search before the next
    /// Dijkstra.
    pub(crate) fn run(
        &mut self,
        source: usize,
        sink: usize,
        limit: i64,
        profitable_only: bool,
    ) -> i64 {
        let n = self.adj.len();
        let mut potential = self.initial_potentials(source);
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut dead = vec![false; n];
        let mut on_path = vec![false; n];
        let mut next_arc = vec![0usize; n];
        let mut heap = BinaryHeap::new();
        let mut pushed = 0i64;

        while pushed < limit {
            dist.fill(f64::INFINITY);
            done.fill(false);
            dist[source] = 0.0;
            heap.push(HeapEntry {
                dist: 0.0,
                node: source,
            });
            while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
                if done[u] {
                    continue;
                }
                done[u] = true;
                for &e in &self.adj[u] {
                    if self.cap[e] <= 0 {
                        continue;
                    }
                    let v = self.to[e];
                    if done[v] {
                        continue;
                    }
                    let reduced = (self.cost[e] + potential[u] - potential[v]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[v] - EPS * (1.0 + nd.abs()) {
                        dist[v] = nd;
                        heap.push(HeapEntry { dist: nd, node: v });
                    }
                }
            }
            if !dist[sink].is_finite() {
                break;
            }
            // Unreached nodes are shifted by the sink distance so reduced
            // costs stay non-negative.
            let shift = dist[sink];
            for v in 0..n {
                potential[v] += dist[v].min(shift);
            }
            let path_cost = potential[sink] - potential[source];
            if profitable_only && path_cost >= -EPS * (1.0 + path_cost.abs()) {
                break;
            }
            dead.fill(false);
            next_arc.fill(0);
            let before = pushed;
            while pushed < limit {
                let amount = self.augment_admissible(
                    source,
                    sink,
                    limit - pushed,
                    &potential,
                    &mut dead,
                    &mut on_path,
                    &mut next_arc,
                );
                if amount == 0 {
                    break;
                }
                pushed += amount;
            }
            if pushed == before {
                break;
            }
        }
        pushed
    }

    fn admissible(&self, e: usize, potential: &[f64]) -> bool {
        let u = self.to[e ^ 1];
        let v = self.to[e];
        let reduced = self.cost[e] + potential[u] - potential[v];
        self.cap[e] > 0
            && reduced <= EPS * (1.0 + self.cost[e].abs() + potential[u].abs() + potential[v].abs())
    }

    /// One augmenting path over admissible edges, found by iterative DFS;
    /// pushes its bottleneck (at most `limit`) and returns the amount.
    #[allow(clippy::too_many_arguments)]
    fn augment_admissible(
        &mut self,
        source: usize,
        sink: usize,
        limit: i64,
        potential: &[f64],
        dead: &mut [bool],
        on_path: &mut [bool],
        next_arc: &mut [usize],
    ) -> i64 {
        let mut path: Vec<usize> = Vec::new();
        let mut u = source;
        on_path[source] = true;
        loop {
            if u == sink {
                let bottleneck = path.iter().fold(limit, |b, &e| b.min(self.cap[e]));
                for &e in &path {
                    self.cap[e] -= bottleneck;
                    self.cap[e ^ 1] += bottleneck;
                }
                on_path[source] = false;
                for &e in &path {
                    on_path[self.to[e]] = false;
                }
                return bottleneck;
            }
            let mut advanced = false;
            while next_arc[u] < self.adj[u].len() {
                let e = self.adj[u][next_arc[u]];
                let v = self.to[e];
                if !dead[v] && !on_path[v] && self.admissible(e, potential) {
                    path.push(e);
                    on_path[v] = true;
                    u = v;
                    advanced = true;
                    break;
                }
                next_arc[u] += 1;
            }
            if advanced {
                continue;
            }
            dead[u] = true;
            on_path[u] = false;
            match path.pop() {
                Some(e) => {
                    u = self.to[e ^ 1];
                    next_arc[u] += 1;
                }
                None => return 0,
            }
        }
    }
}
