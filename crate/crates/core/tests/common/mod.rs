//! Brute-force oracles shared by the integration tests. None of them reuses
//! the library's solvers.

#![allow(dead_code)]

use iid_dispatch::instance::generate_random_instance;
use iid_dispatch::{ExpectationGraph, FlowSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best total weight of a perfect assignment of rows to columns, over all
/// permutations.
pub fn brute_force_matching(weight: &[Vec<f64>]) -> f64 {
    fn go(row: usize, used: &mut [bool], weight: &[Vec<f64>]) -> f64 {
        if row == weight.len() {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for col in 0..used.len() {
            if !used[col] {
                used[col] = true;
                best = best.max(weight[row][col] + go(row + 1, used, weight));
                used[col] = false;
            }
        }
        best
    }
    go(0, &mut vec![false; weight.len()], weight)
}

/// Optimum of the scaled transportation problem by enumerating every basis
/// (spanning tree of the worker/type graph) and solving it by leaf peeling.
/// Returns the objective of the best basic feasible solution, divided by `D`.
pub fn vertex_enumeration_tpp(g: &ExpectationGraph) -> f64 {
    let (n, k) = (g.n(), g.k());
    let d = g.denominator() as i128;
    let mut balance: Vec<i128> = vec![d; n];
    balance.extend(g.numerators().iter().map(|&x| n as i128 * x as i128));
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|w| (0..k).map(move |j| (w, j))).collect();
    let size = n + k - 1;
    let mut best = f64::NEG_INFINITY;
    for basis in combinations(edges.len(), size) {
        let tree: Vec<(usize, usize)> = basis.iter().map(|&i| edges[i]).collect();
        if let Some(flow) = peel(&tree, n, k, &balance) {
            let value: f64 = tree
                .iter()
                .zip(&flow)
                .map(|(&(w, j), &f)| g.utility(w, j) * f as f64)
                .sum();
            best = best.max(value / d as f64);
        }
    }
    best
}

fn combinations(m: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(r);
    fn go(start: usize, m: usize, r: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == r {
            out.push(current.clone());
            return;
        }
        for i in start..m {
            if m - i < r - current.len() {
                break;
            }
            current.push(i);
            go(i + 1, m, r, current, out);
            current.pop();
        }
    }
    go(0, m, r, &mut current, &mut out);
    out
}

/// Flow on the edges of a spanning tree meeting every balance, or `None` if
/// the edges contain a cycle or some flow would be negative.
fn peel(tree: &[(usize, usize)], n: usize, k: usize, balance: &[i128]) -> Option<Vec<i128>> {
    let nodes = n + k;
    let ends: Vec<(usize, usize)> = tree.iter().map(|&(w, j)| (w, n + j)).collect();
    let mut degree = vec![0usize; nodes];
    for &(a, b) in &ends {
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut residual = balance.to_vec();
    let mut flow = vec![0i128; tree.len()];
    let mut removed = vec![false; tree.len()];
    for _ in 0..tree.len() {
        let leaf = (0..nodes).find(|&v| degree[v] == 1)?;
        let e = (0..tree.len())
            .find(|&e| !removed[e] && (ends[e].0 == leaf || ends[e].1 == leaf))
            .expect("leaf has an edge");
        let other = if ends[e].0 == leaf {
            ends[e].1
        } else {
            ends[e].0
        };
        let amount = residual[leaf];
        if amount < 0 {
            return None;
        }
        flow[e] = amount;
        residual[leaf] = 0;
        residual[other] -= amount;
        removed[e] = true;
        degree[leaf] -= 1;
        degree[other] -= 1;
    }
    // n + k - 1 edges with no cycle reach every node.
    if residual.iter().any(|&r| r != 0) {
        return None;
    }
    Some(flow)
}

/// `E[DISPATCH]` and `P(I_wj = 1)` by walking the whole decision tree: every
/// arrival type, preferred worker and fallback choice.
pub fn tree_dispatch(g: &ExpectationGraph, flow: &FlowSolution) -> (f64, Vec<Vec<f64>>) {
    let (n, k) = (g.n(), g.k());
    let d = g.denominator() as f64;
    let probs: Vec<f64> = g.numerators().iter().map(|&x| x as f64 / d).collect();
    let prefer: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let total: u64 = (0..n).map(|w| flow.scaled(w, j)).sum();
            (0..n)
                .map(|w| {
                    if total == 0 {
                        0.0
                    } else {
                        flow.scaled(w, j) as f64 / total as f64
                    }
                })
                .collect()
        })
        .collect();
    struct Walk<'a> {
        g: &'a ExpectationGraph,
        probs: Vec<f64>,
        prefer: Vec<Vec<f64>>,
        value: f64,
        edges: Vec<Vec<f64>>,
    }
    fn go(s: &mut Walk, available: &mut Vec<bool>, weight: f64) {
        let free: Vec<usize> = (0..available.len()).filter(|&w| available[w]).collect();
        if free.is_empty() {
            return;
        }
        for j in 0..s.probs.len() {
            let pj = s.probs[j];
            if pj == 0.0 {
                continue;
            }
            for w in 0..available.len() {
                let q = s.prefer[j][w];
                if q == 0.0 {
                    continue;
                }
                let choices: Vec<(usize, f64)> = if available[w] {
                    vec![(w, 1.0)]
                } else {
                    free.iter().map(|&a| (a, 1.0 / free.len() as f64)).collect()
                };
                for (a, c) in choices {
                    let branch = weight * pj * q * c;
                    s.value += branch * s.g.utility(a, j);
                    s.edges[a][j] += branch;
                    available[a] = false;
                    go(s, available, branch);
                    available[a] = true;
                }
            }
        }
    }
    let mut walk = Walk {
        g,
        probs,
        prefer,
        value: 0.0,
        edges: vec![vec![0.0; k]; n],
    };
    go(&mut walk, &mut vec![true; n], 1.0);
    (walk.value, walk.edges)
}

/// `E[OPT]` by summing over all `k^n` arrival sequences.
pub fn sequence_opt_expectation(g: &ExpectationGraph) -> f64 {
    let (n, k) = (g.n(), g.k());
    let d = g.denominator() as f64;
    let mut total = 0.0;
    let mut seq = vec![0usize; n];
    loop {
        let p: f64 = seq.iter().map(|&j| g.numerators()[j] as f64 / d).product();
        if p > 0.0 {
            let weight: Vec<Vec<f64>> = seq
                .iter()
                .map(|&j| (0..n).map(|w| g.utility(w, j)).collect())
                .collect();
            total += p * brute_force_matching(&weight);
        }
        let mut i = 0;
        while i < n {
            seq[i] += 1;
            if seq[i] < k {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == n {
            return total;
        }
    }
}

/// Random instance with `n <= n_max`, `k <= k_max` and `k <= D <= d_max`.
pub fn random_instance(seed: u64, n_max: usize, k_max: usize, d_max: u64) -> ExpectationGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=n_max);
    let k = rng.random_range(1..=k_max);
    let d = rng.random_range(k as u64..=d_max.max(k as u64));
    let bound = [1.0, 5.0, 10.0][rng.random_range(0..3)];
    generate_random_instance(n, k, bound, d, seed.wrapping_mul(31).wrapping_add(7)).unwrap()
}

/// Every row and column sum of the flow, exactly.
pub fn assert_flow_feasible(g: &ExpectationGraph, flow: &FlowSolution) {
    let (n, k) = (g.n(), g.k());
    assert_eq!(flow.denominator(), g.denominator());
    for w in 0..n {
        let row: u64 = (0..k).map(|j| flow.scaled(w, j)).sum();
        assert_eq!(row, g.denominator(), "row w{}", w + 1);
    }
    for j in 0..k {
        let col: u64 = (0..n).map(|w| flow.scaled(w, j)).sum();
        assert_eq!(col, n as u64 * g.numerators()[j], "column j{}", j + 1);
    }
}
