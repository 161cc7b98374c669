//! Offline optima and exact expectations.
//!
//! * [`max_weight_perfect_matching`]: the offline optimum `OPT(Ĝ)` of one
//!   realization, by the Hungarian algorithm.
//! * [`opt_value_from_counts`]: the same value computed from the arrival
//!   counts alone, used in the Monte Carlo inner loop.
//! * [`exact_dispatch_expectation`]: the exact law of DISPATCH from a dynamic
//!   program over availability sets.
//! * [`exact_opt_expectation`]: `E[OPT(Ĝ)]` by enumerating arrival-count
//!   vectors. `OPT` only depends on how many jobs of each type arrived, so
//!   `k^n` sequences collapse to `C(n + k - 1, k - 1)` count vectors.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::dispatch::PreferenceTable;
use crate::format::round_sig;
use crate::mcf::MinCostFlow;
use crate::stats::CompensatedSum;
use crate::{ArrivalSequence, Error, ExpectationGraph, FlowSolution, Matching, Result};

/// Largest `n` accepted by the availability-set DP by default.
pub const DEFAULT_MAX_DP_WORKERS: usize = 20;
/// Hard ceiling of the DP (memory for `2^n` states).
pub const HARD_MAX_DP_WORKERS: usize = 24;
/// Largest `n` of the exact rational DP.
pub const MAX_RATIONAL_DP_WORKERS: usize = 10;
/// Default cap on the number of count vectors `C(n + k - 1, k - 1)`.
pub const DEFAULT_MAX_COUNT_VECTORS: u64 = 1_000_000;

/// An exact expectation, up to binary64 rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactExpectation {
    pub value: f64,
    /// `P(I_wj = 1)`, `n x k`.
    pub edge_probabilities: Option<Vec<Vec<f64>>>,
    /// `P(w in AW_t)`, row `t - 1`, column `w`.
    pub availability: Option<Vec<Vec<f64>>>,
    /// Number of DP states or count vectors visited.
    pub state_count: u64,
}

#[derive(Serialize)]
struct ExpectationJson {
    value: f64,
    state_count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    edge_probabilities: Option<Vec<Vec<f64>>>,
}

impl ExactExpectation {
    pub fn to_json(&self, with_edges: bool) -> serde_json::Value {
        let edges = if with_edges {
            self.edge_probabilities.as_ref().map(|rows| {
                rows.iter()
                    .map(|row| row.iter().map(|&x| round_sig(x)).collect())
                    .collect()
            })
        } else {
            None
        };
        serde_json::to_value(ExpectationJson {
            value: round_sig(self.value),
            state_count: self.state_count,
            edge_probabilities: edges,
        })
        .expect("expectation serializes")
    }
}

/// Maximum-weight perfect matching on `n x n` weights (`weight[row][col]`),
/// returning the column of every row. Potentials-based Hungarian algorithm,
/// `O(n^3)`.
pub fn hungarian_max(weight: &[Vec<f64>]) -> Vec<usize> {
    let n = weight.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is a sentinel. Costs are negated weights.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        row_of_col[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = row_of_col[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let cur = -weight[r - 1][col - 1] - u[r] - v[col];
                if cur < minv[col] {
                    minv[col] = cur;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[row_of_col[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if row_of_col[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            row_of_col[col0] = row_of_col[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for col in 1..=n {
        col_of_row[row_of_col[col] - 1] = col - 1;
    }
    col_of_row
}

/// `OPT(Ĝ)`: the best perfect matching of workers to the arrived jobs.
pub fn max_weight_perfect_matching(
    instance: &ExpectationGraph,
    sequence: &ArrivalSequence,
) -> Result<Matching> {
    let n = instance.n();
    if sequence.len() != n {
        return Err(Error::Dimension(format!(
            "arrival sequence has {} entries, expected n = {n}",
            sequence.len()
        )));
    }
    // rows are jobs (time steps), columns workers
    let weight: Vec<Vec<f64>> = sequence
        .types()
        .iter()
        .map(|&j| (0..n).map(|w| instance.utility(w, j)).collect())
        .collect();
    let assignment = hungarian_max(&weight);
    Matching::new(instance, sequence, assignment)
}

/// `OPT(Ĝ)` from the arrival counts only.
///
/// With non-negative utilities on a complete graph, the best perfect matching
/// is worth as much as the best matching of any cardinality, and only
/// positive-utility edges can contribute to the latter. The problem is solved
/// as a min-cost flow restricted to those edges, stopping once no augmenting
/// path gains utility.
pub fn opt_value_from_counts(instance: &ExpectationGraph, counts: &[usize]) -> f64 {
    let (n, k) = (instance.n(), instance.k());
    let types: Vec<usize> = (0..k).filter(|&j| counts[j] > 0).collect();
    let workers: Vec<usize> = (0..n)
        .filter(|&w| types.iter().any(|&j| instance.utility(w, j) > 0.0))
        .collect();
    if workers.is_empty() {
        return 0.0;
    }
    let (m, t) = (workers.len(), types.len());
    let source = 0;
    let sink = 1 + m + t;
    let mut graph = MinCostFlow::new(sink + 1);
    let mut arcs = Vec::new();
    for (slot_w, &w) in workers.iter().enumerate() {
        graph.add_edge(source, 1 + slot_w, 1, 0.0);
        for (slot_j, &j) in types.iter().enumerate() {
            let u = instance.utility(w, j);
            if u > 0.0 {
                arcs.push((graph.add_edge(1 + slot_w, 1 + m + slot_j, 1, -u), u));
            }
        }
    }
    for (slot_j, &j) in types.iter().enumerate() {
        graph.add_edge(1 + m + slot_j, sink, counts[j] as i64, 0.0);
    }
    graph.run(source, sink, m as i64, true);
    arcs.iter()
        .filter(|&&(e, _)| graph.flow(e) > 0)
        .map(|&(_, u)| u)
        .sum()
}

pub fn realization_opt_value(instance: &ExpectationGraph, sequence: &ArrivalSequence) -> f64 {
    opt_value_from_counts(instance, &sequence.counts(instance.k()))
}

/// Exact `E[DISPATCH]`, `P(I_wj = 1)` and `P(w in AW_t)` for `n <= 20`.
pub fn exact_dispatch_expectation(
    instance: &ExpectationGraph,
    flow: &FlowSolution,
) -> Result<ExactExpectation> {
    exact_dispatch_expectation_with(instance, flow, DEFAULT_MAX_DP_WORKERS)
}

/// DP over availability sets `S`. From state `S` (step `t = n - |S| + 1`)
/// an arrival of type `j` assigns `w in S` with probability
/// `q_j(w) + (sum of q_j over busy workers) / |S|`, with `q_j` the
/// preferred-worker law.
pub fn exact_dispatch_expectation_with(
    instance: &ExpectationGraph,
    flow: &FlowSolution,
    max_workers: usize,
) -> Result<ExactExpectation> {
    instance.ensure_valid()?;
    let n = instance.n();
    let k = instance.k();
    check_dp_size(n, max_workers.min(HARD_MAX_DP_WORKERS))?;
    let table = PreferenceTable::new(instance, flow)?;
    let active: Vec<(usize, f64, f64)> = instance
        .active_types()
        .map(|j| (j, instance.probability_f64(j), table.total(j) as f64))
        .collect();

    let full: usize = (1 << n) - 1;
    let mut mass = vec![CompensatedSum::new(); 1 << n];
    mass[full].add(1.0);
    let mut edges = vec![CompensatedSum::new(); n * k];
    let mut availability = vec![CompensatedSum::new(); n * n];
    let mut members = Vec::with_capacity(n);
    let mut states = 0u64;

    // Successors are subsets, hence numerically smaller.
    for set in (1..=full).rev() {
        let pi = mass[set].value();
        if pi == 0.0 {
            continue;
        }
        states += 1;
        members.clear();
        members.extend((0..n).filter(|&w| set >> w & 1 == 1));
        let m = members.len();
        let t = n - m;
        for &w in &members {
            availability[t * n + w].add(pi);
        }
        for &(j, p, total) in &active {
            let weights = table.weights(j);
            let inside: u64 = members.iter().map(|&w| weights[w]).sum();
            let blocked = (table.total(j) - inside) as f64;
            let denom = m as f64 * total;
            for &w in &members {
                let prob = (m as f64 * weights[w] as f64 + blocked) / denom;
                let c = pi * p * prob;
                if c != 0.0 {
                    edges[w * k + j].add(c);
                    mass[set & !(1 << w)].add(c);
                }
            }
        }
    }

    let edge_probabilities: Vec<Vec<f64>> = (0..n)
        .map(|w| (0..k).map(|j| edges[w * k + j].value()).collect())
        .collect();
    let value = (0..n)
        .flat_map(|w| (0..k).map(move |j| (w, j)))
        .map(|(w, j)| instance.utility(w, j) * edge_probabilities[w][j])
        .collect::<CompensatedSum>()
        .value();
    let availability = (0..n)
        .map(|t| (0..n).map(|w| availability[t * n + w].value()).collect())
        .collect();
    Ok(ExactExpectation {
        value,
        edge_probabilities: Some(edge_probabilities),
        availability: Some(availability),
        state_count: states,
    })
}

fn check_dp_size(n: usize, max_workers: usize) -> Result<()> {
    if n > max_workers {
        return Err(Error::Capacity(format!(
            "exact DP over 2^{n} availability sets exceeds the limit n <= {max_workers}"
        )));
    }
    Ok(())
}

/// The same DP in exact rational arithmetic, for `n <= 10`. Returns
/// `P(I_wj = 1)`.
pub fn exact_dispatch_edge_probabilities_rational(
    instance: &ExpectationGraph,
    flow: &FlowSolution,
) -> Result<Vec<Vec<BigRational>>> {
    instance.ensure_valid()?;
    let (n, k) = (instance.n(), instance.k());
    check_dp_size(n, MAX_RATIONAL_DP_WORKERS)?;
    let table = PreferenceTable::new(instance, flow)?;
    let ratio = |a: u64, b: u64| BigRational::new(BigInt::from(a), BigInt::from(b));

    let full: usize = (1 << n) - 1;
    let mut mass = vec![BigRational::zero(); 1 << n];
    mass[full] = ratio(1, 1);
    let mut edges = vec![vec![BigRational::zero(); k]; n];
    for set in (1..=full).rev() {
        if mass[set].is_zero() {
            continue;
        }
        let pi = mass[set].clone();
        let members: Vec<usize> = (0..n).filter(|&w| set >> w & 1 == 1).collect();
        let m = members.len() as u64;
        for j in instance.active_types() {
            let p = instance.probability(j);
            let weights = table.weights(j);
            let total = table.total(j);
            let inside: u64 = members.iter().map(|&w| weights[w]).sum();
            let blocked = total - inside;
            for &w in &members {
                let prob = ratio(m * weights[w] + blocked, m * total);
                let c = &pi * ratio(*p.numer(), *p.denom()) * prob;
                if !c.is_zero() {
                    edges[w][j] += &c;
                    mass[set & !(1 << w)] += c;
                }
            }
        }
    }
    Ok(edges)
}

/// Exact `E[OPT(Ĝ)]` by enumeration of arrival-count vectors.
pub fn exact_opt_expectation(instance: &ExpectationGraph) -> Result<ExactExpectation> {
    exact_opt_expectation_with(instance, DEFAULT_MAX_COUNT_VECTORS)
}

pub fn exact_opt_expectation_with(
    instance: &ExpectationGraph,
    max_count_vectors: u64,
) -> Result<ExactExpectation> {
    instance.ensure_valid()?;
    let n = instance.n();
    let active: Vec<usize> = instance.active_types().collect();
    let space = binomial(n + active.len() - 1, active.len() - 1);
    if space > max_count_vectors as f64 {
        return Err(Error::Capacity(format!(
            "{space} arrival-count vectors exceed the limit {max_count_vectors}"
        )));
    }
    let probs: Vec<f64> = active
        .iter()
        .map(|&j| instance.probability_f64(j))
        .collect();
    let mut counts = vec![0usize; instance.k()];
    let mut total = CompensatedSum::new();
    let mut visited = 0u64;
    enumerate_counts(
        &active,
        &probs,
        0,
        n,
        1.0,
        &mut counts,
        &mut |counts, weight| {
            visited += 1;
            total.add(weight * opt_value_from_counts(instance, counts));
        },
    );
    Ok(ExactExpectation {
        value: total.value(),
        edge_probabilities: None,
        availability: None,
        state_count: visited,
    })
}

/// Walks all ways to spread `remaining` arrivals over `active[slot..]`,
/// carrying the multinomial probability as a product of binomial terms.
fn enumerate_counts(
    active: &[usize],
    probs: &[f64],
    slot: usize,
    remaining: usize,
    weight: f64,
    counts: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize], f64),
) {
    let j = active[slot];
    if slot + 1 == active.len() {
        counts[j] = remaining;
        visit(counts, weight * probs[slot].powi(remaining as i32));
        counts[j] = 0;
        return;
    }
    for c in 0..=remaining {
        counts[j] = c;
        let w = weight * binomial(remaining, c) * probs[slot].powi(c as i32);
        enumerate_counts(active, probs, slot + 1, remaining - c, w, counts, visit);
    }
    counts[j] = 0;
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Converts a rational matrix to floats.
pub fn to_f64_matrix(rows: &[Vec<BigRational>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| row.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
        .collect()
}
