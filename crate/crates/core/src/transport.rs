//! Exact solution of the fractional transportation problem on the
//! expectation graph.
//!
//! Every worker supplies one unit, job type `j` demands `r_j = n * p_j`, and
//! the total utility is maximized. Scaling by the shared probability
//! denominator `D` turns this into an integer transportation problem (supply
//! `D` per worker, demand `n * numerators[j]` per type) whose polytope is
//! integral, so an integral optimum divided by `D` is an exact rational
//! optimum of the original problem.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::mcf::{MinCostFlow, INF_CAP};
use crate::{Error, ExpectationGraph, Result};

/// Default cap on the scaled total supply `n * D`.
pub const DEFAULT_MAX_TOTAL_SUPPLY: u64 = 100_000_000;

/// Slack allowed when checking the dual certificate.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct TppOptions {
    pub max_total_supply: u64,
}

impl Default for TppOptions {
    fn default() -> Self {
        Self {
            max_total_supply: DEFAULT_MAX_TOTAL_SUPPLY,
        }
    }
}

/// Optimal flow `f*` stored as integer numerators over one denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    n: usize,
    k: usize,
    denominator: u64,
    numerators: Vec<u64>,
    objective: f64,
    duals: Option<Duals>,
}

/// Dual prices: `worker[w] + job_type[j] >= u_wj` everywhere, with equality
/// wherever `f*_wj > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Duals {
    pub worker: Vec<f64>,
    pub job_type: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FlowFile {
    objective: f64,
    flow_numerators: Vec<Vec<u64>>,
    flow_denominator: u64,
}

impl FlowSolution {
    /// Wraps scaled flows without checking feasibility; the objective is
    /// recomputed from `instance`. Use [`FlowSolution::violations`] to check.
    pub fn from_scaled(
        instance: &ExpectationGraph,
        numerators: Vec<Vec<u64>>,
        denominator: u64,
    ) -> Result<Self> {
        let (n, k) = (instance.n(), instance.k());
        if numerators.len() != n || numerators.iter().any(|row| row.len() != k) {
            return Err(Error::Dimension(format!(
                "flow must be {n}x{k} to match the instance"
            )));
        }
        if denominator == 0 {
            return Err(Error::Dimension("flow denominator is zero".into()));
        }
        let numerators: Vec<u64> = numerators.into_iter().flatten().collect();
        let objective = objective_of(instance, &numerators, denominator);
        Ok(Self {
            n,
            k,
            denominator,
            numerators,
            objective,
            duals: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// Scaled flow `D * f*_wj`.
    #[inline]
    pub fn scaled(&self, worker: usize, job_type: usize) -> u64 {
        self.numerators[worker * self.k + job_type]
    }

    pub fn flow(&self, worker: usize, job_type: usize) -> Ratio<u64> {
        Ratio::new(self.scaled(worker, job_type), self.denominator)
    }

    pub fn flow_f64(&self, worker: usize, job_type: usize) -> f64 {
        self.scaled(worker, job_type) as f64 / self.denominator as f64
    }

    pub fn scaled_rows(&self) -> Vec<Vec<u64>> {
        self.numerators
            .chunks(self.k.max(1))
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn duals(&self) -> Option<&Duals> {
        self.duals.as_ref()
    }

    /// Exact feasibility violations against `instance`: unit row sums and
    /// column sums equal to `r_j`, compared in integers with no tolerance.
    pub fn violations(&self, instance: &ExpectationGraph) -> Vec<String> {
        let mut out = Vec::new();
        if (self.n, self.k) != (instance.n(), instance.k()) {
            out.push(format!(
                "flow is {}x{}, instance is {}x{}",
                self.n,
                self.k,
                instance.n(),
                instance.k()
            ));
            return out;
        }
        let d = self.denominator as u128;
        for w in 0..self.n {
            let row: u128 = (0..self.k).map(|j| self.scaled(w, j) as u128).sum();
            if row != d {
                out.push(format!("row w{} sums to {row}/{d}, expected 1", w + 1));
            }
        }
        for j in 0..self.k {
            let col: u128 = (0..self.n).map(|w| self.scaled(w, j) as u128).sum();
            // col / D == n * num_j / D_inst
            let lhs = col * instance.denominator() as u128;
            let rhs = self.n as u128 * instance.numerators()[j] as u128 * d;
            if lhs != rhs {
                out.push(format!(
                    "column j{} sums to {col}/{d}, expected r_j = {}",
                    j + 1,
                    instance.expected_count(j)
                ));
            }
        }
        out
    }

    /// Checks feasibility exactly and optimality through the dual prices;
    /// prices are derived from the residual graph if none are attached.
    pub fn certify(&self, instance: &ExpectationGraph) -> std::result::Result<(), String> {
        let violations = self.violations(instance);
        if !violations.is_empty() {
            return Err(violations.join("; "));
        }
        let derived;
        let duals = match &self.duals {
            Some(d) => d,
            None => {
                let utility: Vec<f64> = instance.utility_rows().concat();
                derived = residual_duals(self.n, self.k, &self.numerators, &utility)
                    .ok_or("residual graph has an improving cycle: flow is not optimal")?;
                &derived
            }
        };
        let scale = instance
            .utility_rows()
            .iter()
            .flatten()
            .fold(1.0f64, |m, u| m.max(u.abs()));
        let tol = CERTIFICATE_TOLERANCE * scale;
        for w in 0..self.n {
            for j in 0..self.k {
                let u = instance.utility(w, j);
                let price = duals.worker[w] + duals.job_type[j];
                if u > price + tol {
                    return Err(format!(
                        "dual infeasible at (w{}, j{}): {u} > {price}",
                        w + 1,
                        j + 1
                    ));
                }
                if self.scaled(w, j) > 0 && (price - u).abs() > tol {
                    return Err(format!(
                        "complementary slackness fails at (w{}, j{}): price {price}, utility {u}",
                        w + 1,
                        j + 1
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = FlowFile {
            objective: crate::format::round_sig(self.objective),
            flow_numerators: self.scaled_rows(),
            flow_denominator: self.denominator,
        };
        serde_json::to_string(&file).expect("flow serializes")
    }

    /// Parses a flow file for `instance`. The stored objective is ignored and
    /// recomputed.
    pub fn from_json(text: &str, instance: &ExpectationGraph) -> Result<Self> {
        let file: FlowFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_scaled(instance, file.flow_numerators, file.flow_denominator)
    }
}

fn objective_of(instance: &ExpectationGraph, numerators: &[u64], denominator: u64) -> f64 {
    let k = instance.k();
    let total: f64 = numerators
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(idx, &f)| instance.utility(idx / k, idx % k) * f as f64)
        .sum();
    total / denominator as f64
}

/// Integral optimum of a balanced transportation problem.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// Row-major `supplies.len() x demands.len()` integer flows.
    pub flow: Vec<u64>,
    pub objective: f64,
}

/// Maximizes `sum u[i][j] * x[i][j]` subject to row sums `supplies[i]`,
/// column sums `demands[j]` and `x >= 0`. `utility` is row-major.
pub fn solve_transport(
    supplies: &[u64],
    demands: &[u64],
    utility: &[f64],
) -> Result<TransportSolution> {
    let (m, k) = (supplies.len(), demands.len());
    if utility.len() != m * k {
        return Err(Error::Dimension(format!(
            "utility has {} entries, expected {m}x{k}",
            utility.len()
        )));
    }
    let total_supply: u128 = supplies.iter().map(|&s| s as u128).sum();
    let total_demand: u128 = demands.iter().map(|&d| d as u128).sum();
    if total_supply != total_demand {
        return Err(Error::InvalidArgument(format!(
            "unbalanced transportation problem: supply {total_supply}, demand {total_demand}"
        )));
    }
    let total = i64::try_from(total_supply)
        .ok()
        .filter(|&t| t < INF_CAP)
        .ok_or_else(|| Error::Capacity("total supply does not fit in i64".into()))?;

    let source = 0;
    let sink = m + k + 1;
    let mut graph = MinCostFlow::new(m + k + 2);
    for (i, &s) in supplies.iter().enumerate() {
        if s > 0 {
            graph.add_edge(source, 1 + i, s as i64, 0.0);
        }
    }
    let mut arcs = Vec::with_capacity(m * k);
    for i in 0..m {
        for j in 0..k {
            arcs.push(graph.add_edge(1 + i, 1 + m + j, INF_CAP, -utility[i * k + j]));
        }
    }
    for (j, &d) in demands.iter().enumerate() {
        if d > 0 {
            graph.add_edge(1 + m + j, sink, d as i64, 0.0);
        }
    }
    let pushed = graph.run(source, sink, total, false);
    debug_assert_eq!(
        pushed, total,
        "complete bipartite problem is always feasible"
    );

    let flow: Vec<u64> = arcs.iter().map(|&e| graph.flow(e) as u64).collect();
    let objective = flow
        .iter()
        .zip(utility)
        .filter(|(&f, _)| f > 0)
        .map(|(&f, &u)| f as f64 * u)
        .sum();
    Ok(TransportSolution { flow, objective })
}

/// Dual prices for a feasible transportation flow, from shortest-path
/// distances in its residual graph. `None` if the residual graph has a
/// negative cycle, i.e. the flow is not optimal.
pub fn residual_duals(m: usize, k: usize, flow: &[u64], utility: &[f64]) -> Option<Duals> {
    // Nodes 0..m are rows, m..m+k columns; every node starts at distance 0.
    let mut dist = vec![0.0f64; m + k];
    let mut converged = false;
    for _ in 0..=(m + k) {
        let mut changed = false;
        for i in 0..m {
            for j in 0..k {
                let u = utility[i * k + j];
                // row -> column, cost -u, always residual
                let via = dist[i] - u;
                if via < dist[m + j] - 1e-13 * (1.0 + via.abs()) {
                    dist[m + j] = via;
                    changed = true;
                }
                // column -> row, cost +u, residual when flow is positive
                if flow[i * k + j] > 0 {
                    let via = dist[m + j] + u;
                    if via < dist[i] - 1e-13 * (1.0 + via.abs()) {
                        dist[i] = via;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    converged.then(|| Duals {
        worker: dist[..m].to_vec(),
        job_type: dist[m..].iter().map(|d| -d).collect(),
    })
}

/// Solves TPP(G) with the default size bound.
pub fn solve_tpp(instance: &ExpectationGraph) -> Result<FlowSolution> {
    solve_tpp_with(instance, TppOptions::default())
}

pub fn solve_tpp_with(instance: &ExpectationGraph, options: TppOptions) -> Result<FlowSolution> {
    instance.ensure_valid()?;
    let (n, k) = (instance.n(), instance.k());
    let d = instance.denominator();
    let total = (n as u128) * (d as u128);
    if total > options.max_total_supply as u128 {
        return Err(Error::Capacity(format!(
            "scaled transportation problem has total supply n*D = {total}, limit {}",
            options.max_total_supply
        )));
    }
    let supplies = vec![d; n];
    let demands: Vec<u64> = instance
        .numerators()
        .iter()
        .map(|&num| num * n as u64)
        .collect();
    let utility: Vec<f64> = instance.utility_rows().into_iter().flatten().collect();
    let solution = solve_transport(&supplies, &demands, &utility)?;
    let duals = residual_duals(n, k, &solution.flow, &utility);
    Ok(FlowSolution {
        n,
        k,
        denominator: d,
        objective: solution.objective / d as f64,
        numerators: solution.flow,
        duals,
    })
}

/// `TPP(G)`, an upper bound on `E[OPT]`.
pub fn tpp_upper_bound(instance: &ExpectationGraph) -> Result<f64> {
    Ok(solve_tpp(instance)?.objective())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_lower_bound_instance, generate_random_instance};

    #[test]
    fn figure1_objective_is_eight() {
        let g = crate::example::instance();
        let f = solve_tpp(&g).unwrap();
        assert_eq!(f.objective(), 8.0);
        assert!(f.violations(&g).is_empty());
        f.certify(&g).unwrap();
    }

    #[test]
    fn figure1_published_flow_is_feasible_and_optimal_value() {
        let g = crate::example::instance();
        let f = crate::example::flow();
        assert!(f.violations(&g).is_empty());
        assert_eq!(f.objective(), 8.0);
        assert_eq!(f.flow(3, 0), Ratio::new(1, 2));
    }

    #[test]
    fn single_edge() {
        let g = ExpectationGraph::new(vec![vec![5.0]], vec![1], 1).unwrap();
        let f = solve_tpp(&g).unwrap();
        assert_eq!(f.flow(0, 0), Ratio::from_integer(1));
        assert_eq!(f.objective(), 5.0);
    }

    #[test]
    fn lower_bound_flows() {
        let g = generate_lower_bound_instance(3, Ratio::new(3, 4)).unwrap();
        let f = solve_tpp(&g).unwrap();
        assert_eq!(f.objective(), 2.25);
        for w in 0..3 {
            assert_eq!(f.flow(w, w), Ratio::new(3, 4));
            assert_eq!(f.flow(w, 3), Ratio::new(1, 4));
        }
        let g = generate_lower_bound_instance(2, Ratio::new(1, 2)).unwrap();
        assert_eq!(tpp_upper_bound(&g).unwrap(), 1.0);
    }

    #[test]
    fn rejects_invalid_and_oversized() {
        let bad = ExpectationGraph::from_parts(vec![vec![1.0]], vec![2], 1).unwrap();
        assert!(matches!(solve_tpp(&bad), Err(Error::Invalid(_))));
        let g = generate_random_instance(4, 2, 1.0, 1000, 3).unwrap();
        let tight = TppOptions {
            max_total_supply: 3999,
        };
        assert!(matches!(solve_tpp_with(&g, tight), Err(Error::Capacity(_))));
        assert!(solve_tpp_with(
            &g,
            TppOptions {
                max_total_supply: 4000
            }
        )
        .is_ok());
    }

    #[test]
    fn shifting_utilities_adds_n_times_c() {
        for seed in 0..20 {
            let g = generate_random_instance(4, 3, 5.0, 6, seed).unwrap();
            let c = 1.75;
            let shifted_rows = g
                .utility_rows()
                .into_iter()
                .map(|row| row.into_iter().map(|u| u + c).collect())
                .collect();
            let shifted =
                ExpectationGraph::new(shifted_rows, g.numerators().to_vec(), g.denominator())
                    .unwrap();
            let a = tpp_upper_bound(&g).unwrap();
            let b = tpp_upper_bound(&shifted).unwrap();
            assert!((b - a - 4.0 * c).abs() < 1e-9, "seed {seed}: {a} vs {b}");
        }
    }

    #[test]
    fn corrupted_flow_is_reported() {
        let g = crate::example::instance();
        let mut rows = crate::example::flow().scaled_rows();
        rows[1][0] += rows[0][0];
        rows[0][0] = 0;
        let bad = FlowSolution::from_scaled(&g, rows, 10).unwrap();
        let v = bad.violations(&g);
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v[0].contains("w1"));
        assert!(matches!(
            FlowSolution::from_scaled(&g, vec![vec![1; 2]; 5], 10),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let g = generate_lower_bound_instance(3, Ratio::new(3, 4)).unwrap();
        let f = solve_tpp(&g).unwrap();
        let text = f.to_json();
        assert!(text.contains("\"objective\":2.25"), "{text}");
        let back = FlowSolution::from_json(&text, &g).unwrap();
        assert_eq!(back.scaled_rows(), f.scaled_rows());
        assert_eq!(back.objective(), f.objective());
    }

    #[test]
    fn detects_suboptimal_flow() {
        let g = crate::example::instance();
        // Feasible but swaps workers 1 and 3 between types 1 and 2.
        let rows = vec![
            vec![0, 10, 0],
            vec![10, 0, 0],
            vec![10, 0, 0],
            vec![5, 0, 5],
            vec![0, 5, 5],
        ];
        let flow = FlowSolution::from_scaled(&g, rows, 10).unwrap();
        assert!(flow.violations(&g).is_empty());
        let utility: Vec<f64> = g.utility_rows().into_iter().flatten().collect();
        assert!(residual_duals(5, 3, &flow.numerators, &utility).is_none());
    }
}
