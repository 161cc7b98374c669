//! Monte Carlo replications, paired ratio estimates and the statistical
//! checks of the DISPATCH lemmas.
//!
//! Replication `i` of master seed `s` always sees the same arrival sequence
//! (common random numbers across policies and runs). Replications run on a
//! rayon pool of `jobs` threads; results are gathered in replication order,
//! so every aggregate is bit-identical for any thread count.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispatch::{
    greedy_policy, uniform_with, AssignmentEvent, Dispatcher, Policy, PreferenceTable,
};
use crate::instance::generate_lower_bound_instance;
use crate::oracle::{
    exact_dispatch_expectation_with, exact_opt_expectation_with, opt_value_from_counts,
    DEFAULT_MAX_COUNT_VECTORS, DEFAULT_MAX_DP_WORKERS,
};
use crate::rng::{sample_arrivals, Streams};
use crate::stats::{binomial_se, covariance, mean_se};
use crate::transport::solve_tpp;
use crate::{ArrivalSequence, Error, ExpectationGraph, FlowSolution, Matching, Result};

pub const DEFAULT_TRIALS: u64 = 100_000;

/// Standard-error multiple used for every statistical band.
pub const SE_BAND: f64 = 3.0;
/// Two-sided 95% normal quantile for confidence intervals.
pub const Z95: f64 = 1.959963984540054;

pub const LEMMA2_TOLERANCE: f64 = 0.005;
pub const LEMMA4_TOLERANCE: f64 = 0.01;
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// Replications per work unit of the lemma counters.
const CHUNK: u64 = 1024;

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {jobs} worker threads: {e}")))
}

fn par_trials<T: Send>(
    trials: u64,
    jobs: usize,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    pool(jobs)?.install(|| (0..trials).into_par_iter().map(f).collect())
}

/// Runs a policy, to a single value, on the sequence of `streams`.
struct Runner<'a> {
    instance: &'a ExpectationGraph,
    policy: Policy,
    table: Option<PreferenceTable>,
}

impl<'a> Runner<'a> {
    fn new(
        instance: &'a ExpectationGraph,
        policy: Policy,
        flow: Option<&FlowSolution>,
    ) -> Result<Self> {
        instance.ensure_valid()?;
        let table = match policy {
            Policy::Dispatch => {
                let flow = match flow {
                    Some(f) => f.clone(),
                    None => solve_tpp(instance)?,
                };
                Some(PreferenceTable::new(instance, &flow)?)
            }
            _ => None,
        };
        Ok(Self {
            instance,
            policy,
            table,
        })
    }

    fn value(&self, streams: Streams, types: &[usize]) -> Result<f64> {
        match (self.policy, &self.table) {
            (Policy::Dispatch, Some(table)) => {
                let mut d = Dispatcher::with_table(self.instance, table, streams)?;
                let mut total = 0.0;
                for &j in types {
                    total += d.step(j)?.utility;
                }
                Ok(total)
            }
            (Policy::Greedy, _) => {
                let seq = ArrivalSequence::from_types_unchecked(types.to_vec());
                Ok(greedy_policy(self.instance, &seq)?.0.value)
            }
            (Policy::Uniform, _) => {
                let seq = ArrivalSequence::from_types_unchecked(types.to_vec());
                Ok(uniform_with(self.instance, streams, &seq)?.0.value)
            }
            (Policy::Dispatch, None) => unreachable!("dispatch runner always has a table"),
        }
    }
}

/// Per-replication results of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub policy: Policy,
    pub master_seed: u64,
    pub values: Vec<f64>,
}

impl Simulation {
    pub fn mean_se(&self) -> (f64, f64) {
        mean_se(&self.values)
    }
}

/// The arrival sequence of replication `replication`.
pub fn replication_sequence(
    instance: &ExpectationGraph,
    master_seed: u64,
    replication: u64,
) -> ArrivalSequence {
    ArrivalSequence::from_types_unchecked(sample_arrivals(
        instance,
        Streams::new(master_seed, replication),
    ))
}

/// Runs `policy` on `sequence` with the policy stream of `replication`.
pub fn run_replication(
    policy: Policy,
    instance: &ExpectationGraph,
    flow: Option<&FlowSolution>,
    master_seed: u64,
    replication: u64,
    sequence: &ArrivalSequence,
) -> Result<(Matching, Vec<AssignmentEvent>)> {
    let streams = Streams::new(master_seed, replication);
    match policy {
        Policy::Dispatch => {
            let flow = flow.ok_or_else(|| {
                Error::InvalidArgument("DISPATCH needs a transportation flow".into())
            })?;
            let table = PreferenceTable::new(instance, flow)?;
            let mut d = Dispatcher::with_table(instance, &table, streams)?;
            let events = sequence
                .types()
                .iter()
                .map(|&j| d.step(j))
                .collect::<Result<Vec<_>>>()?;
            let assignment = events.iter().map(|e| e.assigned).collect();
            Ok((Matching::new(instance, sequence, assignment)?, events))
        }
        Policy::Greedy => greedy_policy(instance, sequence),
        Policy::Uniform => uniform_with(instance, streams, sequence),
    }
}

pub fn simulate(
    instance: &ExpectationGraph,
    policy: Policy,
    trials: u64,
    master_seed: u64,
    jobs: usize,
) -> Result<Simulation> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let runner = Runner::new(instance, policy, None)?;
    let values = par_trials(trials, jobs, |rep| {
        let streams = Streams::new(master_seed, rep);
        runner.value(streams, &sample_arrivals(instance, streams))
    })?;
    Ok(Simulation {
        policy,
        master_seed,
        values,
    })
}

/// Full DISPATCH traces of the first `trials` replications.
pub fn simulate_traces(
    instance: &ExpectationGraph,
    flow: &FlowSolution,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<Vec<AssignmentEvent>>> {
    let table = PreferenceTable::new(instance, flow)?;
    (0..trials)
        .map(|rep| {
            let streams = Streams::new(master_seed, rep);
            let mut d = Dispatcher::with_table(instance, &table, streams)?;
            sample_arrivals(instance, streams)
                .into_iter()
                .map(|j| d.step(j))
                .collect()
        })
        .collect()
}

/// Paired estimate of `E[ALG] / E[OPT]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub policy: String,
    pub alg_mean: f64,
    pub alg_se: f64,
    pub opt_mean: f64,
    pub opt_se: f64,
    pub ratio: f64,
    /// Delta-method standard error of the ratio of means.
    pub ratio_se: f64,
    pub ratio_ci: (f64, f64),
    pub trials: u64,
    pub master_seed: u64,
}

impl RatioEstimate {
    /// Estimates the ratio of expectations from paired per-replication
    /// values.
    pub fn from_pairs(policy: Policy, alg: &[f64], opt: &[f64], master_seed: u64) -> Result<Self> {
        let (alg_mean, alg_se) = mean_se(alg);
        let (opt_mean, opt_se) = mean_se(opt);
        if opt_mean <= 0.0 {
            return Err(Error::UndefinedRatio);
        }
        let ratio = alg_mean / opt_mean;
        let trials = alg.len() as f64;
        let var_a = alg_se * alg_se * trials;
        let var_o = opt_se * opt_se * trials;
        let cov = covariance(alg, opt, alg_mean, opt_mean);
        let var_ratio =
            ((var_a - 2.0 * ratio * cov + ratio * ratio * var_o) / (opt_mean * opt_mean)).max(0.0);
        let ratio_se = (var_ratio / trials).sqrt();
        Ok(Self {
            policy: policy.name().to_string(),
            alg_mean,
            alg_se,
            opt_mean,
            opt_se,
            ratio,
            ratio_se,
            ratio_ci: (ratio - Z95 * ratio_se, ratio + Z95 * ratio_se),
            trials: alg.len() as u64,
            master_seed,
        })
    }

    pub fn ci_half_width(&self) -> f64 {
        0.5 * (self.ratio_ci.1 - self.ratio_ci.0)
    }
}

/// Per-replication policy value and offline optimum on the same sequence.
pub fn simulate_paired(
    instance: &ExpectationGraph,
    policy: Policy,
    trials: u64,
    master_seed: u64,
    jobs: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let runner = Runner::new(instance, policy, None)?;
    let k = instance.k();
    let pairs = par_trials(trials, jobs, |rep| {
        let streams = Streams::new(master_seed, rep);
        let types = sample_arrivals(instance, streams);
        let alg = runner.value(streams, &types)?;
        let mut counts = vec![0; k];
        for &j in &types {
            counts[j] += 1;
        }
        Ok((alg, opt_value_from_counts(instance, &counts)))
    })?;
    Ok(pairs.into_iter().unzip())
}

pub fn estimate_ratio(
    instance: &ExpectationGraph,
    policy: Policy,
    trials: u64,
    master_seed: u64,
    jobs: usize,
) -> Result<RatioEstimate> {
    let (alg, opt) = simulate_paired(instance, policy, trials, master_seed, jobs)?;
    RatioEstimate::from_pairs(policy, &alg, &opt, master_seed)
}

/// One pass/fail line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub method: &'static str,
    /// Worst observed statistic (see `detail`).
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub n: usize,
    pub k: usize,
    pub trials: u64,
    pub master_seed: u64,
    pub rows: Vec<CheckRow>,
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, check: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.check == check)
    }
}

/// Largest `n` for which assignment uniformity is checked per full
/// availability set; above it, per (step, worker).
const MAX_SET_CONDITIONING: usize = 20;

#[derive(Debug, Clone, Default)]
struct LemmaCounts {
    preferred: Vec<u64>,
    /// `(t - 1) * n + w`
    available: Vec<u64>,
    /// `w * k + j`
    edges: Vec<u64>,
    /// availability set -> (occurrences, assignments per worker)
    by_set: BTreeMap<u64, (u64, Vec<u64>)>,
    /// `(t - 1) * n + w` -> times assigned while available
    by_step: Vec<u64>,
}

impl LemmaCounts {
    fn new(n: usize, k: usize) -> Self {
        Self {
            preferred: vec![0; n],
            available: vec![0; n * n],
            edges: vec![0; n * k],
            by_set: BTreeMap::new(),
            by_step: vec![0; n * n],
        }
    }

    fn merge(&mut self, other: LemmaCounts) {
        let add = |a: &mut Vec<u64>, b: Vec<u64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.preferred, other.preferred);
        add(&mut self.available, other.available);
        add(&mut self.edges, other.edges);
        add(&mut self.by_step, other.by_step);
        for (set, (occ, assigned)) in other.by_set {
            let entry = self
                .by_set
                .entry(set)
                .or_insert_with(|| (0, vec![0; assigned.len()]));
            entry.0 += occ;
            add(&mut entry.1, assigned);
        }
    }
}

fn count_chunk(
    instance: &ExpectationGraph,
    table: &PreferenceTable,
    master_seed: u64,
    reps: std::ops::Range<u64>,
) -> Result<LemmaCounts> {
    let (n, k) = (instance.n(), instance.k());
    let mut c = LemmaCounts::new(n, k);
    for rep in reps {
        let streams = Streams::new(master_seed, rep);
        let mut d = Dispatcher::with_table(instance, table, streams)?;
        for j in sample_arrivals(instance, streams) {
            let t = d.step_index();
            for &w in d.available() {
                c.available[(t - 1) * n + w] += 1;
            }
            let set = (n <= MAX_SET_CONDITIONING)
                .then(|| d.available().iter().fold(0u64, |m, &w| m | 1 << w));
            let e = d.step(j)?;
            c.preferred[e.preferred] += 1;
            c.edges[e.assigned * k + j] += 1;
            c.by_step[(t - 1) * n + e.assigned] += 1;
            if let Some(set) = set {
                let entry = c.by_set.entry(set).or_insert_with(|| (0, vec![0; n]));
                entry.0 += 1;
                entry.1[e.assigned] += 1;
            }
        }
    }
    Ok(c)
}

/// Empirical and (for small `n`) exact checks of the four lemmas behind the
/// 1/2 guarantee, using the optimal flow.
pub fn check_lemmas(
    instance: &ExpectationGraph,
    trials: u64,
    master_seed: u64,
    jobs: usize,
) -> Result<LemmaReport> {
    let flow = solve_tpp(instance)?;
    check_lemmas_with_flow(
        instance,
        &flow,
        trials,
        master_seed,
        jobs,
        DEFAULT_MAX_DP_WORKERS,
    )
}

/// As [`check_lemmas`] with a caller-supplied flow, which may be corrupted.
pub fn check_lemmas_with_flow(
    instance: &ExpectationGraph,
    flow: &FlowSolution,
    trials: u64,
    master_seed: u64,
    jobs: usize,
    max_exact_n: usize,
) -> Result<LemmaReport> {
    instance.ensure_valid()?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let (n, k) = (instance.n(), instance.k());
    let table = PreferenceTable::new(instance, flow)?;
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<LemmaCounts> = pool(jobs)?.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let reps = c * CHUNK..((c + 1) * CHUNK).min(trials);
                count_chunk(instance, &table, master_seed, reps)
            })
            .collect::<Result<_>>()
    })?;
    let mut counts = LemmaCounts::new(n, k);
    for part in parts {
        counts.merge(part);
    }

    let mut rows = Vec::new();
    let tf = trials as f64;
    let nf = n as f64;

    // Lemma 2: the preferred worker is uniform over all workers.
    let steps = tf * nf;
    let (worst_w, worst_dev) = (0..n)
        .map(|w| (w, (counts.preferred[w] as f64 / steps - 1.0 / nf).abs()))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    rows.push(CheckRow {
        check: "lemma2_preferred_uniform".into(),
        method: "empirical",
        observed: worst_dev,
        expected: 1.0 / nf,
        tolerance: LEMMA2_TOLERANCE,
        pass: worst_dev <= LEMMA2_TOLERANCE,
        detail: format!(
            "max |freq - 1/n| over {n} workers and {} steps, at w{}",
            trials * n as u64,
            worst_w + 1
        ),
    });

    // Lemma 3: given the availability set, the assigned worker is uniform on it.
    let mut cells = 0u64;
    let mut failures = 0u64;
    let mut worst_z = 0.0f64;
    let mut check_cell = |assigned: u64, occurrences: u64, m: usize| {
        let q = 1.0 / m as f64;
        let freq = assigned as f64 / occurrences as f64;
        let se = binomial_se(q, occurrences);
        let dev = (freq - q).abs();
        cells += 1;
        if dev > SE_BAND * se {
            failures += 1;
        }
        if se > 0.0 {
            worst_z = worst_z.max(dev / se);
        } else if dev > 0.0 {
            worst_z = f64::INFINITY;
        }
    };
    let conditioning = if n <= MAX_SET_CONDITIONING {
        for (&set, (occ, assigned)) in &counts.by_set {
            let m = set.count_ones() as usize;
            for w in (0..n).filter(|&w| set >> w & 1 == 1) {
                check_cell(assigned[w], *occ, m);
            }
        }
        "availability set"
    } else {
        for t in 1..=n {
            for w in 0..n {
                let occ = counts.available[(t - 1) * n + w];
                if occ > 0 {
                    check_cell(counts.by_step[(t - 1) * n + w], occ, n - t + 1);
                }
            }
        }
        "(step, worker)"
    };
    rows.push(CheckRow {
        check: "lemma3_assignment_uniform".into(),
        method: "empirical",
        observed: worst_z,
        expected: 0.0,
        tolerance: SE_BAND,
        pass: failures == 0,
        detail: format!(
            "max |freq - 1/m| / SE over {cells} cells conditioned on the {conditioning}; {failures} outside {SE_BAND} SE"
        ),
    });

    // Lemma 4: P(w in AW_t) = (n - t + 1) / n.
    let mut worst = (0.0f64, 1, 0);
    for t in 1..=n {
        let want = (n - t + 1) as f64 / nf;
        for w in 0..n {
            let dev = (counts.available[(t - 1) * n + w] as f64 / tf - want).abs();
            if dev > worst.0 {
                worst = (dev, t, w);
            }
        }
    }
    rows.push(CheckRow {
        check: "lemma4_availability".into(),
        method: "empirical",
        observed: worst.0,
        expected: 0.0,
        tolerance: LEMMA4_TOLERANCE,
        pass: worst.0 <= LEMMA4_TOLERANCE,
        detail: format!(
            "max |freq - (n-t+1)/n| over all (w, t), at w{} t={}",
            worst.2 + 1,
            worst.1
        ),
    });

    // Lemma 5: P(I_wj = 1) >= f*_wj / 2.
    let mut worst_margin = f64::INFINITY;
    let mut worst_cell = (0, 0);
    let mut bad = 0;
    for w in 0..n {
        for j in 0..k {
            let f = flow.flow_f64(w, j);
            if f == 0.0 {
                continue;
            }
            let freq = counts.edges[w * k + j] as f64 / tf;
            let se = binomial_se(freq, trials);
            let margin = freq - 0.5 * f;
            if margin < -SE_BAND * se {
                bad += 1;
            }
            let z = if se > 0.0 {
                margin / se
            } else if margin >= 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            if z < worst_margin {
                worst_margin = z;
                worst_cell = (w, j);
            }
        }
    }
    rows.push(CheckRow {
        check: "lemma5_edge_probability".into(),
        method: "empirical",
        observed: worst_margin,
        expected: 0.0,
        tolerance: -SE_BAND,
        pass: bad == 0,
        detail: format!(
            "min (freq - f*/2) / SE over edges with positive flow, at (w{}, j{})",
            worst_cell.0 + 1,
            worst_cell.1 + 1
        ),
    });

    if n <= max_exact_n {
        rows.extend(exact_lemma_rows(instance, flow, max_exact_n)?);
    }

    Ok(LemmaReport {
        n,
        k,
        trials,
        master_seed,
        rows,
    })
}

fn exact_lemma_rows(
    instance: &ExpectationGraph,
    flow: &FlowSolution,
    max_exact_n: usize,
) -> Result<Vec<CheckRow>> {
    let (n, k) = (instance.n(), instance.k());
    let nf = n as f64;
    let mut rows = Vec::new();

    let d = flow.denominator();
    let bad_rows: Vec<usize> = (0..n)
        .filter(|&w| (0..k).map(|j| flow.scaled(w, j)).sum::<u64>() != d)
        .collect();
    let worst_row = (0..n)
        .map(|w| ((0..k).map(|j| flow.scaled(w, j)).sum::<u64>() as f64 / d as f64 - 1.0).abs())
        .fold(0.0, f64::max);
    rows.push(CheckRow {
        check: "lemma2_flow_row_sums".into(),
        method: "exact",
        observed: worst_row,
        expected: 0.0,
        tolerance: 0.0,
        pass: bad_rows.is_empty(),
        detail: if bad_rows.is_empty() {
            "every row of f* sums to exactly 1".into()
        } else {
            format!(
                "rows {} of f* do not sum to 1",
                bad_rows
                    .iter()
                    .map(|w| format!("w{}", w + 1))
                    .collect::<Vec<_>>()
                    .join(",")
            )
        },
    });

    let exact = exact_dispatch_expectation_with(instance, flow, max_exact_n)?;
    let availability = exact.availability.as_ref().expect("DP fills availability");
    let worst_avail = (0..n)
        .flat_map(|t| (0..n).map(move |w| (t, w)))
        .map(|(t, w)| (availability[t][w] - (n - t) as f64 / nf).abs())
        .fold(0.0, f64::max);
    rows.push(CheckRow {
        check: "lemma4_availability".into(),
        method: "exact",
        observed: worst_avail,
        expected: 0.0,
        tolerance: EXACT_TOLERANCE,
        pass: worst_avail <= EXACT_TOLERANCE,
        detail: "max |P(w in AW_t) - (n-t+1)/n| from the availability-set DP".into(),
    });

    let edges = exact.edge_probabilities.as_ref().expect("DP fills edges");
    let worst_margin = (0..n)
        .flat_map(|w| (0..k).map(move |j| (w, j)))
        .map(|(w, j)| edges[w][j] - 0.5 * flow.flow_f64(w, j))
        .fold(f64::INFINITY, f64::min);
    rows.push(CheckRow {
        check: "lemma5_edge_probability".into(),
        method: "exact",
        observed: worst_margin,
        expected: 0.0,
        tolerance: -EXACT_TOLERANCE,
        pass: worst_margin >= -EXACT_TOLERANCE,
        detail: "min P(I_wj = 1) - f*_wj / 2 from the availability-set DP".into(),
    });

    let tpp = solve_tpp(instance)?.objective();
    rows.push(CheckRow {
        check: "theorem1_half_tpp".into(),
        method: "exact",
        observed: exact.value,
        expected: 0.5 * tpp,
        tolerance: EXACT_TOLERANCE,
        pass: exact.value >= 0.5 * tpp - EXACT_TOLERANCE,
        detail: "E[DISPATCH] >= TPP(G) / 2".into(),
    });
    Ok(rows)
}

/// The three inequalities `E[DISPATCH] >= TPP/2 >= E[OPT]/2` and
/// `E[DISPATCH] >= E[OPT]/2`, evaluated exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSummary {
    pub dispatch: f64,
    pub opt: f64,
    pub tpp: f64,
    pub dispatch_ge_half_tpp: bool,
    pub tpp_ge_opt: bool,
    pub dispatch_ge_half_opt: bool,
    pub dispatch_states: u64,
    pub opt_count_vectors: u64,
    #[serde(skip)]
    pub edge_probabilities: Vec<Vec<f64>>,
}

impl ExactSummary {
    pub fn all_pass(&self) -> bool {
        self.dispatch_ge_half_tpp && self.tpp_ge_opt && self.dispatch_ge_half_opt
    }
}

pub fn exact_summary(instance: &ExpectationGraph) -> Result<ExactSummary> {
    let flow = solve_tpp(instance)?;
    exact_summary_with_flow(
        instance,
        &flow,
        DEFAULT_MAX_DP_WORKERS,
        DEFAULT_MAX_COUNT_VECTORS,
    )
}

pub fn exact_summary_with_flow(
    instance: &ExpectationGraph,
    flow: &FlowSolution,
    max_exact_n: usize,
    max_count_vectors: u64,
) -> Result<ExactSummary> {
    let dispatch = exact_dispatch_expectation_with(instance, flow, max_exact_n)?;
    let opt = exact_opt_expectation_with(instance, max_count_vectors)?;
    let tpp = solve_tpp(instance)?.objective();
    Ok(ExactSummary {
        dispatch: dispatch.value,
        opt: opt.value,
        tpp,
        dispatch_ge_half_tpp: dispatch.value >= 0.5 * tpp - EXACT_TOLERANCE,
        tpp_ge_opt: opt.value <= tpp + EXACT_TOLERANCE,
        dispatch_ge_half_opt: dispatch.value >= 0.5 * opt.value - EXACT_TOLERANCE,
        dispatch_states: dispatch.state_count,
        opt_count_vectors: opt.state_count,
        edge_probabilities: dispatch.edge_probabilities.unwrap_or_default(),
    })
}

/// `E[OPT]` on the lower-bound instance: `n (1 - (1 - p/n)^n)`.
pub fn lower_bound_opt_closed_form(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    nf * (1.0 - (1.0 - p / nf).powi(n as i32))
}

/// Upper bound on `E[ALG]` for any online policy: `p (n + 1) / 2`.
pub fn lower_bound_alg_bound(n: usize, p: f64) -> f64 {
    0.5 * p * (n as f64 + 1.0)
}

/// Limit of the ratio bound as `n -> infinity`: `p / (2 (1 - e^-p))`.
pub fn lower_bound_limit_ratio(p: f64) -> f64 {
    0.5 * p / (1.0 - (-p).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub p: String,
    pub p_value: f64,
    pub estimate: RatioEstimate,
    pub opt_closed_form: f64,
    pub alg_upper_bound: f64,
    /// `alg_upper_bound / opt_closed_form`.
    pub ratio_bound: f64,
    pub limit_ratio: f64,
    /// `alg_mean <= alg_upper_bound + 3 alg_se`.
    pub upper_bound_holds: bool,
}

pub fn theorem2_sweep(
    n_values: &[usize],
    p_values: &[Ratio<u64>],
    trials: u64,
    master_seed: u64,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() || p_values.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one n and one p".into(),
        ));
    }
    let mut rows = Vec::new();
    for &n in n_values {
        for &p in p_values {
            let instance = generate_lower_bound_instance(n, p)?;
            let estimate = estimate_ratio(&instance, Policy::Dispatch, trials, master_seed, jobs)?;
            let pf = *p.numer() as f64 / *p.denom() as f64;
            let opt_closed_form = lower_bound_opt_closed_form(n, pf);
            let alg_upper_bound = lower_bound_alg_bound(n, pf);
            let upper_bound_holds =
                estimate.alg_mean <= alg_upper_bound + SE_BAND * estimate.alg_se;
            rows.push(SweepRow {
                n,
                p: p.to_string(),
                p_value: pf,
                estimate,
                opt_closed_form,
                alg_upper_bound,
                ratio_bound: alg_upper_bound / opt_closed_form,
                limit_ratio: lower_bound_limit_ratio(pf),
                upper_bound_holds,
            });
        }
    }
    Ok(rows)
}
