//! The DISPATCH online policy and two baselines.
//!
//! At each arrival of type `j`, DISPATCH draws a preferred worker `w` with
//! probability `f*_wj / r_j` over all workers, available or not. If that
//! worker is still free it gets the job; otherwise the job goes to a worker
//! drawn uniformly from the free ones.
//!
//! Randomness is addressed per step (see [`crate::rng`]): the preferred draw
//! and the fallback draw come from fixed, separate positions of the step's
//! stream, and the fallback draw is made even when it is not used. Policies
//! sharing a seed therefore see identical fallback draws.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use rand_chacha::ChaCha8Rng;

use crate::rng::{cumulative, sample_cumulative, seek_fallback, seek_preferred, Streams};
use crate::{ArrivalSequence, Error, ExpectationGraph, FlowSolution, Matching, Result};

/// Exact preferred-worker distributions, one per job type.
///
/// For type `j` the weight of worker `w` is the scaled flow `D * f*_wj`, so
/// the column total is `D * r_j` and sampling needs only integers.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceTable {
    n: usize,
    weights: Vec<Vec<u64>>,
    cumulative: Vec<Vec<u64>>,
}

impl PreferenceTable {
    /// Checks dimensions and that every type that can arrive has some flow.
    /// Row sums are deliberately not checked, so corrupted flows can be
    /// studied.
    pub fn new(instance: &ExpectationGraph, flow: &FlowSolution) -> Result<Self> {
        let (n, k) = (instance.n(), instance.k());
        if (flow.n(), flow.k()) != (n, k) {
            return Err(Error::Dimension(format!(
                "flow is {}x{}, instance is {n}x{k}",
                flow.n(),
                flow.k()
            )));
        }
        let weights: Vec<Vec<u64>> = (0..k)
            .map(|j| (0..n).map(|w| flow.scaled(w, j)).collect())
            .collect();
        for j in instance.active_types() {
            if weights[j].iter().all(|&x| x == 0) {
                return Err(Error::InvalidArgument(format!(
                    "flow carries nothing to job type j{} although it can arrive",
                    j + 1
                )));
            }
        }
        let cumulative = weights.iter().map(|w| cumulative(w)).collect();
        Ok(Self {
            n,
            weights,
            cumulative,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Integer weights of the preferred-worker draw for `job_type`.
    pub fn weights(&self, job_type: usize) -> &[u64] {
        &self.weights[job_type]
    }

    pub fn total(&self, job_type: usize) -> u64 {
        self.cumulative[job_type].last().copied().unwrap_or(0)
    }

    /// `P(preferred = worker | arrival of job_type)`.
    pub fn probability(&self, worker: usize, job_type: usize) -> Ratio<u64> {
        Ratio::new(self.weights[job_type][worker], self.total(job_type))
    }

    fn draw(&self, job_type: usize, rng: &mut impl Rng) -> usize {
        sample_cumulative(rng, &self.cumulative[job_type])
    }
}

/// One online decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignmentEvent {
    /// 1-based step.
    pub t: usize,
    pub job_type: usize,
    pub preferred: usize,
    pub preferred_available: bool,
    pub assigned: usize,
    pub utility: f64,
}

/// Trace line as serialized: indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub t: usize,
    pub job_type: usize,
    pub preferred: usize,
    pub preferred_available: bool,
    pub assigned: usize,
    pub utility: f64,
}

impl From<&AssignmentEvent> for TraceLine {
    fn from(e: &AssignmentEvent) -> Self {
        Self {
            t: e.t,
            job_type: e.job_type + 1,
            preferred: e.preferred + 1,
            preferred_available: e.preferred_available,
            assigned: e.assigned + 1,
            utility: crate::format::round_sig(e.utility),
        }
    }
}

/// JSON lines, one event per line.
pub fn trace_to_json_lines(events: &[AssignmentEvent]) -> String {
    events
        .iter()
        .map(|e| serde_json::to_string(&TraceLine::from(e)).expect("event serializes") + "\n")
        .collect()
}

/// Draws injected in place of the random ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForcedDraw {
    pub preferred: usize,
    /// Worker taken when the preferred one is busy. Must be available then.
    pub fallback: Option<usize>,
}

/// Mutable state of one DISPATCH run.
#[derive(Debug, Clone)]
pub struct Dispatcher<'a> {
    instance: &'a ExpectationGraph,
    table: Cow<'a, PreferenceTable>,
    /// Available workers in ascending order.
    available: Vec<usize>,
    is_available: Vec<bool>,
    step: usize,
    rng: ChaCha8Rng,
}

impl<'a> Dispatcher<'a> {
    /// Fresh dispatcher for replication 0 of `seed`.
    pub fn new(instance: &'a ExpectationGraph, flow: &FlowSolution, seed: u64) -> Result<Self> {
        let table = PreferenceTable::new(instance, flow)?;
        Ok(Self::build(
            instance,
            Cow::Owned(table),
            Streams::new(seed, 0),
        ))
    }

    pub fn with_table(
        instance: &'a ExpectationGraph,
        table: &'a PreferenceTable,
        streams: Streams,
    ) -> Result<Self> {
        if table.n() != instance.n() {
            return Err(Error::Dimension(
                "preference table does not match the instance".into(),
            ));
        }
        Ok(Self::build(instance, Cow::Borrowed(table), streams))
    }

    fn build(
        instance: &'a ExpectationGraph,
        table: Cow<'a, PreferenceTable>,
        streams: Streams,
    ) -> Self {
        let n = instance.n();
        Self {
            instance,
            table,
            available: (0..n).collect(),
            is_available: vec![true; n],
            step: 1,
            rng: streams.policy(),
        }
    }

    /// Next 1-based step.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn available(&self) -> &[usize] {
        &self.available
    }

    pub fn is_available(&self, worker: usize) -> bool {
        self.is_available[worker]
    }

    pub fn table(&self) -> &PreferenceTable {
        &self.table
    }

    fn check_arrival(&self, job_type: usize) -> Result<()> {
        let n = self.instance.n();
        if self.step > n {
            return Err(Error::SequenceExhausted { step: self.step, n });
        }
        if job_type >= self.instance.k() {
            return Err(Error::Dimension(format!(
                "job type {} out of range 1..={}",
                job_type + 1,
                self.instance.k()
            )));
        }
        if self.instance.numerators()[job_type] == 0 {
            return Err(Error::InvalidArrival(job_type + 1));
        }
        Ok(())
    }

    /// Serves one arrival with fresh randomness.
    pub fn step(&mut self, job_type: usize) -> Result<AssignmentEvent> {
        self.check_arrival(job_type)?;
        let preferred = self
            .table
            .draw(job_type, seek_preferred(&mut self.rng, self.step));
        let rank = seek_fallback(&mut self.rng, self.step).random_range(0..self.available.len());
        Ok(self.commit(job_type, preferred, rank))
    }

    /// Serves one arrival with injected draws.
    pub fn step_forced(&mut self, job_type: usize, draw: ForcedDraw) -> Result<AssignmentEvent> {
        self.check_arrival(job_type)?;
        let preferred = draw.preferred;
        if preferred >= self.instance.n() || self.table.weights(job_type)[preferred] == 0 {
            return Err(Error::InvalidArgument(format!(
                "forced preferred worker w{} has zero probability for job type j{}",
                preferred + 1,
                job_type + 1
            )));
        }
        let rank = if self.is_available[preferred] {
            0
        } else {
            let fallback = draw.fallback.ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "step {}: preferred worker is busy and no fallback was forced",
                    self.step
                ))
            })?;
            self.available.binary_search(&fallback).map_err(|_| {
                Error::InvalidArgument(format!(
                    "forced fallback worker w{} is not available",
                    fallback + 1
                ))
            })?
        };
        Ok(self.commit(job_type, preferred, rank))
    }

    fn commit(&mut self, job_type: usize, preferred: usize, rank: usize) -> AssignmentEvent {
        let preferred_available = self.is_available[preferred];
        let assigned = if preferred_available {
            preferred
        } else {
            self.available[rank]
        };
        self.remove(assigned);
        let event = AssignmentEvent {
            t: self.step,
            job_type,
            preferred,
            preferred_available,
            assigned,
            utility: self.instance.utility(assigned, job_type),
        };
        self.step += 1;
        event
    }

    fn remove(&mut self, worker: usize) {
        let pos = self
            .available
            .binary_search(&worker)
            .expect("assigned worker is available");
        self.available.remove(pos);
        self.is_available[worker] = false;
    }
}

/// Online policies compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Dispatch,
    /// Highest-utility available worker, ties to the lowest index.
    Greedy,
    /// Uniformly random available worker.
    Uniform,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Dispatch, Policy::Greedy, Policy::Uniform];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Dispatch => "dispatch",
            Policy::Greedy => "greedy",
            Policy::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dispatch" => Ok(Policy::Dispatch),
            "greedy" => Ok(Policy::Greedy),
            "uniform" => Ok(Policy::Uniform),
            other => Err(Error::InvalidArgument(format!(
                "unknown policy `{other}` (expected dispatch, greedy or uniform)"
            ))),
        }
    }
}

/// Runs DISPATCH over a whole sequence.
pub fn run(
    instance: &ExpectationGraph,
    flow: &FlowSolution,
    seed: u64,
    sequence: &ArrivalSequence,
) -> Result<(Matching, Vec<AssignmentEvent>)> {
    let mut dispatcher = Dispatcher::new(instance, flow, seed)?;
    let events = sequence
        .types()
        .iter()
        .map(|&j| dispatcher.step(j))
        .collect::<Result<Vec<_>>>()?;
    finish(instance, sequence, events)
}

/// Runs DISPATCH with every draw injected.
pub fn run_forced(
    instance: &ExpectationGraph,
    flow: &FlowSolution,
    sequence: &ArrivalSequence,
    draws: &[ForcedDraw],
) -> Result<(Matching, Vec<AssignmentEvent>)> {
    if draws.len() != sequence.len() {
        return Err(Error::Dimension(format!(
            "{} forced draws for {} arrivals",
            draws.len(),
            sequence.len()
        )));
    }
    let mut dispatcher = Dispatcher::new(instance, flow, 0)?;
    let events = sequence
        .types()
        .iter()
        .zip(draws)
        .map(|(&j, &d)| dispatcher.step_forced(j, d))
        .collect::<Result<Vec<_>>>()?;
    finish(instance, sequence, events)
}

fn finish(
    instance: &ExpectationGraph,
    sequence: &ArrivalSequence,
    events: Vec<AssignmentEvent>,
) -> Result<(Matching, Vec<AssignmentEvent>)> {
    let assignment = events.iter().map(|e| e.assigned).collect();
    Ok((Matching::new(instance, sequence, assignment)?, events))
}

/// Greedy baseline. Events record the chosen worker as both preferred and
/// assigned.
pub fn greedy_policy(
    instance: &ExpectationGraph,
    sequence: &ArrivalSequence,
) -> Result<(Matching, Vec<AssignmentEvent>)> {
    baseline(instance, sequence, |_, available, j| {
        let mut best = available[0];
        for &w in &available[1..] {
            if instance.utility(w, j) > instance.utility(best, j) {
                best = w;
            }
        }
        best
    })
}

/// Uniform baseline; its draw is the fallback draw DISPATCH would make.
pub fn uniform_policy(
    instance: &ExpectationGraph,
    seed: u64,
    sequence: &ArrivalSequence,
) -> Result<(Matching, Vec<AssignmentEvent>)> {
    uniform_with(instance, Streams::new(seed, 0), sequence)
}

pub(crate) fn uniform_with(
    instance: &ExpectationGraph,
    streams: Streams,
    sequence: &ArrivalSequence,
) -> Result<(Matching, Vec<AssignmentEvent>)> {
    baseline(instance, sequence, |t, available, _| {
        available[streams.fallback(t).random_range(0..available.len())]
    })
}

fn baseline(
    instance: &ExpectationGraph,
    sequence: &ArrivalSequence,
    mut choose: impl FnMut(usize, &[usize], usize) -> usize,
) -> Result<(Matching, Vec<AssignmentEvent>)> {
    let n = instance.n();
    if sequence.len() != n {
        return Err(Error::Dimension(format!(
            "arrival sequence has {} entries, expected n = {n}",
            sequence.len()
        )));
    }
    let mut available: Vec<usize> = (0..n).collect();
    let mut events = Vec::with_capacity(n);
    for (idx, &j) in sequence.types().iter().enumerate() {
        let t = idx + 1;
        let w = choose(t, &available, j);
        let pos = available.binary_search(&w).expect("choice is available");
        available.remove(pos);
        events.push(AssignmentEvent {
            t,
            job_type: j,
            preferred: w,
            preferred_available: true,
            assigned: w,
            utility: instance.utility(w, j),
        });
    }
    finish(instance, sequence, events)
}

/// Any policy by name; `flow` is only required for DISPATCH.
pub fn run_policy(
    policy: Policy,
    instance: &ExpectationGraph,
    flow: Option<&FlowSolution>,
    seed: u64,
    sequence: &ArrivalSequence,
) -> Result<(Matching, Vec<AssignmentEvent>)> {
    match policy {
        Policy::Dispatch => {
            let flow = flow.ok_or_else(|| {
                Error::InvalidArgument("DISPATCH needs a transportation flow".into())
            })?;
            run(instance, flow, seed, sequence)
        }
        Policy::Greedy => greedy_policy(instance, sequence),
        Policy::Uniform => uniform_policy(instance, seed, sequence),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example;
    use crate::instance::generate_lower_bound_instance;
    use crate::transport::solve_tpp;

    fn fig1() -> (ExpectationGraph, FlowSolution) {
        (example::instance(), example::flow())
    }

    #[test]
    fn initial_state() {
        let (g, f) = fig1();
        let d = Dispatcher::new(&g, &f, 42).unwrap();
        assert_eq!(d.available(), &[0, 1, 2, 3, 4]);
        assert_eq!(d.step_index(), 1);
    }

    #[test]
    fn rejects_mismatched_flow() {
        let (g, _) = fig1();
        let other = generate_lower_bound_instance(5, Ratio::new(1, 2)).unwrap();
        let wrong_k = solve_tpp(&other).unwrap();
        assert!(matches!(
            Dispatcher::new(&g, &wrong_k, 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn type3_column_weights_are_exact() {
        let (g, f) = fig1();
        let table = PreferenceTable::new(&g, &f).unwrap();
        let probs: Vec<_> = (0..5).map(|w| table.probability(w, 2)).collect();
        let half = Ratio::new(1, 2);
        let zero = Ratio::from_integer(0);
        assert_eq!(probs, vec![zero, zero, zero, half, half]);
        assert_eq!(table.probability(1, 0), Ratio::new(2, 5));
        assert_eq!(table.probability(2, 1), Ratio::new(2, 3));
    }

    #[test]
    fn blocked_preferred_falls_back() {
        let (g, f) = fig1();
        let mut d = Dispatcher::new(&g, &f, 0).unwrap();
        // Occupy w2..w5 so only w1 is left at t = 5.
        for (j, w) in [(2, 3), (0, 1), (1, 2), (1, 4)] {
            d.step_forced(
                j,
                ForcedDraw {
                    preferred: w,
                    fallback: None,
                },
            )
            .unwrap();
        }
        assert_eq!(d.available(), &[0]);
        let e = d
            .step_forced(
                2,
                ForcedDraw {
                    preferred: 3,
                    fallback: Some(0),
                },
            )
            .unwrap();
        assert_eq!(e.t, 5);
        assert!(!e.preferred_available);
        assert_eq!(e.assigned, 0);
        assert_eq!(e.utility, 0.0);
        assert!(matches!(
            d.step(0),
            Err(Error::SequenceExhausted { step: 6, n: 5 })
        ));
    }

    #[test]
    fn single_worker_is_forced() {
        let g = ExpectationGraph::new(vec![vec![2.0, 5.0]], vec![1, 2], 3).unwrap();
        let f = solve_tpp(&g).unwrap();
        for seed in 0..20 {
            for j in 0..2 {
                let mut d = Dispatcher::new(&g, &f, seed).unwrap();
                let e = d.step(j).unwrap();
                assert_eq!((e.preferred, e.assigned), (0, 0));
                assert!(e.preferred_available);
            }
        }
    }

    #[test]
    fn preferred_frequencies_for_type3() {
        let (g, f) = fig1();
        let table = PreferenceTable::new(&g, &f).unwrap();
        let draws = 200_000;
        let mut counts = [0u32; 5];
        for rep in 0..draws {
            let mut d = Dispatcher::with_table(&g, &table, Streams::new(11, rep)).unwrap();
            counts[d.step(2).unwrap().preferred] += 1;
        }
        assert_eq!(counts[..3], [0, 0, 0]);
        for w in [3, 4] {
            let freq = counts[w] as f64 / draws as f64;
            assert!((freq - 0.5).abs() <= 0.005, "w{}: {freq}", w + 1);
        }
    }

    #[test]
    fn zero_probability_arrival_is_rejected() {
        let g = ExpectationGraph::new(vec![vec![1.0, 3.0], vec![0.0, 1.0]], vec![1, 0], 1).unwrap();
        let f = solve_tpp(&g).unwrap();
        let mut d = Dispatcher::new(&g, &f, 0).unwrap();
        assert!(matches!(d.step(1), Err(Error::InvalidArrival(2))));
    }

    #[test]
    fn deterministic_traces() {
        let (g, f) = fig1();
        let seq = example::sequence();
        for seed in 0..10 {
            let a = run(&g, &f, seed, &seq).unwrap();
            let b = run(&g, &f, seed, &seq).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn greedy_breaks_ties_by_index() {
        let (g, _) = fig1();
        let seq = example::sequence();
        let (m, events) = greedy_policy(&g, &seq).unwrap();
        assert_eq!(events[0].assigned, 3);
        assert_eq!(events[0].utility, 1.0);
        assert!(m.value >= 0.0);
    }

    #[test]
    fn uniform_single_worker() {
        let g = ExpectationGraph::new(vec![vec![4.0]], vec![1], 1).unwrap();
        let seq = ArrivalSequence::new(&g, vec![0]).unwrap();
        let (m, _) = uniform_policy(&g, 9, &seq).unwrap();
        assert_eq!(m.assignment, vec![0]);
        assert_eq!(m.value, 4.0);
    }

    #[test]
    fn trace_lines_are_one_based() {
        let (g, f) = fig1();
        let (_, events) =
            run_forced(&g, &f, &example::sequence(), &example::forced_draws()).unwrap();
        let text = trace_to_json_lines(&events);
        let first: TraceLine = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first.job_type, 3);
        assert_eq!(first.preferred, 4);
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("best".parse::<Policy>().is_err());
    }
}
