//! The five-worker, three-type worked example, embedded as a golden fixture.
//!
//! Utilities, the optimal flow, the realization (types 3, 1, 2, 2, 3) and
//! the random choices made at each step are all fixed, so the trace can be
//! replayed exactly: DISPATCH collects 6 on this realization while the
//! offline optimum is 8, and `TPP(G) = 8`.

use num_rational::Ratio;

use crate::dispatch::{run_forced, AssignmentEvent, ForcedDraw, PreferenceTable};
use crate::oracle::max_weight_perfect_matching;
use crate::transport::solve_tpp;
use crate::{ArrivalSequence, ExpectationGraph, FlowSolution, Result};

pub const TPP_VALUE: f64 = 8.0;
pub const DISPATCH_VALUE: f64 = 6.0;
pub const OPT_VALUE: f64 = 8.0;

/// Utilities `u[w][j]` and `r = (2.5, 1.5, 1)`, i.e. `p = (1/2, 3/10, 1/5)`.
pub fn instance() -> ExpectationGraph {
    ExpectationGraph::new(
        vec![
            vec![2.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 3.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ],
        vec![5, 3, 2],
        10,
    )
    .expect("embedded instance is valid")
}

/// The optimal flow used in the example, scaled by `D = 10`.
pub fn flow() -> FlowSolution {
    FlowSolution::from_scaled(
        &instance(),
        vec![
            vec![10, 0, 0],
            vec![10, 0, 0],
            vec![0, 10, 0],
            vec![5, 0, 5],
            vec![0, 5, 5],
        ],
        10,
    )
    .expect("embedded flow has the right shape")
}

pub fn sequence() -> ArrivalSequence {
    ArrivalSequence::from_one_based(&instance(), &[3, 1, 2, 2, 3]).expect("valid sequence")
}

/// Preferred workers w4, w2, w3, w5, w4; the last one is busy and w1 is
/// drawn instead.
pub fn forced_draws() -> Vec<ForcedDraw> {
    [(3, None), (1, None), (2, None), (4, None), (3, Some(0))]
        .into_iter()
        .map(|(preferred, fallback)| ForcedDraw {
            preferred,
            fallback,
        })
        .collect()
}

/// One expected step of the golden trace (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenStep {
    pub job_type: usize,
    pub preferred: usize,
    pub preferred_probability: Ratio<u64>,
    pub preferred_available: bool,
    pub assigned: usize,
    pub utility: f64,
}

pub fn golden_trace() -> Vec<GoldenStep> {
    let step =
        |job_type, preferred, (num, den), preferred_available, assigned, utility| GoldenStep {
            job_type,
            preferred,
            preferred_probability: Ratio::new(num, den),
            preferred_available,
            assigned,
            utility,
        };
    vec![
        step(2, 3, (1, 2), true, 3, 1.0),
        step(0, 1, (2, 5), true, 1, 1.0),
        step(1, 2, (2, 3), true, 2, 3.0),
        step(1, 4, (1, 3), true, 4, 1.0),
        step(2, 3, (1, 2), false, 0, 0.0),
    ]
}

#[derive(Debug, Clone)]
pub struct ExampleReport {
    pub tpp: f64,
    pub dispatch_value: Option<f64>,
    pub opt_value: f64,
    pub events: Vec<AssignmentEvent>,
    pub preferred_probabilities: Vec<Ratio<u64>>,
    /// Empty iff everything matches the golden values.
    pub mismatches: Vec<String>,
}

impl ExampleReport {
    pub fn matches(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Replays the example with `flow` guiding DISPATCH and compares every step
/// against the golden trace.
pub fn reproduce(flow: &FlowSolution) -> Result<ExampleReport> {
    let g = instance();
    let seq = sequence();
    let mut mismatches = Vec::new();

    let tpp = solve_tpp(&g)?.objective();
    if tpp != TPP_VALUE {
        mismatches.push(format!("TPP(G) = {tpp}, expected {TPP_VALUE}"));
    }
    for v in flow.violations(&g) {
        mismatches.push(format!("flow infeasible: {v}"));
    }
    let opt_value = max_weight_perfect_matching(&g, &seq)?.value;
    if opt_value != OPT_VALUE {
        mismatches.push(format!("OPT = {opt_value}, expected {OPT_VALUE}"));
    }

    let table = PreferenceTable::new(&g, flow)?;
    let (dispatch_value, events) = match run_forced(&g, flow, &seq, &forced_draws()) {
        Ok((m, events)) => (Some(m.value), events),
        Err(e) => {
            mismatches.push(format!("forced replay failed: {e}"));
            (None, Vec::new())
        }
    };
    let preferred_probabilities: Vec<_> = events
        .iter()
        .map(|e| table.probability(e.preferred, e.job_type))
        .collect();
    for ((e, p), want) in events
        .iter()
        .zip(&preferred_probabilities)
        .zip(golden_trace())
    {
        let got = GoldenStep {
            job_type: e.job_type,
            preferred: e.preferred,
            preferred_probability: *p,
            preferred_available: e.preferred_available,
            assigned: e.assigned,
            utility: e.utility,
        };
        if got != want {
            mismatches.push(format!("step {}: got {got:?}, expected {want:?}", e.t));
        }
    }
    if let Some(v) = dispatch_value {
        if v != DISPATCH_VALUE {
            mismatches.push(format!("DISPATCH value = {v}, expected {DISPATCH_VALUE}"));
        }
    }
    Ok(ExampleReport {
        tpp,
        dispatch_value,
        opt_value,
        events,
        preferred_probabilities,
        mismatches,
    })
}
