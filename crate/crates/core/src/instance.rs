//! Problem instances: the expectation graph, arrival sequences and matchings.

use std::fmt;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Complete bipartite graph between `n` workers and `k` job types.
///
/// Job type `j` arrives with probability `numerators[j] / denominator`. The
/// shared denominator keeps every probability exact, which the scaled
/// transportation problem and the integer samplers rely on. Utilities are
/// stored row-major, one row per worker.
///
/// Only the shape (row and column counts) is checked on construction through
/// [`ExpectationGraph::from_parts`]; [`ExpectationGraph::validate`] reports the
/// semantic invariants and [`ExpectationGraph::new`] rejects any that fail.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationGraph {
    n: usize,
    k: usize,
    denominator: u64,
    numerators: Vec<u64>,
    utilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    /// Permitted, but the affected job type is never sampled.
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoWorkers,
    NoJobTypes,
    ZeroDenominator,
    DistributionSum {
        numerator: u128,
        denominator: u64,
    },
    NegativeUtility {
        worker: usize,
        job_type: usize,
        value: f64,
    },
    NonFiniteUtility {
        worker: usize,
        job_type: usize,
        value: f64,
    },
    ZeroProbability {
        job_type: usize,
    },
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::ZeroProbability { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Indices are reported 1-based, as in the worked example.
        match self {
            Violation::NoWorkers => write!(f, "instance has no workers (n = 0)"),
            Violation::NoJobTypes => write!(f, "instance has no job types (k = 0)"),
            Violation::ZeroDenominator => write!(f, "probability denominator is zero"),
            Violation::DistributionSum {
                numerator,
                denominator,
            } => write!(
                f,
                "job-type distribution sums to {numerator}/{denominator}, expected exactly 1"
            ),
            Violation::NegativeUtility {
                worker,
                job_type,
                value,
            } => write!(
                f,
                "utility at (w{}, j{}) is negative: {value}",
                worker + 1,
                job_type + 1
            ),
            Violation::NonFiniteUtility {
                worker,
                job_type,
                value,
            } => write!(
                f,
                "utility at (w{}, j{}) is not finite: {value}",
                worker + 1,
                job_type + 1
            ),
            Violation::ZeroProbability { job_type } => write!(
                f,
                "warning: job type j{} has zero probability and is never sampled",
                job_type + 1
            ),
        }
    }
}

impl ExpectationGraph {
    /// Builds an instance and rejects it if any error-level invariant fails.
    pub fn new(utilities: Vec<Vec<f64>>, numerators: Vec<u64>, denominator: u64) -> Result<Self> {
        let graph = Self::from_parts(utilities, numerators, denominator)?;
        graph.ensure_valid()?;
        Ok(graph)
    }

    /// Builds an instance checking only its shape.
    pub fn from_parts(
        utilities: Vec<Vec<f64>>,
        numerators: Vec<u64>,
        denominator: u64,
    ) -> Result<Self> {
        let n = utilities.len();
        let k = numerators.len();
        for (w, row) in utilities.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Dimension(format!(
                    "utilities row {} has {} entries, expected k = {k}",
                    w + 1,
                    row.len()
                )));
            }
        }
        Ok(Self {
            n,
            k,
            denominator,
            numerators,
            utilities: utilities.into_iter().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    #[inline]
    pub fn utility(&self, worker: usize, job_type: usize) -> f64 {
        self.utilities[worker * self.k + job_type]
    }

    pub fn utility_row(&self, worker: usize) -> &[f64] {
        &self.utilities[worker * self.k..(worker + 1) * self.k]
    }

    pub fn utility_rows(&self) -> Vec<Vec<f64>> {
        self.utilities
            .chunks(self.k.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn probability(&self, job_type: usize) -> Ratio<u64> {
        Ratio::new(self.numerators[job_type], self.denominator)
    }

    pub fn probability_f64(&self, job_type: usize) -> f64 {
        self.numerators[job_type] as f64 / self.denominator as f64
    }

    /// Expected number of arrivals of `job_type`, `r_j = n * p_j`. Always
    /// derived from the probabilities, never stored.
    pub fn expected_count(&self, job_type: usize) -> Ratio<u128> {
        Ratio::new(
            self.n as u128 * self.numerators[job_type] as u128,
            self.denominator as u128,
        )
    }

    /// Job types that can actually arrive.
    pub fn active_types(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(|&j| self.numerators[j] > 0)
    }

    /// Every invariant violation, error- and warning-level. Empty iff the
    /// instance satisfies all invariants.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation::NoWorkers);
        }
        if self.k == 0 {
            out.push(Violation::NoJobTypes);
        }
        if self.denominator == 0 {
            out.push(Violation::ZeroDenominator);
        }
        let total: u128 = self.numerators.iter().map(|&x| x as u128).sum();
        if self.k > 0 && total != self.denominator as u128 {
            out.push(Violation::DistributionSum {
                numerator: total,
                denominator: self.denominator,
            });
        }
        for w in 0..self.n {
            for j in 0..self.k {
                let value = self.utility(w, j);
                if !value.is_finite() {
                    out.push(Violation::NonFiniteUtility {
                        worker: w,
                        job_type: j,
                        value,
                    });
                } else if value < 0.0 {
                    out.push(Violation::NegativeUtility {
                        worker: w,
                        job_type: j,
                        value,
                    });
                }
            }
        }
        for (j, &num) in self.numerators.iter().enumerate() {
            if num == 0 {
                out.push(Violation::ZeroProbability { job_type: j });
            }
        }
        out
    }

    /// Fails with [`Error::Invalid`] if any error-level violation exists.
    pub fn ensure_valid(&self) -> Result<()> {
        let errors: Vec<_> = self
            .validate()
            .into_iter()
            .filter(|v| v.severity() == Severity::Error)
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(errors))
        }
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.n,
            k: self.k,
            denominator: self.denominator,
            numerators: self.numerators.clone(),
            utilities: self.utility_rows(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_graph()
    }

    pub fn save(&self, destination: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        fs::write(destination, text)?;
        Ok(())
    }

    pub fn load(source: impl AsRef<Path>) -> Result<Self> {
        let source = source.as_ref();
        let text = fs::read_to_string(source)
            .map_err(|e| Error::Parse(format!("{}: {e}", source.display())))?;
        Self::from_json(&text)
    }
}

/// On-disk layout of an instance. Field order is the canonical key order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub k: usize,
    pub denominator: u64,
    pub numerators: Vec<u64>,
    pub utilities: Vec<Vec<f64>>,
}

impl InstanceFile {
    pub fn into_graph(self) -> Result<ExpectationGraph> {
        if self.numerators.len() != self.k {
            return Err(Error::Parse(format!(
                "field `numerators`: expected k = {} entries, found {}",
                self.k,
                self.numerators.len()
            )));
        }
        if self.utilities.len() != self.n {
            return Err(Error::Parse(format!(
                "field `utilities`: expected n = {} rows, found {}",
                self.n,
                self.utilities.len()
            )));
        }
        let graph = ExpectationGraph::from_parts(self.utilities, self.numerators, self.denominator)
            .map_err(|e| match e {
                Error::Dimension(msg) => Error::Parse(format!("field `utilities`: {msg}")),
                other => other,
            })?;
        graph.ensure_valid()?;
        Ok(graph)
    }
}

/// Instance family on which no online policy beats 1/2 in the limit.
///
/// Workers `1..=n` and job types `1..=n+1`; type `j <= n` arrives with
/// probability `p / n` and is worth 1 only to worker `j`; the extra type
/// arrives with probability `1 - p` and is worth nothing to anyone.
pub fn generate_lower_bound_instance(n: usize, p: Ratio<u64>) -> Result<ExpectationGraph> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    if p <= zero || p >= one {
        return Err(Error::InvalidArgument(format!(
            "p must lie strictly between 0 and 1, got {p}"
        )));
    }
    let n64 = n as u64;
    let denominator = p
        .denom()
        .checked_mul(n64)
        .ok_or_else(|| Error::Capacity("lower-bound denominator overflows u64".into()))?;
    let mut numerators = vec![*p.numer(); n];
    numerators.push((p.denom() - p.numer()) * n64);
    let utilities = (0..n)
        .map(|w| (0..=n).map(|j| if w == j { 1.0 } else { 0.0 }).collect())
        .collect();
    ExpectationGraph::new(utilities, numerators, denominator)
}

/// Random instance for fuzzing: utilities uniform in `[0, utility_bound]`,
/// probabilities a uniformly random composition of `denominator` into `k`
/// positive parts. Deterministic in `seed`.
pub fn generate_random_instance(
    n: usize,
    k: usize,
    utility_bound: f64,
    denominator: u64,
    seed: u64,
) -> Result<ExpectationGraph> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument("n and k must be at least 1".into()));
    }
    if !(utility_bound > 0.0 && utility_bound.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "utility bound must be positive and finite, got {utility_bound}"
        )));
    }
    if denominator < k as u64 {
        return Err(Error::InvalidArgument(format!(
            "denominator {denominator} cannot be split into k = {k} positive parts"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let utilities = (0..n)
        .map(|_| {
            (0..k)
                .map(|_| rng.random_range(0.0..=utility_bound))
                .collect()
        })
        .collect();
    // Stars and bars: k - 1 distinct cut points among the D - 1 gaps.
    let gaps = usize::try_from(denominator - 1)
        .map_err(|_| Error::Capacity("denominator too large".into()))?;
    let mut cuts: Vec<u64> = index::sample(&mut rng, gaps, k - 1)
        .into_iter()
        .map(|c| c as u64 + 1)
        .collect();
    cuts.sort_unstable();
    let mut numerators = Vec::with_capacity(k);
    let mut prev = 0;
    for cut in cuts.into_iter().chain(std::iter::once(denominator)) {
        numerators.push(cut - prev);
        prev = cut;
    }
    ExpectationGraph::new(utilities, numerators, denominator)
}

/// The job types `j_1..j_n` that arrive, in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArrivalSequence {
    types: Vec<usize>,
}

impl ArrivalSequence {
    pub fn new(instance: &ExpectationGraph, types: Vec<usize>) -> Result<Self> {
        if types.len() != instance.n() {
            return Err(Error::Dimension(format!(
                "arrival sequence has {} entries, expected n = {}",
                types.len(),
                instance.n()
            )));
        }
        for &j in &types {
            if j >= instance.k() {
                return Err(Error::Dimension(format!(
                    "job type {} out of range 1..={}",
                    j + 1,
                    instance.k()
                )));
            }
            if instance.numerators()[j] == 0 {
                return Err(Error::InvalidArrival(j + 1));
            }
        }
        Ok(Self { types })
    }

    /// Sequence from 1-based type labels, as written in figures and on the
    /// command line.
    pub fn from_one_based(instance: &ExpectationGraph, labels: &[usize]) -> Result<Self> {
        let types = labels
            .iter()
            .map(|&l| {
                l.checked_sub(1)
                    .ok_or_else(|| Error::Dimension("job type labels start at 1".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(instance, types)
    }

    pub(crate) fn from_types_unchecked(types: Vec<usize>) -> Self {
        Self { types }
    }

    pub fn types(&self) -> &[usize] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Number of arrivals of each type.
    pub fn counts(&self, k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for &j in &self.types {
            counts[j] += 1;
        }
        counts
    }
}

/// Perfect matching of workers to the jobs of one arrival sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `assignment[t]` is the worker serving the job that arrived at step `t`.
    pub assignment: Vec<usize>,
    pub value: f64,
}

impl Matching {
    pub fn new(
        instance: &ExpectationGraph,
        sequence: &ArrivalSequence,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        let n = instance.n();
        if assignment.len() != sequence.len() || assignment.len() != n {
            return Err(Error::Dimension(format!(
                "matching covers {} jobs, expected n = {n}",
                assignment.len()
            )));
        }
        let mut seen = vec![false; n];
        for &w in &assignment {
            if w >= n || std::mem::replace(&mut seen[w], true) {
                return Err(Error::Dimension(format!(
                    "worker {} appears twice or is out of range",
                    w + 1
                )));
            }
        }
        let value = matching_value(instance, sequence, &assignment);
        Ok(Self { assignment, value })
    }

    /// `1` iff `worker` served some job of `job_type`.
    pub fn indicator(&self, sequence: &ArrivalSequence, worker: usize, job_type: usize) -> bool {
        self.assignment
            .iter()
            .zip(sequence.types())
            .any(|(&w, &j)| w == worker && j == job_type)
    }
}

pub(crate) fn matching_value(
    instance: &ExpectationGraph,
    sequence: &ArrivalSequence,
    assignment: &[usize],
) -> f64 {
    assignment
        .iter()
        .zip(sequence.types())
        .map(|(&w, &j)| instance.utility(w, j))
        .sum()
}
