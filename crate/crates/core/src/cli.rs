//! The `dispatch` command-line tool.
//!
//! Every command reads one instance (a JSON file via `--instance PATH` or a
//! positional path, or a generator spec via `--gen SPEC`) and writes a single
//! report to stdout or `--out`. Reports are CSV by default, with `#` header
//! lines recording the flags that produced them, or JSON with a `config`
//! object. `--jobs` is deliberately left out of the headers: the output is
//! identical for any thread count.
//!
//! Generator specs:
//!
//! * `example`: the five-worker, three-type worked example;
//! * `lb:N:P`: the lower-bound family with `n = N` and `p = P` (`0.1` or `1/10`);
//! * `random:N:K:BOUND:DEN[:SEED]`: utilities uniform in `[0, BOUND]`, type
//!   probabilities a random composition of `DEN`; `SEED` defaults to `--seed`.
//!
//! Exit codes: 0 success, 1 golden-trace mismatch, 2 invalid input,
//! 3 capacity exceeded, 4 statistical check failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dispatch::{run_policy, trace_to_json_lines, AssignmentEvent, Policy, TraceLine};
use crate::example;
use crate::format::{fmt_sig, round_sig};
use crate::harness::{self, DEFAULT_TRIALS};
use crate::instance::{generate_lower_bound_instance, generate_random_instance};
use crate::oracle::{realization_opt_value, DEFAULT_MAX_COUNT_VECTORS, DEFAULT_MAX_DP_WORKERS};
use crate::transport::{solve_tpp_with, TppOptions, DEFAULT_MAX_TOTAL_SUPPLY};
use crate::{ArrivalSequence, Error, ExpectationGraph, FlowSolution, Result};

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(
    name = "dispatch",
    version,
    about = "Online perfect matching with i.i.d. arrivals: the DISPATCH policy, exact oracles and Monte Carlo checks"
)]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for Monte Carlo replications.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct Source {
    /// Instance file.
    #[arg(value_name = "INSTANCE", group = "source")]
    pub path: Option<PathBuf>,
    /// Instance file.
    #[arg(long = "instance", value_name = "PATH", group = "source")]
    pub instance: Option<PathBuf>,
    /// Generator instead of a file: `example`, `lb:N:P` or
    /// `random:N:K:BOUND:DEN[:SEED]`.
    #[arg(long = "gen", value_name = "SPEC", group = "source")]
    pub generator: Option<String>,
}

impl Source {
    fn describe(&self) -> String {
        match (&self.path, &self.instance, &self.generator) {
            (Some(p), _, _) | (None, Some(p), _) => p.display().to_string(),
            (_, _, Some(spec)) => format!("gen:{spec}"),
            _ => String::new(),
        }
    }

    fn load(&self, seed: u64) -> Result<ExpectationGraph> {
        match (&self.path, &self.instance, &self.generator) {
            (Some(p), _, _) | (None, Some(p), _) => ExpectationGraph::load(p),
            (_, _, Some(spec)) => generate(spec, seed),
            _ => Err(Error::InvalidArgument(
                "give an instance path or --gen SPEC".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Capacity {
    /// Largest n for the availability-set DP.
    #[arg(long, default_value_t = DEFAULT_MAX_DP_WORKERS)]
    pub max_n: usize,
    /// Largest number of arrival-count vectors enumerated for E[OPT].
    #[arg(long, default_value_t = DEFAULT_MAX_COUNT_VECTORS)]
    pub max_count_vectors: u64,
    /// Largest n*D for the transportation solver.
    #[arg(long, default_value_t = DEFAULT_MAX_TOTAL_SUPPLY)]
    pub max_total_supply: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the transportation problem on the expectation graph.
    ///
    /// CSV columns: worker, job_type, utility, flow, flow_exact (positive
    /// entries only; the objective is in the header).
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = DEFAULT_MAX_TOTAL_SUPPLY)]
        max_total_supply: u64,
    },
    /// Run one policy on one arrival sequence and print the trace.
    ///
    /// CSV columns: t, job_type, preferred, preferred_available, assigned,
    /// utility (1-based indices). JSON: one event per line.
    Run {
        #[command(flatten)]
        source: Source,
        /// Comma-separated 1-based job types; sampled from the instance if omitted.
        #[arg(long)]
        sequence: Option<String>,
        /// Replication whose arrival and policy streams are used.
        #[arg(long, default_value_t = 0)]
        replication: u64,
        #[arg(long, default_value = "dispatch")]
        policy: String,
    },
    /// Monte Carlo estimate of E[ALG] / E[OPT] per policy.
    ///
    /// CSV columns: policy, trials, alg_mean, alg_se, opt_mean, opt_se,
    /// ratio, ratio_se, ratio_ci_low, ratio_ci_high.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// dispatch, greedy, uniform, or all.
        #[arg(long, default_value = "all")]
        policy: String,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
    },
    /// Exact E[DISPATCH], E[OPT] and TPP with the three guarantee inequalities.
    ///
    /// CSV columns: item, value, bound, status.
    Exact {
        #[command(flatten)]
        source: Source,
        /// Also list P(I_wj = 1) against f*_wj / 2.
        #[arg(long)]
        edge_probabilities: bool,
        #[command(flatten)]
        capacity: Capacity,
    },
    /// Statistical checks of the four lemmas behind the 1/2 guarantee.
    ///
    /// CSV columns: check, method, observed, expected, tolerance, status,
    /// detail. Exits 4 if any check fails.
    Lemmas {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
        /// Flow file to drive DISPATCH instead of the optimal flow.
        #[arg(long)]
        flow: Option<PathBuf>,
        /// Add exact availability-set DP rows (n up to --max-n).
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_DP_WORKERS)]
        max_n: usize,
    },
    /// Sweep of DISPATCH on the lower-bound family.
    ///
    /// CSV columns: n, p, p_value, policy, trials, alg_mean, alg_se,
    /// opt_mean, opt_se, ratio, ratio_se, ratio_ci_low, ratio_ci_high,
    /// opt_closed_form, alg_upper_bound (p(n+1)/2), ratio_bound,
    /// limit_ratio, upper_bound_holds.
    Lowerbound {
        /// Comma-separated worker counts.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Comma-separated probabilities, decimal or a/b.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
    },
    /// Write a generated instance as JSON.
    Gen {
        /// Generator spec.
        spec: String,
    },
    /// Replay the worked example with its fixed random choices.
    ///
    /// CSV columns: t, job_type, preferred, preferred_probability,
    /// preferred_available, assigned, utility. Exits 1 on any mismatch.
    ReproduceExample {
        /// Flow file to use instead of the embedded optimal flow.
        #[arg(long)]
        flow: Option<PathBuf>,
    },
}

/// How a successful command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Mismatch,
    CheckFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Mismatch => 1,
            Outcome::CheckFailed => 4,
        }
    }
}

pub fn error_exit_code(error: &Error) -> i32 {
    match error {
        Error::Capacity(_) => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok((report, outcome)) => match emit(&cli, &report.text) {
            Ok(()) => {
                for line in &report.diagnostics {
                    eprintln!("{line}");
                }
                outcome.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Report text plus stderr lines.
#[derive(Debug, Default)]
pub struct Report {
    pub text: String,
    pub diagnostics: Vec<String>,
}

/// Runs a parsed command without touching stdout.
pub fn execute(cli: &Cli) -> Result<(Report, Outcome)> {
    let mut config: Vec<(&str, String)> = vec![("seed", cli.seed.to_string())];
    let mut report = Report::default();
    let mut outcome = Outcome::Success;
    let format = cli.format;

    match &cli.command {
        Command::Solve {
            source,
            max_total_supply,
        } => {
            config.insert(0, ("command", "solve".into()));
            config.push(("instance", source.describe()));
            let g = source.load(cli.seed)?;
            let flow = solve_tpp_with(
                &g,
                TppOptions {
                    max_total_supply: *max_total_supply,
                },
            )?;
            report.text = solve_report(&g, &flow, &config, format);
        }
        Command::Run {
            source,
            sequence,
            replication,
            policy,
        } => {
            config.insert(0, ("command", "run".into()));
            config.push(("instance", source.describe()));
            config.push(("policy", policy.clone()));
            let g = source.load(cli.seed)?;
            let policy: Policy = policy.parse()?;
            let seq = match sequence {
                Some(text) => {
                    config.push(("sequence", text.clone()));
                    ArrivalSequence::from_one_based(&g, &parse_list(text, "sequence")?)?
                }
                None => {
                    config.push(("replication", replication.to_string()));
                    harness::replication_sequence(&g, cli.seed, *replication)
                }
            };
            let flow = match policy {
                Policy::Dispatch => Some(solve_tpp_with(&g, TppOptions::default())?),
                _ => None,
            };
            let (matching, events) =
                replay(policy, &g, flow.as_ref(), cli.seed, *replication, &seq)?;
            let opt = realization_opt_value(&g, &seq);
            report.text = match format {
                Format::Json => trace_to_json_lines(&events),
                Format::Csv => {
                    let mut s = csv_header(&config);
                    s += &trace_csv(&events);
                    let _ = writeln!(s, "# value = {}", fmt_sig(matching.value));
                    let _ = writeln!(s, "# opt = {}", fmt_sig(opt));
                    s
                }
            };
        }
        Command::Simulate {
            source,
            policy,
            trials,
        } => {
            config.insert(0, ("command", "simulate".into()));
            config.push(("instance", source.describe()));
            config.push(("policy", policy.clone()));
            config.push(("trials", trials.to_string()));
            let g = source.load(cli.seed)?;
            let policies: Vec<Policy> = if policy == "all" {
                Policy::ALL.to_vec()
            } else {
                policy
                    .split(',')
                    .map(|p| p.trim().parse())
                    .collect::<Result<_>>()?
            };
            let estimates = policies
                .iter()
                .map(|&p| harness::estimate_ratio(&g, p, *trials, cli.seed, cli.jobs))
                .collect::<Result<Vec<_>>>()?;
            report.text = simulate_report(&estimates, &config, format);
        }
        Command::Exact {
            source,
            edge_probabilities,
            capacity,
        } => {
            config.insert(0, ("command", "exact".into()));
            config.push(("instance", source.describe()));
            config.push(("max_n", capacity.max_n.to_string()));
            config.push(("max_count_vectors", capacity.max_count_vectors.to_string()));
            let g = source.load(cli.seed)?;
            let flow = solve_tpp_with(
                &g,
                TppOptions {
                    max_total_supply: capacity.max_total_supply,
                },
            )?;
            let summary = harness::exact_summary_with_flow(
                &g,
                &flow,
                capacity.max_n,
                capacity.max_count_vectors,
            )?;
            report.text = exact_report(&summary, &flow, *edge_probabilities, &config, format);
        }
        Command::Lemmas {
            source,
            trials,
            flow,
            exact,
            max_n,
        } => {
            config.insert(0, ("command", "lemmas".into()));
            config.push(("instance", source.describe()));
            config.push(("trials", trials.to_string()));
            if let Some(path) = flow {
                config.push(("flow", path.display().to_string()));
            }
            config.push(("exact", exact.to_string()));
            let g = source.load(cli.seed)?;
            let flow = match flow {
                Some(path) => FlowSolution::from_json(&std::fs::read_to_string(path)?, &g)?,
                None => solve_tpp_with(&g, TppOptions::default())?,
            };
            let max_exact = if *exact { *max_n } else { 0 };
            let lemmas =
                harness::check_lemmas_with_flow(&g, &flow, *trials, cli.seed, cli.jobs, max_exact)?;
            if !lemmas.all_pass() {
                outcome = Outcome::CheckFailed;
                for row in lemmas.rows.iter().filter(|r| !r.pass) {
                    report.diagnostics.push(format!(
                        "FAIL {} ({}): {}",
                        row.check, row.method, row.detail
                    ));
                }
            }
            report.text = lemma_report(&lemmas, &config, format);
        }
        Command::Lowerbound { n, p, trials } => {
            config.insert(0, ("command", "lowerbound".into()));
            config.push((
                "n",
                n.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ));
            config.push(("p", p.join(",")));
            config.push(("trials", trials.to_string()));
            let ps = p
                .iter()
                .map(|s| parse_probability(s))
                .collect::<Result<Vec<_>>>()?;
            let rows = harness::theorem2_sweep(n, &ps, *trials, cli.seed, cli.jobs)?;
            report.text = sweep_report(&rows, &config, format);
        }
        Command::Gen { spec } => {
            report.text = generate(spec, cli.seed)?.to_json() + "\n";
        }
        Command::ReproduceExample { flow } => {
            config.insert(0, ("command", "reproduce-example".into()));
            let flow = match flow {
                Some(path) => {
                    config.push(("flow", path.display().to_string()));
                    FlowSolution::from_json(&std::fs::read_to_string(path)?, &example::instance())?
                }
                None => example::flow(),
            };
            let result = example::reproduce(&flow)?;
            if !result.matches() {
                outcome = Outcome::Mismatch;
                report.diagnostics.push("golden trace mismatch:".into());
                report
                    .diagnostics
                    .extend(result.mismatches.iter().map(|m| format!("  {m}")));
            }
            report.text = example_report(&result, &config, format);
        }
    }
    Ok((report, outcome))
}

fn replay(
    policy: Policy,
    g: &ExpectationGraph,
    flow: Option<&FlowSolution>,
    seed: u64,
    replication: u64,
    seq: &ArrivalSequence,
) -> Result<(crate::Matching, Vec<AssignmentEvent>)> {
    if replication == 0 {
        return run_policy(policy, g, flow, seed, seq);
    }
    harness::run_replication(policy, g, flow, seed, replication, seq)
}

/// Parses a probability as a decimal (`0.25`) or a fraction (`1/4`).
pub fn parse_probability(text: &str) -> Result<Ratio<u64>> {
    let bad = || Error::InvalidArgument(format!("cannot parse probability `{text}`"));
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den: u64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(num, den));
    }
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if whole.is_empty() && frac.is_empty()
        || !whole
            .chars()
            .chain(frac.chars())
            .all(|c| c.is_ascii_digit())
        || frac.len() > 18
    {
        return Err(bad());
    }
    let den = 10u64.pow(frac.len() as u32);
    let whole: u64 = if whole.is_empty() {
        0
    } else {
        whole.parse().map_err(|_| bad())?
    };
    let frac_value: u64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let num = whole
        .checked_mul(den)
        .and_then(|x| x.checked_add(frac_value))
        .ok_or_else(bad)?;
    Ok(Ratio::new(num, den))
}

fn parse_list(text: &str, what: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| {
                Error::Parse(format!("{what}: `{}` is not a positive integer", s.trim()))
            })
        })
        .collect()
}

/// Builds an instance from a generator spec.
pub fn generate(spec: &str, seed: u64) -> Result<ExpectationGraph> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = |msg: &str| Error::InvalidArgument(format!("generator spec `{spec}`: {msg}"));
    let int = |s: &str, name: &str| -> Result<u64> {
        s.parse()
            .map_err(|_| bad(&format!("{name} must be a non-negative integer")))
    };
    match parts.as_slice() {
        ["example"] => Ok(example::instance()),
        ["lb", n, p] => generate_lower_bound_instance(int(n, "N")? as usize, parse_probability(p)?),
        ["random", n, k, bound, den, rest @ ..] if rest.len() <= 1 => {
            let bound: f64 = bound
                .parse()
                .ok()
                .filter(|b: &f64| b.is_finite() && *b >= 0.0)
                .ok_or_else(|| bad("BOUND must be a non-negative number"))?;
            let seed = match rest {
                [s] => int(s, "SEED")?,
                _ => seed,
            };
            generate_random_instance(
                int(n, "N")? as usize,
                int(k, "K")? as usize,
                bound,
                int(den, "DEN")?,
                seed,
            )
        }
        _ => Err(bad(
            "expected example, lb:N:P or random:N:K:BOUND:DEN[:SEED]",
        )),
    }
}

fn csv_header(config: &[(&str, String)]) -> String {
    config
        .iter()
        .map(|(k, v)| format!("# {k} = {v}\n"))
        .collect()
}

fn config_json(config: &[(&str, String)]) -> Value {
    Value::Object(
        config
            .iter()
            .map(|(k, v)| (k.to_string(), Value::String(v.clone())))
            .collect(),
    )
}

fn csv_table<R: Serialize>(header: &str, rows: &[R]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("csv row serializes");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv");
    format!("{header}\n{body}")
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("json serializes") + "\n"
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn solve_report(
    g: &ExpectationGraph,
    flow: &FlowSolution,
    config: &[(&str, String)],
    format: Format,
) -> String {
    let certified = flow.certify(g).is_ok();
    match format {
        Format::Json => {
            let mut value: Value = serde_json::from_str(&flow.to_json()).expect("flow json");
            let exact: Vec<Vec<String>> = (0..flow.n())
                .map(|w| (0..flow.k()).map(|j| flow.flow(w, j).to_string()).collect())
                .collect();
            value["flow"] = json!(exact);
            value["certified"] = json!(certified);
            value["config"] = config_json(config);
            pretty(&value)
        }
        Format::Csv => {
            let mut s = csv_header(config);
            let _ = writeln!(s, "# objective = {}", fmt_sig(flow.objective()));
            let _ = writeln!(s, "# certified = {certified}");
            let rows: Vec<_> = (0..flow.n())
                .flat_map(|w| (0..flow.k()).map(move |j| (w, j)))
                .filter(|&(w, j)| flow.scaled(w, j) > 0)
                .map(|(w, j)| {
                    (
                        w + 1,
                        j + 1,
                        fmt_sig(g.utility(w, j)),
                        fmt_sig(flow.flow_f64(w, j)),
                        flow.flow(w, j).to_string(),
                    )
                })
                .collect();
            s + &csv_table("worker,job_type,utility,flow,flow_exact", &rows)
        }
    }
}

fn trace_csv(events: &[AssignmentEvent]) -> String {
    let rows: Vec<_> = events
        .iter()
        .map(TraceLine::from)
        .map(|e| {
            (
                e.t,
                e.job_type,
                e.preferred,
                e.preferred_available,
                e.assigned,
                fmt_sig(e.utility),
            )
        })
        .collect();
    csv_table(
        "t,job_type,preferred,preferred_available,assigned,utility",
        &rows,
    )
}

#[derive(Serialize)]
struct EstimateRow {
    policy: String,
    trials: u64,
    alg_mean: String,
    alg_se: String,
    opt_mean: String,
    opt_se: String,
    ratio: String,
    ratio_se: String,
    ratio_ci_low: String,
    ratio_ci_high: String,
}

fn estimate_row(e: &harness::RatioEstimate) -> EstimateRow {
    EstimateRow {
        policy: e.policy.clone(),
        trials: e.trials,
        alg_mean: fmt_sig(e.alg_mean),
        alg_se: fmt_sig(e.alg_se),
        opt_mean: fmt_sig(e.opt_mean),
        opt_se: fmt_sig(e.opt_se),
        ratio: fmt_sig(e.ratio),
        ratio_se: fmt_sig(e.ratio_se),
        ratio_ci_low: fmt_sig(e.ratio_ci.0),
        ratio_ci_high: fmt_sig(e.ratio_ci.1),
    }
}

fn estimate_json(e: &harness::RatioEstimate) -> Value {
    json!({
        "policy": e.policy,
        "trials": e.trials,
        "alg_mean": round_sig(e.alg_mean),
        "alg_se": round_sig(e.alg_se),
        "opt_mean": round_sig(e.opt_mean),
        "opt_se": round_sig(e.opt_se),
        "ratio": round_sig(e.ratio),
        "ratio_se": round_sig(e.ratio_se),
        "ratio_ci": [round_sig(e.ratio_ci.0), round_sig(e.ratio_ci.1)],
    })
}

fn simulate_report(
    estimates: &[harness::RatioEstimate],
    config: &[(&str, String)],
    format: Format,
) -> String {
    match format {
        Format::Json => pretty(&json!({
            "config": config_json(config),
            "estimates": estimates.iter().map(estimate_json).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let rows: Vec<_> = estimates.iter().map(estimate_row).collect();
            csv_header(config)
                + &csv_table(
                    "policy,trials,alg_mean,alg_se,opt_mean,opt_se,ratio,ratio_se,ratio_ci_low,ratio_ci_high",
                    &rows,
                )
        }
    }
}

fn exact_report(
    s: &harness::ExactSummary,
    flow: &FlowSolution,
    edges: bool,
    config: &[(&str, String)],
    format: Format,
) -> String {
    let mut rows: Vec<(String, f64, Option<f64>, Option<bool>)> = vec![
        ("E[DISPATCH]".into(), s.dispatch, None, None),
        ("E[OPT]".into(), s.opt, None, None),
        ("TPP".into(), s.tpp, None, None),
        (
            "E[DISPATCH] >= TPP/2".into(),
            s.dispatch,
            Some(0.5 * s.tpp),
            Some(s.dispatch_ge_half_tpp),
        ),
        (
            "TPP/2 >= E[OPT]/2".into(),
            0.5 * s.tpp,
            Some(0.5 * s.opt),
            Some(s.tpp_ge_opt),
        ),
        (
            "E[DISPATCH] >= E[OPT]/2".into(),
            s.dispatch,
            Some(0.5 * s.opt),
            Some(s.dispatch_ge_half_opt),
        ),
    ];
    if edges {
        for (w, row) in s.edge_probabilities.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                let half = 0.5 * flow.flow_f64(w, j);
                rows.push((
                    format!("P(I_w{}j{} = 1)", w + 1, j + 1),
                    p,
                    Some(half),
                    Some(p >= half - harness::EXACT_TOLERANCE),
                ));
            }
        }
    }
    match format {
        Format::Json => {
            let checks: Vec<Value> = rows
                .iter()
                .skip(3)
                .map(|(item, value, bound, pass)| {
                    json!({
                        "check": item,
                        "value": round_sig(*value),
                        "bound": bound.map(round_sig),
                        "status": pass.map(status),
                    })
                })
                .collect();
            let mut value = json!({
                "config": config_json(config),
                "dispatch": round_sig(s.dispatch),
                "opt": round_sig(s.opt),
                "tpp": round_sig(s.tpp),
                "dispatch_states": s.dispatch_states,
                "opt_count_vectors": s.opt_count_vectors,
                "checks": checks,
            });
            if edges {
                value["edge_probabilities"] = json!(s
                    .edge_probabilities
                    .iter()
                    .map(|r| r.iter().map(|&x| round_sig(x)).collect::<Vec<_>>())
                    .collect::<Vec<_>>());
            }
            pretty(&value)
        }
        Format::Csv => {
            let table: Vec<_> = rows
                .iter()
                .map(|(item, value, bound, pass)| {
                    (
                        item.clone(),
                        fmt_sig(*value),
                        bound.map(fmt_sig).unwrap_or_default(),
                        pass.map(status).unwrap_or_default(),
                    )
                })
                .collect();
            csv_header(config) + &csv_table("item,value,bound,status", &table)
        }
    }
}

fn lemma_report(r: &harness::LemmaReport, config: &[(&str, String)], format: Format) -> String {
    match format {
        Format::Json => pretty(&json!({
            "config": config_json(config),
            "n": r.n,
            "k": r.k,
            "all_pass": r.all_pass(),
            "rows": r.rows.iter().map(|row| json!({
                "check": row.check,
                "method": row.method,
                "observed": json_float(row.observed),
                "expected": round_sig(row.expected),
                "tolerance": round_sig(row.tolerance),
                "status": status(row.pass),
                "detail": row.detail,
            })).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let rows: Vec<_> = r
                .rows
                .iter()
                .map(|row| {
                    (
                        row.check.clone(),
                        row.method,
                        fmt_sig(row.observed),
                        fmt_sig(row.expected),
                        fmt_sig(row.tolerance),
                        status(row.pass),
                        row.detail.clone(),
                    )
                })
                .collect();
            csv_header(config)
                + &csv_table(
                    "check,method,observed,expected,tolerance,status,detail",
                    &rows,
                )
        }
    }
}

/// Non-finite floats become strings, which JSON can carry.
fn json_float(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        json!(x.to_string())
    }
}

#[derive(Serialize)]
struct SweepCsvRow {
    n: usize,
    p: String,
    p_value: String,
    estimate: EstimateRow,
    opt_closed_form: String,
    alg_upper_bound: String,
    ratio_bound: String,
    limit_ratio: String,
    upper_bound_holds: bool,
}

fn sweep_report(rows: &[harness::SweepRow], config: &[(&str, String)], format: Format) -> String {
    match format {
        Format::Json => pretty(&json!({
            "config": config_json(config),
            "rows": rows.iter().map(|r| json!({
                "n": r.n,
                "p": r.p,
                "p_value": round_sig(r.p_value),
                "estimate": estimate_json(&r.estimate),
                "opt_closed_form": round_sig(r.opt_closed_form),
                "alg_upper_bound": round_sig(r.alg_upper_bound),
                "ratio_bound": round_sig(r.ratio_bound),
                "limit_ratio": round_sig(r.limit_ratio),
                "upper_bound_holds": r.upper_bound_holds,
            })).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let table: Vec<_> = rows
                .iter()
                .map(|r| SweepCsvRow {
                    n: r.n,
                    p: r.p.clone(),
                    p_value: fmt_sig(r.p_value),
                    estimate: estimate_row(&r.estimate),
                    opt_closed_form: fmt_sig(r.opt_closed_form),
                    alg_upper_bound: fmt_sig(r.alg_upper_bound),
                    ratio_bound: fmt_sig(r.ratio_bound),
                    limit_ratio: fmt_sig(r.limit_ratio),
                    upper_bound_holds: r.upper_bound_holds,
                })
                .collect();
            csv_header(config)
                + &csv_table(
                    "n,p,p_value,policy,trials,alg_mean,alg_se,opt_mean,opt_se,ratio,ratio_se,ratio_ci_low,ratio_ci_high,opt_closed_form,alg_upper_bound,ratio_bound,limit_ratio,upper_bound_holds",
                    &table,
                )
        }
    }
}

fn example_report(r: &example::ExampleReport, config: &[(&str, String)], format: Format) -> String {
    match format {
        Format::Json => trace_to_json_lines(&r.events),
        Format::Csv => {
            let mut s = csv_header(config);
            let _ = writeln!(s, "# tpp = {}", fmt_sig(r.tpp));
            let _ = writeln!(
                s,
                "# dispatch_value = {}",
                r.dispatch_value
                    .map(fmt_sig)
                    .unwrap_or_else(|| "none".into())
            );
            let _ = writeln!(s, "# opt_value = {}", fmt_sig(r.opt_value));
            let _ = writeln!(
                s,
                "# result = {}",
                if r.matches() { "MATCH" } else { "MISMATCH" }
            );
            let rows: Vec<_> = r
                .events
                .iter()
                .zip(&r.preferred_probabilities)
                .map(|(e, p)| {
                    let line = TraceLine::from(e);
                    (
                        line.t,
                        line.job_type,
                        line.preferred,
                        p.to_string(),
                        line.preferred_available,
                        line.assigned,
                        fmt_sig(line.utility),
                    )
                })
                .collect();
            s + &csv_table(
                "t,job_type,preferred,preferred_probability,preferred_available,assigned,utility",
                &rows,
            )
        }
    }
}
