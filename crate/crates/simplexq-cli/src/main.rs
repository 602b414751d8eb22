//! Command-line front end for the latency models and the simulator.
//!
//! Every subcommand evaluates one experiment over a single arrival rate or a
//! sweep grid and emits one machine-readable table (CSV or a JSON array of
//! row objects), one row per evaluation point. Sweep points that saturate
//! the system are announced on stderr and left blank rather than aborting
//! the sweep; a simulation whose queues actually blow up terminates the run
//! with exit code 3 after flushing the rows finished so far. Usage and
//! configuration problems exit with code 2.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use output::{Cell, Format, Table};
use simplexq::analytic::{
    fairnessfirst_bounds, fairnessfirst_lowtraffic_sojourn, pk_sojourn, reptoall_bounds,
    reptoall_sojourn, selectone_sojourn, type_j_moments, FjMethod,
};
use simplexq::qbd::{ma_sojourn_ub, solve_qbd};
use simplexq::sim::run_sim;
use simplexq::{
    AccessTopology, ArrivalModel, Error, Result, SchedulingPolicy, ServiceDistribution,
    SimConfig, SimResult, SimplexTopology,
};

#[derive(Parser)]
#[command(
    name = "simplexq",
    version,
    about = "Hot-data download latency in simplex-coded storage: analytic models, \
             a matrix-analytic bound, and discrete-event simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form models over one arrival rate or a sweep grid
    Analytic(AnalyticArgs),
    /// Truncated lead-state matrix-analytic sojourn bound (availability one)
    Qbd(QbdArgs),
    /// One simulation experiment with full per-class statistics
    Simulate(SimulateArgs),
    /// Simulation across an arrival-rate grid
    Sweep(SweepArgs),
    /// Simulation and every applicable model, side by side per arrival rate
    Compare(CompareArgs),
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Code dimension: 2^k - 1 servers, availability t = 2^(k-1) - 1
    #[arg(long)]
    k: Option<u32>,
    /// Availability: one systematic server plus t recovery pairs
    #[arg(long, conflicts_with = "k")]
    t: Option<usize>,
    /// Service law: exp:<rate> | pareto:<scale>:<shape> | bern:<usual>:<long>:<prob>
    #[arg(long)]
    dist: Option<String>,
    /// Request scheduling: reptoall | selectone | fairness
    #[arg(long)]
    policy: Option<String>,
    /// Select-one dispatch probabilities, systematic option first
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    weights: Option<Vec<f64>>,
    /// Cold arrival rate per cold symbol (hotcold arrivals)
    #[arg(long)]
    cold_rate: Option<f64>,
    /// Arrival pattern: fixed | mixed | hotcold
    #[arg(long)]
    arrivals: Option<String>,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Single arrival rate
    #[arg(long)]
    lambda: Option<f64>,
    /// Sweep grid: first arrival rate
    #[arg(long)]
    lambda_start: Option<f64>,
    /// Sweep grid: last arrival rate (must exceed the start)
    #[arg(long)]
    lambda_stop: Option<f64>,
    /// Sweep grid: number of evenly spaced points
    #[arg(long)]
    lambda_points: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Hot completions per replication, warmup included
    #[arg(long)]
    requests: Option<u64>,
    /// Leading fraction of completions discarded as warmup
    #[arg(long)]
    warmup: Option<f64>,
    /// Independent replications
    #[arg(long)]
    reps: Option<u32>,
    /// Base RNG seed; each (replication, purpose) pair gets its own stream
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads: 0 = SIMPLEXQ_THREADS or all cores, 1 = sequential
    #[arg(long)]
    threads: Option<usize>,
    /// Resample in-service copies when a request reaches the head of the line
    #[arg(long)]
    restart_on_hol: bool,
    /// Cap how many requests recovery servers may run ahead of the head
    #[arg(long)]
    truncate_lead: Option<u32>,
    /// Abort the run once this many requests are in flight
    #[arg(long)]
    max_in_system: Option<usize>,
    /// Per-server service override, <server>=<law>; repeatable
    #[arg(long = "override", value_name = "SERVER=LAW")]
    overrides: Vec<String>,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON config file; explicit flags override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output format: csv | json
    #[arg(long)]
    format: Option<String>,
    /// Write the table to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyticArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct QbdArgs {
    /// Systematic service rate
    #[arg(long)]
    gamma: Option<f64>,
    /// First recovery-server rate
    #[arg(long)]
    alpha: Option<f64>,
    /// Second recovery-server rate
    #[arg(long)]
    beta: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Arrival rate
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    common: CommonArgs,
}

/// Config-file mirror of the flags. Flags override these values; keys
/// outside this set are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    k: Option<u32>,
    t: Option<usize>,
    dist: Option<String>,
    policy: Option<String>,
    weights: Option<Vec<f64>>,
    cold_rate: Option<f64>,
    arrivals: Option<String>,
    lambda: Option<f64>,
    lambda_start: Option<f64>,
    lambda_stop: Option<f64>,
    lambda_points: Option<usize>,
    requests: Option<u64>,
    warmup: Option<f64>,
    reps: Option<u32>,
    seed: Option<u64>,
    threads: Option<usize>,
    restart_on_hol: Option<bool>,
    truncate_lead: Option<u32>,
    max_in_system: Option<usize>,
    overrides: Option<Vec<String>>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    format: Option<String>,
    output: Option<String>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn load_file(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("bad config {}: {e}", path.display())))
}

#[derive(Debug, Clone)]
enum Policy {
    Reptoall,
    SelectOne(Vec<f64>),
    Fairness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arrivals {
    Fixed,
    Mixed,
    HotCold,
}

struct Model {
    topology: AccessTopology,
    dist: ServiceDistribution,
    policy: Policy,
    arrivals: Arrivals,
    cold_rate: Option<f64>,
}

impl Model {
    fn t(&self) -> usize {
        self.topology.t()
    }

    fn exp_rate(&self) -> Option<f64> {
        match self.dist {
            ServiceDistribution::Exp { rate } => Some(rate),
            _ => None,
        }
    }
}

/// Builds the system description from flags and config file. `for_sim`
/// additionally requires that arrival patterns involving cold symbols come
/// with a full code topology and a cold rate.
fn resolve_model(flags: &ModelArgs, file: &FileConfig, for_sim: bool) -> Result<Model> {
    let (k, t) = if flags.k.is_some() || flags.t.is_some() {
        (flags.k, flags.t)
    } else {
        (file.k, file.t)
    };
    let (topology, from_code) = match (k, t) {
        (Some(_), Some(_)) => return Err(usage("pass either k or t, not both")),
        (Some(k), None) => (AccessTopology::from(&SimplexTopology::build(k)?), true),
        (None, Some(t)) => (AccessTopology::single_symbol(t)?, false),
        (None, None) => return Err(usage("an availability is required: --t <t> or --k <k>")),
    };

    let dist: ServiceDistribution = flags
        .dist
        .as_deref()
        .or(file.dist.as_deref())
        .unwrap_or("exp:1")
        .parse()?;

    let policy_name = flags.policy.as_deref().or(file.policy.as_deref()).unwrap_or("reptoall");
    let weights = flags.weights.clone().or_else(|| file.weights.clone());
    let policy = match policy_name {
        "reptoall" | "fairness" => {
            if weights.is_some() {
                return Err(usage("weights apply to the selectone policy only"));
            }
            if policy_name == "reptoall" {
                Policy::Reptoall
            } else {
                Policy::Fairness
            }
        }
        "selectone" => Policy::SelectOne(
            weights.ok_or_else(|| usage("selectone needs weights (systematic option first)"))?,
        ),
        other => {
            return Err(usage(format!(
                "unknown policy {other:?}; expected reptoall, selectone, or fairness"
            )))
        }
    };

    let cold_rate = flags.cold_rate.or(file.cold_rate);
    let default_arrivals =
        if matches!(policy, Policy::Fairness) { "hotcold" } else { "fixed" };
    let arrivals = match flags
        .arrivals
        .as_deref()
        .or(file.arrivals.as_deref())
        .unwrap_or(default_arrivals)
    {
        "fixed" => Arrivals::Fixed,
        "mixed" => Arrivals::Mixed,
        "hotcold" => Arrivals::HotCold,
        other => {
            return Err(usage(format!(
                "unknown arrival pattern {other:?}; expected fixed, mixed, or hotcold"
            )))
        }
    };

    if let Some(c) = cold_rate {
        if arrivals != Arrivals::HotCold {
            return Err(usage("cold_rate applies to hotcold arrivals only"));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(usage(format!("cold_rate must be nonnegative, got {c}")));
        }
    }
    match policy {
        Policy::Fairness if arrivals != Arrivals::HotCold => {
            return Err(usage("the fairness policy requires hotcold arrivals"));
        }
        Policy::SelectOne(_) if arrivals != Arrivals::Fixed => {
            return Err(usage("selectone dispatch requires fixed arrivals"));
        }
        _ => {}
    }
    if for_sim {
        if arrivals != Arrivals::Fixed && !from_code {
            return Err(usage(
                "mixed and hotcold arrivals need cold symbols; pass --k for a full code layout",
            ));
        }
        if arrivals == Arrivals::HotCold && cold_rate.is_none() {
            return Err(usage("hotcold arrivals need --cold-rate"));
        }
    }

    Ok(Model { topology, dist, policy, arrivals, cold_rate })
}

struct RunSettings {
    requests: u64,
    warmup: f64,
    reps: u32,
    seed: u64,
    threads: usize,
    restart_on_hol: bool,
    truncate_lead: Option<u32>,
    max_in_system: usize,
    overrides: Vec<(usize, ServiceDistribution)>,
}

fn parse_override(s: &str) -> Result<(usize, ServiceDistribution)> {
    let (server, law) = s
        .split_once('=')
        .ok_or_else(|| usage(format!("bad service override {s:?}; expected <server>=<law>")))?;
    let server = server
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad server index in override {s:?}")))?;
    Ok((server, law.trim().parse()?))
}

fn resolve_run(flags: &RunArgs, file: &FileConfig) -> Result<RunSettings> {
    let override_specs: Vec<String> = if flags.overrides.is_empty() {
        file.overrides.clone().unwrap_or_default()
    } else {
        flags.overrides.clone()
    };
    Ok(RunSettings {
        requests: flags.requests.or(file.requests).unwrap_or(100_000),
        warmup: flags.warmup.or(file.warmup).unwrap_or(0.2),
        reps: flags.reps.or(file.reps).unwrap_or(5),
        seed: flags.seed.or(file.seed).unwrap_or(0x51_3D),
        threads: flags.threads.or(file.threads).unwrap_or(0),
        restart_on_hol: flags.restart_on_hol || file.restart_on_hol.unwrap_or(false),
        truncate_lead: flags.truncate_lead.or(file.truncate_lead),
        max_in_system: flags.max_in_system.or(file.max_in_system).unwrap_or(200_000),
        overrides: override_specs.iter().map(|s| parse_override(s)).collect::<Result<_>>()?,
    })
}

fn resolve_output(common: &CommonArgs, file: &FileConfig) -> Result<(Format, Option<PathBuf>)> {
    let format: Format = common
        .format
        .as_deref()
        .or(file.format.as_deref())
        .unwrap_or("csv")
        .parse()?;
    let path =
        common.output.clone().or_else(|| file.output.as_deref().map(PathBuf::from));
    Ok((format, path))
}

fn check_rate(lambda: f64, allow_zero: bool) -> Result<()> {
    let ok = lambda.is_finite() && if allow_zero { lambda >= 0.0 } else { lambda > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(usage(format!(
            "arrival rate must be {} and finite, got {lambda}",
            if allow_zero { "nonnegative" } else { "positive" }
        )))
    }
}

/// Arrival rates to evaluate: a single `lambda` or an evenly spaced,
/// strictly increasing grid.
fn resolve_grid(flags: &GridArgs, file: &FileConfig, allow_zero: bool) -> Result<Vec<f64>> {
    let flag_grid = flags.lambda_start.is_some()
        || flags.lambda_stop.is_some()
        || flags.lambda_points.is_some();
    let (single, start, stop, points) = match (flags.lambda.is_some(), flag_grid) {
        (true, true) => {
            return Err(usage("pass either --lambda or a sweep grid, not both"))
        }
        (true, false) => (flags.lambda, None, None, None),
        (false, true) => (None, flags.lambda_start, flags.lambda_stop, flags.lambda_points),
        (false, false) => {
            let file_grid = file.lambda_start.is_some()
                || file.lambda_stop.is_some()
                || file.lambda_points.is_some();
            if file.lambda.is_some() && file_grid {
                return Err(usage("config gives both lambda and a sweep grid"));
            }
            (file.lambda, file.lambda_start, file.lambda_stop, file.lambda_points)
        }
    };
    if let Some(l) = single {
        check_rate(l, allow_zero)?;
        return Ok(vec![l]);
    }
    let (Some(a), Some(b), Some(n)) = (start, stop, points) else {
        return Err(usage(
            "an arrival rate is required: lambda, or lambda_start + lambda_stop + lambda_points",
        ));
    };
    if n == 0 {
        return Err(usage("lambda_points must be at least 1"));
    }
    check_rate(a, allow_zero)?;
    if n == 1 {
        return Ok(vec![a]);
    }
    check_rate(b, allow_zero)?;
    if b <= a {
        return Err(usage(format!("the sweep grid must increase: start {a}, stop {b}")));
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

/// Turns a model evaluation into a cell, downgrading "no value in this
/// regime" outcomes (instability, degenerate estimates, infinite moments,
/// non-convergence) to an empty cell with a note on stderr.
fn model_cell(label: &str, lambda: f64, r: Result<f64>) -> Result<Cell> {
    match r {
        Ok(v) => Ok(Cell::Num(v)),
        Err(e) => match e {
            Error::Unstable { .. }
            | Error::Degenerate(_)
            | Error::InfiniteMoment(_)
            | Error::Drift(_)
            | Error::NonConvergence { .. } => {
                eprintln!("note: {label} unavailable at lambda={lambda}: {e}");
                Ok(Cell::Empty)
            }
            other => Err(other),
        },
    }
}

/// True when the offered load saturates even the most optimistic service
/// law, so the simulated queues cannot reach steady state.
fn certainly_unstable(m: &Model, lambda: f64) -> bool {
    if m.arrivals == Arrivals::HotCold {
        if let Some(c) = m.cold_rate {
            if c * m.dist.mean() >= 1.0 {
                return true;
            }
        }
    }
    match &m.policy {
        Policy::Reptoall | Policy::Fairness => match m.arrivals {
            Arrivals::Mixed => false,
            _ => type_j_moments(&m.dist, m.t(), m.t())
                .map(|mm| lambda * mm.m1 >= 1.0)
                .unwrap_or(false),
        },
        Policy::SelectOne(w) => m.exp_rate().is_some_and(|rate| {
            matches!(
                selectone_sojourn(m.t(), lambda, rate, w),
                Err(Error::Unstable { .. })
            )
        }),
    }
}

/// Runs one simulation point, or skips it (with a warning) when the load is
/// provably beyond capacity.
fn sim_point(m: &Model, lambda: f64, run: &RunSettings) -> Result<Option<SimResult>> {
    if certainly_unstable(m, lambda) {
        eprintln!(
            "warning: lambda={lambda}: offered load saturates even the fastest \
             service law; simulation skipped"
        );
        return Ok(None);
    }
    let cfg = build_sim_config(m, lambda, run)?;
    run_sim(&cfg).map(Some)
}

fn build_sim_config(m: &Model, lambda: f64, run: &RunSettings) -> Result<SimConfig> {
    let policy = match &m.policy {
        Policy::Reptoall => SchedulingPolicy::ReplicateToAll,
        Policy::SelectOne(w) => SchedulingPolicy::SelectOne { weights: w.clone() },
        Policy::Fairness => SchedulingPolicy::FairnessFirst,
    };
    let arrivals = match m.arrivals {
        Arrivals::Fixed => ArrivalModel::FixedHot { rate: lambda },
        Arrivals::Mixed => ArrivalModel::MixedUniform { rate: lambda },
        Arrivals::HotCold => ArrivalModel::HotCold {
            hot_rate: lambda,
            cold_rate: m.cold_rate.ok_or_else(|| usage("hotcold arrivals need --cold-rate"))?,
        },
    };
    let mut cfg = SimConfig::new(m.topology.clone(), policy, arrivals, m.dist);
    cfg.service_overrides = run.overrides.clone();
    cfg.num_requests = run.requests;
    cfg.warmup_fraction = run.warmup;
    cfg.replications = run.reps;
    cfg.seed = run.seed;
    cfg.restart_on_hol = run.restart_on_hol;
    cfg.truncate_lead = run.truncate_lead;
    cfg.max_in_system = run.max_in_system;
    cfg.threads = run.threads;
    Ok(cfg)
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn class_cells(lambda: f64, name: &str, s: &simplexq::sim::ClassStats) -> Vec<Cell> {
    vec![
        Cell::from(lambda),
        Cell::from(name),
        Cell::from(s.count),
        Cell::from(s.mean),
        Cell::from(s.ci_half_width),
        Cell::from(s.p50),
        Cell::from(s.p90),
        Cell::from(s.p99),
    ]
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let file = load_file(a.common.config.as_deref())?;
    let m = resolve_model(&a.model, &file, true)?;
    let run = resolve_run(&a.run, &file)?;
    let (format, path) = resolve_output(&a.common, &file)?;
    let lambda = a
        .lambda
        .or(file.lambda)
        .ok_or_else(|| usage("an arrival rate is required: --lambda"))?;
    check_rate(lambda, false)?;
    if certainly_unstable(&m, lambda) {
        eprintln!(
            "warning: lambda={lambda}: offered load saturates even the fastest \
             service law; expect an instability abort"
        );
    }

    let types_tracked =
        matches!(m.policy, Policy::Reptoall) && m.arrivals == Arrivals::Fixed;
    let mut cols = columns(&[
        "lambda",
        "class",
        "count",
        "mean",
        "ci",
        "p50",
        "p90",
        "p99",
        "throughput",
    ]);
    if types_tracked {
        cols.push("ws".into());
        for j in 0..=m.t() {
            cols.push(format!("f{j}"));
        }
    }

    let cfg = build_sim_config(&m, lambda, &run)?;
    let res = run_sim(&cfg)?;

    let mut table = Table::new(&cols, format, path.as_deref())?;
    let mut cells = class_cells(lambda, "hot", &res.hot);
    cells.push(Cell::from(res.throughput));
    if types_tracked {
        cells.push(res.winning_fractions.map(|(ws, _)| ws).into());
        let fj = res.empirical_fj.unwrap_or_default();
        for j in 0..=m.t() {
            cells.push(fj.get(j).copied().into());
        }
    }
    table.row(cells)?;
    if let Some(cold) = &res.cold {
        let mut cells = class_cells(lambda, "cold", cold);
        cells.push(Cell::Empty);
        if types_tracked {
            for _ in 0..=m.t() + 1 {
                cells.push(Cell::Empty);
            }
        }
        table.row(cells)?;
    }
    table.finish()
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let file = load_file(a.common.config.as_deref())?;
    let m = resolve_model(&a.model, &file, true)?;
    let run = resolve_run(&a.run, &file)?;
    let grid = resolve_grid(&a.grid, &file, false)?;
    let (format, path) = resolve_output(&a.common, &file)?;

    let types_tracked =
        matches!(m.policy, Policy::Reptoall) && m.arrivals == Arrivals::Fixed;
    let hotcold = m.arrivals == Arrivals::HotCold;
    let mut cols = columns(&["lambda", "mean", "ci", "p50", "p90", "p99", "throughput"]);
    if types_tracked {
        cols.push("ws".into());
    }
    if hotcold {
        cols.push("cold_mean".into());
        cols.push("cold_ci".into());
    }
    let width = cols.len();

    let mut table = Table::new(&cols, format, path.as_deref())?;
    let fill = (|| -> Result<()> {
        for &l in &grid {
            let mut cells = vec![Cell::from(l)];
            if let Some(res) = sim_point(&m, l, &run)? {
                cells.extend([
                    Cell::from(res.hot.mean),
                    Cell::from(res.hot.ci_half_width),
                    Cell::from(res.hot.p50),
                    Cell::from(res.hot.p90),
                    Cell::from(res.hot.p99),
                    Cell::from(res.throughput),
                ]);
                if types_tracked {
                    cells.push(res.winning_fractions.map(|(ws, _)| ws).into());
                }
                if hotcold {
                    cells.push(res.cold.as_ref().map(|c| c.mean).into());
                    cells.push(res.cold.as_ref().and_then(|c| c.ci_half_width).into());
                }
            } else {
                cells.resize(width, Cell::Empty);
            }
            table.row(cells)?;
        }
        Ok(())
    })();
    fill.and(table.finish())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let file = load_file(a.common.config.as_deref())?;
    let m = resolve_model(&a.model, &file, true)?;
    let run = resolve_run(&a.run, &file)?;
    let grid = resolve_grid(&a.grid, &file, false)?;
    let (format, path) = resolve_output(&a.common, &file)?;

    match m.policy.clone() {
        Policy::Reptoall => {
            if m.arrivals != Arrivals::Fixed {
                return Err(usage(
                    "compare with the reptoall policy assumes fixed hot arrivals; use sweep \
                     for other patterns",
                ));
            }
            let t = m.t();
            // With availability one and exponential service both the
            // high-traffic approximation and the matrix-analytic bound
            // apply; otherwise fall back to the three estimator columns.
            match m.exp_rate() {
                Some(rate) if t == 1 => {
                    let cols = columns(&[
                        "lambda",
                        "sim_mean",
                        "sim_ci",
                        "mg1_approx",
                        "lb_st",
                        "ub_splitmerge",
                        "ub_ma",
                    ]);
                    let mut table = Table::new(&cols, format, path.as_deref())?;
                    let fill = (|| -> Result<()> {
                        for &l in &grid {
                            let mut cells = vec![Cell::from(l)];
                            push_sim_mean_ci(&mut cells, sim_point(&m, l, &run)?);
                            cells.push(model_cell(
                                "high-traffic approximation",
                                l,
                                reptoall_sojourn(t, l, &m.dist, FjMethod::HighTrafficT1)
                                    .map(|r| r.sojourn),
                            )?);
                            push_bound_cells(&mut cells, t, l, &m.dist)?;
                            cells.push(model_cell(
                                "matrix-analytic bound",
                                l,
                                ma_sojourn_ub(rate, rate, rate, l),
                            )?);
                            table.row(cells)?;
                        }
                        Ok(())
                    })();
                    fill.and(table.finish())
                }
                _ => {
                    let cols = columns(&[
                        "lambda",
                        "sim_mean",
                        "sim_ci",
                        "mg1_naive",
                        "mg1_better",
                        "mg1_best",
                        "lb_st",
                        "ub_splitmerge",
                    ]);
                    let mut table = Table::new(&cols, format, path.as_deref())?;
                    let fill = (|| -> Result<()> {
                        for &l in &grid {
                            let mut cells = vec![Cell::from(l)];
                            push_sim_mean_ci(&mut cells, sim_point(&m, l, &run)?);
                            push_estimator_cells(&mut cells, t, l, &m.dist)?;
                            push_bound_cells(&mut cells, t, l, &m.dist)?;
                            table.row(cells)?;
                        }
                        Ok(())
                    })();
                    fill.and(table.finish())
                }
            }
        }
        Policy::SelectOne(weights) => {
            let rate = m
                .exp_rate()
                .ok_or_else(|| usage("the selectone model needs exponential service"))?;
            let cols = columns(&["lambda", "sim_mean", "sim_ci", "selectone_exact"]);
            let mut table = Table::new(&cols, format, path.as_deref())?;
            let fill = (|| -> Result<()> {
                for &l in &grid {
                    let mut cells = vec![Cell::from(l)];
                    push_sim_mean_ci(&mut cells, sim_point(&m, l, &run)?);
                    cells.push(model_cell(
                        "select-one mean",
                        l,
                        selectone_sojourn(m.t(), l, rate, &weights),
                    )?);
                    table.row(cells)?;
                }
                Ok(())
            })();
            fill.and(table.finish())
        }
        Policy::Fairness => {
            let t = m.t();
            let cold_rate =
                m.cold_rate.ok_or_else(|| usage("hotcold arrivals need --cold-rate"))?;
            let cold_plain = m
                .dist
                .moments()
                .and_then(|(m1, m2)| pk_sojourn(cold_rate, m1, m2))
                .map(|r| r.sojourn);
            let cols = columns(&[
                "lambda",
                "hot_sim_mean",
                "hot_sim_ci",
                "cold_sim_mean",
                "cold_sim_ci",
                "hot_lb",
                "hot_ub",
                "hot_lowtraffic",
                "cold_mg1",
            ]);
            let mut table = Table::new(&cols, format, path.as_deref())?;
            let fill = (|| -> Result<()> {
                for &l in &grid {
                    let mut cells = vec![Cell::from(l)];
                    let res = sim_point(&m, l, &run)?;
                    push_sim_mean_ci(&mut cells, res.clone());
                    match res.as_ref().and_then(|r| r.cold.as_ref()) {
                        Some(c) => {
                            cells.push(Cell::from(c.mean));
                            cells.push(Cell::from(c.ci_half_width));
                        }
                        None => {
                            cells.push(Cell::Empty);
                            cells.push(Cell::Empty);
                        }
                    }
                    match fairnessfirst_bounds(t, l, &m.dist) {
                        Ok(b) => {
                            cells.push(Cell::from(b.lower.sojourn));
                            cells.push(Cell::from(b.upper.sojourn));
                        }
                        Err(
                            e @ (Error::Unstable { .. } | Error::InfiniteMoment(_)),
                        ) => {
                            eprintln!(
                                "note: fairness bounds unavailable at lambda={l}: {e}"
                            );
                            // the lower bound (all groups helping) can
                            // outlive the cold-free upper bound
                            let lb = type_j_moments(&m.dist, t, 0)
                                .and_then(|mm| pk_sojourn(l, mm.m1, mm.m2));
                            cells.push(lb.map(|r| r.sojourn).ok().into());
                            cells.push(Cell::Empty);
                        }
                        Err(e) => return Err(e),
                    }
                    cells.push(model_cell(
                        "low-traffic model",
                        l,
                        fairnessfirst_lowtraffic_sojourn(t, l, cold_rate, &m.dist)
                            .map(|r| r.sojourn),
                    )?);
                    cells.push(model_cell("cold M/G/1", l, cold_plain.clone())?);
                    table.row(cells)?;
                }
                Ok(())
            })();
            fill.and(table.finish())
        }
    }
}

fn push_sim_mean_ci(cells: &mut Vec<Cell>, res: Option<SimResult>) {
    match res {
        Some(r) => {
            cells.push(Cell::from(r.hot.mean));
            cells.push(Cell::from(r.hot.ci_half_width));
        }
        None => {
            cells.push(Cell::Empty);
            cells.push(Cell::Empty);
        }
    }
}

fn push_estimator_cells(
    cells: &mut Vec<Cell>,
    t: usize,
    lambda: f64,
    d: &ServiceDistribution,
) -> Result<()> {
    for (label, method) in [
        ("naive estimator", FjMethod::Naive),
        ("better estimator", FjMethod::Better),
        ("best estimator", FjMethod::Best),
    ] {
        cells.push(model_cell(
            label,
            lambda,
            reptoall_sojourn(t, lambda, d, method).map(|r| r.sojourn),
        )?);
    }
    Ok(())
}

fn push_bound_cells(
    cells: &mut Vec<Cell>,
    t: usize,
    lambda: f64,
    d: &ServiceDistribution,
) -> Result<()> {
    match reptoall_bounds(t, lambda, d) {
        Ok(b) => {
            cells.push(Cell::from(b.lower_sojourn()));
            cells.push(b.upper.as_ref().map(|u| u.sojourn).into());
        }
        Err(e @ (Error::Unstable { .. } | Error::InfiniteMoment(_))) => {
            eprintln!("note: sojourn bounds unavailable at lambda={lambda}: {e}");
            cells.push(Cell::Empty);
            cells.push(Cell::Empty);
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn cmd_analytic(a: &AnalyticArgs) -> Result<()> {
    let file = load_file(a.common.config.as_deref())?;
    let m = resolve_model(&a.model, &file, false)?;
    let grid = resolve_grid(&a.grid, &file, true)?;
    let (format, path) = resolve_output(&a.common, &file)?;
    let t = m.t();

    match m.policy.clone() {
        Policy::Reptoall => {
            let t1_rate = m.exp_rate().filter(|_| t == 1);
            let mut cols = columns(&["lambda", "mg1_naive", "mg1_better", "mg1_best"]);
            if t1_rate.is_some() {
                cols.push("mg1_ht1".into());
            }
            cols.push("lb_st".into());
            cols.push("ub_splitmerge".into());
            if t1_rate.is_some() {
                cols.push("ub_ma".into());
            }
            let mut table = Table::new(&cols, format, path.as_deref())?;
            let fill = (|| -> Result<()> {
                for &l in &grid {
                    let mut cells = vec![Cell::from(l)];
                    push_estimator_cells(&mut cells, t, l, &m.dist)?;
                    if t1_rate.is_some() {
                        cells.push(model_cell(
                            "high-traffic approximation",
                            l,
                            reptoall_sojourn(t, l, &m.dist, FjMethod::HighTrafficT1)
                                .map(|r| r.sojourn),
                        )?);
                    }
                    push_bound_cells(&mut cells, t, l, &m.dist)?;
                    if let Some(rate) = t1_rate {
                        // the solver divides the mean occupancy by lambda,
                        // so the idle limit has no defined value
                        cells.push(if l > 0.0 {
                            model_cell(
                                "matrix-analytic bound",
                                l,
                                ma_sojourn_ub(rate, rate, rate, l),
                            )?
                        } else {
                            Cell::Empty
                        });
                    }
                    table.row(cells)?;
                }
                Ok(())
            })();
            fill.and(table.finish())
        }
        Policy::SelectOne(weights) => {
            let rate = m
                .exp_rate()
                .ok_or_else(|| usage("the selectone model needs exponential service"))?;
            let cols = columns(&["lambda", "selectone_exact"]);
            let mut table = Table::new(&cols, format, path.as_deref())?;
            let fill = (|| -> Result<()> {
                for &l in &grid {
                    let cells = vec![
                        Cell::from(l),
                        model_cell(
                            "select-one mean",
                            l,
                            selectone_sojourn(t, l, rate, &weights),
                        )?,
                    ];
                    table.row(cells)?;
                }
                Ok(())
            })();
            fill.and(table.finish())
        }
        Policy::Fairness => {
            let mut cols = columns(&["lambda", "lb", "ub"]);
            if m.cold_rate.is_some() {
                cols.push("lowtraffic".into());
            }
            let mut table = Table::new(&cols, format, path.as_deref())?;
            let fill = (|| -> Result<()> {
                for &l in &grid {
                    let mut cells = vec![Cell::from(l)];
                    match fairnessfirst_bounds(t, l, &m.dist) {
                        Ok(b) => {
                            cells.push(Cell::from(b.lower.sojourn));
                            cells.push(Cell::from(b.upper.sojourn));
                        }
                        Err(
                            e @ (Error::Unstable { .. } | Error::InfiniteMoment(_)),
                        ) => {
                            eprintln!(
                                "note: fairness bounds unavailable at lambda={l}: {e}"
                            );
                            let lb = type_j_moments(&m.dist, t, 0)
                                .and_then(|mm| pk_sojourn(l, mm.m1, mm.m2));
                            cells.push(lb.map(|r| r.sojourn).ok().into());
                            cells.push(Cell::Empty);
                        }
                        Err(e) => return Err(e),
                    }
                    if let Some(c) = m.cold_rate {
                        cells.push(model_cell(
                            "low-traffic model",
                            l,
                            fairnessfirst_lowtraffic_sojourn(t, l, c, &m.dist)
                                .map(|r| r.sojourn),
                        )?);
                    }
                    table.row(cells)?;
                }
                Ok(())
            })();
            fill.and(table.finish())
        }
    }
}

fn cmd_qbd(a: &QbdArgs) -> Result<()> {
    let file = load_file(a.common.config.as_deref())?;
    let gamma = a.gamma.or(file.gamma).unwrap_or(1.0);
    let alpha = a.alpha.or(file.alpha).unwrap_or(1.0);
    let beta = a.beta.or(file.beta).unwrap_or(1.0);
    let grid = resolve_grid(&a.grid, &file, false)?;
    let (format, path) = resolve_output(&a.common, &file)?;

    let cols = columns(&[
        "gamma",
        "alpha",
        "beta",
        "lambda",
        "sojourn_ub",
        "mean_in_system",
        "residual",
        "iterations",
    ]);
    let mut table = Table::new(&cols, format, path.as_deref())?;
    let fill = (|| -> Result<()> {
        for &l in &grid {
            let mut cells = vec![
                Cell::from(gamma),
                Cell::from(alpha),
                Cell::from(beta),
                Cell::from(l),
            ];
            match solve_qbd(gamma, alpha, beta, l) {
                Ok(sol) => {
                    cells.push(Cell::from(sol.sojourn));
                    cells.push(Cell::from(sol.mean_in_system));
                    cells.push(Cell::from(sol.residual));
                    cells.push(Cell::from(sol.iterations));
                }
                Err(
                    e @ (Error::Unstable { .. }
                    | Error::Drift(_)
                    | Error::NonConvergence { .. }),
                ) => {
                    eprintln!("note: no steady state at lambda={l}: {e}");
                    cells.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
                }
                Err(e) => return Err(e),
            }
            table.row(cells)?;
        }
        Ok(())
    })();
    fill.and(table.finish())
}

fn run(command: &Command) -> Result<()> {
    match command {
        Command::Analytic(a) => cmd_analytic(a),
        Command::Qbd(a) => cmd_qbd(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Instability { .. } => 3,
                _ => 2,
            })
        }
    }
}
