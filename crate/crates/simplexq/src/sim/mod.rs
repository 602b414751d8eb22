//! Discrete-event simulation of hot-data downloads.
//!
//! [`run_sim`] runs independent replications of one system configuration and
//! pools their statistics. Replications are deterministic functions of
//! `(seed, replication index)`, so results are byte-for-byte reproducible and
//! independent of whether replications execute sequentially or on a thread
//! pool.

mod engine;
mod rng;
mod stats;

use engine::RepOutcome;
pub use stats::ClassStats;

use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::topology::AccessTopology;

/// Request arrival pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalModel {
    /// Poisson arrivals, all for the one hot symbol.
    FixedHot { rate: f64 },
    /// Poisson arrivals with the symbol drawn uniformly per request.
    MixedUniform { rate: f64 },
    /// Hot symbol at `hot_rate`; every other symbol gets its own independent
    /// Poisson cold stream at `cold_rate`.
    HotCold { hot_rate: f64, cold_rate: f64 },
}

/// How a request's download work is placed on servers.
#[derive(Debug, Clone, PartialEq)]
pub enum SchedulingPolicy {
    /// Every request occupies its systematic server and all recovery pairs;
    /// first completion wins, the rest are cancelled.
    ReplicateToAll,
    /// Each request is dispatched to exactly one option drawn from `weights`
    /// (index 0: systematic server; index `i`: recovery pair `i - 1`).
    SelectOne { weights: Vec<f64> },
    /// Hot requests get redundant pair downloads only in fully idle groups,
    /// and a cold arrival preempts redundant work on its server immediately.
    FairnessFirst,
}

/// A complete simulation experiment.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub topology: AccessTopology,
    pub policy: SchedulingPolicy,
    pub arrivals: ArrivalModel,
    /// Service-time law used by every server unless overridden.
    pub service: ServiceDistribution,
    /// Per-server exceptions, e.g. a fast systematic server.
    pub service_overrides: Vec<(usize, ServiceDistribution)>,
    /// Hot completions to simulate per replication (warmup included).
    pub num_requests: u64,
    /// Leading fraction of each class's completions discarded from statistics.
    pub warmup_fraction: f64,
    pub replications: u32,
    pub seed: u64,
    /// Resample the in-service copies of a request when it reaches the head
    /// of the line (replicate-to-all, fixed hot arrivals only).
    pub restart_on_hol: bool,
    /// Block recovery servers from working more than this many requests ahead
    /// of the head: `Some(0)` is split-merge, `Some(2)` matches the truncated
    /// lead-state process of the matrix-analytic bound.
    pub truncate_lead: Option<u32>,
    /// Abort with [`Error::Instability`] when this many requests are in
    /// flight at once.
    pub max_in_system: usize,
    /// Worker threads for replications: 0 uses `SIMPLEXQ_THREADS` or the
    /// rayon default, 1 forces the sequential path.
    pub threads: usize,
}

impl SimConfig {
    pub fn new(
        topology: AccessTopology,
        policy: SchedulingPolicy,
        arrivals: ArrivalModel,
        service: ServiceDistribution,
    ) -> Self {
        SimConfig {
            topology,
            policy,
            arrivals,
            service,
            service_overrides: Vec::new(),
            num_requests: 100_000,
            warmup_fraction: 0.2,
            replications: 5,
            seed: 0x51_3D,
            restart_on_hol: false,
            truncate_lead: None,
            max_in_system: 200_000,
            threads: 0,
        }
    }

    /// Arrival rate of the class whose completions drive the stop condition.
    pub(crate) fn hot_rate(&self) -> f64 {
        match self.arrivals {
            ArrivalModel::FixedHot { rate } | ArrivalModel::MixedUniform { rate } => rate,
            ArrivalModel::HotCold { hot_rate, .. } => hot_rate,
        }
    }

    fn validate(&self) -> Result<()> {
        let rate = self.hot_rate();
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::parameter(format!("arrival rate must be positive, got {rate}")));
        }
        if let ArrivalModel::HotCold { cold_rate, .. } = self.arrivals {
            if !(cold_rate >= 0.0) || !cold_rate.is_finite() {
                return Err(Error::parameter(format!(
                    "cold arrival rate must be nonnegative, got {cold_rate}"
                )));
            }
        }
        if self.num_requests == 0 {
            return Err(Error::Config("num_requests must be at least 1".into()));
        }
        if !(0.0..=0.95).contains(&self.warmup_fraction) {
            return Err(Error::Config(format!(
                "warmup fraction must lie in [0, 0.95], got {}",
                self.warmup_fraction
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("at least one replication is required".into()));
        }
        if self.max_in_system < 16 {
            return Err(Error::Config("max_in_system must be at least 16".into()));
        }
        for &(server, _) in &self.service_overrides {
            if server >= self.topology.n_servers() {
                return Err(Error::Config(format!(
                    "service override for server {server}, but the topology has only {} servers",
                    self.topology.n_servers()
                )));
            }
        }
        match &self.policy {
            SchedulingPolicy::SelectOne { weights } => {
                if !matches!(self.arrivals, ArrivalModel::FixedHot { .. }) {
                    return Err(Error::Config(
                        "select-one dispatch is defined for fixed hot arrivals only".into(),
                    ));
                }
                let t = self.topology.t();
                if weights.len() != t + 1 {
                    return Err(Error::Config(format!(
                        "select-one needs {} weights (systematic plus {t} pairs), got {}",
                        t + 1,
                        weights.len()
                    )));
                }
                if weights.iter().any(|&w| !(0.0..=1.0).contains(&w) || !w.is_finite()) {
                    return Err(Error::Config("dispatch weights must lie in [0, 1]".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "dispatch weights must sum to 1, got {total}"
                    )));
                }
            }
            SchedulingPolicy::FairnessFirst => {
                if !matches!(self.arrivals, ArrivalModel::HotCold { .. }) {
                    return Err(Error::Config(
                        "fairness-first requires hot/cold arrivals".into(),
                    ));
                }
            }
            SchedulingPolicy::ReplicateToAll => {}
        }
        let fixed_hot_rta = matches!(self.policy, SchedulingPolicy::ReplicateToAll)
            && matches!(self.arrivals, ArrivalModel::FixedHot { .. });
        if self.truncate_lead.is_some() && !fixed_hot_rta {
            return Err(Error::Config(
                "lead truncation is defined for replicate-to-all with fixed hot arrivals".into(),
            ));
        }
        if self.restart_on_hol && !fixed_hot_rta {
            return Err(Error::Config(
                "head-of-line restarts are defined for replicate-to-all with fixed hot arrivals"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Pooled results of all replications.
#[derive(Debug, Clone)]
pub struct SimResult {
    /// Hot-symbol download statistics (every request under mixed arrivals).
    pub hot: ClassStats,
    /// Cold-class statistics under hot/cold arrivals, if any cold request
    /// finished.
    pub cold: Option<ClassStats>,
    /// Observed service-type fractions `f_j` (fixed-hot replicate-to-all).
    pub empirical_fj: Option<Vec<f64>>,
    /// Post-warmup type-to-type transition counts; rows with no visits stay
    /// all zero.
    pub type_transition_counts: Option<Vec<Vec<u64>>>,
    /// Fractions of downloads won by (systematic server, recovery pairs).
    pub winning_fractions: Option<(f64, f64)>,
    /// Post-warmup hot completions per unit time, averaged over replications.
    pub throughput: f64,
    pub events_processed: u64,
    pub replications: u32,
}

/// Runs the configured experiment.
pub fn run_sim(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let outcomes = run_replications(cfg)?;
    aggregate(cfg, &outcomes)
}

#[cfg(feature = "parallel")]
fn resolve_threads(cfg: &SimConfig) -> usize {
    if cfg.threads > 0 {
        return cfg.threads;
    }
    std::env::var("SIMPLEXQ_THREADS").ok().and_then(|v| v.parse().ok()).unwrap_or(0)
}

#[cfg(feature = "parallel")]
fn run_replications(cfg: &SimConfig) -> Result<Vec<RepOutcome>> {
    use rayon::prelude::*;
    let threads = resolve_threads(cfg);
    if threads == 1 || cfg.replications == 1 {
        return (0..cfg.replications).map(|r| engine::run_replication(cfg, r)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("could not build worker pool: {e}")))?;
    pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| engine::run_replication(cfg, r))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn run_replications(cfg: &SimConfig) -> Result<Vec<RepOutcome>> {
    (0..cfg.replications).map(|r| engine::run_replication(cfg, r)).collect()
}

fn aggregate(cfg: &SimConfig, outcomes: &[RepOutcome]) -> Result<SimResult> {
    let hot_reps: Vec<_> = outcomes.iter().map(|o| o.hot.clone()).collect();
    let hot = stats::combine_class(&hot_reps).ok_or_else(|| {
        Error::Config("no post-warmup hot completions; increase num_requests".into())
    })?;
    let cold_reps: Vec<_> = outcomes.iter().map(|o| o.cold.clone()).collect();
    let cold = stats::combine_class(&cold_reps);

    let empirical_fj = outcomes
        .iter()
        .map(|o| o.fj_counts.as_ref())
        .collect::<Option<Vec<_>>>()
        .and_then(|per_rep| {
            let len = per_rep[0].len();
            let mut total = vec![0u64; len];
            for counts in per_rep {
                for (a, b) in total.iter_mut().zip(counts) {
                    *a += b;
                }
            }
            let n: u64 = total.iter().sum();
            (n > 0).then(|| total.iter().map(|&c| c as f64 / n as f64).collect())
        });

    let type_transition_counts = outcomes
        .iter()
        .map(|o| o.transitions.as_ref())
        .collect::<Option<Vec<_>>>()
        .map(|per_rep| {
            let dim = per_rep[0].len();
            let mut total = vec![vec![0u64; dim]; dim];
            for m in per_rep {
                for (row, src) in total.iter_mut().zip(m) {
                    for (a, b) in row.iter_mut().zip(src) {
                        *a += b;
                    }
                }
            }
            total
        });

    let winning_fractions = outcomes
        .iter()
        .map(|o| o.sys_wins)
        .collect::<Option<Vec<_>>>()
        .and_then(|pairs| {
            let wins: u64 = pairs.iter().map(|p| p.0).sum();
            let total: u64 = pairs.iter().map(|p| p.1).sum();
            (total > 0).then(|| {
                let ws = wins as f64 / total as f64;
                (ws, 1.0 - ws)
            })
        });

    Ok(SimResult {
        hot,
        cold,
        empirical_fj,
        type_transition_counts,
        winning_fractions,
        throughput: outcomes.iter().map(|o| o.throughput).sum::<f64>()
            / outcomes.len() as f64,
        events_processed: outcomes.iter().map(|o| o.events).sum(),
        replications: cfg.replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{pk_sojourn, reptoall_bounds};

    fn exp_service() -> ServiceDistribution {
        ServiceDistribution::exp(1.0).unwrap()
    }

    fn quick(t: usize, rate: f64, n: u64, reps: u32) -> SimConfig {
        let mut cfg = SimConfig::new(
            AccessTopology::single_symbol(t).unwrap(),
            SchedulingPolicy::ReplicateToAll,
            ArrivalModel::FixedHot { rate },
            exp_service(),
        );
        cfg.num_requests = n;
        cfg.replications = reps;
        cfg
    }

    #[test]
    fn mm1_mean_within_ci() {
        let cfg = quick(0, 0.5, 120_000, 3);
        let res = run_sim(&cfg).unwrap();
        let hw = res.hot.ci_half_width.expect("enough batches for a CI");
        assert!(
            (res.hot.mean - 2.0).abs() < 4.0 * hw.max(0.01),
            "M/M/1 mean {} +- {hw}",
            res.hot.mean
        );
        assert!(res.cold.is_none());
        assert!((res.throughput - 0.5).abs() < 0.05, "throughput {}", res.throughput);
    }

    #[test]
    fn runs_are_byte_identical() {
        let cfg = quick(1, 0.6, 30_000, 2);
        let a = run_sim(&cfg).unwrap();
        let b = run_sim(&cfg).unwrap();
        assert_eq!(a.hot.mean.to_bits(), b.hot.mean.to_bits());
        assert_eq!(a.hot.p99.to_bits(), b.hot.p99.to_bits());
        assert_eq!(a.events_processed, b.events_processed);
    }

    #[test]
    #[cfg(feature = "parallel")]
    fn parallel_and_sequential_agree() {
        let mut cfg = quick(1, 0.6, 20_000, 4);
        cfg.threads = 1;
        let seq = run_sim(&cfg).unwrap();
        cfg.threads = 4;
        let par = run_sim(&cfg).unwrap();
        assert_eq!(seq.hot.mean.to_bits(), par.hot.mean.to_bits());
        assert_eq!(seq.events_processed, par.events_processed);
    }

    #[test]
    fn sojourn_lands_between_bounds() {
        let cfg = quick(1, 0.6, 120_000, 3);
        let res = run_sim(&cfg).unwrap();
        let bounds = reptoall_bounds(1, 0.6, &exp_service()).unwrap();
        assert!(
            res.hot.mean > bounds.lower_sojourn() && res.hot.mean < bounds.upper_sojourn(),
            "mean {} outside ({}, {})",
            res.hot.mean,
            bounds.lower_sojourn(),
            bounds.upper_sojourn()
        );
        let fj = res.empirical_fj.unwrap();
        assert_eq!(fj.len(), 2);
        assert!((fj.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(fj[0] > fj[1], "type fractions should decrease: {fj:?}");
        let (ws, wr) = res.winning_fractions.unwrap();
        assert!((ws + wr - 1.0).abs() < 1e-12);
        assert!(ws > 0.5, "systematic server should win most races: {ws}");
    }

    #[test]
    fn select_one_systematic_only_matches_single_server() {
        let mut solo = quick(0, 0.5, 60_000, 2);
        solo.seed = 99;
        let mut dispatch = quick(1, 0.5, 60_000, 2);
        dispatch.seed = 99;
        dispatch.policy = SchedulingPolicy::SelectOne { weights: vec![1.0, 0.0] };
        let a = run_sim(&solo).unwrap();
        let b = run_sim(&dispatch).unwrap();
        assert_eq!(a.hot.mean.to_bits(), b.hot.mean.to_bits());
    }

    #[test]
    fn select_one_even_split_matches_exact_mean() {
        let mut cfg = quick(1, 1.0, 400_000, 3);
        cfg.policy = SchedulingPolicy::SelectOne { weights: vec![0.5, 0.5] };
        let res = run_sim(&cfg).unwrap();
        let exact = crate::analytic::selectone_sojourn(1, 1.0, 1.0, &[0.5, 0.5]).unwrap();
        assert!(
            (res.hot.mean - exact).abs() / exact < 0.02,
            "select-one mean {} vs exact {exact}",
            res.hot.mean
        );
    }

    #[test]
    fn hotcold_replicate_to_all_keeps_cold_plain() {
        let top = crate::topology::SimplexTopology::build(2).unwrap();
        let mut cfg = SimConfig::new(
            AccessTopology::from(&top),
            SchedulingPolicy::ReplicateToAll,
            ArrivalModel::HotCold { hot_rate: 0.3, cold_rate: 0.3 },
            exp_service(),
        );
        cfg.num_requests = 60_000;
        cfg.replications = 2;
        let res = run_sim(&cfg).unwrap();
        let cold = res.cold.expect("cold completions recorded");
        assert!(cold.count > 1_000);
        assert!(cold.mean > 1.0, "cold downloads queue behind hot work: {}", cold.mean);
    }

    #[test]
    fn fairness_first_cold_is_plain_mg1() {
        let top = crate::topology::SimplexTopology::build(2).unwrap();
        let mut cfg = SimConfig::new(
            AccessTopology::from(&top),
            SchedulingPolicy::FairnessFirst,
            ArrivalModel::HotCold { hot_rate: 0.4, cold_rate: 0.5 },
            exp_service(),
        );
        cfg.num_requests = 150_000;
        cfg.replications = 3;
        let res = run_sim(&cfg).unwrap();
        let cold = res.cold.expect("cold completions recorded");
        let plain = pk_sojourn(0.5, 1.0, 2.0).unwrap().sojourn;
        assert!(
            (cold.mean - plain).abs() / plain < 0.05,
            "cold mean {} vs M/M/1 {plain}",
            cold.mean
        );
        // hot work must profit from idle-group redundancy
        let solo = pk_sojourn(0.4, 1.0, 2.0).unwrap().sojourn;
        assert!(res.hot.mean < solo, "hot mean {} vs bare {solo}", res.hot.mean);
    }

    #[test]
    fn invalid_combinations_rejected() {
        let base = quick(1, 0.5, 1_000, 1);

        let mut c = base.clone();
        c.policy = SchedulingPolicy::SelectOne { weights: vec![0.5, 0.5] };
        c.arrivals = ArrivalModel::MixedUniform { rate: 0.5 };
        assert!(matches!(run_sim(&c), Err(Error::Config(_))));

        let mut c = base.clone();
        c.policy = SchedulingPolicy::SelectOne { weights: vec![0.7, 0.7] };
        assert!(matches!(run_sim(&c), Err(Error::Config(_))));

        let mut c = base.clone();
        c.policy = SchedulingPolicy::FairnessFirst;
        assert!(matches!(run_sim(&c), Err(Error::Config(_))));

        let mut c = base.clone();
        c.truncate_lead = Some(1);
        c.arrivals = ArrivalModel::MixedUniform { rate: 0.5 };
        assert!(matches!(run_sim(&c), Err(Error::Config(_))));

        let mut c = base.clone();
        c.restart_on_hol = true;
        c.policy = SchedulingPolicy::SelectOne { weights: vec![1.0, 0.0] };
        assert!(matches!(run_sim(&c), Err(Error::Config(_))));

        let mut c = base;
        c.service_overrides = vec![(9, exp_service())];
        assert!(matches!(run_sim(&c), Err(Error::Config(_))));
    }

    #[test]
    fn mixed_arrivals_run_and_report_no_type_data() {
        let top = crate::topology::SimplexTopology::build(2).unwrap();
        let mut cfg = SimConfig::new(
            AccessTopology::from(&top),
            SchedulingPolicy::ReplicateToAll,
            ArrivalModel::MixedUniform { rate: 0.9 },
            exp_service(),
        );
        cfg.num_requests = 40_000;
        cfg.replications = 2;
        let res = run_sim(&cfg).unwrap();
        assert!(res.empirical_fj.is_none());
        assert!(res.type_transition_counts.is_none());
        assert!(res.hot.mean > 0.0);
    }
}
