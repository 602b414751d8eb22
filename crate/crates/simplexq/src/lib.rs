//! Queueing models and simulation for hot-data download from simplex-coded storage.
//!
//! A `[2^k - 1, k]` binary simplex code keeps every data symbol on its own
//! (systematic) server and lets each symbol also be recovered from
//! `t = 2^(k-1) - 1` disjoint pairs of the remaining servers. A download can
//! therefore be served by the symbol's own server, by any recovery pair
//! (fetching both halves of a pair is a fork-join), or redundantly by several
//! of those options at once with cancel-on-complete. This crate models the
//! download latency of the heavily requested ("hot") symbol three ways:
//!
//! - [`analytic`]: M/G/1 approximations and bounds for the replicate-to-all
//!   scheduler, the exact mean for probabilistic select-one dispatch, and
//!   latency bounds plus a low-traffic tail formula for the fairness-first
//!   scheduler that shields cold-data traffic.
//! - [`qbd`]: a matrix-analytic upper bound for availability one, built from
//!   the truncated quasi-birth-death state process of the leading servers.
//! - [`sim`]: a discrete-event simulator of the full system — per-server FIFO
//!   queues, fork-join recovery groups, sibling cancellation, optional
//!   head-of-line restarts and leading-server truncation — with batch-means
//!   confidence intervals over parallel replications.
//!
//! Replications run on a rayon pool when the `parallel` feature (default) is
//! enabled; the `SIMPLEXQ_THREADS` environment variable caps the worker count.

pub mod analytic;
mod dist;
mod error;
pub mod qbd;
mod quad;
pub mod sim;
mod topology;

pub use dist::ServiceDistribution;
pub use error::{Error, Result};
pub use sim::{ArrivalModel, SchedulingPolicy, SimConfig, SimResult};
pub use topology::{AccessTopology, SimplexTopology};
