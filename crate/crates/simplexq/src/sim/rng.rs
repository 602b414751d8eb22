//! Deterministic random-stream layout.
//!
//! Every (replication, purpose) pair gets its own counter-mode stream of one
//! ChaCha12 generator family, so simulated systems consume randomness from
//! independent, reproducible sources: per-server service streams stay aligned
//! across scheduling policies, making paired comparisons (and the exact
//! fixed-seed regression tests) meaningful.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Hot-request (or mixed-request) arrival process.
pub(crate) const STREAM_ARRIVAL_HOT: u64 = 0;
/// Symbol choice and dispatch decisions.
pub(crate) const STREAM_DISPATCH: u64 = 1;
/// Service draws of server `i` live on `STREAM_SERVER_BASE + i`.
pub(crate) const STREAM_SERVER_BASE: u64 = 2;

/// Cold-arrival stream of `symbol` in a topology with `n_servers` servers.
pub(crate) fn cold_stream(n_servers: usize, symbol: usize) -> u64 {
    STREAM_SERVER_BASE + n_servers as u64 + symbol as u64
}

/// Generator for one purpose-stream of one replication.
pub(crate) fn stream_rng(seed: u64, replication: u32, stream: u64) -> ChaCha12Rng {
    debug_assert!(stream < 1 << 24);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((replication as u64) << 24) | stream);
    rng
}
