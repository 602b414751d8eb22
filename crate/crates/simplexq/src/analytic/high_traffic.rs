//! High-traffic analysis of availability-one replicate-to-all scheduling.
//!
//! With every server busy at all times, the join buffer of the single
//! recovery group evolves as a random walk: one side grows while its sibling
//! lags, and both systematic completions and sibling joins shrink it. For
//! systematic rate `γ` and recovery rates `α`, `β` the stationary law is
//! geometric on each side of the empty state, which yields the long-run
//! fraction of type-0 and type-1 service starts and, through the
//! Pollaczek–Khinchine formula, an approximate mean sojourn time that is
//! exact in the heavy-traffic limit.

use crate::analytic::fj::{FjEstimate, FjMethod};
use crate::analytic::mg1::{pk_sojourn, MG1Model};
use crate::error::{Error, Result};

/// Stationary description of the high-traffic join-buffer walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighTrafficSteadyState {
    /// Probability of an empty join buffer.
    pub p00: f64,
    /// Geometric ratio on the right branch (`α` side leading):
    /// `p_{i+1} / p_i = α / (β + γ)`.
    pub ratio_right: f64,
    /// Geometric ratio on the left branch (`β` side leading).
    pub ratio_left: f64,
}

impl HighTrafficSteadyState {
    /// `Pr{right branch at depth i}`, `i >= 1`.
    pub fn prob_right(&self, i: u32) -> f64 {
        self.p00 * self.ratio_right.powi(i as i32)
    }

    /// `Pr{left branch at depth i}`, `i >= 1`.
    pub fn prob_left(&self, i: u32) -> f64 {
        self.p00 * self.ratio_left.powi(i as i32)
    }
}

fn check_rates(gamma: f64, alpha: f64, beta: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() || !(alpha >= 0.0) || !(beta >= 0.0) {
        return Err(Error::parameter(format!(
            "rates must be positive (recovery rates may be zero): gamma={gamma}, alpha={alpha}, beta={beta}"
        )));
    }
    Ok(())
}

/// Steady state of the saturated availability-one join buffer.
///
/// Requires both drifts inward: `α < β + γ` and `β < α + γ`; otherwise one
/// recovery server runs away and no steady state exists.
pub fn high_traffic_t1_steady_state(
    gamma: f64,
    alpha: f64,
    beta: f64,
) -> Result<HighTrafficSteadyState> {
    check_rates(gamma, alpha, beta)?;
    if alpha >= beta + gamma || beta >= alpha + gamma {
        return Err(Error::Drift(format!(
            "join buffer drifts outward (gamma={gamma}, alpha={alpha}, beta={beta})"
        )));
    }
    let p00 = (gamma * gamma - (alpha - beta) * (alpha - beta))
        / (gamma * (alpha + beta + gamma));
    Ok(HighTrafficSteadyState {
        p00,
        ratio_right: alpha / (beta + gamma),
        ratio_left: beta / (alpha + gamma),
    })
}

/// Long-run winning fractions in the saturated regime with equal recovery
/// rates `μ`: the systematic server wins at least `ws_lb` of all downloads,
/// the recovery group at most `wr_ub`; the two sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinningFractions {
    pub ws_lb: f64,
    pub wr_ub: f64,
}

/// Winning-fraction bounds for availability one, systematic rate `gamma`,
/// both recovery servers at rate `mu`.
pub fn winning_fraction_bounds(gamma: f64, mu: f64) -> Result<WinningFractions> {
    if !(gamma > 0.0 && mu > 0.0) {
        return Err(Error::parameter(format!(
            "rates must be positive: gamma={gamma}, mu={mu}"
        )));
    }
    let nu = gamma + 2.0 * mu;
    let ws = gamma * nu / (gamma * nu + 2.0 * mu * mu);
    Ok(WinningFractions {
        ws_lb: ws,
        wr_ub: 1.0 - ws,
    })
}

/// High-traffic estimate of the type-start fractions for availability one:
/// `f_0` equals the systematic winning fraction, `f_1` the remainder.
pub fn fj_high_traffic_t1(gamma: f64, mu: f64) -> Result<FjEstimate> {
    let w = winning_fraction_bounds(gamma, mu)?;
    FjEstimate::new(vec![w.ws_lb, w.wr_ub], FjMethod::HighTrafficT1)
}

/// Type-0 and type-1 service moments for availability one with exponential
/// rates: systematic `gamma`, both recovery servers `mu`.
///
/// Type 0 is `min{exp(gamma), max(exp(mu), exp(mu))}`, type 1 is the plain
/// race `exp(gamma + mu)` left once one sibling has already finished.
pub fn type_moments_t1_rates(gamma: f64, mu: f64) -> Result<[(f64, f64); 2]> {
    if !(gamma > 0.0 && mu > 0.0) {
        return Err(Error::parameter(format!(
            "rates must be positive: gamma={gamma}, mu={mu}"
        )));
    }
    let gm = gamma + mu;
    let g2m = gamma + 2.0 * mu;
    let s0 = (2.0 / gm - 1.0 / g2m, 4.0 / (gm * gm) - 2.0 / (g2m * g2m));
    let s1 = (1.0 / gm, 2.0 / (gm * gm));
    Ok([s0, s1])
}

/// Replicate-to-all mean sojourn for availability one from the high-traffic
/// type fractions: mixes the type moments with the winning fractions and
/// applies Pollaczek–Khinchine. Exact as load approaches saturation, an
/// approximation below it.
pub fn reptoall_sojourn_t1_rates(gamma: f64, mu: f64, lambda: f64) -> Result<MG1Model> {
    let fj = fj_high_traffic_t1(gamma, mu)?;
    let moments = type_moments_t1_rates(gamma, mu)?;
    let m1 = fj.f[0] * moments[0].0 + fj.f[1] * moments[1].0;
    let m2 = fj.f[0] * moments[0].1 + fj.f[1] * moments[1].1;
    pk_sojourn(lambda, m1, m2)
}
