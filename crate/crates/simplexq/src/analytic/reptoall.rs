//! Replicate-to-all mean sojourn: M/G/1 approximations and bounds.

use crate::analytic::fj::{fj_estimate, FjEstimate, FjMethod};
use crate::analytic::high_traffic::reptoall_sojourn_t1_rates;
use crate::analytic::mg1::{pk_sojourn, MG1Model};
use crate::analytic::moments::type_j_moments;
use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};

/// Per-type moments `(E[S_j], E[S_j^2])` for `j = 0..=t`.
fn all_type_moments(d: &ServiceDistribution, t: usize) -> Result<Vec<(f64, f64)>> {
    (0..=t)
        .map(|j| type_j_moments(d, t, j).map(|m| (m.m1, m.m2)))
        .collect()
}

/// Mean sojourn time under replicate-to-all scheduling of a hot symbol with
/// availability `t`, i.i.d. per-server service `d`, Poisson arrivals
/// `lambda`. The service law is the `f_j`-mixture of type services from the
/// chosen estimator, pushed through Pollaczek–Khinchine.
///
/// `FjMethod::HighTrafficT1` requires `t == 1` and exponential service (the
/// saturated-walk fractions exist only there).
pub fn reptoall_sojourn(
    t: usize,
    lambda: f64,
    d: &ServiceDistribution,
    method: FjMethod,
) -> Result<MG1Model> {
    match method {
        FjMethod::HighTrafficT1 => {
            let ServiceDistribution::Exp { rate } = *d else {
                return Err(Error::parameter(
                    "high_traffic_t1 needs exponential service".to_string(),
                ));
            };
            if t != 1 {
                return Err(Error::parameter(format!(
                    "high_traffic_t1 applies to availability 1, got t={t}"
                )));
            }
            reptoall_sojourn_t1_rates(rate, rate, lambda)
        }
        FjMethod::Naive | FjMethod::Better | FjMethod::Best => {
            let moments = all_type_moments(d, t)?;
            let s_bar =
                moments.iter().map(|m| m.0).sum::<f64>() / (t as f64 + 1.0);
            let fj = fj_estimate(t, lambda, s_bar, method)?;
            let (m1, m2) = fj.mix_moments(&moments);
            pk_sojourn(lambda, m1, m2)
        }
        FjMethod::Empirical => Err(Error::parameter(
            "empirical fractions come from simulation output".to_string(),
        )),
    }
}

/// Variant of [`reptoall_sojourn`] mixing with externally supplied fractions
/// (for example, measured ones).
pub fn reptoall_sojourn_with_fractions(
    t: usize,
    lambda: f64,
    d: &ServiceDistribution,
    fj: &FjEstimate,
) -> Result<MG1Model> {
    if fj.t() != t {
        return Err(Error::parameter(format!(
            "fraction vector is for t={}, expected t={t}",
            fj.t()
        )));
    }
    let moments = all_type_moments(d, t)?;
    let (m1, m2) = fj.mix_moments(&moments);
    pk_sojourn(lambda, m1, m2)
}

/// Sandwich bounds on the replicate-to-all mean sojourn.
#[derive(Debug, Clone, PartialEq)]
pub struct ReptoallBounds {
    /// M/G/1 with the fastest type service `S_t` — a lower bound.
    pub lower: MG1Model,
    /// Split-merge M/G/1 with the slowest type service `S_0` — an upper
    /// bound; `None` when the split-merge system itself is unstable (the
    /// bound is infinite while the lower bound can remain finite).
    pub upper: Option<MG1Model>,
}

impl ReptoallBounds {
    pub fn lower_sojourn(&self) -> f64 {
        self.lower.sojourn
    }

    pub fn upper_sojourn(&self) -> f64 {
        self.upper.as_ref().map_or(f64::INFINITY, |m| m.sojourn)
    }
}

/// Sojourn-time bounds from the two extreme type services.
pub fn reptoall_bounds(t: usize, lambda: f64, d: &ServiceDistribution) -> Result<ReptoallBounds> {
    let fast = type_j_moments(d, t, t)?;
    let slow = type_j_moments(d, t, 0)?;
    let lower = pk_sojourn(lambda, fast.m1, fast.m2)?;
    let upper = match pk_sojourn(lambda, slow.m1, slow.m2) {
        Ok(m) => Some(m),
        Err(Error::Unstable { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ReptoallBounds { lower, upper })
}

/// One point of the fixed-budget rate-allocation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateAllocationPoint {
    /// Ratio of systematic to recovery rate, `rho = gamma / mu`.
    pub rho: f64,
    pub gamma: f64,
    pub mu: f64,
    /// High-traffic sojourn estimate; `None` where the point is unstable at
    /// the given arrival rate.
    pub sojourn: Option<f64>,
}

/// Sweeps the split of a fixed service budget `C = gamma + 2 mu` between the
/// systematic server and an availability-one recovery pair: for each
/// requested ratio `rho = gamma / mu`, evaluates the high-traffic sojourn at
/// arrival rate `lambda`. Shifting budget toward the systematic server
/// (larger `rho`) strictly helps.
pub fn rate_allocation_curve(
    budget: f64,
    lambda: f64,
    grid: &[f64],
) -> Result<Vec<RateAllocationPoint>> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::parameter(format!("budget must be positive, got {budget}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::parameter(format!("arrival rate must be nonnegative, got {lambda}")));
    }
    grid.iter()
        .map(|&rho| {
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(Error::parameter(format!("rate ratio must be positive, got {rho}")));
            }
            let mu = budget / (rho + 2.0);
            let gamma = budget * rho / (rho + 2.0);
            let sojourn = match reptoall_sojourn_t1_rates(gamma, mu, lambda) {
                Ok(m) => Some(m.sojourn),
                Err(Error::Unstable { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(RateAllocationPoint { rho, gamma, mu, sojourn })
        })
        .collect()
}
