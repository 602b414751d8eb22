//! Fairness-first scheduling: hot-data latency bounds and the low-traffic
//! tail, with cold-data traffic left untouched by construction.
//!
//! Under fairness-first a hot request is served primarily by its systematic
//! server and receives redundant copies only in recovery groups that are
//! completely idle when its service starts; a cold arrival preempts any
//! redundant copy on its server immediately. Hot service is therefore the
//! minimum of the systematic download and the pair downloads of `i` helping
//! groups, with tail
//!
//! ```text
//! Pr{S_i > s} = Pr{V > s} (1 - Pr{V <= s}^2)^i
//! ```
//!
//! `i = t` (every group idle) gives the lower bound; `i = t - log2(t+1)`
//! (all groups holding a cold-data server withdrawn) gives the upper bound.
//! At low hot load, conditioning each cold-server group on an idle/busy cold
//! cycle yields a closed-form tail in between.

use crate::analytic::mg1::{pk_sojourn, MG1Model};
use crate::analytic::moments::type_j_moments;
use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::quad;

/// Number of recovery groups of the hot symbol containing a cold-data
/// (systematic) server: `log2(t + 1)` when `t + 1` is a power of two.
fn cold_group_count(t: usize) -> Result<usize> {
    if !(t + 1).is_power_of_two() {
        return Err(Error::parameter(format!(
            "fairness-first needs t + 1 to be a power of two, got t={t}"
        )));
    }
    Ok((t + 1).trailing_zeros() as usize)
}

/// Tail of the `i`-helper hot service law `S_i`.
pub fn fairnessfirst_bound_tail(i: usize, d: &ServiceDistribution, s: f64) -> f64 {
    let tv = d.tail(s);
    let fv = d.cdf(s);
    tv * (1.0 - fv * fv).powi(i as i32)
}

/// Sandwich bounds on the fairness-first hot sojourn time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairnessBounds {
    /// All `t` groups helping (`S_t` service law).
    pub lower: MG1Model,
    /// Only the `t - log2(t+1)` cold-free groups helping.
    pub upper: MG1Model,
}

/// Bounds on the hot-class mean sojourn at hot arrival rate `lambda`.
///
/// The `i`-helper law equals the type-0 law of an availability-`i` system,
/// so its moments come from the same tail-product integrals.
pub fn fairnessfirst_bounds(
    t: usize,
    lambda: f64,
    d: &ServiceDistribution,
) -> Result<FairnessBounds> {
    let m = cold_group_count(t)?;
    let fast = type_j_moments(d, t, 0)?;
    let slow = type_j_moments(d, t - m, 0)?;
    let lower = pk_sojourn(lambda, fast.m1, fast.m2)?;
    let upper = pk_sojourn(lambda, slow.m1, slow.m2)?;
    Ok(FairnessBounds { lower, upper })
}

/// Hot service-time tail at low hot traffic with cold arrival rate
/// `lambda_c` per cold symbol.
///
/// Each of the `m = log2(t+1)` groups holding a cold server helps only while
/// that server's M/G/1 cold queue is idle; averaging over the cold busy/idle
/// cycle gives per-group availability `alpha(s) (1 - rho) + rho` with
/// `rho = lambda_c E[V]` and
/// `alpha(s) = 1 - Pr{V <= s} ∫_0^s e^(-lambda_c v) dPr{V <= v}`.
///
/// Defined for `rho <= 1`; at `rho = 1` it coincides with the upper-bound law
/// `S_(t-m)`, at `lambda_c = 0` with the lower-bound law `S_t`.
pub fn fairnessfirst_lowtraffic_tail(
    t: usize,
    lambda_c: f64,
    d: &ServiceDistribution,
    s: f64,
) -> Result<f64> {
    let m = cold_group_count(t)?;
    if !(lambda_c >= 0.0) || !lambda_c.is_finite() {
        return Err(Error::parameter(format!(
            "cold arrival rate must be nonnegative, got {lambda_c}"
        )));
    }
    let rho = lambda_c * d.mean();
    if rho > 1.0 {
        return Err(Error::Unstable {
            utilization: rho,
            context: "cold-data queue".into(),
        });
    }
    let tv = d.tail(s);
    let fv = d.cdf(s);
    let c = tv * (1.0 - fv * fv).powi((t - m) as i32);
    if c == 0.0 {
        return Ok(0.0);
    }
    let alpha = 1.0 - fv * d.exp_weighted_cdf_integral(lambda_c, s)?;
    Ok(c * (alpha * (1.0 - rho) + rho).powi(m as i32))
}

/// Low-traffic fairness-first hot sojourn: Pollaczek–Khinchine on the
/// moments of the low-traffic tail.
pub fn fairnessfirst_lowtraffic_sojourn(
    t: usize,
    lambda: f64,
    lambda_c: f64,
    d: &ServiceDistribution,
) -> Result<MG1Model> {
    let m = cold_group_count(t)?;
    let rho = lambda_c * d.mean();
    if rho >= 1.0 {
        return Err(Error::Unstable {
            utilization: rho,
            context: "cold-data queue".into(),
        });
    }
    let (m1, m2) = match *d {
        ServiceDistribution::Bernoulli { usual, long, .. } => {
            // piecewise-constant tail: value 1 on [0, usual), a single plateau
            // on [usual, long), zero beyond
            let plateau = fairnessfirst_lowtraffic_tail(t, lambda_c, d, usual)?;
            (
                usual + (long - usual) * plateau,
                usual * usual + (long * long - usual * usual) * plateau,
            )
        }
        ServiceDistribution::Exp { .. } => {
            let cut = d.upper_cut(1e-14);
            let tail = |s: f64| fairnessfirst_lowtraffic_tail(t, lambda_c, d, s).unwrap_or(0.0);
            let m1 = quad::integrate(&tail, 0.0, cut, 1e-8, 1e-12)?;
            let m2 = quad::integrate(|s| 2.0 * s * tail(s), 0.0, cut, 1e-8, 1e-12)?;
            (m1, m2)
        }
        ServiceDistribution::Pareto { scale, shape } => {
            // tail ~ const * (scale/s)^(shape (t - m + 1)) for large s
            let a = shape * (t - m + 1) as f64;
            if a <= 2.0 {
                return Err(Error::InfiniteMoment(format!(
                    "pareto tail too heavy for the fairness-first upper law: \
                     shape*(t-m+1) = {a} <= 2"
                )));
            }
            let cut = scale * 2f64.powi(30);
            let tail = |s: f64| fairnessfirst_lowtraffic_tail(t, lambda_c, d, s).unwrap_or(0.0);
            let q1 = quad::integrate_octaves(&tail, scale, cut, 1e-8, 1e-12)?;
            let q2 = quad::integrate_octaves(|s| 2.0 * s * tail(s), scale, cut, 1e-8, 1e-12)?;
            // asymptotic remainder beyond the cut
            let laplace = d.exp_weighted_cdf_integral(lambda_c, cut)?;
            let bracket = (1.0 - laplace) * (1.0 - rho) + rho;
            let k = bracket.powi(m as i32) * 2f64.powi((t - m) as i32);
            let x = (scale / cut).powf(shape);
            let r1 = k * x.powi((t - m + 1) as i32) * cut / (a - 1.0);
            let r2 = k * x.powi((t - m + 1) as i32) * cut * cut * 2.0 / (a - 2.0);
            (scale + q1 + r1, scale * scale + q2 + r2)
        }
    };
    pk_sojourn(lambda, m1, m2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_plus_one_must_be_power_of_two() {
        let d = ServiceDistribution::exp(1.0).unwrap();
        assert!(fairnessfirst_bounds(2, 0.1, &d).is_err());
        assert!(fairnessfirst_bounds(1, 0.1, &d).is_ok());
        assert!(fairnessfirst_bounds(3, 0.1, &d).is_ok());
    }

    #[test]
    fn t1_upper_is_plain_service() {
        // t = 1: one group, and it contains the one cold server, so the upper
        // bound is the bare systematic M/G/1
        let d = ServiceDistribution::exp(1.0).unwrap();
        let b = fairnessfirst_bounds(1, 0.4, &d).unwrap();
        let plain = pk_sojourn(0.4, 1.0, 2.0).unwrap();
        assert!((b.upper.sojourn - plain.sojourn).abs() < 1e-9);
        assert!(b.lower.sojourn < b.upper.sojourn);
    }

    #[test]
    fn t3_exponential_bound_means() {
        let d = ServiceDistribution::exp(1.0).unwrap();
        let b = fairnessfirst_bounds(3, 0.0, &d).unwrap();
        // lower law tail: e^-s (2 e^-s - e^-2s)^3, mean 16/35
        assert!((b.lower.mean_service - 16.0 / 35.0).abs() < 1e-9, "{}", b.lower.mean_service);
        // upper law: one helper pair, tail 2 e^-2s - e^-3s, mean 2/3
        assert!((b.upper.mean_service - 2.0 / 3.0).abs() < 1e-9, "{}", b.upper.mean_service);
    }

    #[test]
    fn lowtraffic_tail_collapses_to_lower_bound_without_cold_traffic() {
        for d in [
            ServiceDistribution::exp(1.0).unwrap(),
            ServiceDistribution::pareto(1.0, 3.0).unwrap(),
            ServiceDistribution::bernoulli(1.0, 10.0, 0.2).unwrap(),
        ] {
            for t in [1usize, 3, 7] {
                for i in 0..100 {
                    let s = 0.12 * i as f64;
                    let lt = fairnessfirst_lowtraffic_tail(t, 0.0, &d, s).unwrap();
                    let lb = fairnessfirst_bound_tail(t, &d, s);
                    assert!((lt - lb).abs() < 1e-12, "{d} t={t} s={s}: {lt} vs {lb}");
                }
            }
        }
    }

    #[test]
    fn lowtraffic_tail_collapses_to_upper_bound_at_cold_saturation() {
        for d in [
            ServiceDistribution::exp(1.0).unwrap(),
            ServiceDistribution::pareto(1.0, 3.0).unwrap(),
            ServiceDistribution::bernoulli(1.0, 10.0, 0.2).unwrap(),
        ] {
            let lambda_c = 1.0 / d.mean();
            for t in [1usize, 3] {
                let m = (t + 1).trailing_zeros() as usize;
                for i in 0..100 {
                    let s = 0.12 * i as f64;
                    let lt = fairnessfirst_lowtraffic_tail(t, lambda_c, &d, s).unwrap();
                    let ub = fairnessfirst_bound_tail(t - m, &d, s);
                    assert!((lt - ub).abs() < 1e-12, "{d} t={t} s={s}: {lt} vs {ub}");
                }
            }
        }
    }

    #[test]
    fn lowtraffic_sojourn_between_bounds() {
        let d = ServiceDistribution::exp(1.0).unwrap();
        let lambda = 0.3;
        for t in [1usize, 3] {
            let b = fairnessfirst_bounds(t, lambda, &d).unwrap();
            let mut last = b.lower.sojourn;
            for rho in [0.1, 0.4, 0.7, 0.9] {
                let v = fairnessfirst_lowtraffic_sojourn(t, lambda, rho, &d).unwrap();
                assert!(
                    v.sojourn >= b.lower.sojourn - 1e-9 && v.sojourn <= b.upper.sojourn + 1e-9,
                    "t={t} rho={rho}: {} outside [{}, {}]",
                    v.sojourn,
                    b.lower.sojourn,
                    b.upper.sojourn
                );
                // more cold traffic, fewer helpers, slower service
                assert!(v.sojourn >= last - 1e-9);
                last = v.sojourn;
            }
        }
    }

    #[test]
    fn bernoulli_lowtraffic_closed_form() {
        let d = ServiceDistribution::bernoulli(1.0, 10.0, 0.2).unwrap();
        let v = fairnessfirst_lowtraffic_sojourn(3, 0.0, 0.1, &d).unwrap();
        let plateau = fairnessfirst_lowtraffic_tail(3, 0.1, &d, 1.0).unwrap();
        assert!((v.mean_service - (1.0 + 9.0 * plateau)).abs() < 1e-12);
    }

    #[test]
    fn pareto_lowtraffic_matches_bound_moments_at_extremes() {
        let d = ServiceDistribution::pareto(1.0, 3.0).unwrap();
        let t = 3;
        let v = fairnessfirst_lowtraffic_sojourn(t, 0.0, 0.0, &d).unwrap();
        let lb = type_j_moments(&d, t, 0).unwrap();
        assert!(
            (v.mean_service - lb.m1).abs() < 1e-6,
            "{} vs {}",
            v.mean_service,
            lb.m1
        );
        assert!((v.second_moment - lb.m2).abs() / lb.m2 < 1e-6);
    }

    #[test]
    fn cold_saturation_rejected_for_sojourn() {
        let d = ServiceDistribution::exp(1.0).unwrap();
        assert!(matches!(
            fairnessfirst_lowtraffic_sojourn(1, 0.1, 1.0, &d),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn heavy_pareto_rejected() {
        // t = 1, m = 1: the sojourn mean needs shape * (t - m + 1) > 2,
        // i.e. shape > 2 here, so shape 1.5 must be refused.
        let d = ServiceDistribution::pareto(1.0, 1.5).unwrap();
        assert!(matches!(
            fairnessfirst_lowtraffic_sojourn(1, 0.1, 0.1, &d),
            Err(Error::InfiniteMoment(_))
        ));
    }
}
