//! Select-one dispatch: every request goes to exactly one download option.
//!
//! Routing each Poisson arrival independently — to the systematic server with
//! probability `p_0` or to recovery pair `i` with probability `p_i` — splits
//! the flow into `t + 1` independent sub-queues: an M/M/1 at the systematic
//! server and a two-server fork-join per pair, whose mean response time is
//! known exactly. The overall mean sojourn is the probability mix of the two.

use crate::error::{Error, Result};

fn check_weights(t: usize, weights: &[f64]) -> Result<()> {
    if weights.len() != t + 1 {
        return Err(Error::parameter(format!(
            "need t + 1 = {} dispatch weights, got {}",
            t + 1,
            weights.len()
        )));
    }
    if weights.iter().any(|&p| !(p >= 0.0) || p > 1.0) {
        return Err(Error::parameter(format!("weights out of [0, 1]: {weights:?}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::parameter(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Exact mean sojourn under select-one dispatch with exponential rate `mu` at
/// every server: `weights[0]` routes to the systematic M/M/1,
/// `weights[i]` to fork-join pair `i`.
pub fn selectone_sojourn(t: usize, lambda: f64, mu: f64, weights: &[f64]) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() || !(mu > 0.0) {
        return Err(Error::parameter(format!(
            "need lambda >= 0 and mu > 0, got lambda={lambda}, mu={mu}"
        )));
    }
    check_weights(t, weights)?;
    let p0 = weights[0];
    if p0 * lambda >= mu && p0 > 0.0 {
        return Err(Error::Unstable {
            utilization: p0 * lambda / mu,
            context: "systematic sub-queue".into(),
        });
    }
    let mut mean = if p0 > 0.0 { p0 / (mu - p0 * lambda) } else { 0.0 };
    for (i, &p) in weights.iter().enumerate().skip(1) {
        if p == 0.0 {
            continue;
        }
        if p * lambda >= mu {
            return Err(Error::Unstable {
                utilization: p * lambda / mu,
                context: format!("recovery sub-queue {i}"),
            });
        }
        // exact two-server fork-join mean: (12 mu - p lambda) / (8 mu (mu - p lambda))
        mean += p * (12.0 * mu - p * lambda) / (8.0 * mu * (mu - p * lambda));
    }
    Ok(mean)
}

/// Optimal dispatch weights under the symmetry `p_1 = ... = p_t`: minimizes
/// [`selectone_sojourn`] over the systematic share `p_0` by golden-section
/// search on the (convex) stable region.
pub fn selectone_optimal_weights(t: usize, lambda: f64, mu: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) || !lambda.is_finite() || !(mu > 0.0) {
        return Err(Error::parameter(format!(
            "need lambda >= 0 and mu > 0, got lambda={lambda}, mu={mu}"
        )));
    }
    if t == 0 {
        if lambda >= mu {
            return Err(Error::Unstable {
                utilization: lambda / mu,
                context: "systematic sub-queue".into(),
            });
        }
        return Ok(vec![1.0]);
    }
    // stability: p0 lambda < mu and (1 - p0) lambda / t < mu
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if lambda > 0.0 {
        lo = lo.max(1.0 - t as f64 * mu / lambda);
        hi = hi.min(mu / lambda);
    }
    if lo >= hi {
        return Err(Error::Unstable {
            utilization: lambda / (mu * (t as f64 + 1.0)),
            context: "no stable dispatch split exists".into(),
        });
    }
    let eps = 1e-9 * (hi - lo).max(1.0);
    let (mut a, mut b) = (lo + eps, hi - eps);
    let objective = |p0: f64| {
        let mut w = vec![(1.0 - p0) / t as f64; t + 1];
        w[0] = p0;
        selectone_sojourn(t, lambda, mu, &w).unwrap_or(f64::INFINITY)
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    let p0 = (0.5 * (a + b)).clamp(0.0, 1.0);
    let mut w = vec![(1.0 - p0) / t as f64; t + 1];
    w[0] = p0;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_systematic_is_mm1() {
        let v = selectone_sojourn(1, 0.5, 1.0, &[1.0, 0.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn light_traffic_limit() {
        // lambda -> 0: p0 / mu + (1 - p0) * 1.5 / mu
        let v = selectone_sojourn(1, 1e-12, 1.0, &[0.5, 0.5]).unwrap();
        assert!((v - 1.25).abs() < 1e-9, "{v}");
    }

    #[test]
    fn even_split_unit_load() {
        let v = selectone_sojourn(1, 1.0, 1.0, &[0.5, 0.5]).unwrap();
        assert!((v - 2.4375).abs() < 1e-12, "{v}");
    }

    #[test]
    fn sub_queue_saturation_named() {
        match selectone_sojourn(1, 2.5, 1.0, &[0.5, 0.5]) {
            Err(Error::Unstable { context, .. }) => assert!(context.contains("systematic")),
            other => panic!("expected instability, got {other:?}"),
        }
        match selectone_sojourn(2, 2.1, 1.0, &[0.0, 0.5, 0.5]) {
            Err(Error::Unstable { context, .. }) => assert!(context.contains("recovery")),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn weight_validation() {
        assert!(selectone_sojourn(1, 0.5, 1.0, &[0.6, 0.3]).is_err());
        assert!(selectone_sojourn(1, 0.5, 1.0, &[0.5]).is_err());
        assert!(selectone_sojourn(1, 0.5, 1.0, &[1.2, -0.2]).is_err());
    }

    #[test]
    fn optimum_light_traffic_prefers_systematic() {
        // with idle servers a single download (mean 1) beats a fork-join (mean 1.5)
        let w = selectone_optimal_weights(1, 1e-9, 1.0).unwrap();
        assert!(w[0] > 0.999, "{w:?}");
    }

    #[test]
    fn optimum_beyond_single_server_capacity_spills_over() {
        // lambda = 1.2 > mu: must route some flow to the pair
        let w = selectone_optimal_weights(1, 1.2, 1.0).unwrap();
        assert!(w[0] < 1.0 && w[0] > 0.0, "{w:?}");
        let best = selectone_sojourn(1, 1.2, 1.0, &w).unwrap();
        for dp in [-0.01, 0.01] {
            let p0 = (w[0] + dp).clamp(0.0, 1.0);
            let probe = [p0, 1.0 - p0];
            if let Ok(v) = selectone_sojourn(1, 1.2, 1.0, &probe) {
                assert!(best <= v + 1e-9, "p0={p0}: {v} < {best}");
            }
        }
    }

    #[test]
    fn infeasible_load_rejected() {
        assert!(matches!(
            selectone_optimal_weights(1, 3.5, 1.0),
            Err(Error::Unstable { .. })
        ));
    }
}
