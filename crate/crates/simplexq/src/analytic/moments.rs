//! Moments of the type-`j` service time seen by replicate-to-all requests.
//!
//! A request whose service starts with `j` of its `t` recovery groups already
//! missing one sibling (that sibling finished earlier and waits in the join
//! buffer) completes at the minimum of `j + 1` single downloads and `t - j`
//! fork-join pair downloads. With i.i.d. per-server times `V` of tail `T`,
//! that minimum has tail
//!
//! ```text
//! Pr{S_j > s} = T(s)^(j+1) * (1 - (1 - T(s))^2)^(t-j) = T(s)^(t+1) * (2 - T(s))^(t-j)
//! ```
//!
//! Moments are integrated from this tail product directly; the expanded
//! alternating series ([`type_j_moments_series`]) is kept as an independent
//! second route and cross-checked in tests, since it cancels catastrophically
//! for large `t` while the tail integral stays benign.

use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::quad;

/// First two moments of the type-`j` service time at availability `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeJMoments {
    pub t: usize,
    pub j: usize,
    pub m1: f64,
    pub m2: f64,
}

fn check_args(d: &ServiceDistribution, t: usize, j: usize) -> Result<()> {
    if j > t {
        return Err(Error::parameter(format!("type index j={j} exceeds availability t={t}")));
    }
    if let ServiceDistribution::Pareto { shape, .. } = *d {
        // S_j is bounded below by the minimum of t+1 Pareto variables, itself
        // Pareto with index shape*(t+1); its second moment must exist.
        if shape * (t as f64 + 1.0) <= 2.0 {
            return Err(Error::InfiniteMoment(format!(
                "pareto tail too heavy: shape*(t+1) = {} <= 2",
                shape * (t as f64 + 1.0)
            )));
        }
    }
    Ok(())
}

/// Tail of the type-`j` service time.
fn tail_j(d: &ServiceDistribution, t: usize, j: usize, s: f64) -> f64 {
    let tv = d.tail(s);
    tv.powi(t as i32 + 1) * (2.0 - tv).powi((t - j) as i32)
}

/// Moments of the type-`j` service time `S_j = min{j+1 singles, t-j pairs}`.
pub fn type_j_moments(d: &ServiceDistribution, t: usize, j: usize) -> Result<TypeJMoments> {
    check_args(d, t, j)?;
    let (m1, m2) = match *d {
        ServiceDistribution::Bernoulli { usual, long, prob } => {
            // Two-point input keeps S_j two-point: S_j = long only when all
            // t+1 singles are long and each pair has at least one long side.
            let p_long = prob.powi(t as i32 + 1) * (2.0 - prob).powi((t - j) as i32);
            (
                usual + (long - usual) * p_long,
                usual * usual + (long * long - usual * usual) * p_long,
            )
        }
        ServiceDistribution::Exp { rate } => {
            // tail_j(s) <= 2^(t-j) e^(-(t+1) rate s): cut where that is ~1e-18
            let cut = ((t - j) as f64 * std::f64::consts::LN_2 + 42.0)
                / ((t as f64 + 1.0) * rate);
            let m1 = quad::integrate(|s| tail_j(d, t, j, s), 0.0, cut, 1e-10, 1e-14)?;
            let m2 =
                quad::integrate(|s| 2.0 * s * tail_j(d, t, j, s), 0.0, cut, 1e-10, 1e-14)?;
            (m1, m2)
        }
        ServiceDistribution::Pareto { scale, shape } => {
            // [0, scale]: tail_j == 1. [scale, cut]: adaptive quadrature.
            // Beyond cut: integrate the monomial expansion of the tail product
            // exactly — by then x = (scale/s)^shape is tiny, so the series has
            // no cancellation left in it.
            let cut = scale * 8192.0;
            let q1 = quad::integrate_octaves(|s| tail_j(d, t, j, s), scale, cut, 1e-10, 1e-14)?;
            let q2 = quad::integrate_octaves(
                |s| 2.0 * s * tail_j(d, t, j, s),
                scale,
                cut,
                1e-10,
                1e-14,
            )?;
            let (r1, r2) = pareto_tail_remainder(scale, shape, t, j, cut);
            (scale + q1 + r1, scale * scale + q2 + r2)
        }
    };
    Ok(TypeJMoments { t, j, m1, m2 })
}

/// Exact `∫_cut^∞ tail_j` and `∫_cut^∞ 2 s tail_j` for the Pareto family via
/// the expansion `tail_j = Σ_k C(t-j,k) 2^k (-1)^(t-j-k) x^(2t+1-j-k)` with
/// `x = (scale/s)^shape`.
fn pareto_tail_remainder(scale: f64, shape: f64, t: usize, j: usize, cut: f64) -> (f64, f64) {
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    let mut binom = 1.0; // C(t-j, k)
    let d = (t - j) as f64;
    for k in 0..=(t - j) {
        let e = (2 * t + 1 - j - k) as f64; // power of x
        let a = shape * e; // s-exponent of the monomial
        let sign = if (t - j - k) % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = sign * binom * 2f64.powi(k as i32) * (scale / cut).powf(a);
        // ∫_cut^∞ (scale/s)^a ds      = cut   * (scale/cut)^a / (a - 1)
        // ∫_cut^∞ 2 s (scale/s)^a ds  = cut^2 * (scale/cut)^a * 2 / (a - 2)
        r1 += coeff * cut / (a - 1.0);
        r2 += coeff * cut * cut * 2.0 / (a - 2.0);
        binom *= (d - k as f64) / (k as f64 + 1.0);
    }
    (r1, r2)
}

/// The closed-form alternating series for the same moments. Numerically exact
/// for small `t`, unstable for large `t`; retained as an independent check on
/// [`type_j_moments`].
pub fn type_j_moments_series(d: &ServiceDistribution, t: usize, j: usize) -> Result<TypeJMoments> {
    check_args(d, t, j)?;
    let (m1, m2) = match *d {
        ServiceDistribution::Bernoulli { usual, long, prob } => {
            let p_long = prob.powi(t as i32 + 1) * (2.0 - prob).powi((t - j) as i32);
            (
                usual + (long - usual) * p_long,
                usual * usual + (long * long - usual * usual) * p_long,
            )
        }
        ServiceDistribution::Exp { rate } => {
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            let mut binom = 1.0;
            let dj = (t - j) as f64;
            for k in 0..=(t - j) {
                let e = (2 * t + 1 - j - k) as f64;
                let sign = if (t - j - k) % 2 == 0 { 1.0 } else { -1.0 };
                let c = sign * binom * 2f64.powi(k as i32);
                m1 += c / (rate * e);
                m2 += 2.0 * c / (rate * rate * e * e);
                binom *= (dj - k as f64) / (k as f64 + 1.0);
            }
            (m1, m2)
        }
        ServiceDistribution::Pareto { scale, shape } => {
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            let mut binom = 1.0;
            let dj = (t - j) as f64;
            for k in 0..=(t - j) {
                let e = (2 * t + 1 - j - k) as f64;
                let a = shape * e;
                let sign = if (t - j - k) % 2 == 0 { 1.0 } else { -1.0 };
                let c = sign * binom * 2f64.powi(k as i32);
                m1 += c * scale * a / (a - 1.0);
                m2 += c * scale * scale * a / (a - 2.0);
                binom *= (dj - k as f64) / (k as f64 + 1.0);
            }
            (m1, m2)
        }
    };
    Ok(TypeJMoments { t, j, m1, m2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn exp_t1_values() {
        let d = ServiceDistribution::exp(1.0).unwrap();
        // S_1 = min of two exp(1): mean 1/2, second moment 1/2
        let s1 = type_j_moments(&d, 1, 1).unwrap();
        assert!(close(s1.m1, 0.5, 1e-9), "{s1:?}");
        assert!(close(s1.m2, 0.5, 1e-9), "{s1:?}");
        // S_0 = min{single, pair}: mean 2/3, second moment 7/9
        let s0 = type_j_moments(&d, 1, 0).unwrap();
        assert!(close(s0.m1, 2.0 / 3.0, 1e-9), "{s0:?}");
        assert!(close(s0.m2, 7.0 / 9.0, 1e-9), "{s0:?}");
    }

    #[test]
    fn pareto_t1_j1_is_min_of_two() {
        // min of two Pareto(1, 3) is Pareto(1, 6): mean 6/5, second moment 6/4
        let d = ServiceDistribution::pareto(1.0, 3.0).unwrap();
        let m = type_j_moments(&d, 1, 1).unwrap();
        assert!(close(m.m1, 1.2, 1e-8), "{m:?}");
        assert!(close(m.m2, 1.5, 1e-8), "{m:?}");
    }

    #[test]
    fn bernoulli_t2_j0() {
        let d = ServiceDistribution::bernoulli(1.0, 10.0, 0.2).unwrap();
        let m = type_j_moments(&d, 2, 0).unwrap();
        // long wins only if all 3 singles long and both pairs have a long side
        let p = 0.2f64.powi(3) * 1.8 * 1.8;
        assert!(close(m.m1, 1.0 + 9.0 * p, 1e-12), "{m:?}");
        assert!(close(m.m2, 1.0 + 99.0 * p, 1e-12), "{m:?}");
        assert!((m.m1 - 1.23328).abs() < 1e-10);
    }

    #[test]
    fn j_out_of_range() {
        let d = ServiceDistribution::exp(1.0).unwrap();
        assert!(type_j_moments(&d, 1, 2).is_err());
    }

    #[test]
    fn pareto_heavy_tail_rejected() {
        // shape * (t+1) = 1.2 * 2 = 2.4 > 2 is fine at t=1 but not t=0
        let d = ServiceDistribution::pareto(1.0, 1.2).unwrap();
        assert!(type_j_moments(&d, 1, 0).is_ok());
        assert!(matches!(type_j_moments(&d, 0, 0), Err(Error::InfiniteMoment(_))));
    }

    #[test]
    fn t0_reduces_to_plain_service() {
        for d in [
            ServiceDistribution::exp(1.7).unwrap(),
            ServiceDistribution::pareto(1.0, 3.0).unwrap(),
            ServiceDistribution::bernoulli(1.0, 10.0, 0.2).unwrap(),
        ] {
            let m = type_j_moments(&d, 0, 0).unwrap();
            let (m1, m2) = d.moments().unwrap();
            assert!(close(m.m1, m1, 1e-9), "{d}: {m:?}");
            assert!(close(m.m2, m2, 1e-9), "{d}: {m:?}");
        }
    }

    #[test]
    fn quadrature_and_series_agree() {
        let dists = [
            ServiceDistribution::exp(0.8).unwrap(),
            ServiceDistribution::pareto(0.5, 2.4).unwrap(),
            ServiceDistribution::bernoulli(1.0, 6.0, 0.3).unwrap(),
        ];
        for d in dists {
            for t in 0..=5usize {
                for j in 0..=t {
                    let q = type_j_moments(&d, t, j).unwrap();
                    let s = type_j_moments_series(&d, t, j).unwrap();
                    assert!(close(q.m1, s.m1, 1e-7), "{d} t={t} j={j}: {} vs {}", q.m1, s.m1);
                    assert!(close(q.m2, s.m2, 1e-7), "{d} t={t} j={j}: {} vs {}", q.m2, s.m2);
                }
            }
        }
    }

    #[test]
    fn moments_non_increasing_in_j() {
        for d in [
            ServiceDistribution::exp(1.0).unwrap(),
            ServiceDistribution::pareto(1.0, 2.5).unwrap(),
            ServiceDistribution::bernoulli(1.0, 10.0, 0.2).unwrap(),
        ] {
            for t in 1..=5usize {
                let ms: Vec<_> =
                    (0..=t).map(|j| type_j_moments(&d, t, j).unwrap()).collect();
                for w in ms.windows(2) {
                    assert!(w[0].m1 >= w[1].m1 - 1e-12, "{d} t={t}: {w:?}");
                    assert!(w[0].m2 >= w[1].m2 - 1e-12, "{d} t={t}: {w:?}");
                }
            }
        }
    }

    #[test]
    fn large_t_stays_finite_where_series_blows_up() {
        // At t = 64 the alternating series loses all precision; the tail
        // integral must still produce sane, monotone values.
        let d = ServiceDistribution::exp(1.0).unwrap();
        let m0 = type_j_moments(&d, 64, 0).unwrap();
        let m64 = type_j_moments(&d, 64, 64).unwrap();
        assert!(m0.m1 > 0.0 && m0.m1 < 1.0);
        // S_64 at j = t is the min of 65 exponentials
        assert!(close(m64.m1, 1.0 / 65.0, 1e-8), "{m64:?}");
        assert!(m0.m1 >= m64.m1);
    }
}
