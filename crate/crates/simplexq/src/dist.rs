//! Service-time distributions.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quad;

/// Service-time law of a single download at a single server.
///
/// Tails are right-continuous (`tail(s) = Pr{V > s}`), which pins down the
/// Stieltjes semantics at the atoms of [`ServiceDistribution::Bernoulli`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceDistribution {
    /// Exponential with the given rate.
    Exp { rate: f64 },
    /// Pareto with minimum value `scale` and tail index `shape`:
    /// `Pr{V > v} = (scale / v)^shape` for `v >= scale`.
    Pareto { scale: f64, shape: f64 },
    /// Two-point service time: `usual` with probability `1 - prob`, a long
    /// `long` with probability `prob` (canonical hot/cold cache model).
    Bernoulli { usual: f64, long: f64, prob: f64 },
}

impl ServiceDistribution {
    pub fn exp(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::parameter(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(ServiceDistribution::Exp { rate })
    }

    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::parameter(format!("pareto scale must be positive, got {scale}")));
        }
        if !(shape > 1.0) || !shape.is_finite() {
            return Err(Error::parameter(format!(
                "pareto shape must exceed 1 for a finite mean, got {shape}"
            )));
        }
        Ok(ServiceDistribution::Pareto { scale, shape })
    }

    pub fn bernoulli(usual: f64, long: f64, prob: f64) -> Result<Self> {
        if !(usual > 0.0 && long > usual) {
            return Err(Error::parameter(format!(
                "two-point service needs 0 < usual < long, got usual={usual}, long={long}"
            )));
        }
        if !(prob > 0.0 && prob < 0.5) {
            return Err(Error::parameter(format!(
                "long-service probability must lie in (0, 0.5), got {prob}"
            )));
        }
        Ok(ServiceDistribution::Bernoulli { usual, long, prob })
    }

    /// Mean service time. Finite for every constructible distribution.
    pub fn mean(&self) -> f64 {
        match *self {
            ServiceDistribution::Exp { rate } => 1.0 / rate,
            ServiceDistribution::Pareto { scale, shape } => scale * shape / (shape - 1.0),
            ServiceDistribution::Bernoulli { usual, long, prob } => {
                usual + (long - usual) * prob
            }
        }
    }

    /// Second moment, if it exists.
    pub fn second_moment(&self) -> Result<f64> {
        match *self {
            ServiceDistribution::Exp { rate } => Ok(2.0 / (rate * rate)),
            ServiceDistribution::Pareto { scale, shape } => {
                if shape <= 2.0 {
                    Err(Error::InfiniteMoment(format!(
                        "pareto second moment needs shape > 2, got {shape}"
                    )))
                } else {
                    Ok(scale * scale * shape / (shape - 2.0))
                }
            }
            ServiceDistribution::Bernoulli { usual, long, prob } => {
                Ok(usual * usual + (long * long - usual * usual) * prob)
            }
        }
    }

    /// First and second moments together.
    pub fn moments(&self) -> Result<(f64, f64)> {
        Ok((self.mean(), self.second_moment()?))
    }

    /// Complementary CDF `Pr{V > s}` (right-continuous at atoms).
    pub fn tail(&self, s: f64) -> f64 {
        match *self {
            ServiceDistribution::Exp { rate } => {
                if s <= 0.0 {
                    1.0
                } else {
                    (-rate * s).exp()
                }
            }
            ServiceDistribution::Pareto { scale, shape } => {
                if s < scale {
                    1.0
                } else {
                    (scale / s).powf(shape)
                }
            }
            ServiceDistribution::Bernoulli { usual, long, prob } => {
                if s < usual {
                    1.0
                } else if s < long {
                    prob
                } else {
                    0.0
                }
            }
        }
    }

    /// CDF `Pr{V <= s}`.
    pub fn cdf(&self, s: f64) -> f64 {
        1.0 - self.tail(s)
    }

    /// Draws a service time by inverse transform, consuming exactly one
    /// uniform variate (keeps per-server random streams aligned across
    /// configurations).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match *self {
            ServiceDistribution::Exp { rate } => -(1.0 - u).ln() / rate,
            ServiceDistribution::Pareto { scale, shape } => {
                scale * (1.0 - u).powf(-1.0 / shape)
            }
            ServiceDistribution::Bernoulli { usual, long, prob } => {
                if u < prob {
                    long
                } else {
                    usual
                }
            }
        }
    }

    /// A point `s` with `tail(s) <= eps`; used to cut tail integrals.
    pub(crate) fn upper_cut(&self, eps: f64) -> f64 {
        match *self {
            ServiceDistribution::Exp { rate } => (1.0 / eps).ln() / rate,
            ServiceDistribution::Pareto { scale, shape } => scale * eps.powf(-1.0 / shape),
            ServiceDistribution::Bernoulli { long, .. } => long,
        }
    }

    /// `∫_0^s e^(-r v) dPr{V <= v}` — the exponentially discounted mass of
    /// service completions up to `s`. Closed form except for the Pareto
    /// density, which is integrated numerically.
    pub(crate) fn exp_weighted_cdf_integral(&self, r: f64, s: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::parameter(format!("discount rate must be nonnegative, got {r}")));
        }
        match *self {
            ServiceDistribution::Exp { rate } => {
                if s <= 0.0 {
                    Ok(0.0)
                } else if r == 0.0 {
                    Ok(1.0 - (-rate * s).exp())
                } else {
                    Ok(rate / (rate + r) * (1.0 - (-(rate + r) * s).exp()))
                }
            }
            ServiceDistribution::Pareto { scale, shape } => {
                if s <= scale {
                    return Ok(0.0);
                }
                // density shape * scale^shape * v^-(shape+1) on [scale, s]
                quad::integrate_octaves(
                    |v| (-r * v).exp() * shape * (scale / v).powf(shape) / v,
                    scale,
                    s,
                    1e-10,
                    1e-14,
                )
            }
            ServiceDistribution::Bernoulli { usual, long, prob } => {
                let mut total = 0.0;
                if s >= usual {
                    total += (1.0 - prob) * (-r * usual).exp();
                }
                if s >= long {
                    total += prob * (-r * long).exp();
                }
                Ok(total)
            }
        }
    }
}

impl std::fmt::Display for ServiceDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ServiceDistribution::Exp { rate } => write!(f, "exp:{rate}"),
            ServiceDistribution::Pareto { scale, shape } => write!(f, "pareto:{scale}:{shape}"),
            ServiceDistribution::Bernoulli { usual, long, prob } => {
                write!(f, "bern:{usual}:{long}:{prob}")
            }
        }
    }
}

impl std::str::FromStr for ServiceDistribution {
    type Err = Error;

    /// Parses the colon grammar used on the command line: `exp:<rate>`,
    /// `pareto:<scale>:<shape>`, `bern:<usual>:<long>:<prob>`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let family = parts.next().unwrap_or_default();
        let args = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::parameter(format!("bad number {p:?} in service law {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match (family, args.as_slice()) {
            ("exp", &[rate]) => ServiceDistribution::exp(rate),
            ("pareto", &[scale, shape]) => ServiceDistribution::pareto(scale, shape),
            ("bern", &[usual, long, prob]) => ServiceDistribution::bernoulli(usual, long, prob),
            _ => Err(Error::parameter(format!(
                "unrecognized service law {s:?}; expected exp:<rate>, pareto:<scale>:<shape>, \
                 or bern:<usual>:<long>:<prob>"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn exp_moments() {
        let d = ServiceDistribution::exp(1.0).unwrap();
        assert_eq!(d.moments().unwrap(), (1.0, 2.0));
        let d = ServiceDistribution::exp(2.0).unwrap();
        let (m1, m2) = d.moments().unwrap();
        assert!((m1 - 0.5).abs() < 1e-15);
        assert!((m2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pareto_moments() {
        let d = ServiceDistribution::pareto(1.0, 3.0).unwrap();
        let (m1, m2) = d.moments().unwrap();
        assert!((m1 - 1.5).abs() < 1e-15);
        assert!((m2 - 3.0).abs() < 1e-15);
        let heavy = ServiceDistribution::pareto(1.0, 1.5).unwrap();
        assert!(matches!(heavy.second_moment(), Err(Error::InfiniteMoment(_))));
    }

    #[test]
    fn bernoulli_moments_and_tail() {
        let d = ServiceDistribution::bernoulli(1.0, 10.0, 0.2).unwrap();
        let (m1, m2) = d.moments().unwrap();
        assert!((m1 - 2.8).abs() < 1e-15);
        assert!((m2 - 20.8).abs() < 1e-12);
        assert_eq!(d.tail(0.5), 1.0);
        assert_eq!(d.tail(1.0), 0.2); // right-continuous at the atom
        assert_eq!(d.tail(5.0), 0.2);
        assert_eq!(d.tail(10.0), 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ServiceDistribution::exp(0.0).is_err());
        assert!(ServiceDistribution::exp(-1.0).is_err());
        assert!(ServiceDistribution::pareto(0.0, 3.0).is_err());
        assert!(ServiceDistribution::pareto(1.0, 1.0).is_err());
        assert!(ServiceDistribution::bernoulli(1.0, 0.5, 0.2).is_err());
        assert!(ServiceDistribution::bernoulli(1.0, 10.0, 0.5).is_err());
        assert!(ServiceDistribution::bernoulli(1.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn tail_integrates_to_mean() {
        for d in [
            ServiceDistribution::exp(1.3).unwrap(),
            ServiceDistribution::pareto(0.7, 2.6).unwrap(),
        ] {
            let cut = d.upper_cut(1e-13);
            let m = quad::integrate_octaves(|s| d.tail(s), 0.0, cut, 1e-9, 1e-12).unwrap();
            // Pareto tail beyond the cut still carries ~cut * eps of mass.
            assert!(
                (m - d.mean()).abs() / d.mean() < 1e-3,
                "{d}: tail integral {m} vs mean {}",
                d.mean()
            );
        }
    }

    #[test]
    fn sampling_matches_moments() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for d in [
            ServiceDistribution::exp(2.0).unwrap(),
            ServiceDistribution::pareto(1.0, 3.0).unwrap(),
            ServiceDistribution::bernoulli(1.0, 10.0, 0.2).unwrap(),
        ] {
            let n = 1_000_000;
            let mut sum = 0.0;
            let mut min = f64::INFINITY;
            for _ in 0..n {
                let v = d.sample(&mut rng);
                assert!(v > 0.0);
                min = min.min(v);
                sum += v;
            }
            let mean = sum / n as f64;
            let sd = (d.second_moment().unwrap() - d.mean() * d.mean()).sqrt();
            let se = sd / (n as f64).sqrt();
            assert!(
                (mean - d.mean()).abs() < 4.0 * se,
                "{d}: sample mean {mean} vs {} (se {se})",
                d.mean()
            );
            if let ServiceDistribution::Pareto { scale, .. } = d {
                assert!(min >= scale);
            }
        }
    }

    #[test]
    fn discounted_cdf_integral_limits() {
        let d = ServiceDistribution::exp(1.0).unwrap();
        // r = 0 reduces to the CDF itself.
        assert!((d.exp_weighted_cdf_integral(0.0, 2.0).unwrap() - d.cdf(2.0)).abs() < 1e-12);
        // full-range integral is the Laplace transform of the density
        let v = d.exp_weighted_cdf_integral(0.5, 200.0).unwrap();
        assert!((v - 1.0 / 1.5).abs() < 1e-10);

        let b = ServiceDistribution::bernoulli(1.0, 10.0, 0.2).unwrap();
        let v = b.exp_weighted_cdf_integral(0.3, 5.0).unwrap();
        assert!((v - 0.8 * (-0.3f64).exp()).abs() < 1e-12);

        let p = ServiceDistribution::pareto(1.0, 3.0).unwrap();
        let full = p.exp_weighted_cdf_integral(0.0, 1e6).unwrap();
        assert!((full - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flag_grammar_round_trips() {
        for d in [
            ServiceDistribution::exp(2.5).unwrap(),
            ServiceDistribution::pareto(1.0, 3.0).unwrap(),
            ServiceDistribution::bernoulli(1.0, 10.0, 0.25).unwrap(),
        ] {
            let back: ServiceDistribution = d.to_string().parse().unwrap();
            assert_eq!(back, d);
        }
        assert!("exp".parse::<ServiceDistribution>().is_err());
        assert!("exp:0".parse::<ServiceDistribution>().is_err());
        assert!("exp:1:2".parse::<ServiceDistribution>().is_err());
        assert!("pareto:1".parse::<ServiceDistribution>().is_err());
        assert!("weibull:1:2".parse::<ServiceDistribution>().is_err());
        assert!("bern:1:10:zzz".parse::<ServiceDistribution>().is_err());
    }
}
