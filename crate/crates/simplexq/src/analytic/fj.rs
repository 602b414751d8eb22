//! Estimators for the long-run fractions `f_j` of type-`j` service starts
//! under replicate-to-all scheduling.
//!
//! The fractions are conjectured geometric-like and non-increasing in `j`.
//! Three closed-form estimators are provided, all driven by the offered load
//! `x = λ E[Ŝ]` where `E[Ŝ]` is the uniform average of the type service
//! means:
//!
//! - `naive`: uniform `1/(t+1)`, the saturation limit.
//! - `better`: geometric `f_j ∝ x^j`, the large-`t` relaxation of the
//!   stability constraint on the geometric ratio.
//! - `best`: pins `f_0` to its stability lower bound `1 - x` and spreads the
//!   remaining mass evenly (the per-step ratio recursion, solved exactly,
//!   fixes every later ratio to one).

use crate::error::{Error, Result};

/// How a set of type-start fractions was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FjMethod {
    /// Saturated availability-one walk (requires rates, see
    /// [`crate::analytic::fj_high_traffic_t1`]).
    HighTrafficT1,
    /// Uniform over types.
    Naive,
    /// Geometric in the offered load.
    Better,
    /// Stability-bound pinned `f_0`.
    Best,
    /// Measured by the simulator.
    Empirical,
}

impl FjMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FjMethod::HighTrafficT1 => "high_traffic_t1",
            FjMethod::Naive => "naive",
            FjMethod::Better => "better",
            FjMethod::Best => "best",
            FjMethod::Empirical => "empirical",
        }
    }
}

impl std::fmt::Display for FjMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Fractions of service starts by type, `f[j]` for `j = 0..=t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FjEstimate {
    pub f: Vec<f64>,
    pub method: FjMethod,
}

impl FjEstimate {
    /// Validates nonnegativity, normalization, and (for the model-based
    /// estimators) monotonicity in `j`.
    pub fn new(f: Vec<f64>, method: FjMethod) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::parameter("type fractions must be non-empty".to_string()));
        }
        if f.iter().any(|&v| !(v >= 0.0) || v > 1.0 + 1e-12) {
            return Err(Error::Numeric(format!("type fractions out of range: {f:?}")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Numeric(format!("type fractions sum to {sum}, not 1")));
        }
        // Non-increasing f_j is a property of the homogeneous-rate estimators.
        // Measured fractions and the heterogeneous-rate t=1 formula may put
        // more mass on recovery starts (e.g. a slow systematic server), so
        // only the model-based homogeneous methods are held to it.
        let monotone =
            !matches!(method, FjMethod::Empirical | FjMethod::HighTrafficT1);
        if monotone && f.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            return Err(Error::Numeric(format!("type fractions increase in j: {f:?}")));
        }
        Ok(FjEstimate { f, method })
    }

    /// Availability this estimate refers to.
    pub fn t(&self) -> usize {
        self.f.len() - 1
    }

    /// Mixes per-type moments into overall service moments.
    pub fn mix_moments(&self, moments: &[(f64, f64)]) -> (f64, f64) {
        assert_eq!(moments.len(), self.f.len());
        let m1 = self.f.iter().zip(moments).map(|(f, m)| f * m.0).sum();
        let m2 = self.f.iter().zip(moments).map(|(f, m)| f * m.1).sum();
        (m1, m2)
    }
}

fn check_load(t: usize, lambda: f64, s_bar: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::parameter(format!("arrival rate must be nonnegative, got {lambda}")));
    }
    if !(s_bar > 0.0) || !s_bar.is_finite() {
        return Err(Error::parameter(format!("mean type service must be positive, got {s_bar}")));
    }
    let x = lambda * s_bar;
    if x >= 1.0 {
        return Err(Error::Unstable {
            utilization: x,
            context: format!("type-fraction estimate at t={t}"),
        });
    }
    Ok(x)
}

/// Estimates the type-start fractions for availability `t`, arrival rate
/// `lambda`, and average type service mean `s_bar = (Σ_j E[S_j]) / (t + 1)`.
pub fn fj_estimate(t: usize, lambda: f64, s_bar: f64, method: FjMethod) -> Result<FjEstimate> {
    fj_estimate_inner(t, lambda, s_bar, method, false)
}

/// Like [`fj_estimate`], but the `better` method solves the stability
/// polynomial `(1 - x) ρ^(t+1) - ρ + x = 0` for its root in `[x, 1)` instead
/// of using the large-`t` limit `ρ = x`.
pub fn fj_estimate_refined(
    t: usize,
    lambda: f64,
    s_bar: f64,
    method: FjMethod,
) -> Result<FjEstimate> {
    fj_estimate_inner(t, lambda, s_bar, method, true)
}

fn fj_estimate_inner(
    t: usize,
    lambda: f64,
    s_bar: f64,
    method: FjMethod,
    refine: bool,
) -> Result<FjEstimate> {
    match method {
        FjMethod::Naive => {
            let f = vec![1.0 / (t as f64 + 1.0); t + 1];
            FjEstimate::new(f, method)
        }
        FjMethod::Better => {
            let x = check_load(t, lambda, s_bar)?;
            let rho = if refine { geometric_ratio_root(t, x) } else { x };
            FjEstimate::new(geometric_fractions(t, rho), method)
        }
        FjMethod::Best => {
            let x = check_load(t, lambda, s_bar)?;
            best_fractions(t, x)
        }
        FjMethod::HighTrafficT1 => Err(Error::parameter(
            "high_traffic_t1 fractions require rates; use fj_high_traffic_t1".to_string(),
        )),
        FjMethod::Empirical => Err(Error::parameter(
            "empirical fractions come from simulation output".to_string(),
        )),
    }
}

/// `f_j = ρ^j (1 - ρ) / (1 - ρ^(t+1))`.
fn geometric_fractions(t: usize, rho: f64) -> Vec<f64> {
    if rho == 0.0 {
        let mut f = vec![0.0; t + 1];
        f[0] = 1.0;
        return f;
    }
    let norm = (1.0 - rho) / (1.0 - rho.powi(t as i32 + 1));
    let mut f: Vec<f64> = (0..=t).map(|j| norm * rho.powi(j as i32)).collect();
    // tidy the floating-point normalization
    let sum: f64 = f.iter().sum();
    f.iter_mut().for_each(|v| *v /= sum);
    f
}

/// Root of `g(ρ) = (1 - x) ρ^(t+1) - ρ + x` in `[x, 1)` (the tightest
/// admissible geometric ratio). `g(x) > 0 > g(1 - ε)` whenever the stability
/// constraint `x < t/(t+1)` holds, so bisection applies; otherwise the limit
/// ratio `x` is returned unchanged.
fn geometric_ratio_root(t: usize, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let g = |rho: f64| (1.0 - x) * rho.powi(t as i32 + 1) - rho + x;
    // g'(1) = (t+1)(1-x) - 1 must be positive for an interior root.
    if (t as f64 + 1.0) * (1.0 - x) <= 1.0 {
        return x;
    }
    let (mut lo, mut hi) = (x, 1.0 - 1e-12);
    if g(hi) > 0.0 {
        return x;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The pinned-`f_0` estimator. Solving the ratio recursion exactly: the first
/// ratio is `ρ_0 = x / (t (1 - x))` and every later step's normalization
/// constraint is already tight, forcing `ρ_j = 1`. Hence
/// `f = (1 - x, x/t, ..., x/t)`. Degenerate once `ρ_0` reaches 1, i.e.
/// `x >= t/(t+1)`, where the pinned `f_0` would drop below the uniform floor.
fn best_fractions(t: usize, x: f64) -> Result<FjEstimate> {
    if t == 0 {
        return FjEstimate::new(vec![1.0], FjMethod::Best);
    }
    let rho0 = x / (t as f64 * (1.0 - x));
    if rho0 >= 1.0 {
        return Err(Error::Degenerate(format!(
            "pinned type-fraction ratio {rho0:.6} >= 1 at load {x:.6} (t={t})"
        )));
    }
    let mut f = vec![x / t as f64; t + 1];
    f[0] = 1.0 - x;
    FjEstimate::new(f, FjMethod::Best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn naive_is_uniform() {
        let fj = fj_estimate(3, 0.7, 0.5, FjMethod::Naive).unwrap();
        assert_eq!(fj.f, vec![0.25; 4]);
    }

    #[test]
    fn better_geometric() {
        let fj = fj_estimate(2, 0.5, 0.8, FjMethod::Better).unwrap();
        let rho: f64 = 0.4;
        let norm = (1.0 - rho) / (1.0 - rho.powi(3));
        for (j, &f) in fj.f.iter().enumerate() {
            assert!((f - norm * rho.powi(j as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn best_t1_example() {
        // t = 1, lambda = 0.6, s_bar = 7/12: x = 0.35, f = (0.65, 0.35)
        let fj = fj_estimate(1, 0.6, 7.0 / 12.0, FjMethod::Best).unwrap();
        assert!((fj.f[0] - 0.65).abs() < 1e-12);
        assert!((fj.f[1] - 0.35).abs() < 1e-12);
    }

    #[test]
    fn best_idle_limit() {
        let fj = fj_estimate(1, 0.0, 0.5, FjMethod::Best).unwrap();
        assert_eq!(fj.f, vec![1.0, 0.0]);
    }

    #[test]
    fn best_degenerate_reported() {
        // x = 0.9 at t = 1 puts the pinned ratio at 9
        assert!(matches!(
            fj_estimate(1, 0.9, 1.0, FjMethod::Best),
            Err(Error::Degenerate(_))
        ));
        // and x >= t/(t+1) = 0.75 is the t = 3 threshold
        assert!(fj_estimate(3, 0.76, 1.0, FjMethod::Best).is_err());
        assert!(fj_estimate(3, 0.74, 1.0, FjMethod::Best).is_ok());
    }

    #[test]
    fn saturated_load_rejected() {
        assert!(matches!(
            fj_estimate(2, 2.0, 0.5, FjMethod::Better),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn refined_ratio_between_load_and_one() {
        let x = 0.35;
        let fj_plain = fj_estimate(1, 0.6, 7.0 / 12.0, FjMethod::Better).unwrap();
        let fj_ref = fj_estimate_refined(1, 0.6, 7.0 / 12.0, FjMethod::Better).unwrap();
        // refined ratio is larger, so f_0 is smaller
        assert!(fj_ref.f[0] <= fj_plain.f[0]);
        // and the implied ratio solves the polynomial
        let rho = fj_ref.f[1] / fj_ref.f[0];
        assert!(rho >= x && rho < 1.0);
        let g = (1.0 - x) * rho.powi(2) - rho + x;
        assert!(g.abs() < 1e-9, "g({rho}) = {g}");
    }

    proptest! {
        #[test]
        fn fractions_normalized_and_monotone(
            t in 0usize..8,
            lambda in 0.0f64..1.2,
            s_bar in 0.05f64..0.8,
        ) {
            for method in [FjMethod::Naive, FjMethod::Better, FjMethod::Best] {
                if let Ok(fj) = fj_estimate(t, lambda, s_bar, method) {
                    let sum: f64 = fj.f.iter().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-12);
                    prop_assert!(fj.f.iter().all(|&v| v >= 0.0));
                    for w in fj.f.windows(2) {
                        prop_assert!(w[1] <= w[0] + 1e-12);
                    }
                }
            }
        }
    }
}
