//! Matrix-analytic upper bound on the mean hot-data sojourn for the
//! availability-one replicate-to-all system with heterogeneous exponential
//! servers (systematic rate `gamma`, recovery rates `alpha` and `beta`).
//!
//! The full occupancy/lead-state process is truncated to the five central
//! lead configurations `(0,2), (0,1), (0,0), (1,0), (2,0)`: a recovery group
//! is blocked from advancing once it leads the head request by two copies.
//! Blocking only slows the system down, so the resulting mean sojourn is a
//! strict upper bound. The truncated chain is a level-independent
//! quasi-birth-death process solved by the standard R-matrix iteration
//! `R <- -(R^2 L + H) F^-1` and a 9x9 boundary system.

mod dense;

use dense::Mat;

use crate::error::{Error, Result};

/// Generator blocks of the truncated level process.
///
/// Level 0 bundles the empty state with the three single-request states
/// (4 boundary states); each level `k >= 2` has the five lead phases.
pub(crate) struct Blocks {
    /// 4x4 within-boundary rates.
    pub f0: Mat,
    /// 4x5 boundary-to-level-2 arrivals.
    pub h0: Mat,
    /// 5x4 level-2-to-boundary departures.
    pub l0: Mat,
    /// 5x5 within-level rates.
    pub f: Mat,
    /// 5x5 one-level-down departures.
    pub l: Mat,
    /// 5x5 one-level-up arrivals.
    pub h: Mat,
}

pub(crate) fn build_blocks(gamma: f64, alpha: f64, beta: f64, lambda: f64) -> Blocks {
    let (g, a, b, lm) = (gamma, alpha, beta, lambda);
    let d = a + b + g + lm;
    let f0 = Mat::from_rows(&[
        &[-lm, 0.0, lm, 0.0],
        &[a + g, b - d, 0.0, 0.0],
        &[g, b, -d, a],
        &[b + g, 0.0, 0.0, a - d],
    ]);
    let h0 = Mat::from_rows(&[
        &[0.0, 0.0, 0.0, 0.0, 0.0],
        &[0.0, lm, 0.0, 0.0, 0.0],
        &[0.0, 0.0, lm, 0.0, 0.0],
        &[0.0, 0.0, 0.0, lm, 0.0],
    ]);
    let l0 = Mat::from_rows(&[
        &[0.0, a + g, 0.0, 0.0],
        &[0.0, 0.0, a + g, 0.0],
        &[0.0, 0.0, g, 0.0],
        &[0.0, 0.0, b + g, 0.0],
        &[0.0, 0.0, 0.0, b + g],
    ]);
    let f = Mat::from_rows(&[
        &[b - d, 0.0, 0.0, 0.0, 0.0],
        &[b, -d, 0.0, 0.0, 0.0],
        &[0.0, b, -d, a, 0.0],
        &[0.0, 0.0, 0.0, -d, a],
        &[0.0, 0.0, 0.0, 0.0, a - d],
    ]);
    let l = Mat::from_rows(&[
        &[0.0, a + g, 0.0, 0.0, 0.0],
        &[0.0, 0.0, a + g, 0.0, 0.0],
        &[0.0, 0.0, g, 0.0, 0.0],
        &[0.0, 0.0, b + g, 0.0, 0.0],
        &[0.0, 0.0, 0.0, b + g, 0.0],
    ]);
    let h = Mat::identity(5).scale(lm);
    Blocks { f0, h0, l0, f, l, h }
}

/// Solved truncated process: the rate matrix, boundary probabilities, and
/// the derived occupancy/sojourn summary.
#[derive(Debug, Clone)]
pub struct QbdSolution {
    /// Level-geometric rate matrix (`pi_(i+1) = pi_i R` for levels >= 2).
    pub r: [[f64; 5]; 5],
    /// Probabilities of the empty state and the three single-request states.
    pub pi0: [f64; 4],
    /// Probabilities of the five phases at occupancy two.
    pub pi1: [f64; 5],
    /// R-iteration count.
    pub iterations: u64,
    /// `max |H + RF + R^2 L|` at termination.
    pub residual: f64,
    /// Mean number of requests in the truncated system.
    pub mean_in_system: f64,
    /// Mean sojourn upper bound `E[N] / lambda`.
    pub sojourn: f64,
}

const R_EPSILON: f64 = 1e-6;
const R_MAX_ITERATIONS: u64 = 100_000;

fn check_rates(gamma: f64, alpha: f64, beta: f64, lambda: f64) -> Result<()> {
    for (name, v) in [("gamma", gamma), ("alpha", alpha), ("beta", beta), ("lambda", lambda)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::parameter(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    if gamma <= 0.0 {
        return Err(Error::parameter("systematic service rate gamma must be positive".to_string()));
    }
    if lambda <= 0.0 {
        return Err(Error::parameter("arrival rate lambda must be positive".to_string()));
    }
    Ok(())
}

/// Mean-drift stability check on the phase process `A = H + F + L`: the
/// level process drifts down only if the stationary downward rate exceeds
/// the arrival rate. Returns the utilization estimate when it can be formed
/// (the phase chain can be reducible for boundary rate choices, in which
/// case the check is skipped and divergence is caught later).
fn drift_utilization(blocks: &Blocks, lambda: f64) -> Option<f64> {
    let a = blocks.h.add(&blocks.f).add(&blocks.l);
    // solve w A = 0, w 1 = 1: transpose, overwrite one equation with the
    // normalization
    let mut m = Mat::zeros(5, 5);
    for i in 0..5 {
        for j in 0..5 {
            m[(i, j)] = a[(j, i)];
        }
    }
    for j in 0..5 {
        m[(0, j)] = 1.0;
    }
    let mut rhs = Mat::zeros(5, 1);
    rhs[(0, 0)] = 1.0;
    let w = m.solve(&rhs).ok()?;
    let mut down = 0.0;
    for i in 0..5 {
        let wi = w[(i, 0)];
        if wi < -1e-9 {
            return None; // reducible phase chain; not a meaningful stationary vector
        }
        down += wi.max(0.0) * blocks.l.row(i).iter().sum::<f64>();
    }
    (down > 0.0).then(|| lambda / down)
}

/// Solves the truncated availability-one process.
pub fn solve_qbd(gamma: f64, alpha: f64, beta: f64, lambda: f64) -> Result<QbdSolution> {
    check_rates(gamma, alpha, beta, lambda)?;
    let blocks = build_blocks(gamma, alpha, beta, lambda);
    if let Some(util) = drift_utilization(&blocks, lambda) {
        if util >= 1.0 {
            return Err(Error::Unstable {
                utilization: util,
                context: "truncated lead-state process".into(),
            });
        }
    }

    let f_inv = blocks.f.inverse()?;
    let mut r = Mat::zeros(5, 5);
    let mut iterations = 0;
    loop {
        let next = r.mul(&r).mul(&blocks.l).add(&blocks.h).scale(-1.0).mul(&f_inv);
        iterations += 1;
        let diff = next.max_abs_diff(&r);
        r = next;
        if !r.is_finite() || r.max_abs() > 1e9 {
            return Err(Error::Unstable {
                utilization: f64::INFINITY,
                context: "rate-matrix iteration diverged".into(),
            });
        }
        if diff <= R_EPSILON {
            break;
        }
        if iterations >= R_MAX_ITERATIONS {
            return Err(Error::NonConvergence { iterations });
        }
    }
    let residual =
        blocks.h.add(&r.mul(&blocks.f)).add(&r.mul(&r).mul(&blocks.l)).max_abs();

    let spectral = r.spectral_radius();
    if spectral >= 1.0 - 1e-6 {
        return Err(Error::Unstable {
            utilization: spectral,
            context: "level process (spectral radius of R)".into(),
        });
    }

    // boundary system: [pi0 pi1] Phi = 0 plus normalization, solved by
    // replacing the first column of Phi with the normalization coefficients
    let i5 = Mat::identity(5);
    let i_minus_r_inv = i5.sub(&r).inverse()?;
    let u = i_minus_r_inv.mul_vec(&[1.0; 5]);
    let mut psi = Mat::zeros(9, 9);
    psi.place(&blocks.f0, 0, 0);
    psi.place(&blocks.h0, 0, 4);
    psi.place(&blocks.l0, 4, 0);
    psi.place(&r.mul(&blocks.l).add(&blocks.f), 4, 4);
    for i in 0..4 {
        psi[(i, 0)] = 1.0;
    }
    for i in 0..5 {
        psi[(4 + i, 0)] = u[i];
    }
    // x^T Psi = e1^T  <=>  Psi^T x = e1
    let mut psi_t = Mat::zeros(9, 9);
    for i in 0..9 {
        for j in 0..9 {
            psi_t[(i, j)] = psi[(j, i)];
        }
    }
    let mut rhs = Mat::zeros(9, 1);
    rhs[(0, 0)] = 1.0;
    let x = psi_t.solve(&rhs)?;

    let mut pi0 = [0.0; 4];
    let mut pi1 = [0.0; 5];
    for i in 0..4 {
        pi0[i] = x[(i, 0)];
    }
    for i in 0..5 {
        pi1[i] = x[(4 + i, 0)];
    }
    let floor = -1e-9;
    if pi0.iter().chain(pi1.iter()).any(|&p| p < floor) {
        return Err(Error::Numeric(format!(
            "negative boundary probability in level-process solution: {pi0:?} {pi1:?}"
        )));
    }
    for p in pi0.iter_mut().chain(pi1.iter_mut()) {
        *p = p.max(0.0);
    }
    let norm: f64 =
        pi0.iter().sum::<f64>() + pi1.iter().zip(&u).map(|(p, c)| p * c).sum::<f64>();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Numeric(format!(
            "level-process probabilities sum to {norm}, expected 1"
        )));
    }

    // E[N] = Pr{N=1} + sum_(i>=2) i Pr{N=i}
    //      = pi0 1 - pi0[0] + pi1 ((I-R)^-2 + (I-R)^-1) 1
    let occupancy_weights =
        i_minus_r_inv.mul(&i_minus_r_inv).add(&i_minus_r_inv).mul_vec(&[1.0; 5]);
    let mean_in_system = pi0.iter().sum::<f64>() - pi0[0]
        + pi1.iter().zip(&occupancy_weights).map(|(p, c)| p * c).sum::<f64>();

    let mut r_arr = [[0.0; 5]; 5];
    for (i, row) in r_arr.iter_mut().enumerate() {
        row.copy_from_slice(r.row(i));
    }
    Ok(QbdSolution {
        r: r_arr,
        pi0,
        pi1,
        iterations,
        residual,
        mean_in_system,
        sojourn: mean_in_system / lambda,
    })
}

/// Matrix-analytic upper bound on the mean hot-data sojourn time.
pub fn ma_sojourn_ub(gamma: f64, alpha: f64, beta: f64, lambda: f64) -> Result<f64> {
    Ok(solve_qbd(gamma, alpha, beta, lambda)?.sojourn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::reptoall_bounds;
    use crate::dist::ServiceDistribution;

    fn assert_zero_row_sums(blocks: &Blocks) {
        for i in 0..4 {
            let s: f64 =
                blocks.f0.row(i).iter().sum::<f64>() + blocks.h0.row(i).iter().sum::<f64>();
            assert!(s.abs() < 1e-12, "boundary row {i} sums to {s}");
        }
        for i in 0..5 {
            let s: f64 = blocks.l0.row(i).iter().sum::<f64>()
                + blocks.f.row(i).iter().sum::<f64>()
                + blocks.h.row(i).iter().sum::<f64>();
            assert!(s.abs() < 1e-12, "repeating row {i} sums to {s}");
        }
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        for (g, a, b, lm) in
            [(1.0, 1.0, 1.0, 0.5), (1.3, 0.7, 1.1, 0.8), (2.0, 0.0, 1.0, 0.4), (1.0, 0.0, 0.0, 0.3)]
        {
            assert_zero_row_sums(&build_blocks(g, a, b, lm));
        }
    }

    #[test]
    fn within_level_determinant() {
        // det(F) = -delta^3 (delta - alpha)(delta - beta)
        let (g, a, b, lm) = (1.0, 0.8, 1.2, 0.7);
        let d = g + a + b + lm;
        let blocks = build_blocks(g, a, b, lm);
        let expect = -d.powi(3) * (d - a) * (d - b);
        let det = blocks.f.determinant();
        assert!((det - expect).abs() < 1e-9 * expect.abs(), "{det} vs {expect}");
    }

    #[test]
    fn light_traffic_sojourn_near_bare_service() {
        // gamma = alpha = beta = 1: fastest service law has mean 2/3
        let sol = solve_qbd(1.0, 1.0, 1.0, 0.02).unwrap();
        assert!(
            (sol.sojourn - 2.0 / 3.0).abs() / (2.0 / 3.0) < 0.02,
            "sojourn {} far from 2/3",
            sol.sojourn
        );
        assert!(sol.residual < 1e-5);
        assert!(sol.pi0[0] > 0.95); // mostly empty
    }

    #[test]
    fn no_recovery_servers_reduce_to_mm1() {
        // alpha = beta = 0 leaves a plain M/M/1 at the systematic server
        let sol = solve_qbd(1.0, 0.0, 0.0, 0.5).unwrap();
        assert!((sol.sojourn - 2.0).abs() < 1e-3, "sojourn {}", sol.sojourn);
    }

    #[test]
    fn sojourn_increases_with_load() {
        let mut last = 0.0;
        for i in 1..=6 {
            let lambda = 0.2 * i as f64;
            let sol = solve_qbd(1.0, 1.0, 1.0, lambda).unwrap();
            assert!(sol.sojourn > last, "lambda={lambda}: {} <= {last}", sol.sojourn);
            last = sol.sojourn;
        }
    }

    #[test]
    fn tighter_than_split_merge_and_above_lower_bound() {
        let d = ServiceDistribution::exp(1.0).unwrap();
        for lambda in [0.3, 0.6, 0.9] {
            let ma = ma_sojourn_ub(1.0, 1.0, 1.0, lambda).unwrap();
            let bounds = reptoall_bounds(1, lambda, &d).unwrap();
            assert!(
                ma >= bounds.lower_sojourn() - 1e-9,
                "lambda={lambda}: ma {ma} below lower bound {}",
                bounds.lower_sojourn()
            );
            assert!(
                ma <= bounds.upper_sojourn() + 1e-9,
                "lambda={lambda}: ma {ma} above split-merge bound {}",
                bounds.upper_sojourn()
            );
        }
    }

    #[test]
    fn overload_rejected() {
        let err = solve_qbd(1.0, 1.0, 1.0, 5.0).unwrap_err();
        assert!(
            matches!(err, Error::Unstable { .. } | Error::NonConvergence { .. }),
            "unexpected error {err:?}"
        );
    }

    #[test]
    fn solution_is_a_distribution() {
        let sol = solve_qbd(1.3, 0.7, 1.1, 0.8).unwrap();
        let r = Mat::from_rows(&sol.r.iter().map(|row| row.as_slice()).collect::<Vec<_>>());
        assert!(r.spectral_radius() < 1.0);
        assert!(sol.r.iter().flatten().all(|&x| x >= -1e-12), "negative rate-matrix entry");
        assert!(sol.pi0.iter().chain(sol.pi1.iter()).all(|&p| (0.0..=1.0).contains(&p)));
        // geometric tail mass completes the distribution
        let i5 = Mat::identity(5);
        let u = i5.sub(&r).inverse().unwrap().mul_vec(&[1.0; 5]);
        let total: f64 = sol.pi0.iter().sum::<f64>()
            + sol.pi1.iter().zip(&u).map(|(p, c)| p * c).sum::<f64>();
        assert!((total - 1.0).abs() < 1e-6, "total mass {total}");
    }

    #[test]
    fn invalid_rates_rejected() {
        assert!(solve_qbd(0.0, 1.0, 1.0, 0.5).is_err());
        assert!(solve_qbd(1.0, -0.1, 1.0, 0.5).is_err());
        assert!(solve_qbd(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(solve_qbd(1.0, 1.0, f64::NAN, 0.5).is_err());
    }
}
