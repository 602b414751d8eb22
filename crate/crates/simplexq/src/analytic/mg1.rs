//! Pollaczek–Khinchine mean sojourn time.

use crate::error::{Error, Result};

/// An M/G/1 station summarized by its arrival rate, service moments, and the
/// resulting mean sojourn (waiting + service) time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MG1Model {
    pub arrival_rate: f64,
    pub mean_service: f64,
    pub second_moment: f64,
    pub sojourn: f64,
}

impl MG1Model {
    /// Server utilization `λ E[S]`.
    pub fn utilization(&self) -> f64 {
        self.arrival_rate * self.mean_service
    }
}

/// Mean sojourn time of an M/G/1 queue:
/// `E[T] = E[S] + λ E[S²] / (2 (1 - λ E[S]))`.
pub fn pk_sojourn(arrival_rate: f64, mean_service: f64, second_moment: f64) -> Result<MG1Model> {
    if !(arrival_rate >= 0.0) || !arrival_rate.is_finite() {
        return Err(Error::parameter(format!(
            "arrival rate must be nonnegative, got {arrival_rate}"
        )));
    }
    if !(mean_service > 0.0) || !(second_moment >= mean_service * mean_service) {
        return Err(Error::parameter(format!(
            "inconsistent service moments ({mean_service}, {second_moment})"
        )));
    }
    let rho = arrival_rate * mean_service;
    if rho >= 1.0 {
        return Err(Error::Unstable {
            utilization: rho,
            context: "M/G/1 queue".into(),
        });
    }
    let sojourn = mean_service + arrival_rate * second_moment / (2.0 * (1.0 - rho));
    Ok(MG1Model {
        arrival_rate,
        mean_service,
        second_moment,
        sojourn,
    })
}
