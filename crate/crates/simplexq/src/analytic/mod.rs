//! Analytic latency models: M/G/1 approximations and bounds for
//! replicate-to-all scheduling, the exact select-one mean, fairness-first
//! bounds and low-traffic tails, and supporting steady-state results.

mod fairness;
mod fj;
mod high_traffic;
mod mg1;
mod moments;
mod pathway;
mod reptoall;
mod selectone;

pub use fairness::{
    fairnessfirst_bound_tail, fairnessfirst_bounds, fairnessfirst_lowtraffic_sojourn,
    fairnessfirst_lowtraffic_tail, FairnessBounds,
};
pub use fj::{fj_estimate, fj_estimate_refined, FjEstimate, FjMethod};
pub use high_traffic::{
    fj_high_traffic_t1, high_traffic_t1_steady_state, reptoall_sojourn_t1_rates,
    type_moments_t1_rates, winning_fraction_bounds, HighTrafficSteadyState, WinningFractions,
};
pub use mg1::{pk_sojourn, MG1Model};
pub use moments::{type_j_moments, type_j_moments_series, TypeJMoments};
pub use pathway::conj_pathway_prob;
pub use reptoall::{
    rate_allocation_curve, reptoall_bounds, reptoall_sojourn, reptoall_sojourn_with_fractions,
    RateAllocationPoint, ReptoallBounds,
};
pub use selectone::{selectone_optimal_weights, selectone_sojourn};
