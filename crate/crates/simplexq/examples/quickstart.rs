use simplexq::analytic::{reptoall_bounds, reptoall_sojourn, FjMethod};
use simplexq::sim::run_sim;
use simplexq::{AccessTopology, ArrivalModel, SchedulingPolicy, ServiceDistribution, SimConfig};

fn main() -> simplexq::Result<()> {
    let d = ServiceDistribution::exp(1.0)?;

    // closed-form sandwich and the budget-split estimator
    let bounds = reptoall_bounds(3, 0.9, &d)?;
    let best = reptoall_sojourn(3, 0.9, &d, FjMethod::Best)?;
    println!(
        "mean sojourn in [{:.4}, {:.4}], estimated {:.4}",
        bounds.lower_sojourn(),
        bounds.upper_sojourn(),
        best.sojourn
    );

    // the same system, simulated
    let mut cfg = SimConfig::new(
        AccessTopology::single_symbol(3)?,
        SchedulingPolicy::ReplicateToAll,
        ArrivalModel::FixedHot { rate: 0.9 },
        d,
    );
    cfg.num_requests = 100_000;
    let r = run_sim(&cfg)?;
    println!("simulated {:.4} ± {:.4}", r.hot.mean, r.hot.ci_half_width.unwrap());
    Ok(())
}
