//! Feeds a buffer at the effective rate for a target QoS exponent and checks
//! that the simulated queue tail decays at that exponent.

use effrate::channel::{ChannelParams, QosSpec};
use effrate::effective::{EvalOptions, StrategyKind, StrategyModel};
use effrate::numerics::Probability;
use effrate::optimize::optimal_eps;
use effrate::queuesim::{simulate_queue, SimConfig};

fn main() -> effrate::Result<()> {
    let params = ChannelParams::rayleigh(1.0, 1000)?;
    let theta = 0.01;
    let qos = QosSpec::new(theta)?;
    let opts = EvalOptions::default();
    let best = optimal_eps(StrategyKind::VariableRate, &params, &qos, &opts)?;
    let arrival = params.m() * best.value;
    println!(
        "eps* = {:.5}, R_E = {:.5} bits/cu, arrival = {arrival:.2} bits/block",
        best.arg, best.value
    );

    let config = SimConfig {
        qos,
        num_blocks: 2_500_000,
        warmup_blocks: 10_000,
        replicas: 4,
        seed: 2024,
        ..SimConfig::new(
            StrategyModel::VariableRate {
                eps: Probability::new(best.arg)?,
            },
            params,
            arrival,
        )
    };
    let trace = simulate_queue(&config)?;
    println!(
        "blocks {}, mean queue {:.1} bits, drained {:.4}",
        trace.observed_blocks, trace.mean_queue, trace.drained_fraction
    );
    match trace.decay {
        Some(fit) => println!(
            "theta_hat = {:.5} +- {:.5} over q in [{:.0}, {:.0}] bits ({} points), target {theta}",
            fit.theta_hat, fit.stderr, fit.q_lo, fit.q_hi, fit.points
        ),
        None => println!("no exponent: tail too thin or queue unstable"),
    }
    Ok(())
}
