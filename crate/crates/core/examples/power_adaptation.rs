//! QoS-aware power control: the cutoff that meets the average power
//! constraint, and the gain over constant power.

use effrate::channel::{ChannelParams, QosSpec};
use effrate::effective::{mean_power, solve_alpha, EvalOptions, StrategyKind};
use effrate::optimize::optimal_eps;

fn main() -> effrate::Result<()> {
    let params = ChannelParams::rayleigh(1.0, 1000)?;
    let opts = EvalOptions::default();
    println!(
        "{:>8} {:>12} {:>10} {:>10} {:>10}",
        "theta", "alpha", "E{mu}", "adapted", "constant"
    );
    for theta in [0.0, 0.001, 0.01, 0.1, 1.0] {
        let qos = QosSpec::new(theta)?;
        let policy = solve_alpha(&params, &qos, &opts)?;
        let used = mean_power(&policy, &params.fading, &opts.quadrature)?;
        let adapted = optimal_eps(StrategyKind::PowerAdapted, &params, &qos, &opts)?;
        let constant = optimal_eps(StrategyKind::VariableRate, &params, &qos, &opts)?;
        println!(
            "{theta:>8} {:>12.4e} {used:>10.7} {:>10.5} {:>10.5}",
            policy.alpha, adapted.value, constant.value
        );
    }
    Ok(())
}
