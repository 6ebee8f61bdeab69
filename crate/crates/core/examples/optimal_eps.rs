//! Optimal block error probability and the resulting effective rate at the
//! 0 dB / m = 1000 operating point, for growing QoS exponents.

use effrate::channel::{ChannelParams, QosSpec};
use effrate::effective::{ideal_effective_rate, EvalOptions, StrategyKind};
use effrate::optimize::optimal_eps;

fn main() -> effrate::Result<()> {
    let params = ChannelParams::rayleigh(1.0, 1000)?;
    let opts = EvalOptions::default();
    println!("{:>8} {:>10} {:>10} {:>10}", "theta", "eps*", "R_E", "ideal");
    for theta in [0.0, 0.001, 0.01, 0.03, 0.1, 0.3, 1.0] {
        let qos = QosSpec::new(theta)?;
        let best = optimal_eps(StrategyKind::VariableRate, &params, &qos, &opts)?;
        let ideal = ideal_effective_rate(&params, &qos, &opts)?;
        println!("{theta:>8} {:>10.5} {:>10.5} {ideal:>10.5}", best.arg, best.value);
    }
    Ok(())
}
