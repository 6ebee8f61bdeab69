//! One codeword per block against two independent codewords on the two
//! real branches; the pair loses without a buffer constraint and wins under
//! a strict one.

use effrate::channel::{ChannelParams, QosSpec};
use effrate::effective::{EvalOptions, StrategyKind};
use effrate::optimize::{crossover_theta, optimal_eps};

fn main() -> effrate::Result<()> {
    let params = ChannelParams::rayleigh(1.0, 1000)?;
    let opts = EvalOptions::default();
    let best = |kind, t: f64| optimal_eps(kind, &params, &QosSpec::new(t)?, &opts).map(|r| r.value);

    println!("{:>8} {:>10} {:>10}", "theta", "single", "pair");
    for theta in [0.0, 0.001, 0.01, 0.03, 0.1, 1.0] {
        println!(
            "{theta:>8} {:>10.5} {:>10.5}",
            best(StrategyKind::VariableRate, theta)?,
            best(StrategyKind::ParallelPair, theta)?
        );
    }
    let t = crossover_theta(
        |t| best(StrategyKind::ParallelPair, t),
        |t| best(StrategyKind::VariableRate, t),
        1e-3,
        1.0,
    )?;
    match t {
        Some(t) => println!("two codewords win beyond theta = {t:.4}"),
        None => println!("no crossover in [0.001, 1]"),
    }
    Ok(())
}
