//! Fixed-rate against variable-rate transmission: each optimized over its
//! own parameter, and the QoS exponent beyond which fixed rate wins.

use effrate::channel::{ChannelParams, QosSpec};
use effrate::effective::{outage_probability, EvalOptions, StrategyKind};
use effrate::optimize::{crossover_theta, optimal_eps, optimal_fixed_rate};

fn main() -> effrate::Result<()> {
    let params = ChannelParams::rayleigh(1.0, 1000)?;
    let opts = EvalOptions::default();
    let fixed = |t: f64| optimal_fixed_rate(&params, &QosSpec::new(t)?, &opts).map(|r| r.value);
    let variable = |t: f64| optimal_eps(StrategyKind::VariableRate, &params, &QosSpec::new(t)?, &opts).map(|r| r.value);

    println!("{:>8} {:>10} {:>10} {:>10}", "theta", "r_f*", "fixed", "variable");
    for theta in [0.0, 0.01, 0.05, 0.1, 0.2, 0.5] {
        let f = optimal_fixed_rate(&params, &QosSpec::new(theta)?, &opts)?;
        println!(
            "{theta:>8} {:>10.4} {:>10.5} {:>10.5}",
            f.arg,
            f.value,
            variable(theta)?
        );
    }
    match crossover_theta(fixed, variable, 0.05, 0.3)? {
        Some(t) => println!("fixed rate overtakes variable rate at theta = {t:.4}"),
        None => println!("no crossover in [0.05, 0.3]"),
    }

    let r = 1.0;
    println!("\noutage at r_f = {r}: {:.5}", outage_probability(r, &params)?);
    Ok(())
}
