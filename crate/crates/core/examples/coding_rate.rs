//! Normal-approximation coding rate of one block against the fading power,
//! for a few target block error probabilities.

use effrate::channel::ChannelParams;
use effrate::fbl::{coding_rate, coding_rate_parallel, error_prob_fixed_rate};
use effrate::numerics::Probability;

fn main() -> effrate::Result<()> {
    let params = ChannelParams::rayleigh(1.0, 1000)?;
    let epsilons = [1e-5, 1e-3, 0.01, 0.1];
    print!("{:>8}{:>12}", "z", "capacity");
    for e in epsilons {
        print!("{:>12}", format!("eps={e}"));
    }
    println!("{:>14}", "2x parallel");
    for z in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0] {
        print!("{z:>8}{:>12.5}", (1.0 + z * params.snr).log2());
        for e in epsilons {
            print!(
                "{:>12.5}",
                coding_rate(z, &params, Probability::open(e)?)?.bits_per_channel_use()
            );
        }
        let pair = coding_rate_parallel(z, &params, Probability::open(0.01)?)?.bits_per_channel_use();
        println!("{:>14.5}", 2.0 * pair);
    }

    println!("\nfixed rate 1 bit/cu, block error vs z:");
    for z in [0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.2] {
        println!(
            "  z = {z:<5} eps = {:.3e}",
            error_prob_fixed_rate(z, &params, 1.0)?.value()
        );
    }
    Ok(())
}
