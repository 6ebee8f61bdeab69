//! Expectations over Rayleigh fading with the adaptive rule and with
//! Gauss-Laguerre, on an integrand with a square-root edge and one with a step.

use effrate::channel::{fading_expectation, fading_expectation_split, FadingModel};
use effrate::numerics::QuadratureSpec;

fn main() -> effrate::Result<()> {
    let fading = FadingModel::default();
    let adaptive = QuadratureSpec::default();
    let rules = [
        ("adaptive", adaptive),
        ("laguerre-32", QuadratureSpec::gauss_laguerre(32)),
        ("laguerre-200", QuadratureSpec::gauss_laguerre(200)),
    ];

    // E{log2(1+z)} = e E1(1) / ln 2
    let exact = 0.596_347_362_323_194_1 / std::f64::consts::LN_2;
    for (name, spec) in rules {
        let v = fading_expectation(&fading, |z| (1.0 + z).log2(), &spec)?;
        let s = fading_expectation(&fading, f64::sqrt, &spec)?;
        let step = fading_expectation_split(&fading, |z| (z > 1.0) as u8 as f64, &[1.0], &spec)?;
        println!(
            "{name:>13}: log2(1+z) err {:.1e}  sqrt(z) err {:.1e}  P(z>1) err {:.1e}",
            (v - exact).abs(),
            (s - std::f64::consts::PI.sqrt() / 2.0).abs(),
            (step - (-1f64).exp()).abs()
        );
    }
    Ok(())
}
