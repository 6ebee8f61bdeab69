//! Per-coherence-block finite-blocklength rates under the normal
//! approximation, with the complex block of `m` uses treated as a real
//! channel of blocklength `2m`.
//!
//! All rates are in bits per channel use. The `O(log m)/m` remainder is
//! dropped. Rates are evaluated as written and may be negative for deep
//! fades and small `eps`; [`RateFormula::clamp_nonnegative`] turns that off.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::numerics::{gaussian_q, gaussian_q_inv, Probability};

/// Normalized per-block rate, bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BlockRate(pub f64);

impl BlockRate {
    pub fn bits_per_channel_use(self) -> f64 {
        self.0
    }
}

/// What one coherence block delivers to the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceOutcome {
    /// Bits delivered in the block of `m` channel uses.
    pub bits_delivered: f64,
    pub success: bool,
}

impl ServiceOutcome {
    pub const LOST: ServiceOutcome = ServiceOutcome {
        bits_delivered: 0.0,
        success: false,
    };
}

/// `1 - 1/(1+gamma)^2`, computed without cancellation for small `gamma`.
pub(crate) fn dispersion(gamma: f64) -> f64 {
    let d = 1.0 + gamma;
    gamma * (2.0 + gamma) / (d * d)
}

/// The variable-rate formula at a fixed error probability, prepared once so
/// `Q^-1(eps)` is not recomputed per fading state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFormula {
    m: f64,
    q_inv: f64,
    /// 1 for one codeword of length `2m`, 1/2 for each of two codewords of length `m`.
    share: f64,
    clamp: bool,
}

impl RateFormula {
    pub fn single(blocklength_m: u64, eps: Probability) -> Result<Self> {
        Self::build(blocklength_m, eps, 1.0)
    }

    pub fn parallel(blocklength_m: u64, eps: Probability) -> Result<Self> {
        Self::build(blocklength_m, eps, 0.5)
    }

    fn build(blocklength_m: u64, eps: Probability, share: f64) -> Result<Self> {
        if blocklength_m == 0 {
            return Err(Error::domain("m", "blocklength must be at least 1"));
        }
        let q_inv =
            gaussian_q_inv(eps.value()).map_err(|_| Error::domain("eps", format!("{} must lie in (0, 1)", eps)))?;
        Ok(RateFormula {
            m: blocklength_m as f64,
            q_inv,
            share,
            clamp: false,
        })
    }

    /// Like [`RateFormula::single`]/[`RateFormula::parallel`] but maps `eps = 0`
    /// to the error-free capacity rate instead of rejecting it.
    pub(crate) fn with_share(blocklength_m: u64, eps: Probability, share: f64) -> Result<Self> {
        if eps.value() == 0.0 {
            let mut f = Self::ideal(blocklength_m);
            f.share = share;
            return Ok(f);
        }
        Self::build(blocklength_m, eps, share)
    }

    /// Error-free transmission at the instantaneous capacity `log2(1+gamma)`.
    pub fn ideal(blocklength_m: u64) -> Self {
        RateFormula {
            m: blocklength_m.max(1) as f64,
            q_inv: 0.0,
            share: 1.0,
            clamp: false,
        }
    }

    pub fn clamp_nonnegative(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    /// Rate at received SNR `gamma` (= snr * z, or mu * z under power control).
    pub fn at_gain(&self, gamma: f64) -> f64 {
        let capacity = self.share * gamma.ln_1p() * LOG2_E;
        let penalty = (self.share / self.m * dispersion(gamma)).sqrt() * self.q_inv * LOG2_E;
        let r = capacity - penalty;
        if self.clamp {
            r.max(0.0)
        } else {
            r
        }
    }
}

fn check_gain(z: f64) -> Result<()> {
    if z >= 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("z", format!("{z} must be a finite value >= 0")))
    }
}

/// `log2(1+snr z) - sqrt((1 - 1/(snr z + 1)^2)/m) Q^-1(eps) log2(e)`.
pub fn coding_rate(z: f64, params: &ChannelParams, eps: Probability) -> Result<BlockRate> {
    check_gain(z)?;
    let f = RateFormula::single(params.blocklength_m, eps)?;
    Ok(BlockRate(f.at_gain(params.snr * z)))
}

/// Per-codeword rate when the block carries two independent codewords of
/// length `m` on the in-phase and quadrature branches.
pub fn coding_rate_parallel(z: f64, params: &ChannelParams, eps: Probability) -> Result<BlockRate> {
    check_gain(z)?;
    let f = RateFormula::parallel(params.blocklength_m, eps)?;
    Ok(BlockRate(f.at_gain(params.snr * z)))
}

/// [`coding_rate`] with the average SNR replaced by the instantaneous power
/// allocation `mu`.
pub fn coding_rate_power_adapted(z: f64, mu: f64, params: &ChannelParams, eps: Probability) -> Result<BlockRate> {
    check_gain(z)?;
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::domain("mu", format!("{mu} must be >= 0")));
    }
    let f = RateFormula::single(params.blocklength_m, eps)?;
    Ok(BlockRate(f.at_gain(mu * z)))
}

/// Block error probability of a fixed-rate code at received SNR `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedRateErrors {
    m: f64,
    rate: f64,
}

impl FixedRateErrors {
    pub fn new(blocklength_m: u64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::domain("rate_fixed", format!("{rate} must be > 0")));
        }
        if blocklength_m == 0 {
            return Err(Error::domain("m", "blocklength must be at least 1"));
        }
        Ok(FixedRateErrors {
            m: blocklength_m as f64,
            rate,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Received SNR at which `log2(1+gamma)` equals the fixed rate; the error
    /// probability steps from ~1 to ~0 across it.
    pub fn threshold_gain(&self) -> f64 {
        self.rate.exp2() - 1.0
    }

    pub fn at_gain(&self, gamma: f64) -> f64 {
        let margin = gamma.ln_1p() * LOG2_E - self.rate;
        if margin == 0.0 {
            return 0.5;
        }
        let spread = (dispersion(gamma) / self.m).sqrt() * LOG2_E;
        if spread == 0.0 {
            return if margin > 0.0 { 0.0 } else { 1.0 };
        }
        gaussian_q(margin / spread)
    }
}

/// `Q((log2(1+snr z) - r_f) / (sqrt((1 - 1/(snr z+1)^2)/m) log2 e))`, extended
/// by continuity to `1` at `z = 0`.
pub fn error_prob_fixed_rate(z: f64, params: &ChannelParams, rate_fixed: f64) -> Result<Probability> {
    check_gain(z)?;
    let f = FixedRateErrors::new(params.blocklength_m, rate_fixed)?;
    Probability::new(f.at_gain(params.snr * z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FadingModel;

    fn params(snr: f64, m: u64) -> ChannelParams {
        ChannelParams::new(snr, m, FadingModel::default()).unwrap()
    }

    fn p(v: f64) -> Probability {
        Probability::open(v).unwrap()
    }

    // Q^-1(0.01) to 15 digits, from the inverse normal CDF tables.
    const Q_INV_001: f64 = 2.326_347_874_040_841;

    #[test]
    fn zero_gain_gives_zero_rate() {
        for e in [1e-6, 0.01, 0.5, 0.9] {
            assert_eq!(coding_rate(0.0, &params(1.0, 1000), p(e)).unwrap().0, 0.0);
            assert_eq!(coding_rate_parallel(0.0, &params(1.0, 1000), p(e)).unwrap().0, 0.0);
        }
    }

    #[test]
    fn half_error_probability_is_capacity() {
        assert_eq!(coding_rate(1.0, &params(1.0, 1000), p(0.5)).unwrap().0, 1.0);
        assert_eq!(coding_rate_parallel(1.0, &params(1.0, 1000), p(0.5)).unwrap().0, 0.5);
    }

    #[test]
    fn rate_at_reference_point() {
        let expected = 1.0 - (0.00075f64).sqrt() * Q_INV_001 * LOG2_E;
        let got = coding_rate(1.0, &params(1.0, 1000), p(0.01)).unwrap().0;
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.9081).abs() < 1e-4);
    }

    #[test]
    fn parallel_rate_at_reference_point() {
        let expected = 0.5 - (0.000375f64).sqrt() * Q_INV_001 * LOG2_E;
        let got = coding_rate_parallel(1.0, &params(1.0, 1000), p(0.01)).unwrap().0;
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.4350).abs() < 1e-4);
    }

    #[test]
    fn power_adapted_examples() {
        let pr = params(1.0, 1000);
        assert_eq!(coding_rate_power_adapted(2.0, 0.0, &pr, p(0.01)).unwrap().0, 0.0);
        let expected = 3f64.log2() - (0.001f64 * (1.0 - 1.0 / 9.0)).sqrt() * Q_INV_001 * LOG2_E;
        let got = coding_rate_power_adapted(1.0, 2.0, &pr, p(0.01)).unwrap().0;
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 1.4849).abs() < 1e-4);
        // mu = snr reproduces the fixed-power rate
        let pr = params(3.0, 500);
        assert_eq!(
            coding_rate_power_adapted(0.7, 3.0, &pr, p(0.02)).unwrap(),
            coding_rate(0.7, &pr, p(0.02)).unwrap()
        );
    }

    #[test]
    fn eps_domain_rejected() {
        assert!(RateFormula::single(10, Probability::new(1.0).unwrap()).is_err());
        assert!(RateFormula::single(10, Probability::new(0.0).unwrap()).is_err());
        assert!(coding_rate(-1.0, &params(1.0, 10), p(0.1)).is_err());
    }

    #[test]
    fn fixed_rate_error_examples() {
        let pr = params(1.0, 1000);
        // log2(1 + z) = 1 at z = 1
        assert_eq!(error_prob_fixed_rate(1.0, &pr, 1.0).unwrap().value(), 0.5);
        assert_eq!(error_prob_fixed_rate(0.0, &pr, 0.3).unwrap().value(), 1.0);
        let e = error_prob_fixed_rate(3.0, &pr, 1.0).unwrap().value();
        let arg = 1.0 / ((0.001f64 * (1.0 - 1.0 / 16.0)).sqrt() * LOG2_E);
        assert!((arg - 22.63).abs() < 0.01);
        assert!(e < 1e-100);
        assert!(error_prob_fixed_rate(1.0, &pr, 0.0).is_err());
    }

    #[test]
    fn clamp_option() {
        let f = RateFormula::single(100, p(1e-4)).unwrap();
        assert!(f.at_gain(1e-3) < 0.0);
        assert_eq!(f.clamp_nonnegative(true).at_gain(1e-3), 0.0);
    }

    #[test]
    fn large_blocklength_approaches_capacity() {
        // the penalty is sqrt(V/m) Q^-1(eps) log2(e); below 1e-6 at m = 1e12 needs Q^-1(eps) log2(e) < 1
        let pr = params(1.0, 1_000_000_000_000);
        for z in [0.1, 1.0, 5.0] {
            let r = coding_rate(z, &pr, p(0.3)).unwrap().0;
            assert!((r - (1.0 + z).log2()).abs() < 1e-6);
            let r = coding_rate(z, &pr, p(0.01)).unwrap().0;
            assert!((r - (1.0 + z).log2()).abs() < 4e-6);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn increasing_in_eps(z in 1e-3f64..20.0, e in 1e-6f64..0.95, d in 1e-4f64..0.04) {
                let pr = params(1.0, 1000);
                prop_assert!(coding_rate(z, &pr, p(e)).unwrap().0 < coding_rate(z, &pr, p(e + d)).unwrap().0);
            }

            #[test]
            fn increasing_in_m(z in 1e-3f64..20.0, e in 1e-6f64..0.49, m in 1u64..5000, dm in 1u64..5000) {
                let r1 = coding_rate(z, &params(1.0, m), p(e)).unwrap().0;
                let r2 = coding_rate(z, &params(1.0, m + dm), p(e)).unwrap().0;
                prop_assert!(r1 < r2);
            }

            #[test]
            fn rate_error_duality(z in 1e-3f64..30.0, e in 1e-6f64..0.99, snr in 0.1f64..10.0, m in 10u64..10000) {
                let pr = params(snr, m);
                let r = coding_rate(z, &pr, p(e)).unwrap().0;
                prop_assume!(r > 0.0);
                let back = error_prob_fixed_rate(z, &pr, r).unwrap().value();
                prop_assert!((back - e).abs() < 1e-9, "{back} vs {e}");
            }

            #[test]
            fn single_is_twice_parallel_at_half(z in 0.0f64..50.0, snr in 0.01f64..100.0) {
                let pr = params(snr, 1000);
                let single = coding_rate(z, &pr, p(0.5)).unwrap().0;
                let par = coding_rate_parallel(z, &pr, p(0.5)).unwrap().0;
                prop_assert_eq!(single, 2.0 * par);
            }
        }
    }
}
