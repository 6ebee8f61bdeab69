use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain("probability", format!("{value} is outside [0, 1]")))
        }
    }

    /// Accepts only values strictly inside `(0, 1)`, as required wherever
    /// `Q^-1` of the value is taken.
    pub fn open(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Probability(value))
        } else {
            Err(Error::domain("eps", format!("{value} must lie in (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - p`.
    pub fn complement(self) -> f64 {
        1.0 - self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
///
/// Evaluated as `erfc(x/sqrt 2)/2`, which keeps full relative precision in the
/// upper tail and degrades gracefully to subnormals and zero past `x ~ 38`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

// Rational approximation of the standard normal quantile (Acklam), relative
// error about 1e-9; polished by Newton steps below.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn normal_quantile_initial(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse of [`gaussian_q`] on `(0, 1)`.
pub fn gaussian_q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("p", format!("Q^-1 needs p in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Q^-1(p) = -Phi^-1(p)
    let mut x = -normal_quantile_initial(p);
    for _ in 0..4 {
        // Newton on Q(x) - p with dQ^-1/dp = -sqrt(2 pi) exp(x^2 / 2)
        let step = (gaussian_q(x) - p) * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// First and second derivatives of `Q^-1` at `p`:
/// `-sqrt(2 pi) exp(x^2/2)` and `2 pi x exp(x^2)` with `x = Q^-1(p)`.
pub fn q_inv_derivatives(p: f64) -> Result<(f64, f64)> {
    let x = gaussian_q_inv(p)?;
    let first = -(2.0 * PI).sqrt() * (0.5 * x * x).exp();
    let second = 2.0 * PI * x * (x * x).exp();
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: `erfc` by its Taylor series (small argument) or
    /// Lentz continued fraction (large argument).
    fn erfc_oracle(x: f64) -> f64 {
        if x < 2.5 {
            // erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
            let mut term = x;
            let mut sum = x;
            let mut n = 0.0;
            while term.abs() > 1e-18 {
                n += 1.0;
                term *= -x * x / n;
                sum += term / (2.0 * n + 1.0);
            }
            1.0 - 2.0 / PI.sqrt() * sum
        } else {
            // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
            let mut f = 0.0;
            for k in (1..200).rev() {
                f = (k as f64 / 2.0) / (x + f);
            }
            (-x * x).exp() / PI.sqrt() / (x + f)
        }
    }

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(gaussian_q(0.0), 0.5);
    }

    #[test]
    fn q_matches_series_oracle() {
        let expected = 0.5 * erfc_oracle(2.0 / 2f64.sqrt());
        assert!((gaussian_q(2.0) - expected).abs() < 1e-14);
        assert!((expected - 0.02275).abs() < 1e-5);
        for &x in &[-3.0, -1.0, 0.3, 1.7, 3.5, 5.0, 8.0] {
            let e = 0.5 * erfc_oracle(x / 2f64.sqrt());
            assert!((gaussian_q(x) - e).abs() <= 1e-12, "x = {x}");
        }
    }

    #[test]
    fn q_far_tail_underflows_quietly() {
        let v = gaussian_q(40.0);
        assert!((0.0..1e-300).contains(&v));
        assert_eq!(gaussian_q(-40.0), 1.0);
    }

    #[test]
    fn q_inv_examples() {
        assert_eq!(gaussian_q_inv(0.5).unwrap(), 0.0);
        let x = gaussian_q_inv(gaussian_q(2.0)).unwrap();
        assert!((x - 2.0).abs() < 1e-9);
        let x = gaussian_q_inv(0.0127).unwrap();
        assert!((gaussian_q(x) - 0.0127).abs() <= 1e-10);
    }

    #[test]
    fn q_inv_rejects_closed_endpoints() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(gaussian_q_inv(p), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn derivatives_at_half() {
        let (d1, d2) = q_inv_derivatives(0.5).unwrap();
        assert!((d1 + (2.0 * PI).sqrt()).abs() < 1e-15);
        assert_eq!(d2, 0.0);
    }

    #[test]
    fn first_derivative_matches_central_difference() {
        let p = 0.1;
        let h = 1e-6;
        let fd = (gaussian_q_inv(p + h).unwrap() - gaussian_q_inv(p - h).unwrap()) / (2.0 * h);
        let (d1, _) = q_inv_derivatives(p).unwrap();
        assert!(((d1 - fd) / d1).abs() < 1e-5);
    }

    #[test]
    fn second_derivative_matches_difference_of_first() {
        let p = 0.03;
        let h = 1e-6;
        let fd = (q_inv_derivatives(p + h).unwrap().0 - q_inv_derivatives(p - h).unwrap().0) / (2.0 * h);
        let (_, d2) = q_inv_derivatives(p).unwrap();
        assert!(((d2 - fd) / d2).abs() < 1e-5);
    }

    #[test]
    fn probability_domains() {
        assert!(Probability::new(1.0).is_ok());
        assert!(Probability::open(1.0).is_err());
        assert!(Probability::open(0.0).is_err());
        assert!(Probability::new(-1e-9).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn q_strictly_decreasing(a in -8.0f64..8.0, d in 1e-3f64..2.0) {
                prop_assert!(gaussian_q(a) > gaussian_q(a + d));
            }

            #[test]
            fn q_inv_round_trip(lp in -9.0f64..0.0, upper in any::<bool>()) {
                let p = if upper { 1.0 - 10f64.powf(lp) } else { 10f64.powf(lp) };
                prop_assume!(p > 1e-9 && p < 1.0 - 1e-9);
                let x = gaussian_q_inv(p).unwrap();
                prop_assert!((gaussian_q(x) - p).abs() <= 1e-10);
            }

            #[test]
            fn q_inv_decreasing(p in 1e-6f64..0.99, d in 1e-4f64..0.009) {
                prop_assert!(gaussian_q_inv(p).unwrap() > gaussian_q_inv(p + d).unwrap());
            }

            #[test]
            fn first_derivative_negative(p in 1e-9f64..(1.0 - 1e-9)) {
                prop_assert!(q_inv_derivatives(p).unwrap().0 < 0.0);
            }
        }
    }
}
