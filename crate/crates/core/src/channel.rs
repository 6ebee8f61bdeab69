//! Block-fading channel description: the distribution of the power gain
//! `z = |h|^2`, and the parameter bundles shared by every formula.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, QuadratureSpec};

/// Distribution of the per-block fading power `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingModel {
    /// `z` exponential with the given mean.
    Rayleigh { mean_power: f64 },
    /// `z` fixed; reduces every formula to its AWGN form.
    Deterministic { z: f64 },
}

impl Default for FadingModel {
    fn default() -> Self {
        FadingModel::Rayleigh { mean_power: 1.0 }
    }
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingModel::Rayleigh { mean_power } if !(mean_power > 0.0 && mean_power.is_finite()) => {
                Err(Error::domain("mean_power", format!("{mean_power} must be > 0")))
            }
            FadingModel::Deterministic { z } if !(z >= 0.0 && z.is_finite()) => {
                Err(Error::domain("z", format!("{z} must be >= 0")))
            }
            _ => Ok(()),
        }
    }

    /// `P(z < x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            FadingModel::Rayleigh { mean_power } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean_power).exp_m1()
                }
            }
            FadingModel::Deterministic { z } => {
                if z < x {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Smallest `x` with `P(z <= x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            FadingModel::Rayleigh { mean_power } => -mean_power * (-p).ln_1p(),
            FadingModel::Deterministic { z } => z,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FadingModel::Rayleigh { mean_power } => mean_power,
            FadingModel::Deterministic { z } => z,
        }
    }
}

/// Everything needed to evaluate per-block rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Average transmit SNR `P/N0`, linear.
    pub snr: f64,
    /// Channel uses per coherence block.
    pub blocklength_m: u64,
    pub fading: FadingModel,
}

impl ChannelParams {
    pub fn new(snr: f64, blocklength_m: u64, fading: FadingModel) -> Result<Self> {
        let params = ChannelParams {
            snr,
            blocklength_m,
            fading,
        };
        params.validate()?;
        Ok(params)
    }

    /// Unit-mean Rayleigh fading.
    pub fn rayleigh(snr: f64, blocklength_m: u64) -> Result<Self> {
        Self::new(snr, blocklength_m, FadingModel::default())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return Err(Error::domain("snr", format!("{} must be > 0", self.snr)));
        }
        if self.blocklength_m == 0 {
            return Err(Error::domain("m", "blocklength must be at least 1"));
        }
        self.fading.validate()
    }

    pub fn m(&self) -> f64 {
        self.blocklength_m as f64
    }
}

/// QoS exponent `theta` in 1/bit; zero means no buffer constraint.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct QosSpec {
    pub theta: f64,
}

impl QosSpec {
    pub fn new(theta: f64) -> Result<Self> {
        if theta >= 0.0 && theta.is_finite() {
            Ok(QosSpec { theta })
        } else {
            Err(Error::domain("theta", format!("{theta} must be >= 0")))
        }
    }

    pub fn unconstrained() -> Self {
        QosSpec { theta: 0.0 }
    }
}

pub fn snr_from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn snr_to_db(snr: f64) -> f64 {
    10.0 * snr.log10()
}

/// One i.i.d. draw of the fading power. Exponential draws use the inverse CDF
/// of a uniform on `[0, 1)`.
pub fn sample_gain<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> f64 {
    match *model {
        FadingModel::Rayleigh { mean_power } => {
            let u: f64 = rng.gen();
            -mean_power * (-u).ln_1p()
        }
        FadingModel::Deterministic { z } => z,
    }
}

/// `E{f(z)}` under the fading model.
pub fn fading_expectation<F>(model: &FadingModel, f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    fading_expectation_split(model, f, &[], spec)
}

/// As [`fading_expectation`], with known discontinuities of `f` at `breakpoints`.
pub fn fading_expectation_split<F>(model: &FadingModel, f: F, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    match *model {
        FadingModel::Rayleigh { mean_power } => {
            let scaled: Vec<f64> = breakpoints.iter().map(|b| b / mean_power).collect();
            numerics::expect_over_fading_split(|y| f(mean_power * y), &scaled, spec)
        }
        FadingModel::Deterministic { z } => finite(f(z), z),
    }
}

/// `E{f(z) 1[z >= lower]}` under the fading model.
pub fn fading_expectation_above<F>(model: &FadingModel, f: F, lower: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    match *model {
        FadingModel::Rayleigh { mean_power } => {
            numerics::expect_over_fading_above(|y| f(mean_power * y), lower / mean_power, spec)
        }
        FadingModel::Deterministic { z } => {
            if z >= lower {
                finite(f(z), z)
            } else {
                Ok(0.0)
            }
        }
    }
}

fn finite(v: f64, z: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { at: z, value: v })
    }
}
