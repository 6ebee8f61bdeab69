//! Strategy-level throughput: the effective rate
//! `R_E(theta) = -ln E{e^{-theta R}} / (m theta)` of the per-block service
//! process `R`, for variable-rate, fixed-rate, power-adapted and
//! two-codeword transmission.
//!
//! Expectations are evaluated as `E{1 - kernel}` through `expm1`, which keeps
//! precision when `theta m R` is small; the direct kernel mean is used once it
//! drops below one half.

use std::cell::Cell;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{
    fading_expectation, fading_expectation_above, fading_expectation_split, ChannelParams, FadingModel, QosSpec,
};
use crate::error::{Error, Result};
use crate::fbl::{FixedRateErrors, RateFormula};
use crate::numerics::{bisect_root, Probability, QuadratureSpec};

/// Transmission strategy and its free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum StrategyModel {
    /// Rate follows the channel, block error probability fixed at `eps`.
    VariableRate { eps: Probability },
    /// Rate fixed at `rate_fixed` bits per channel use; the error probability
    /// follows the channel.
    FixedRate { rate_fixed: f64 },
    /// Variable rate with the QoS-aware power policy of [`solve_alpha`].
    PowerAdapted { eps: Probability },
    /// Two independent codewords of length `m` per block, each with error
    /// probability `eps`.
    ParallelPair { eps: Probability },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    VariableRate,
    FixedRate,
    PowerAdapted,
    ParallelPair,
}

impl StrategyModel {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyModel::VariableRate { .. } => StrategyKind::VariableRate,
            StrategyModel::FixedRate { .. } => StrategyKind::FixedRate,
            StrategyModel::PowerAdapted { .. } => StrategyKind::PowerAdapted,
            StrategyModel::ParallelPair { .. } => StrategyKind::ParallelPair,
        }
    }

    /// The free parameter: `eps`, or the fixed rate.
    pub fn parameter(&self) -> f64 {
        match *self {
            StrategyModel::VariableRate { eps }
            | StrategyModel::PowerAdapted { eps }
            | StrategyModel::ParallelPair { eps } => eps.value(),
            StrategyModel::FixedRate { rate_fixed } => rate_fixed,
        }
    }

    /// Same strategy kind with its free parameter replaced.
    pub fn with_parameter(kind: StrategyKind, value: f64) -> Result<Self> {
        Ok(match kind {
            StrategyKind::VariableRate => StrategyModel::VariableRate {
                eps: Probability::new(value)?,
            },
            StrategyKind::PowerAdapted => StrategyModel::PowerAdapted {
                eps: Probability::new(value)?,
            },
            StrategyKind::ParallelPair => StrategyModel::ParallelPair {
                eps: Probability::new(value)?,
            },
            StrategyKind::FixedRate => {
                let s = StrategyModel::FixedRate { rate_fixed: value };
                s.validate()?;
                s
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategyModel::FixedRate { rate_fixed } if !(rate_fixed > 0.0 && rate_fixed.is_finite()) => {
                Err(Error::domain("rate_fixed", format!("{rate_fixed} must be > 0")))
            }
            _ => Ok(()),
        }
    }
}

/// Evaluation knobs shared by every throughput computation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub quadrature: QuadratureSpec,
    /// Replace negative per-block rates by zero.
    pub clamp_nonnegative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Integrand evaluations spent by quadrature.
    pub quadrature_evaluations: usize,
    /// Iterations of the power-policy threshold solver (0 if not used).
    pub solver_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRateResult {
    /// Bits per channel use. Floored at zero: with a tiny `eps` the coding
    /// rate goes negative in deep fades and can drag the raw value below zero.
    pub rate: f64,
    pub strategy: StrategyModel,
    /// 1/bit.
    pub theta: f64,
    pub diagnostics: Diagnostics,
}

/// The QoS-aware power policy `mu*(z)`: zero below the cutoff `alpha`,
/// `alpha^{-1/(beta+1)} z^{-beta/(beta+1)} - 1/z` above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPolicy {
    pub alpha: f64,
    /// `theta m / ln 2`.
    pub beta: f64,
}

impl PowerPolicy {
    pub fn beta_for(qos: &QosSpec, blocklength_m: u64) -> f64 {
        qos.theta * blocklength_m as f64 / LN_2
    }

    /// Received SNR `mu*(z) z = (z/alpha)^{1/(beta+1)} - 1`.
    pub fn received_snr(&self, z: f64) -> f64 {
        if z < self.alpha {
            0.0
        } else {
            ((z / self.alpha).ln() / (self.beta + 1.0)).exp_m1()
        }
    }

    pub fn mu(&self, z: f64) -> f64 {
        if z < self.alpha || z == 0.0 {
            0.0
        } else {
            self.received_snr(z) / z
        }
    }
}

/// `mu*(z)` of the power policy; zero below the cutoff.
pub fn power_policy_mu(z: f64, policy: &PowerPolicy) -> f64 {
    if z < policy.alpha {
        return 0.0;
    }
    let s = 1.0 / (policy.beta + 1.0);
    1.0 / (policy.alpha.powf(s) * z.powf(policy.beta * s)) - 1.0 / z
}

/// `E{mu*(z)}` under the fading model.
pub fn mean_power(policy: &PowerPolicy, fading: &FadingModel, spec: &QuadratureSpec) -> Result<f64> {
    fading_expectation_above(fading, |z| policy.mu(z), policy.alpha, spec)
}

/// Chooses the cutoff `alpha` so that the policy meets the average SNR
/// constraint with equality.
pub fn solve_alpha(params: &ChannelParams, qos: &QosSpec, opts: &EvalOptions) -> Result<PowerPolicy> {
    solve_alpha_counted(params, qos, opts).map(|(p, _)| p)
}

fn solve_alpha_counted(params: &ChannelParams, qos: &QosSpec, opts: &EvalOptions) -> Result<(PowerPolicy, usize)> {
    params.validate()?;
    let beta = PowerPolicy::beta_for(qos, params.blocklength_m);
    let alpha_hi = match params.fading {
        FadingModel::Rayleigh { mean_power } => 70.0 * mean_power,
        FadingModel::Deterministic { z } if z > 0.0 => z,
        FadingModel::Deterministic { .. } => {
            return Err(Error::Solver(
                "no power policy can deliver SNR through a zero channel gain".into(),
            ))
        }
    };
    let failure = Cell::new(None);
    let excess = |log_alpha: f64| {
        let policy = PowerPolicy {
            alpha: log_alpha.exp(),
            beta,
        };
        match mean_power(&policy, &params.fading, &opts.quadrature) {
            Ok(v) => v - params.snr,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        }
    };
    let root = bisect_root(excess, 1e-300f64.ln(), alpha_hi.ln(), 1e-13);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let root = root.map_err(|e| {
        Error::Solver(format!(
            "power-policy cutoff not bracketed (snr {}, beta {beta}): {e}",
            params.snr
        ))
    })?;
    let policy = PowerPolicy {
        alpha: root.root.exp(),
        beta,
    };
    let residual = excess(root.root);
    if !(residual.abs() <= 1e-8 * params.snr) {
        return Err(Error::Solver(format!(
            "power-policy cutoff alpha = {:e} misses the SNR constraint by {residual:e} after {} iterations",
            policy.alpha, root.iterations
        )));
    }
    Ok((policy, root.iterations))
}

struct Counter(Cell<usize>);

impl Counter {
    fn new() -> Self {
        Counter(Cell::new(0))
    }

    fn tick(&self) {
        self.0.set(self.0.get() + 1);
    }

    fn get(&self) -> usize {
        self.0.get()
    }
}

/// `-ln(1 - loss) / (m theta)`, switching to `-ln(psi)` once `psi` is small.
fn rate_from_loss<L, P>(loss: L, psi: P, m: f64, theta: f64) -> Result<f64>
where
    L: FnOnce() -> Result<f64>,
    P: FnOnce() -> Result<f64>,
{
    let d = loss()?;
    let log_psi = if d > 0.5 { psi()?.ln() } else { (-d).ln_1p() };
    Ok(-log_psi / (m * theta))
}

fn single_formula(params: &ChannelParams, eps: Probability, opts: &EvalOptions) -> Result<RateFormula> {
    Ok(RateFormula::with_share(params.blocklength_m, eps, 1.0)?.clamp_nonnegative(opts.clamp_nonnegative))
}

fn parallel_formula(params: &ChannelParams, eps: Probability, opts: &EvalOptions) -> Result<RateFormula> {
    Ok(RateFormula::with_share(params.blocklength_m, eps, 0.5)?.clamp_nonnegative(opts.clamp_nonnegative))
}

fn require_positive_theta(qos: &QosSpec) -> Result<()> {
    if qos.theta > 0.0 && qos.theta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("theta", format!("{} must be > 0 here", qos.theta)))
    }
}

/// `Psi(eps) = E{eps + (1-eps) e^{-theta m rbar}}`, the quantity whose
/// minimizer over `eps` maximizes the variable-rate effective rate.
pub fn psi(eps: Probability, params: &ChannelParams, qos: &QosSpec, opts: &EvalOptions) -> Result<f64> {
    require_positive_theta(qos)?;
    params.validate()?;
    let e = eps.value();
    if e == 1.0 {
        return Ok(1.0);
    }
    let f = single_formula(params, eps, opts)?;
    let tm = qos.theta * params.m();
    fading_expectation(
        &params.fading,
        |z| e + (1.0 - e) * (-tm * f.at_gain(params.snr * z)).exp(),
        &opts.quadrature,
    )
}

/// `Psi_p(eps) = E{(eps + (1-eps) e^{-theta m rbar_p})^2}` for the two-codeword
/// scheme.
pub fn psi_parallel(eps: Probability, params: &ChannelParams, qos: &QosSpec, opts: &EvalOptions) -> Result<f64> {
    require_positive_theta(qos)?;
    params.validate()?;
    let e = eps.value();
    if e == 1.0 {
        return Ok(1.0);
    }
    let f = parallel_formula(params, eps, opts)?;
    let tm = qos.theta * params.m();
    fading_expectation(
        &params.fading,
        |z| {
            let k = e + (1.0 - e) * (-tm * f.at_gain(params.snr * z)).exp();
            k * k
        },
        &opts.quadrature,
    )
}

/// Average block error probability `E{eps(z)}` of fixed-rate transmission.
pub fn mean_fixed_rate_error(rate_fixed: f64, params: &ChannelParams, opts: &EvalOptions) -> Result<f64> {
    mean_fixed_rate_error_counted(rate_fixed, params, opts, &Counter::new())
}

fn mean_fixed_rate_error_counted(
    rate_fixed: f64,
    params: &ChannelParams,
    opts: &EvalOptions,
    counter: &Counter,
) -> Result<f64> {
    params.validate()?;
    let errors = FixedRateErrors::new(params.blocklength_m, rate_fixed)?;
    let z_threshold = errors.threshold_gain() / params.snr;
    fading_expectation_split(
        &params.fading,
        |z| {
            counter.tick();
            errors.at_gain(params.snr * z)
        },
        &[z_threshold],
        &opts.quadrature,
    )
}

/// Outage probability `P(log2(1 + snr z) < r_f)`.
pub fn outage_probability(rate_fixed: f64, params: &ChannelParams) -> Result<f64> {
    params.validate()?;
    if !(rate_fixed > 0.0 && rate_fixed.is_finite()) {
        return Err(Error::domain("rate_fixed", format!("{rate_fixed} must be > 0")));
    }
    Ok(params.fading.cdf(rate_fixed.exp_m1_2() / params.snr))
}

trait Exp2M1 {
    fn exp_m1_2(self) -> f64;
}

impl Exp2M1 for f64 {
    /// `2^x - 1` without cancellation for small `x`.
    fn exp_m1_2(self) -> f64 {
        (self * LN_2).exp_m1()
    }
}

/// Effective rate with the error-free capacity rate `log2(1 + snr z)` as the
/// service; the upper reference curve for every strategy.
pub fn ideal_effective_rate(params: &ChannelParams, qos: &QosSpec, opts: &EvalOptions) -> Result<f64> {
    params.validate()?;
    let f = RateFormula::ideal(params.blocklength_m);
    let capacity = |z: f64| f.at_gain(params.snr * z);
    if qos.theta == 0.0 {
        return fading_expectation(&params.fading, capacity, &opts.quadrature);
    }
    let tm = qos.theta * params.m();
    rate_from_loss(
        || fading_expectation(&params.fading, |z| -(-tm * capacity(z)).exp_m1(), &opts.quadrature),
        || fading_expectation(&params.fading, |z| (-tm * capacity(z)).exp(), &opts.quadrature),
        params.m(),
        qos.theta,
    )
}

/// Effective rate in bits per channel use. `theta = 0` is dispatched to
/// [`effective_rate_zero_theta`].
pub fn effective_rate(
    strategy: &StrategyModel,
    params: &ChannelParams,
    qos: &QosSpec,
    opts: &EvalOptions,
) -> Result<EffectiveRateResult> {
    strategy.validate()?;
    params.validate()?;
    if !(qos.theta >= 0.0 && qos.theta.is_finite()) {
        return Err(Error::domain("theta", format!("{} must be >= 0", qos.theta)));
    }
    match *strategy {
        StrategyModel::PowerAdapted { eps } => {
            let (policy, iterations) = solve_alpha_counted(params, qos, opts)?;
            let mut result = effective_rate_power_adapted(eps, &policy, params, qos, opts)?;
            result.diagnostics.solver_iterations = iterations;
            Ok(result)
        }
        _ if qos.theta == 0.0 => effective_rate_zero_theta(strategy, params, opts),
        _ => {
            let counter = Counter::new();
            let rate = loss_rate(strategy, params, qos, opts, &counter)?;
            Ok(EffectiveRateResult {
                rate: rate.max(0.0),
                strategy: *strategy,
                theta: qos.theta,
                diagnostics: Diagnostics {
                    quadrature_evaluations: counter.get(),
                    solver_iterations: 0,
                },
            })
        }
    }
}

fn loss_rate(
    strategy: &StrategyModel,
    params: &ChannelParams,
    qos: &QosSpec,
    opts: &EvalOptions,
    counter: &Counter,
) -> Result<f64> {
    let m = params.m();
    let tm = qos.theta * m;
    let fading = &params.fading;
    let spec = &opts.quadrature;
    match *strategy {
        StrategyModel::VariableRate { eps } => {
            let e = eps.value();
            if e == 1.0 {
                return Ok(0.0);
            }
            let f = single_formula(params, eps, opts)?;
            let x = |z: f64| {
                counter.tick();
                tm * f.at_gain(params.snr * z)
            };
            rate_from_loss(
                || fading_expectation(fading, |z| -(1.0 - e) * (-x(z)).exp_m1(), spec),
                || fading_expectation(fading, |z| e + (1.0 - e) * (-x(z)).exp(), spec),
                m,
                qos.theta,
            )
        }
        StrategyModel::ParallelPair { eps } => {
            let e = eps.value();
            if e == 1.0 {
                return Ok(0.0);
            }
            let f = parallel_formula(params, eps, opts)?;
            let x = |z: f64| {
                counter.tick();
                tm * f.at_gain(params.snr * z)
            };
            rate_from_loss(
                || {
                    fading_expectation(
                        fading,
                        |z| {
                            // 1 - (1 - a)^2 with a = (1-eps)(1 - e^{-x})
                            let a = -(1.0 - e) * (-x(z)).exp_m1();
                            a * (2.0 - a)
                        },
                        spec,
                    )
                },
                || {
                    fading_expectation(
                        fading,
                        |z| {
                            let k = e + (1.0 - e) * (-x(z)).exp();
                            k * k
                        },
                        spec,
                    )
                },
                m,
                qos.theta,
            )
        }
        StrategyModel::FixedRate { rate_fixed } => {
            let mean_error = mean_fixed_rate_error_counted(rate_fixed, params, opts, counter)?;
            let x = tm * rate_fixed;
            rate_from_loss(
                || Ok(-(1.0 - mean_error) * (-x).exp_m1()),
                || Ok(mean_error + (1.0 - mean_error) * (-x).exp()),
                m,
                qos.theta,
            )
        }
        StrategyModel::PowerAdapted { .. } => unreachable!("dispatched by effective_rate"),
    }
}

/// Effective rate without a buffer constraint, i.e. the mean delivered rate:
/// `(1-eps) E{rbar}`, `(1 - E{eps(z)}) r_f`, `(1-eps) E{2 rbar_p}`, or
/// `(1-eps) E{rbar}` under water-filling power control.
pub fn effective_rate_zero_theta(
    strategy: &StrategyModel,
    params: &ChannelParams,
    opts: &EvalOptions,
) -> Result<EffectiveRateResult> {
    strategy.validate()?;
    params.validate()?;
    let qos = QosSpec::unconstrained();
    if let StrategyModel::PowerAdapted { .. } = strategy {
        return effective_rate(strategy, params, &qos, opts);
    }
    let counter = Counter::new();
    let fading = &params.fading;
    let spec = &opts.quadrature;
    let rate = match *strategy {
        StrategyModel::VariableRate { eps } | StrategyModel::ParallelPair { eps } => {
            let e = eps.value();
            if e == 1.0 {
                0.0
            } else {
                let (f, copies) = match strategy {
                    StrategyModel::VariableRate { .. } => (single_formula(params, eps, opts)?, 1.0),
                    _ => (parallel_formula(params, eps, opts)?, 2.0),
                };
                let mean = fading_expectation(
                    fading,
                    |z| {
                        counter.tick();
                        f.at_gain(params.snr * z)
                    },
                    spec,
                )?;
                (1.0 - e) * copies * mean
            }
        }
        StrategyModel::FixedRate { rate_fixed } => {
            let mean_error = mean_fixed_rate_error_counted(rate_fixed, params, opts, &counter)?;
            (1.0 - mean_error) * rate_fixed
        }
        StrategyModel::PowerAdapted { .. } => unreachable!(),
    };
    Ok(EffectiveRateResult {
        rate: rate.max(0.0),
        strategy: *strategy,
        theta: 0.0,
        diagnostics: Diagnostics {
            quadrature_evaluations: counter.get(),
            solver_iterations: 0,
        },
    })
}

/// Power-adapted effective rate for an already solved policy. Blocks below
/// the cutoff carry no power and no data.
pub fn effective_rate_power_adapted(
    eps: Probability,
    policy: &PowerPolicy,
    params: &ChannelParams,
    qos: &QosSpec,
    opts: &EvalOptions,
) -> Result<EffectiveRateResult> {
    params.validate()?;
    let strategy = StrategyModel::PowerAdapted { eps };
    let counter = Counter::new();
    let e = eps.value();
    let result = |rate: f64| EffectiveRateResult {
        rate: rate.max(0.0),
        strategy,
        theta: qos.theta,
        diagnostics: Diagnostics {
            quadrature_evaluations: counter.get(),
            solver_iterations: 0,
        },
    };
    if e == 1.0 {
        return Ok(result(0.0));
    }
    let f = single_formula(params, eps, opts)?;
    let rate_at = |z: f64| {
        counter.tick();
        f.at_gain(policy.received_snr(z))
    };
    let fading = &params.fading;
    let spec = &opts.quadrature;
    let rate = if qos.theta == 0.0 {
        (1.0 - e) * fading_expectation_above(fading, rate_at, policy.alpha, spec)?
    } else {
        let tm = qos.theta * params.m();
        rate_from_loss(
            || fading_expectation_above(fading, |z| -(1.0 - e) * (-tm * rate_at(z)).exp_m1(), policy.alpha, spec),
            || {
                let above =
                    fading_expectation_above(fading, |z| e + (1.0 - e) * (-tm * rate_at(z)).exp(), policy.alpha, spec)?;
                Ok(fading.cdf(policy.alpha) + above)
            },
            params.m(),
            qos.theta,
        )?
    };
    Ok(result(rate))
}
