//! Optimal block error probability per strategy, optimal fixed rate, curve
//! crossings, and grid sweeps over one parameter.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{snr_from_db, ChannelParams, QosSpec};
use crate::effective::{
    effective_rate, effective_rate_power_adapted, psi, psi_parallel, solve_alpha, EffectiveRateResult, EvalOptions,
    StrategyKind, StrategyModel,
};
use crate::error::{Error, Result};
use crate::numerics::{golden_minimize, Probability};

/// Search interval for `eps`; `Q^{-1}` is unbounded at 0 and 1.
pub const EPS_RANGE: (f64, f64) = (1e-6, 1.0 - 1e-6);
const EPS_TOL: f64 = 1e-8;
const RATE_TOL: f64 = 1e-7;
const RATE_GRID: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// `eps*` or `r_f*`.
    pub arg: f64,
    /// Effective rate at `arg`, bits per channel use.
    pub value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Runs a fallible objective inside an infallible search, keeping the first
/// error.
struct Objective<F> {
    f: F,
    failure: Cell<Option<Error>>,
}

impl<F: Fn(f64) -> Result<f64>> Objective<F> {
    fn new(f: F) -> Self {
        Objective {
            f,
            failure: Cell::new(None),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        match (self.f)(x) {
            Ok(v) => v,
            Err(e) => {
                if let Some(first) = self.failure.take() {
                    self.failure.set(Some(first));
                } else {
                    self.failure.set(Some(e));
                }
                f64::NAN
            }
        }
    }

    fn check<T>(&self, r: Result<T>) -> Result<T> {
        match self.failure.take() {
            Some(e) => Err(e),
            None => r,
        }
    }
}

/// The `eps` maximizing the effective rate of a variable-rate strategy.
///
/// For `theta > 0` the convex `Psi` (or its two-codeword analogue) is
/// minimized; at `theta = 0` the concave mean rate is maximized directly.
pub fn optimal_eps(
    kind: StrategyKind,
    params: &ChannelParams,
    qos: &QosSpec,
    opts: &EvalOptions,
) -> Result<OptimizationResult> {
    params.validate()?;
    let eps = |e: f64| Probability::new(e);
    let (lo, hi) = EPS_RANGE;
    match kind {
        StrategyKind::FixedRate => Err(Error::domain(
            "strategy",
            "fixed-rate transmission has no eps to optimize; use optimal_fixed_rate",
        )),
        StrategyKind::PowerAdapted => {
            let policy = solve_alpha(params, qos, opts)?;
            let rate =
                |e: f64| -> Result<f64> { Ok(effective_rate_power_adapted(eps(e)?, &policy, params, qos, opts)?.rate) };
            let objective = Objective::new(|e| rate(e).map(|r| -r));
            let min = objective.check(golden_minimize(|e| objective.eval(e), lo, hi, EPS_TOL))?;
            Ok(OptimizationResult {
                arg: min.arg,
                value: rate(min.arg)?,
                iterations: min.iterations,
                bracket: (min.lo, min.hi),
            })
        }
        StrategyKind::VariableRate | StrategyKind::ParallelPair => {
            let model = |e: f64| StrategyModel::with_parameter(kind, e);
            let objective = Objective::new(|e: f64| -> Result<f64> {
                if qos.theta == 0.0 {
                    Ok(-effective_rate(&model(e)?, params, qos, opts)?.rate)
                } else if kind == StrategyKind::VariableRate {
                    psi(eps(e)?, params, qos, opts)
                } else {
                    psi_parallel(eps(e)?, params, qos, opts)
                }
            });
            let min = objective.check(golden_minimize(|e| objective.eval(e), lo, hi, EPS_TOL))?;
            Ok(OptimizationResult {
                arg: min.arg,
                value: effective_rate(&model(min.arg)?, params, qos, opts)?.rate,
                iterations: min.iterations,
                bracket: (min.lo, min.hi),
            })
        }
    }
}

/// Upper end of the fixed-rate search: the capacity at the 99.99th
/// percentile of the fading power.
pub fn fixed_rate_search_limit(params: &ChannelParams) -> f64 {
    (1.0 + params.snr * params.fading.quantile(0.9999)).log2()
}

/// The fixed rate maximizing the effective rate. Golden-section search under
/// an assumed single peak, cross-checked against a coarse grid; the better
/// of the two is returned.
pub fn optimal_fixed_rate(params: &ChannelParams, qos: &QosSpec, opts: &EvalOptions) -> Result<OptimizationResult> {
    params.validate()?;
    let r_hi = fixed_rate_search_limit(params);
    if !(r_hi > 0.0) {
        return Err(Error::domain("snr", "channel supports no positive rate"));
    }
    let rate = |r: f64| -> Result<f64> {
        Ok(effective_rate(&StrategyModel::FixedRate { rate_fixed: r }, params, qos, opts)?.rate)
    };
    let objective = Objective::new(|r| rate(r).map(|v| -v));
    let r_lo = 1e-9 * r_hi;
    let search = |lo: f64, hi: f64| objective.check(golden_minimize(|r| objective.eval(r), lo, hi, RATE_TOL));
    let mut best = search(r_lo, r_hi)?;

    let step = r_hi / RATE_GRID as f64;
    let grid: Vec<f64> = (1..=RATE_GRID).map(|k| k as f64 * step).collect();
    let mut grid_best = (0, f64::INFINITY);
    for (k, &r) in grid.iter().enumerate() {
        let v = objective.eval(r);
        if v < grid_best.1 {
            grid_best = (k, v);
        }
    }
    objective.check(Ok(()))?;
    if grid_best.1 < best.value {
        let k = grid_best.0;
        let lo = if k == 0 { r_lo } else { grid[k - 1] };
        let hi = grid[(k + 1).min(RATE_GRID - 1)];
        let local = search(lo, hi)?;
        best = if local.value <= grid_best.1 {
            local
        } else {
            crate::numerics::Minimum {
                arg: grid[k],
                value: grid_best.1,
                iterations: local.iterations,
                lo,
                hi,
            }
        };
        best.iterations += RATE_GRID;
    }
    Ok(OptimizationResult {
        arg: best.arg,
        value: rate(best.arg)?,
        iterations: best.iterations,
        bracket: (best.lo, best.hi),
    })
}

/// The point in `[lo, hi]` where `curve_a - curve_b` changes sign, to within
/// `1e-5`. `None` if the difference has the same sign (or vanishes) at both
/// ends.
pub fn crossover_theta<A, B>(curve_a: A, curve_b: B, lo: f64, hi: f64) -> Result<Option<f64>>
where
    A: Fn(f64) -> Result<f64>,
    B: Fn(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(Error::domain("interval", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let diff = |t: f64| -> Result<f64> { Ok(curve_a(t)? - curve_b(t)?) };
    let (mut a, mut b) = (lo, hi);
    let d_lo = diff(a)?;
    let d_hi = diff(b)?;
    if d_lo * d_hi > 0.0 || (d_lo == 0.0 && d_hi == 0.0) {
        return Ok(None);
    }
    if d_lo == 0.0 {
        return Ok(Some(lo));
    }
    if d_hi == 0.0 {
        return Ok(Some(hi));
    }
    while b - a > 1e-5 {
        let mid = 0.5 * (a + b);
        let d = diff(mid)?;
        if d == 0.0 {
            return Ok(Some(mid));
        }
        if (d < 0.0) == (d_lo < 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepAxis {
    /// QoS exponent, 1/bit.
    Theta,
    /// Blocklength; grid values are rounded.
    M,
    /// Average SNR in dB.
    SnrDb,
    /// Block error probability of an eps-parameterized strategy.
    Eps,
    /// Fixed rate, bits per channel use.
    RateFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Effective rate of the strategy as given.
    Evaluate,
    /// Optimal strategy parameter and the resulting effective rate.
    Optimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub params: ChannelParams,
    pub qos: QosSpec,
    /// Template; its parameter is overwritten on the eps and rate axes and
    /// ignored in optimize mode.
    pub strategy: StrategyModel,
    pub mode: SweepMode,
    pub options: EvalOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::domain("grid", "must not be empty"));
        }
        if self.grid.iter().any(|v| !v.is_finite()) || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("grid", "must be finite and strictly increasing"));
        }
        let kind = self.strategy.kind();
        match (self.axis, self.mode) {
            (SweepAxis::Eps | SweepAxis::RateFixed, SweepMode::Optimize) => {
                Err(Error::domain("axis", "cannot sweep the parameter being optimized"))
            }
            (SweepAxis::Eps, _) if kind == StrategyKind::FixedRate => {
                Err(Error::domain("axis", "fixed-rate strategy has no eps"))
            }
            (SweepAxis::RateFixed, _) if kind != StrategyKind::FixedRate => {
                Err(Error::domain("axis", "rate axis needs the fixed-rate strategy"))
            }
            _ => self.params.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Rate(EffectiveRateResult),
    Optimum(OptimizationResult),
}

impl SweepValue {
    /// Effective rate, bits per channel use.
    pub fn rate(&self) -> f64 {
        match self {
            SweepValue::Rate(r) => r.rate,
            SweepValue::Optimum(o) => o.value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub axis_value: f64,
    pub outcome: Result<SweepValue>,
}

/// Evaluates every grid point independently, in parallel. Rows come back in
/// grid order; a failing point records its error and the sweep continues.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec
        .grid
        .par_iter()
        .enumerate()
        .map(|(index, &axis_value)| SweepRow {
            index,
            axis_value,
            outcome: sweep_point(spec, axis_value),
        })
        .collect())
}

fn sweep_point(spec: &SweepSpec, x: f64) -> Result<SweepValue> {
    let mut params = spec.params;
    let mut qos = spec.qos;
    let mut strategy = spec.strategy;
    match spec.axis {
        SweepAxis::Theta => qos = QosSpec::new(x)?,
        SweepAxis::M => {
            if !(x >= 1.0) {
                return Err(Error::domain("m", format!("{x} must be >= 1")));
            }
            params.blocklength_m = x.round() as u64;
        }
        SweepAxis::SnrDb => params.snr = snr_from_db(x),
        SweepAxis::Eps | SweepAxis::RateFixed => strategy = StrategyModel::with_parameter(strategy.kind(), x)?,
    }
    params.validate()?;
    match spec.mode {
        SweepMode::Evaluate => Ok(SweepValue::Rate(effective_rate(
            &strategy,
            &params,
            &qos,
            &spec.options,
        )?)),
        SweepMode::Optimize => Ok(SweepValue::Optimum(match strategy.kind() {
            StrategyKind::FixedRate => optimal_fixed_rate(&params, &qos, &spec.options)?,
            kind => optimal_eps(kind, &params, &qos, &spec.options)?,
        })),
    }
}
