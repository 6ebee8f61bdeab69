//! Fluid buffer fed at a constant rate and drained by the per-block service
//! of a transmission strategy, with a log-linear fit of the queue tail.
//!
//! `Q_0 = 0`, `Q_{t+1} = max(Q_t + a - R_t, 0)` with one fading draw and one
//! decoding draw per block. Replicas use disjoint streams of one seeded
//! ChaCha8 generator and run in parallel.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_gain, ChannelParams, QosSpec};
use crate::effective::{
    effective_rate_power_adapted, effective_rate_zero_theta, solve_alpha, EvalOptions, PowerPolicy, StrategyModel,
};
use crate::error::{Error, Result};
use crate::fbl::{FixedRateErrors, RateFormula, ServiceOutcome};
use crate::numerics::Probability;

pub const MIN_BLOCKS: u64 = 100_000;
/// Histogram length cap; mass beyond it lands in the last bin.
const MAX_BINS: usize = 1 << 22;
/// Minimum count for a tail point to enter the fit.
pub const MIN_TAIL_COUNT: u64 = 100;
/// Minimum number of tail points in the fit window.
pub const MIN_TAIL_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub strategy: StrategyModel,
    pub params: ChannelParams,
    /// Only used to build the power policy of the power-adapted strategy.
    pub qos: QosSpec,
    /// Constant arrivals, bits per block of `m` channel uses.
    pub arrival_bits_per_block: f64,
    /// Blocks per replica, warmup included.
    pub num_blocks: u64,
    pub warmup_blocks: u64,
    pub seed: u64,
    pub replicas: usize,
    /// Spacing of the tail grid in bits; `None` picks one from `qos.theta`
    /// or the arrival rate.
    pub bin_bits: Option<f64>,
    pub options: EvalOptions,
}

impl SimConfig {
    pub fn new(strategy: StrategyModel, params: ChannelParams, arrival_bits_per_block: f64) -> Self {
        SimConfig {
            strategy,
            params,
            qos: QosSpec::unconstrained(),
            arrival_bits_per_block,
            num_blocks: 1_000_000,
            warmup_blocks: 10_000,
            seed: 0,
            replicas: 1,
            bin_bits: None,
            options: EvalOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.strategy.validate()?;
        if !(self.arrival_bits_per_block >= 0.0 && self.arrival_bits_per_block.is_finite()) {
            return Err(Error::domain(
                "arrival",
                format!("{} must be a finite number of bits >= 0", self.arrival_bits_per_block),
            ));
        }
        if self.num_blocks < MIN_BLOCKS {
            return Err(Error::domain(
                "blocks",
                format!("need at least {MIN_BLOCKS}, got {}", self.num_blocks),
            ));
        }
        if self.warmup_blocks >= self.num_blocks {
            return Err(Error::domain("warmup", "must be smaller than the number of blocks"));
        }
        if self.replicas == 0 {
            return Err(Error::domain("replicas", "must be at least 1"));
        }
        if let Some(w) = self.bin_bits {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::domain("bin_bits", format!("{w} must be > 0")));
            }
        }
        Ok(())
    }

    fn bin_width(&self) -> f64 {
        self.bin_bits.unwrap_or_else(|| {
            if self.qos.theta > 0.0 {
                1.0 / (50.0 * self.qos.theta)
            } else {
                (self.arrival_bits_per_block / 50.0).max(1e-3)
            }
        })
    }
}

/// Per-block service law of a strategy, prepared once.
#[derive(Debug, Clone)]
pub struct ServiceSampler {
    params: ChannelParams,
    law: Law,
}

#[derive(Debug, Clone)]
enum Law {
    Variable {
        formula: RateFormula,
        eps: f64,
    },
    Fixed {
        errors: FixedRateErrors,
    },
    Power {
        formula: RateFormula,
        eps: f64,
        policy: PowerPolicy,
    },
    Parallel {
        formula: RateFormula,
        eps: f64,
    },
}

impl ServiceSampler {
    pub fn new(strategy: &StrategyModel, params: &ChannelParams, qos: &QosSpec, opts: &EvalOptions) -> Result<Self> {
        strategy.validate()?;
        params.validate()?;
        let m = params.blocklength_m;
        let formula = |eps: Probability, share| -> Result<RateFormula> {
            // eps = 1 never delivers, so any formula will do
            let eps = if eps.value() == 1.0 {
                Probability::new(0.0)?
            } else {
                eps
            };
            Ok(RateFormula::with_share(m, eps, share)?.clamp_nonnegative(opts.clamp_nonnegative))
        };
        let law = match *strategy {
            StrategyModel::VariableRate { eps } => Law::Variable {
                formula: formula(eps, 1.0)?,
                eps: eps.value(),
            },
            StrategyModel::FixedRate { rate_fixed } => Law::Fixed {
                errors: FixedRateErrors::new(m, rate_fixed)?,
            },
            StrategyModel::PowerAdapted { eps } => Law::Power {
                formula: formula(eps, 1.0)?,
                eps: eps.value(),
                policy: solve_alpha(params, qos, opts)?,
            },
            StrategyModel::ParallelPair { eps } => Law::Parallel {
                formula: formula(eps, 0.5)?,
                eps: eps.value(),
            },
        };
        Ok(ServiceSampler { params: *params, law })
    }

    /// Service in a block with fading power `z`. `success` is true when at
    /// least one codeword is decoded. A block whose coding rate is negative
    /// (deep fade, tiny `eps`) delivers nothing.
    pub fn sample<R: Rng + ?Sized>(&self, z: f64, rng: &mut R) -> ServiceOutcome {
        let m = self.params.m();
        let snr = self.params.snr;
        let decoded = |eps: f64, rng: &mut R| eps < 1.0 && (eps == 0.0 || rng.gen::<f64>() >= eps);
        let delivered = |bits: f64, ok: bool| {
            if ok {
                ServiceOutcome {
                    bits_delivered: bits.max(0.0),
                    success: true,
                }
            } else {
                ServiceOutcome::LOST
            }
        };
        match &self.law {
            Law::Variable { formula, eps } => {
                let ok = decoded(*eps, rng);
                delivered(m * formula.at_gain(snr * z), ok)
            }
            Law::Fixed { errors } => {
                let eps = errors.at_gain(snr * z);
                let ok = decoded(eps, rng);
                delivered(m * errors.rate(), ok)
            }
            Law::Power { formula, eps, policy } => {
                if z < policy.alpha {
                    return ServiceOutcome::LOST;
                }
                let ok = decoded(*eps, rng);
                delivered(m * formula.at_gain(policy.received_snr(z)), ok)
            }
            Law::Parallel { formula, eps } => {
                let per_codeword = m * formula.at_gain(snr * z);
                let count = decoded(*eps, rng) as u8 + decoded(*eps, rng) as u8;
                delivered(count as f64 * per_codeword, count > 0)
            }
        }
    }

    /// Long-run mean service per block, bits.
    pub fn mean_service_bits(&self, strategy: &StrategyModel, opts: &EvalOptions) -> Result<f64> {
        let rate = match (&self.law, strategy) {
            (Law::Power { policy, .. }, StrategyModel::PowerAdapted { eps }) => {
                effective_rate_power_adapted(*eps, policy, &self.params, &QosSpec::unconstrained(), opts)?.rate
            }
            _ => effective_rate_zero_theta(strategy, &self.params, opts)?.rate,
        };
        Ok(self.params.m() * rate)
    }
}

/// Service in one block at fading power `z`. The power-adapted strategy needs
/// a solved policy; use [`ServiceSampler`] for it.
pub fn sample_service<R: Rng + ?Sized>(
    strategy: &StrategyModel,
    params: &ChannelParams,
    z: f64,
    rng: &mut R,
) -> Result<ServiceOutcome> {
    if let StrategyModel::PowerAdapted { .. } = strategy {
        return Err(Error::domain(
            "strategy",
            "power adaptation needs a QoS exponent to fix its policy; build a ServiceSampler",
        ));
    }
    let sampler = ServiceSampler::new(strategy, params, &QosSpec::unconstrained(), &EvalOptions::default())?;
    Ok(sampler.sample(z, rng))
}

/// Least-squares decay rate of `P(Q >= q)` over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    /// 1/bit.
    pub theta_hat: f64,
    pub stderr: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueTrace {
    /// Spacing of the tail grid, bits.
    pub bin_bits: f64,
    /// `tail_counts[k]` = number of observed blocks with `Q >= k * bin_bits`.
    pub tail_counts: Vec<u64>,
    /// Blocks observed after warmup, all replicas.
    pub observed_blocks: u64,
    /// Bits.
    pub mean_queue: f64,
    /// Fraction of observed blocks with an empty queue.
    pub drained_fraction: f64,
    /// Mean service per block from the strategy's law, bits.
    pub mean_service_bits: f64,
    /// Arrivals at or above the mean service, or a queue still growing at
    /// the end of the run. No exponent is fitted then.
    pub unstable: bool,
    pub decay: Option<DecayEstimate>,
}

impl QueueTrace {
    /// Empirical `P(Q >= k * bin_bits)`.
    pub fn tail_probability(&self, k: usize) -> f64 {
        self.tail_counts
            .get(k)
            .map_or(0.0, |&c| c as f64 / self.observed_blocks as f64)
    }

    /// Default fit window: from the 90th to the 99.9th percentile of the
    /// observed queue lengths.
    pub fn default_window(&self) -> (f64, f64) {
        (self.quantile(0.9), self.quantile(0.999))
    }

    /// Smallest grid point `q` with `P(Q >= q) <= 1 - p`... expressed as the
    /// last grid point still holding at least `1 - p` of the mass.
    fn quantile(&self, p: f64) -> f64 {
        let needed = (1.0 - p) * self.observed_blocks as f64;
        let k = self.tail_counts.iter().rposition(|&c| c as f64 >= needed).unwrap_or(0);
        k as f64 * self.bin_bits
    }

    /// CSV with columns `q_bits,count_ge,p_ge`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "q_bits,count_ge,p_ge")?;
        for (k, &c) in self.tail_counts.iter().enumerate() {
            writeln!(out, "{},{},{:e}", k as f64 * self.bin_bits, c, self.tail_probability(k))?;
        }
        Ok(())
    }
}

struct ReplicaRun {
    bins: Vec<u64>,
    observed: u64,
    queue_sum: f64,
    drained: u64,
    growing: bool,
}

fn run_replica(config: &SimConfig, sampler: &ServiceSampler, replica: usize, width: f64) -> ReplicaRun {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(replica as u64);
    let a = config.arrival_bits_per_block;
    let mut q = 0.0f64;
    let mut run = ReplicaRun {
        bins: Vec::new(),
        observed: 0,
        queue_sum: 0.0,
        drained: 0,
        growing: false,
    };
    let observed_total = config.num_blocks - config.warmup_blocks;
    let quarter = (observed_total / 4).max(1);
    let mut quarter_means = [0.0f64; 4];
    for t in 0..config.num_blocks {
        let z = sample_gain(&config.params.fading, &mut rng);
        let service = sampler.sample(z, &mut rng).bits_delivered;
        q = (q + a - service).max(0.0);
        if t < config.warmup_blocks {
            continue;
        }
        let bin = ((q / width) as usize).min(MAX_BINS - 1);
        if bin >= run.bins.len() {
            run.bins.resize(bin + 1, 0);
        }
        run.bins[bin] += 1;
        run.observed += 1;
        run.queue_sum += q;
        run.drained += (q == 0.0) as u64;
        let slot = ((t - config.warmup_blocks) / quarter).min(3) as usize;
        quarter_means[slot] += q / quarter as f64;
    }
    // Linear drift: the last quarter sits well above the second while the
    // queue is far from empty at the end.
    run.growing = quarter_means[3] > 1.5 * quarter_means[1] + a && q > 0.5 * quarter_means[3];
    run
}

/// Runs the buffer for every replica and pools the histograms. A trace is
/// returned even when the system is unstable; see [`QueueTrace::unstable`].
pub fn simulate_queue(config: &SimConfig) -> Result<QueueTrace> {
    config.validate()?;
    let sampler = ServiceSampler::new(&config.strategy, &config.params, &config.qos, &config.options)?;
    let mean_service = sampler.mean_service_bits(&config.strategy, &config.options)?;
    let width = config.bin_width();
    let precheck_failed = config.arrival_bits_per_block > 0.0 && config.arrival_bits_per_block >= mean_service;
    let mut run_config = config.clone();
    if precheck_failed {
        // Only a short run to show the drift.
        run_config.num_blocks = MIN_BLOCKS.min(config.num_blocks);
        run_config.warmup_blocks = 0;
    }
    let runs: Vec<ReplicaRun> = (0..config.replicas)
        .into_par_iter()
        .map(|r| run_replica(&run_config, &sampler, r, width))
        .collect();

    let longest = runs.iter().map(|r| r.bins.len()).max().unwrap_or(0);
    let mut bins = vec![0u64; longest.max(1)];
    let (mut observed, mut queue_sum, mut drained, mut growing) = (0u64, 0.0, 0u64, false);
    for run in &runs {
        for (b, &c) in bins.iter_mut().zip(&run.bins) {
            *b += c;
        }
        observed += run.observed;
        queue_sum += run.queue_sum;
        drained += run.drained;
        growing |= run.growing;
    }
    let mut tail_counts = bins;
    for k in (0..tail_counts.len().saturating_sub(1)).rev() {
        tail_counts[k] += tail_counts[k + 1];
    }
    let mut trace = QueueTrace {
        bin_bits: width,
        tail_counts,
        observed_blocks: observed,
        mean_queue: queue_sum / observed as f64,
        drained_fraction: drained as f64 / observed as f64,
        mean_service_bits: mean_service,
        unstable: precheck_failed || growing,
        decay: None,
    };
    if !trace.unstable && config.arrival_bits_per_block > 0.0 {
        let (lo, hi) = trace.default_window();
        trace.decay = estimate_decay_exponent(&trace, lo, hi).ok();
    }
    Ok(trace)
}

/// Negated least-squares slope of `ln P(Q >= q)` against `q` over the grid
/// points in `[q_lo, q_hi]` holding at least [`MIN_TAIL_COUNT`] blocks.
pub fn estimate_decay_exponent(trace: &QueueTrace, q_lo: f64, q_hi: f64) -> Result<DecayEstimate> {
    if !(q_lo <= q_hi) {
        return Err(Error::domain(
            "window",
            format!("need q_lo <= q_hi, got [{q_lo}, {q_hi}]"),
        ));
    }
    let points: Vec<(f64, f64)> = trace
        .tail_counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (k as f64 * trace.bin_bits, c))
        .filter(|&(q, c)| q >= q_lo && q <= q_hi && c >= MIN_TAIL_COUNT)
        .map(|(q, c)| (q, (c as f64 / trace.observed_blocks as f64).ln()))
        .collect();
    let n = points.len();
    if n < MIN_TAIL_POINTS {
        return Err(Error::InsufficientTail(format!(
            "{n} grid points in [{q_lo}, {q_hi}] bits hold at least {MIN_TAIL_COUNT} blocks, need {MIN_TAIL_POINTS}"
        )));
    }
    let nf = n as f64;
    let mean_q = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_q).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_q) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_q;
    let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(DecayEstimate {
        theta_hat: -slope,
        stderr: (ssr / (nf - 2.0) / sxx).sqrt(),
        q_lo,
        q_hi,
        points: n,
    })
}
