//! Datasets behind the throughput figures, one table per figure id.
//!
//! | id | content |
//! |----|---------|
//! | 1  | `Psi` vs `eps`, theta in {0.001, 0.01, 0.1}, with the minimizer |
//! | 2  | `R_E` vs `eps`, theta in {0, 0.001, 0.01, 0.1} |
//! | 3  | optimal `R_E` vs theta |
//! | 4  | `eps*` vs theta (100 log-spaced points) |
//! | 5  | optimal `R_E` vs `m` for theta in {0, 0.001}, with the error-free capacity model |
//! | 6  | optimal `R_E` vs SNR |
//! | 7  | `eps*` vs SNR |
//! | 8  | optimal `R_E` vs theta with and without power control |
//! | 9  | fixed-rate `R_E` vs `r_f` |
//! | 10 | optimal fixed-rate and variable-rate `R_E` vs theta |
//! | 11 | fixed-rate mean throughput vs `r_f` for growing `m`, with the outage limit |
//! | 12 | optimal fixed rate vs theta |
//! | 13 | optimal single-codeword and two-codeword `R_E` vs theta |

use rayon::prelude::*;

use crate::channel::{snr_from_db, ChannelParams, QosSpec};
use crate::effective::{
    effective_rate, ideal_effective_rate, outage_probability, psi, solve_alpha, EvalOptions, StrategyKind,
    StrategyModel,
};
use crate::error::{Error, Result};
use crate::numerics::Probability;
use crate::optimize::{optimal_eps, optimal_fixed_rate, OptimizationResult};
use crate::output::{Cell, Table};

pub const FIGURE_IDS: std::ops::RangeInclusive<u8> = 1..=13;

/// Operating point shared by every figure; the figure fixes its own grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureBase {
    pub params: ChannelParams,
    pub options: EvalOptions,
}

impl Default for FigureBase {
    fn default() -> Self {
        FigureBase {
            params: ChannelParams::rayleigh(1.0, 1000).expect("valid operating point"),
            options: EvalOptions::default(),
        }
    }
}

pub fn describe(id: u8) -> Option<&'static str> {
    Some(match id {
        1 => "Psi(eps) for theta in {0.001, 0.01, 0.1}",
        2 => "effective rate vs eps for theta in {0, 0.001, 0.01, 0.1}",
        3 => "optimal effective rate vs theta",
        4 => "optimal eps vs theta",
        5 => "optimal effective rate vs blocklength, finite-blocklength and ideal",
        6 => "optimal effective rate vs SNR",
        7 => "optimal eps vs SNR",
        8 => "optimal effective rate vs theta with and without power control",
        9 => "fixed-rate effective rate vs fixed rate",
        10 => "optimal fixed-rate and variable-rate effective rates vs theta",
        11 => "fixed-rate throughput vs fixed rate for growing blocklength, with the outage limit",
        12 => "optimal fixed rate vs theta",
        13 => "optimal single-codeword and two-codeword effective rates vs theta",
        _ => return None,
    })
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Cartesian product of series values and x values, evaluated in parallel,
/// rows in series-major order.
fn rows<F>(series: &[f64], xs: &[f64], f: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(f64, f64) -> Result<Vec<Cell>> + Sync,
{
    let jobs: Vec<(f64, f64)> = series.iter().flat_map(|&s| xs.iter().map(move |&x| (s, x))).collect();
    jobs.par_iter().map(|&(s, x)| f(s, x)).collect()
}

fn table(columns: &[&str], rows: Vec<Vec<Cell>>) -> Table {
    let mut t = Table::new(columns.iter().copied());
    for r in rows {
        t.push(r);
    }
    t
}

fn optimum(kind: StrategyKind, params: &ChannelParams, theta: f64, opts: &EvalOptions) -> Result<OptimizationResult> {
    let qos = QosSpec::new(theta)?;
    match kind {
        StrategyKind::FixedRate => optimal_fixed_rate(params, &qos, opts),
        _ => optimal_eps(kind, params, &qos, opts),
    }
}

/// theta grid of the theta-axis figures: zero, then log-spaced.
fn theta_axis(n: usize) -> Vec<f64> {
    std::iter::once(0.0).chain(log_grid(1e-3, 1.0, n)).collect()
}

fn eps_axis() -> Vec<f64> {
    log_grid(1e-4, 0.5, 120)
}

pub fn figure(id: u8, base: &FigureBase) -> Result<Table> {
    let p = base.params;
    let o = &base.options;
    p.validate()?;
    match id {
        1 => {
            let thetas = [0.001, 0.01, 0.1];
            let stars: Vec<f64> = thetas
                .iter()
                .map(|&t| optimum(StrategyKind::VariableRate, &p, t, o).map(|r| r.arg))
                .collect::<Result<_>>()?;
            let rows = rows(&thetas, &eps_axis(), |t, e| {
                let k = thetas.iter().position(|&x| x == t).expect("series value");
                let v = psi(Probability::new(e)?, &p, &QosSpec::new(t)?, o)?;
                Ok(vec![t.into(), e.into(), v.into(), stars[k].into()])
            })?;
            Ok(table(&["theta_per_bit", "eps", "psi", "eps_star"], rows))
        }
        2 => {
            let rows = rows(&[0.0, 0.001, 0.01, 0.1], &eps_axis(), |t, e| {
                let s = StrategyModel::VariableRate {
                    eps: Probability::new(e)?,
                };
                let r = effective_rate(&s, &p, &QosSpec::new(t)?, o)?;
                Ok(vec![t.into(), e.into(), r.rate.into()])
            })?;
            Ok(table(&["theta_per_bit", "eps", "R_E_bits_per_cu"], rows))
        }
        3 | 4 => {
            let n = if id == 3 { 40 } else { 100 };
            let rows = rows(&[0.0], &theta_axis(n), |_, t| {
                let r = optimum(StrategyKind::VariableRate, &p, t, o)?;
                Ok(vec![t.into(), r.arg.into(), r.value.into()])
            })?;
            Ok(table(&["theta_per_bit", "eps_star", "R_E_bits_per_cu"], rows))
        }
        5 => {
            let ms = log_grid(100.0, 20_000.0, 30);
            let rows = rows(&[0.0, 0.001], &ms, |t, m| {
                let params = ChannelParams {
                    blocklength_m: m.round() as u64,
                    ..p
                };
                let r = optimum(StrategyKind::VariableRate, &params, t, o)?;
                let ideal = ideal_effective_rate(&params, &QosSpec::new(t)?, o)?;
                Ok(vec![
                    t.into(),
                    params.blocklength_m.into(),
                    r.arg.into(),
                    r.value.into(),
                    ideal.into(),
                ])
            })?;
            Ok(table(
                &[
                    "theta_per_bit",
                    "m",
                    "eps_star",
                    "R_E_fbl_bits_per_cu",
                    "R_E_ideal_bits_per_cu",
                ],
                rows,
            ))
        }
        6 | 7 => {
            let rows = rows(&[0.0, 0.001, 0.01, 0.1], &lin_grid(-10.0, 20.0, 31), |t, db| {
                let params = ChannelParams {
                    snr: snr_from_db(db),
                    ..p
                };
                let r = optimum(StrategyKind::VariableRate, &params, t, o)?;
                Ok(vec![t.into(), db.into(), r.arg.into(), r.value.into()])
            })?;
            Ok(table(&["theta_per_bit", "snr_db", "eps_star", "R_E_bits_per_cu"], rows))
        }
        8 => {
            let rows = rows(&[0.0], &theta_axis(20), |_, t| {
                let fixed = optimum(StrategyKind::VariableRate, &p, t, o)?;
                let adapted = optimum(StrategyKind::PowerAdapted, &p, t, o)?;
                let policy = solve_alpha(&p, &QosSpec::new(t)?, o)?;
                Ok(vec![
                    t.into(),
                    adapted.value.into(),
                    adapted.arg.into(),
                    policy.alpha.into(),
                    fixed.value.into(),
                    fixed.arg.into(),
                ])
            })?;
            Ok(table(
                &[
                    "theta_per_bit",
                    "R_E_power_control_bits_per_cu",
                    "eps_star_power_control",
                    "alpha_cutoff",
                    "R_E_fixed_power_bits_per_cu",
                    "eps_star_fixed_power",
                ],
                rows,
            ))
        }
        9 => {
            let rows = rows(&[0.0, 0.001, 0.01, 0.1], &lin_grid(0.02, 3.0, 150), |t, r| {
                let v = effective_rate(&StrategyModel::FixedRate { rate_fixed: r }, &p, &QosSpec::new(t)?, o)?;
                Ok(vec![t.into(), r.into(), v.rate.into()])
            })?;
            Ok(table(
                &["theta_per_bit", "rate_fixed_bits_per_cu", "R_E_bits_per_cu"],
                rows,
            ))
        }
        10 => {
            let rows = rows(&[0.0], &theta_axis(40), |_, t| {
                let fixed = optimum(StrategyKind::FixedRate, &p, t, o)?;
                let variable = optimum(StrategyKind::VariableRate, &p, t, o)?;
                Ok(vec![
                    t.into(),
                    fixed.value.into(),
                    fixed.arg.into(),
                    variable.value.into(),
                    variable.arg.into(),
                ])
            })?;
            Ok(table(
                &[
                    "theta_per_bit",
                    "R_E_fixed_rate_bits_per_cu",
                    "rate_fixed_star_bits_per_cu",
                    "R_E_variable_rate_bits_per_cu",
                    "eps_star",
                ],
                rows,
            ))
        }
        11 => {
            let rows = rows(&[100.0, 1000.0, 10_000.0, 1e6], &lin_grid(0.02, 3.0, 150), |m, r| {
                let params = ChannelParams {
                    blocklength_m: m as u64,
                    ..p
                };
                let v = effective_rate(
                    &StrategyModel::FixedRate { rate_fixed: r },
                    &params,
                    &QosSpec::unconstrained(),
                    o,
                )?;
                let limit = (1.0 - outage_probability(r, &params)?) * r;
                Ok(vec![params.blocklength_m.into(), r.into(), v.rate.into(), limit.into()])
            })?;
            Ok(table(
                &[
                    "m",
                    "rate_fixed_bits_per_cu",
                    "R_E_bits_per_cu",
                    "outage_limit_bits_per_cu",
                ],
                rows,
            ))
        }
        12 => {
            let rows = rows(&[0.0], &theta_axis(40), |_, t| {
                let r = optimum(StrategyKind::FixedRate, &p, t, o)?;
                Ok(vec![t.into(), r.arg.into(), r.value.into()])
            })?;
            Ok(table(
                &["theta_per_bit", "rate_fixed_star_bits_per_cu", "R_E_bits_per_cu"],
                rows,
            ))
        }
        13 => {
            let rows = rows(&[0.0], &theta_axis(40), |_, t| {
                let single = optimum(StrategyKind::VariableRate, &p, t, o)?;
                let pair = optimum(StrategyKind::ParallelPair, &p, t, o)?;
                Ok(vec![
                    t.into(),
                    single.value.into(),
                    single.arg.into(),
                    pair.value.into(),
                    pair.arg.into(),
                ])
            })?;
            Ok(table(
                &[
                    "theta_per_bit",
                    "R_E_single_bits_per_cu",
                    "eps_star_single",
                    "R_E_parallel_bits_per_cu",
                    "eps_star_parallel",
                ],
                rows,
            ))
        }
        _ => Err(Error::domain(
            "figure",
            format!(
                "unknown id {id}; expected {}..={}",
                FIGURE_IDS.start(),
                FIGURE_IDS.end()
            ),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(t: &Table, col: &str) -> Vec<f64> {
        t.column(col).unwrap().into_iter().map(Option::unwrap).collect()
    }

    #[test]
    fn unknown_id() {
        assert!(figure(0, &FigureBase::default()).is_err());
        assert!(figure(14, &FigureBase::default()).is_err());
        assert!(describe(14).is_none());
        assert!(FIGURE_IDS.clone().all(|id| describe(id).is_some()));
    }

    #[test]
    fn figure_three_nonincreasing() {
        let t = figure(3, &FigureBase::default()).unwrap();
        let r = values(&t, "R_E_bits_per_cu");
        assert!(r.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn figure_one_minimizer() {
        let t = figure(1, &FigureBase::default()).unwrap();
        let thetas = values(&t, "theta_per_bit");
        let stars = values(&t, "eps_star");
        let k = thetas.iter().position(|&x| x == 0.01).unwrap();
        assert!((stars[k] - 0.0061).abs() < 5e-4);
    }

    #[test]
    fn figure_five_gap_shrinks() {
        let t = figure(5, &FigureBase::default()).unwrap();
        let thetas = values(&t, "theta_per_bit");
        let fbl = values(&t, "R_E_fbl_bits_per_cu");
        let ideal = values(&t, "R_E_ideal_bits_per_cu");
        for theta in [0.0, 0.001] {
            let gaps: Vec<f64> = (0..thetas.len())
                .filter(|&k| thetas[k] == theta)
                .map(|k| ideal[k] - fbl[k])
                .collect();
            assert!(gaps.iter().all(|&g| g > 0.0));
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "theta {theta}: {gaps:?}");
        }
    }

    #[test]
    fn deterministic_output() {
        let base = FigureBase::default();
        assert_eq!(figure(12, &base).unwrap(), figure(12, &base).unwrap());
    }

    #[test]
    fn grids() {
        let g = log_grid(1e-3, 1.0, 4);
        assert!((g[1] - 1e-2).abs() < 1e-15 && (g[3] - 1.0).abs() < 1e-15);
        assert_eq!(lin_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(lin_grid(2.0, 5.0, 1), vec![2.0]);
    }
}
