//! Acceptance criteria at the paper's operating point (Rayleigh fading,
//! 0 dB, m = 1000 unless stated). Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use effrate::channel::{snr_from_db, ChannelParams, FadingModel, QosSpec};
use effrate::effective::{
    effective_rate_zero_theta, ideal_effective_rate, mean_fixed_rate_error, mean_power, outage_probability, psi,
    psi_parallel, solve_alpha, EvalOptions, StrategyKind, StrategyModel,
};
use effrate::figures::log_grid;
use effrate::numerics::{gaussian_q_inv, q_inv_derivatives, Probability};
use effrate::optimize::{crossover_theta, optimal_eps, optimal_fixed_rate};
use effrate::queuesim::{simulate_queue, SimConfig};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn paper_point() -> ChannelParams {
    ChannelParams::rayleigh(1.0, 1000).unwrap()
}

fn qos(theta: f64) -> QosSpec {
    QosSpec::new(theta).unwrap()
}

fn opts() -> EvalOptions {
    EvalOptions::default()
}

fn eps_star(params: &ChannelParams, theta: f64) -> (f64, f64) {
    let r = optimal_eps(StrategyKind::VariableRate, params, &qos(theta), &opts()).unwrap();
    (r.arg, r.value)
}

fn within_budget(elapsed: Duration, budget_s: f64) -> (bool, String) {
    let ok = elapsed.as_secs_f64() < budget_s;
    (ok, format!("{:.1}s of {budget_s}s", elapsed.as_secs_f64()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let reported = [
        (0.0, 0.0171, 0.7750),
        (0.001, 0.0127, 0.6256),
        (0.01, 0.0061, 0.2246),
        (0.1, 0.0084, 0.0329),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (theta, eps_ref, rate_ref) in reported {
        let (e, r) = eps_star(&paper_point(), theta);
        let eps_ok = (e - eps_ref).abs() <= 5e-4;
        let rate_ok = (r - rate_ref).abs() <= 2e-3;
        pass &= eps_ok && rate_ok;
        notes.push(format!(
            "theta {theta}: eps* {e:.4} vs {eps_ref}{} R_E {r:.4} vs {rate_ref}{}",
            if eps_ok { "" } else { " (off)" },
            if rate_ok { "" } else { " (off)" }
        ));
    }
    let (t_ok, t) = within_budget(start.elapsed(), 10.0);
    Outcome {
        pass: pass && t_ok,
        detail: format!("{}; {t}", notes.join("; ")),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let thetas = log_grid(1e-3, 1.0, 100);
    let stars: Vec<f64> = thetas.iter().map(|&t| eps_star(&paper_point(), t).0).collect();
    let mut reversals = Vec::new();
    for k in 1..stars.len() - 1 {
        let before = stars[k] - stars[k - 1];
        let after = stars[k + 1] - stars[k];
        if before.signum() != after.signum() {
            reversals.push(thetas[k]);
        }
    }
    let first = reversals.iter().any(|&t| (0.02..=0.04).contains(&t));
    let second = reversals.iter().any(|&t| (0.25..=0.35).contains(&t));
    let (t_ok, t) = within_budget(start.elapsed(), 60.0);
    Outcome {
        pass: first && second && t_ok,
        detail: format!(
            "reversals at theta {:?}; in [0.02, 0.04]: {first}; in [0.25, 0.35]: {second}; eps* at theta=1: {:.4}; {t}",
            reversals.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>(),
            stars[stars.len() - 1]
        ),
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let p = paper_point();
    let fixed = |t: f64| optimal_fixed_rate(&p, &qos(t), &opts()).map(|r| r.value);
    let variable = |t: f64| optimal_eps(StrategyKind::VariableRate, &p, &qos(t), &opts()).map(|r| r.value);
    let crossing = crossover_theta(fixed, variable, 1e-3, 1.0).unwrap();
    let Some(x) = crossing else {
        return Outcome {
            pass: false,
            detail: "no crossover in [0.001, 1]".into(),
        };
    };
    let grid = log_grid(1e-3, 1.0, 40);
    let consistent = grid.iter().all(|&t| {
        let fixed_wins = fixed(t).unwrap() > variable(t).unwrap();
        fixed_wins == (t > x)
    });
    let in_window = (0.11..=0.15).contains(&x);
    let (t_ok, t) = within_budget(start.elapsed(), 60.0);
    Outcome {
        pass: in_window && consistent && t_ok,
        detail: format!("crossing at theta {x:.4}; fixed wins exactly above it on a 40-point grid: {consistent}; {t}"),
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let p = paper_point();
    let best = |kind, t: f64| optimal_eps(kind, &p, &qos(t), &opts()).map(|r| r.value);
    let single0 = best(StrategyKind::VariableRate, 0.0).unwrap();
    let pair0 = best(StrategyKind::ParallelPair, 0.0).unwrap();
    let crossing = crossover_theta(
        |t| best(StrategyKind::ParallelPair, t),
        |t| best(StrategyKind::VariableRate, t),
        1e-4,
        1.0,
    )
    .unwrap();
    let beyond = crossing.map(|x| {
        log_grid(x * 1.05, 1.0, 10)
            .iter()
            .all(|&t| best(StrategyKind::ParallelPair, t).unwrap() > best(StrategyKind::VariableRate, t).unwrap())
    });
    let (t_ok, t) = within_budget(start.elapsed(), 60.0);
    Outcome {
        pass: single0 > pair0 && crossing.is_some() && beyond == Some(true) && t_ok,
        detail: format!(
            "theta=0: single {single0:.4} vs pair {pair0:.4}; crossover {crossing:?}; pair ahead beyond it: {beyond:?}; {t}"
        ),
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let params = ChannelParams::rayleigh(1.0, 100_000_000).unwrap();
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let mean = mean_fixed_rate_error(r, &params, &opts()).unwrap();
        let closed = 1.0 - (-(r.exp2() - 1.0)).exp();
        worst = worst.max((mean - closed).abs());
        worst = worst.max((outage_probability(r, &params).unwrap() - closed).abs());
    }
    let (t_ok, t) = within_budget(start.elapsed(), 5.0);
    Outcome {
        pass: worst <= 1e-4 && t_ok,
        detail: format!("max |E{{eps(z)}} - P_out| = {worst:.2e}; {t}"),
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let grid: Vec<f64> = (0..200).map(|k| 1e-4 + (1.0 - 2e-4) * k as f64 / 199.0).collect();
    let second = |v: &[f64]| v.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect::<Vec<f64>>();
    let mut failures = Vec::new();
    let mut combos = 0;
    for (snr_db, m) in [(0.0, 1000u64), (10.0, 500), (-5.0, 2000)] {
        let params = ChannelParams::rayleigh(snr_from_db(snr_db), m).unwrap();
        let mean_rate: Vec<f64> = grid
            .iter()
            .map(|&e| {
                let s = StrategyModel::VariableRate {
                    eps: Probability::new(e).unwrap(),
                };
                effective_rate_zero_theta(&s, &params, &opts()).unwrap().rate
            })
            .collect();
        if !second(&mean_rate).iter().all(|&d| d < 0.0) {
            failures.push(format!("mean rate not concave at {snr_db} dB, m={m}"));
        }
        for theta in [0.001, 0.01, 0.1] {
            combos += 1;
            let q = qos(theta);
            let single: Vec<f64> = grid
                .iter()
                .map(|&e| psi(Probability::new(e).unwrap(), &params, &q, &opts()).unwrap())
                .collect();
            let pair: Vec<f64> = grid
                .iter()
                .map(|&e| psi_parallel(Probability::new(e).unwrap(), &params, &q, &opts()).unwrap())
                .collect();
            if !second(&single).iter().all(|&d| d > 0.0) {
                failures.push(format!("Psi not convex at {snr_db} dB, m={m}, theta={theta}"));
            }
            if !second(&pair).iter().all(|&d| d > 0.0) {
                failures.push(format!("Psi_p not convex at {snr_db} dB, m={m}, theta={theta}"));
            }
        }
    }
    let (t_ok, t) = within_budget(start.elapsed(), 30.0);
    Outcome {
        pass: failures.is_empty() && t_ok,
        detail: format!("{combos} (theta, snr, m) combinations, 200-point grid; violations: {failures:?}; {t}"),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let p = 0.01 + 0.98 * k as f64 / 499.0;
        let (d1, _) = q_inv_derivatives(p).unwrap();
        let h = 1e-5;
        let fd = (gaussian_q_inv(p + h).unwrap() - gaussian_q_inv(p - h).unwrap()) / (2.0 * h);
        worst = worst.max(((d1 - fd) / d1).abs());
    }
    let (t_ok, t) = within_budget(start.elapsed(), 1.0);
    Outcome {
        pass: worst <= 1e-5 && t_ok,
        detail: format!("max relative gap {worst:.2e} over 500 points; {t}"),
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let theta0 = 0.01;
    let (e, r) = eps_star(&paper_point(), theta0);
    let config = SimConfig {
        qos: qos(theta0),
        num_blocks: 2_510_000,
        warmup_blocks: 10_000,
        replicas: 4,
        seed: 20_160_101,
        ..SimConfig::new(
            StrategyModel::VariableRate {
                eps: Probability::new(e).unwrap(),
            },
            paper_point(),
            1000.0 * r,
        )
    };
    let trace = simulate_queue(&config).unwrap();
    let fit = trace.decay;
    let main_ok =
        trace.observed_blocks >= 10_000_000 && fit.is_some_and(|f| (f.theta_hat - theta0).abs() <= 0.15 * theta0);

    // two-point service: c bits w.p. 1-eps, else nothing
    let eps2 = 0.1;
    let params2 = ChannelParams::new(1.0, 100, FadingModel::Deterministic { z: 1.0 }).unwrap();
    let c = 100.0
        * effrate::fbl::coding_rate(1.0, &params2, Probability::new(eps2).unwrap())
            .unwrap()
            .0;
    let a = 60.0;
    let mut lo = 1e-6;
    let mut hi = 1.0;
    let rate_at = |t: f64| -(eps2 + (1.0 - eps2) * (-t * c).exp()).ln() / t;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid) > a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta_a = 0.5 * (lo + hi);
    let config2 = SimConfig {
        num_blocks: 2_000_000,
        replicas: 2,
        seed: 7,
        bin_bits: Some(2.0),
        ..SimConfig::new(
            StrategyModel::VariableRate {
                eps: Probability::new(eps2).unwrap(),
            },
            params2,
            a,
        )
    };
    let fit2 = simulate_queue(&config2).unwrap().decay;
    let oracle_ok = fit2.is_some_and(|f| (f.theta_hat - theta_a).abs() <= 0.1 * theta_a);
    Outcome {
        pass: main_ok && oracle_ok,
        detail: format!(
            "{} blocks at a = {:.1} bits/block: theta_hat {} (target {theta0}); two-point oracle {theta_a:.5} vs {}; {:.1}s",
            trace.observed_blocks,
            1000.0 * r,
            fit.map_or("none".into(), |f| format!("{:.5} +- {:.5}", f.theta_hat, f.stderr)),
            fit2.map_or("none".into(), |f| format!("{:.5}", f.theta_hat)),
            start.elapsed().as_secs_f64()
        ),
    }
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let p = paper_point();
    let thetas: Vec<f64> = std::iter::once(0.0).chain(log_grid(1e-3, 1.0, 19)).collect();
    let mut worst_constraint: f64 = 0.0;
    let mut losses = Vec::new();
    for &t in &thetas {
        let policy = solve_alpha(&p, &qos(t), &opts()).unwrap();
        let used = mean_power(&policy, &p.fading, &opts().quadrature).unwrap();
        worst_constraint = worst_constraint.max((used - p.snr).abs() / p.snr);
        let adapted = optimal_eps(StrategyKind::PowerAdapted, &p, &qos(t), &opts())
            .unwrap()
            .value;
        let constant = eps_star(&p, t).1;
        if adapted < constant {
            losses.push(t);
        }
    }
    let (t_ok, t) = within_budget(start.elapsed(), 120.0);
    Outcome {
        pass: worst_constraint <= 1e-8 && losses.is_empty() && t_ok,
        detail: format!(
            "max |E{{mu*}} - snr|/snr = {worst_constraint:.1e}; power control behind at theta {losses:?} of {} points; {t}",
            thetas.len()
        ),
    }
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let ms: Vec<u64> = log_grid(200.0, 20_000.0, 30).iter().map(|m| m.round() as u64).collect();
    let at = |m: u64| ChannelParams::rayleigh(1.0, m).unwrap();
    let fbl: Vec<f64> = ms.iter().map(|&m| eps_star(&at(m), 0.001).1).collect();
    let ideal: Vec<f64> = ms
        .iter()
        .map(|&m| ideal_effective_rate(&at(m), &qos(0.001), &opts()).unwrap())
        .collect();
    let ergodic: Vec<f64> = ms
        .iter()
        .map(|&m| ideal_effective_rate(&at(m), &qos(0.0), &opts()).unwrap())
        .collect();
    let peak = (0..fbl.len()).max_by(|&a, &b| fbl[a].total_cmp(&fbl[b])).unwrap();
    let interior = peak > 0 && peak < fbl.len() - 1;
    let ideal_decreasing = ideal.windows(2).all(|w| w[1] < w[0]);
    let spread = ergodic.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ergodic.iter().cloned().fold(f64::INFINITY, f64::min);
    let (t_ok, t) = within_budget(start.elapsed(), 120.0);
    Outcome {
        pass: interior && ideal_decreasing && spread <= 1e-6 && t_ok,
        detail: format!(
            "finite-blocklength peak at m = {} ({:.4}); ideal decreasing: {ideal_decreasing}; ergodic spread {spread:.1e}; {t}",
            ms[peak], fbl[peak]
        ),
    }
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("paper optima, variable rate", criterion_1),
        ("eps* trend reversals", criterion_2),
        ("fixed-rate crossover", criterion_3),
        ("parallel-codeword ordering", criterion_4),
        ("outage limit", criterion_5),
        ("convexity and concavity", criterion_6),
        ("Q^-1 derivative", criterion_7),
        ("queue exponent", criterion_8),
        ("power adaptation", criterion_9),
        ("blocklength sweep shape", criterion_10),
    ];
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let outcome = check();
        println!(
            "criterion {id:>2} [{}] {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        failed += (!outcome.pass) as usize;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
