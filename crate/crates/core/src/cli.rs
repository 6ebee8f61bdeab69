//! Command-line front end. Every subcommand renders one table (CSV or JSON)
//! to `--out` or stdout.
//!
//! Exit codes: 0 success, 2 usage or domain error, 3 solver failure,
//! 4 unstable queue, 1 I/O failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::channel::{snr_from_db, snr_to_db, ChannelParams, QosSpec};
use crate::config::{ConfigError, ConfigFile, GridSpec, StrategyName};
use crate::effective::{effective_rate, solve_alpha, EvalOptions, StrategyKind, StrategyModel};
use crate::error::Error;
use crate::fbl::{coding_rate, coding_rate_parallel, coding_rate_power_adapted, error_prob_fixed_rate};
use crate::figures::{self, FigureBase, FIGURE_IDS};
use crate::numerics::{Probability, QuadratureScheme, QuadratureSpec};
use crate::optimize::{optimal_eps, optimal_fixed_rate, sweep, SweepAxis, SweepMode, SweepSpec, SweepValue};
use crate::output::{Cell, Format, Table};
use crate::queuesim::{simulate_queue, SimConfig};

#[derive(Parser, Debug)]
#[command(
    name = "effrate",
    version,
    about = "Effective rate of block-fading links with finite-blocklength codes"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Average SNR in dB [default: 0].
    #[arg(long, global = true, allow_hyphen_values = true, value_name = "DB")]
    pub snr_db: Option<f64>,
    /// Average SNR, linear.
    #[arg(long, global = true)]
    pub snr: Option<f64>,
    /// Blocklength in channel uses [default: 1000].
    #[arg(long, global = true)]
    pub m: Option<u64>,
    /// QoS exponent, 1/bit [default: 0].
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Block error probability, in (0, 1).
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Fixed transmission rate, bits per channel use.
    #[arg(long, global = true)]
    pub rate_fixed: Option<f64>,
    /// Transmission strategy [default: variable].
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyName>,
    /// Expectation rule over the fading [default: adaptive].
    #[arg(long, global = true, value_enum)]
    pub quadrature: Option<QuadratureScheme>,
    /// Initial panels (adaptive) or nodes (gauss-laguerre).
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Replace negative coding rates by zero.
    #[arg(long, global = true)]
    pub clamp_nonnegative: bool,
    /// Simulation seed [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulated blocks per replica [default: 1000000].
    #[arg(long, global = true)]
    pub blocks: Option<u64>,
    /// Output file [default: stdout].
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format [default: csv].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Effective rate at one operating point.
    Rate(RateArgs),
    /// Optimal eps (or fixed rate) and the resulting effective rate.
    Optimize,
    /// Effective rate or optimum over a grid of one parameter.
    Sweep(SweepArgs),
    /// Dataset behind one figure (ids 1 to 13).
    Figure(FigureArgs),
    /// Buffer simulation and fitted queue-tail exponent.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Default)]
pub struct RateArgs {
    /// Also report the coding rate (or fixed-rate block error) at this fading power.
    #[arg(long)]
    pub z: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Option<SweepAxis>,
    /// `a,b,c`, `lin:lo:hi:n` or `log:lo:hi:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// [default: evaluate]
    #[arg(long, value_enum)]
    pub mode: Option<SweepMode>,
}

#[derive(Args, Debug, Default)]
pub struct FigureArgs {
    pub id: Option<u8>,
    /// List the figure ids instead.
    #[arg(long)]
    pub list: bool,
}

#[derive(Args, Debug, Default)]
pub struct SimulateArgs {
    /// Constant arrivals, bits per block.
    #[arg(long, conflicts_with = "arrival_theta")]
    pub arrival: Option<f64>,
    /// Arrivals at `m R_E(theta)` of the strategy; without --eps/--rate-fixed
    /// the strategy parameter is first optimized at this theta.
    #[arg(long)]
    pub arrival_theta: Option<f64>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Tail grid spacing, bits.
    #[arg(long)]
    pub bin_bits: Option<f64>,
    /// Write the tail histogram (q_bits,count_ge,p_ge) here.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("unstable queue: {0}")]
    Unstable(String),
    #[error("output failed: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Model(Error::Domain { .. }) => 2,
            CliError::Model(_) => 3,
            CliError::Unstable(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Flags layered over the config file over built-in defaults.
struct Settings {
    flags: CommonArgs,
    file: ConfigFile,
}

impl Settings {
    fn load(flags: CommonArgs) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        if flags.snr_db.is_some() && flags.snr.is_some() {
            return Err(usage("give either --snr-db or --snr, not both"));
        }
        if file.snr_db.is_some() && file.snr.is_some() {
            return Err(usage("config sets both snr_db and snr"));
        }
        Ok(Settings { flags, file })
    }

    fn snr(&self) -> f64 {
        let f = &self.flags;
        match (f.snr_db, f.snr, self.file.snr_db, self.file.snr) {
            (Some(db), ..) => snr_from_db(db),
            (None, Some(s), ..) => s,
            (None, None, Some(db), _) => snr_from_db(db),
            (None, None, None, Some(s)) => s,
            _ => 1.0,
        }
    }

    /// SNR in dB as given, so echoed values are not round-tripped.
    fn snr_db(&self) -> f64 {
        let f = &self.flags;
        match (f.snr_db, f.snr, self.file.snr_db) {
            (Some(db), ..) => db,
            (None, None, Some(db)) if self.file.snr.is_none() => db,
            _ => snr_to_db(self.snr()),
        }
    }

    fn params(&self) -> Result<ChannelParams, CliError> {
        let m = self.flags.m.or(self.file.m).unwrap_or(1000);
        Ok(ChannelParams::rayleigh(self.snr(), m)?)
    }

    fn theta(&self) -> Option<f64> {
        self.flags.theta.or(self.file.theta)
    }

    fn qos(&self) -> Result<QosSpec, CliError> {
        Ok(QosSpec::new(self.theta().unwrap_or(0.0))?)
    }

    fn options(&self) -> Result<EvalOptions, CliError> {
        let scheme = self
            .flags
            .quadrature
            .or(self.file.quadrature)
            .unwrap_or(QuadratureScheme::Adaptive);
        let mut quadrature = match scheme {
            QuadratureScheme::Adaptive => QuadratureSpec::default(),
            QuadratureScheme::GaussLaguerre => QuadratureSpec::gauss_laguerre(64),
        };
        if let Some(n) = self.flags.nodes.or(self.file.nodes) {
            quadrature.node_count = n;
        }
        if let (Some(t), QuadratureScheme::Adaptive) = (self.file.tolerance, scheme) {
            quadrature.tolerance = t;
        }
        quadrature.validate()?;
        Ok(EvalOptions {
            quadrature,
            clamp_nonnegative: self.flags.clamp_nonnegative || self.file.clamp_nonnegative.unwrap_or(false),
        })
    }

    fn strategy_name(&self) -> StrategyName {
        self.flags
            .strategy
            .or(self.file.strategy)
            .unwrap_or(StrategyName::Variable)
    }

    fn eps(&self) -> Option<f64> {
        self.flags.eps.or(self.file.eps)
    }

    fn rate_fixed(&self) -> Option<f64> {
        self.flags.rate_fixed.or(self.file.rate_fixed)
    }

    /// The configured strategy, if its parameter is given.
    fn strategy_opt(&self) -> Result<Option<StrategyModel>, CliError> {
        let name = self.strategy_name();
        let kind = StrategyKind::from(name);
        let value = if kind == StrategyKind::FixedRate {
            self.rate_fixed()
        } else {
            self.eps()
        };
        let Some(value) = value else { return Ok(None) };
        if kind != StrategyKind::FixedRate {
            Probability::open(value)?;
        }
        Ok(Some(StrategyModel::with_parameter(kind, value)?))
    }

    fn strategy(&self) -> Result<StrategyModel, CliError> {
        self.strategy_opt()?.ok_or_else(|| {
            let flag = if self.strategy_name() == StrategyName::Fixed {
                "--rate-fixed"
            } else {
                "--eps"
            };
            usage(format!("{flag} is required for the {:?} strategy", self.strategy_name()).to_lowercase())
        })
    }

    fn format(&self) -> Format {
        self.flags.format.or(self.file.format).unwrap_or_default()
    }

    fn emit(&self, table: &Table) -> Result<(), CliError> {
        match self.flags.out.as_ref().or(self.file.out.as_ref()) {
            Some(path) => {
                let mut w = BufWriter::new(File::create(path)?);
                table.write(self.format(), &mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                table.write(self.format(), &mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn strategy_label(kind: StrategyKind) -> &'static str {
    match kind {
        StrategyKind::VariableRate => "variable",
        StrategyKind::FixedRate => "fixed",
        StrategyKind::PowerAdapted => "power",
        StrategyKind::ParallelPair => "parallel",
    }
}

fn eps_cell(s: &StrategyModel) -> (Cell, Cell) {
    match s.kind() {
        StrategyKind::FixedRate => (Cell::Missing, s.parameter().into()),
        _ => (s.parameter().into(), Cell::Missing),
    }
}

fn cmd_rate(settings: &Settings, args: &RateArgs, file: &ConfigFile) -> Result<Table, CliError> {
    let params = settings.params()?;
    let qos = settings.qos()?;
    let opts = settings.options()?;
    let strategy = settings.strategy()?;
    let result = effective_rate(&strategy, &params, &qos, &opts)?;
    let z = args.z.or(file.rate.z);
    let (mut rbar, mut block_error) = (Cell::Missing, Cell::Missing);
    if let Some(z) = z {
        match strategy {
            StrategyModel::VariableRate { eps } => rbar = coding_rate(z, &params, eps)?.0.into(),
            StrategyModel::ParallelPair { eps } => rbar = coding_rate_parallel(z, &params, eps)?.0.into(),
            StrategyModel::PowerAdapted { eps } => {
                let policy = solve_alpha(&params, &qos, &opts)?;
                rbar = coding_rate_power_adapted(z, policy.mu(z), &params, eps)?.0.into();
            }
            StrategyModel::FixedRate { rate_fixed } => {
                block_error = error_prob_fixed_rate(z, &params, rate_fixed)?.value().into();
            }
        }
    }
    let (eps, rate_fixed) = eps_cell(&strategy);
    let mut t = Table::new([
        "strategy",
        "eps",
        "rate_fixed_bits_per_cu",
        "snr_db",
        "m",
        "theta_per_bit",
        "z",
        "rbar_at_z_bits_per_cu",
        "block_error_at_z",
        "R_E_bits_per_cu",
        "quadrature_evaluations",
        "solver_iterations",
    ]);
    t.push(vec![
        strategy_label(strategy.kind()).into(),
        eps,
        rate_fixed,
        settings.snr_db().into(),
        params.blocklength_m.into(),
        qos.theta.into(),
        z.into(),
        rbar,
        block_error,
        result.rate.into(),
        (result.diagnostics.quadrature_evaluations as u64).into(),
        (result.diagnostics.solver_iterations as u64).into(),
    ]);
    Ok(t)
}

fn optimum_columns(kind: StrategyKind) -> [&'static str; 2] {
    if kind == StrategyKind::FixedRate {
        ["rate_fixed_star_bits_per_cu", "R_E_bits_per_cu"]
    } else {
        ["eps_star", "R_E_bits_per_cu"]
    }
}

fn cmd_optimize(settings: &Settings) -> Result<Table, CliError> {
    let params = settings.params()?;
    let qos = settings.qos()?;
    let opts = settings.options()?;
    let kind = StrategyKind::from(settings.strategy_name());
    let r = match kind {
        StrategyKind::FixedRate => optimal_fixed_rate(&params, &qos, &opts)?,
        _ => optimal_eps(kind, &params, &qos, &opts)?,
    };
    let [arg_col, value_col] = optimum_columns(kind);
    let mut t = Table::new([
        "strategy",
        "snr_db",
        "m",
        "theta_per_bit",
        arg_col,
        value_col,
        "iterations",
        "bracket_lo",
        "bracket_hi",
    ]);
    t.push(vec![
        strategy_label(kind).into(),
        settings.snr_db().into(),
        params.blocklength_m.into(),
        qos.theta.into(),
        r.arg.into(),
        r.value.into(),
        (r.iterations as u64).into(),
        r.bracket.0.into(),
        r.bracket.1.into(),
    ]);
    Ok(t)
}

fn axis_column(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Theta => "theta_per_bit",
        SweepAxis::M => "m",
        SweepAxis::SnrDb => "snr_db",
        SweepAxis::Eps => "eps",
        SweepAxis::RateFixed => "rate_fixed_bits_per_cu",
    }
}

fn cmd_sweep(settings: &Settings, args: &SweepArgs, file: &ConfigFile) -> Result<Table, CliError> {
    let axis = args
        .axis
        .or(file.sweep.axis)
        .ok_or_else(|| usage("--axis is required (theta, m, snr_db, eps, rate_fixed)"))?;
    let grid = match (&args.grid, &file.sweep.grid) {
        (Some(s), _) => s.parse::<GridSpec>()?,
        (None, Some(g)) => g.clone(),
        (None, None) => return Err(usage("--grid is required")),
    }
    .points()?;
    let mode = args.mode.or(file.sweep.mode).unwrap_or(SweepMode::Evaluate);
    let kind = StrategyKind::from(settings.strategy_name());
    let parameter_swept = matches!(axis, SweepAxis::Eps | SweepAxis::RateFixed);
    let strategy = if mode == SweepMode::Optimize || parameter_swept {
        // the template parameter is overwritten or unused
        match settings.strategy_opt()? {
            Some(s) => s,
            None => StrategyModel::with_parameter(kind, if kind == StrategyKind::FixedRate { 1.0 } else { 0.5 })?,
        }
    } else {
        settings.strategy()?
    };
    let spec = SweepSpec {
        axis,
        grid,
        params: settings.params()?,
        qos: settings.qos()?,
        strategy,
        mode,
        options: settings.options()?,
    };
    let rows = sweep(&spec)?;
    let mut t = match mode {
        SweepMode::Evaluate => Table::new([axis_column(axis), "R_E_bits_per_cu", "quadrature_evaluations", "error"]),
        SweepMode::Optimize => {
            let [arg_col, value_col] = optimum_columns(kind);
            Table::new([axis_column(axis), arg_col, value_col, "iterations", "error"])
        }
    };
    for row in rows {
        let x: Cell = if axis == SweepAxis::M {
            (row.axis_value.round() as u64).into()
        } else {
            row.axis_value.into()
        };
        t.push(match (mode, row.outcome) {
            (_, Ok(SweepValue::Rate(r))) => vec![
                x,
                r.rate.into(),
                (r.diagnostics.quadrature_evaluations as u64).into(),
                Cell::Missing,
            ],
            (_, Ok(SweepValue::Optimum(o))) => {
                vec![
                    x,
                    o.arg.into(),
                    o.value.into(),
                    (o.iterations as u64).into(),
                    Cell::Missing,
                ]
            }
            (SweepMode::Evaluate, Err(e)) => vec![x, Cell::Missing, Cell::Missing, e.to_string().into()],
            (SweepMode::Optimize, Err(e)) => {
                vec![x, Cell::Missing, Cell::Missing, Cell::Missing, e.to_string().into()]
            }
        });
    }
    Ok(t)
}

fn cmd_figure(settings: &Settings, args: &FigureArgs, file: &ConfigFile) -> Result<Table, CliError> {
    if args.list {
        let mut t = Table::new(["id", "description"]);
        for id in FIGURE_IDS {
            t.push(vec![
                (id as u64).into(),
                figures::describe(id).unwrap_or_default().into(),
            ]);
        }
        return Ok(t);
    }
    let id = args
        .id
        .or(file.figure.id)
        .ok_or_else(|| usage("figure id required (1 to 13); --list shows them"))?;
    if !FIGURE_IDS.contains(&id) {
        return Err(usage(format!("unknown figure id {id}; expected 1 to 13")));
    }
    let base = FigureBase {
        params: settings.params()?,
        options: settings.options()?,
    };
    Ok(figures::figure(id, &base)?)
}

fn cmd_simulate(settings: &Settings, args: &SimulateArgs, file: &ConfigFile) -> Result<Table, CliError> {
    let sim = &file.simulate;
    let params = settings.params()?;
    let opts = settings.options()?;
    let kind = StrategyKind::from(settings.strategy_name());
    let arrival_theta = args.arrival_theta.or(if args.arrival.is_some() {
        None
    } else {
        sim.arrival_theta
    });
    let (strategy, qos, arrival) = match (args.arrival.or(sim.arrival), arrival_theta) {
        (_, Some(t)) => {
            let qos = QosSpec::new(t)?;
            let strategy = match settings.strategy_opt()? {
                Some(s) => s,
                None => {
                    let best = match kind {
                        StrategyKind::FixedRate => optimal_fixed_rate(&params, &qos, &opts)?,
                        _ => optimal_eps(kind, &params, &qos, &opts)?,
                    };
                    StrategyModel::with_parameter(kind, best.arg)?
                }
            };
            let rate = effective_rate(&strategy, &params, &qos, &opts)?.rate;
            (strategy, qos, params.m() * rate)
        }
        (Some(a), None) => (settings.strategy()?, settings.qos()?, a),
        (None, None) => return Err(usage("give --arrival (bits per block) or --arrival-theta")),
    };
    let blocks = settings.flags.blocks.or(sim.blocks).unwrap_or(1_000_000);
    let config = SimConfig {
        strategy,
        params,
        qos,
        arrival_bits_per_block: arrival,
        num_blocks: blocks,
        warmup_blocks: args.warmup.or(sim.warmup).unwrap_or((blocks / 100).min(10_000)),
        seed: settings.flags.seed.or(sim.seed).unwrap_or(0),
        replicas: args.replicas.or(sim.replicas).unwrap_or(1),
        bin_bits: args.bin_bits.or(sim.bin_bits),
        options: opts,
    };
    let trace = simulate_queue(&config)?;
    if let Some(path) = args.trace.as_ref().or(sim.trace.as_ref()) {
        let mut w = BufWriter::new(File::create(path)?);
        trace.write_csv(&mut w)?;
        w.flush()?;
    }
    let status = if trace.unstable {
        "unstable"
    } else if arrival == 0.0 {
        "empty tail"
    } else if trace.decay.is_none() {
        "insufficient tail"
    } else {
        "ok"
    };
    let (eps, rate_fixed) = eps_cell(&strategy);
    let fit = trace.decay;
    let mut t = Table::new([
        "strategy",
        "eps",
        "rate_fixed_bits_per_cu",
        "arrival_bits_per_block",
        "mean_service_bits_per_block",
        "observed_blocks",
        "mean_queue_bits",
        "drained_fraction",
        "theta_hat_per_bit",
        "theta_hat_stderr_per_bit",
        "fit_q_lo_bits",
        "fit_q_hi_bits",
        "fit_points",
        "status",
    ]);
    t.push(vec![
        strategy_label(strategy.kind()).into(),
        eps,
        rate_fixed,
        arrival.into(),
        trace.mean_service_bits.into(),
        trace.observed_blocks.into(),
        trace.mean_queue.into(),
        trace.drained_fraction.into(),
        fit.map(|f| f.theta_hat).into(),
        fit.map(|f| f.stderr).into(),
        fit.map(|f| f.q_lo).into(),
        fit.map(|f| f.q_hi).into(),
        fit.map(|f| f.points as u64).into(),
        status.into(),
    ]);
    if trace.unstable {
        settings.emit(&t)?;
        return Err(CliError::Unstable(format!(
            "arrival {arrival:.3} bits/block against mean service {:.3} bits/block",
            trace.mean_service_bits
        )));
    }
    Ok(t)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let settings = Settings::load(cli.common)?;
    let file = settings.file.clone();
    let table = match &cli.command {
        Command::Rate(a) => cmd_rate(&settings, a, &file)?,
        Command::Optimize => cmd_optimize(&settings)?,
        Command::Sweep(a) => cmd_sweep(&settings, a, &file)?,
        Command::Figure(a) => cmd_figure(&settings, a, &file)?,
        Command::Simulate(a) => cmd_simulate(&settings, a, &file)?,
    };
    settings.emit(&table)
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
