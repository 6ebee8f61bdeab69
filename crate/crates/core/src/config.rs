//! Run configuration file: common keys at the top level and one table per
//! subcommand. Command-line flags override every value read here.
//!
//! ```toml
//! snr_db = 0.0
//! m = 1000
//! theta = 0.01
//! strategy = "variable"
//! eps = 0.0061
//!
//! [sweep]
//! axis = "theta"
//! grid = "log:1e-3:1:50"
//! mode = "optimize"
//!
//! [simulate]
//! arrival_theta = 0.01
//! blocks = 2500000
//! replicas = 4
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::effective::StrategyKind;
use crate::numerics::QuadratureScheme;
use crate::optimize::{SweepAxis, SweepMode};
use crate::output::Format;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid grid `{0}`: {1}")]
    Grid(String, String),
}

/// Strategy names as written on the command line and in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StrategyName {
    Variable,
    Fixed,
    Power,
    Parallel,
}

impl From<StrategyName> for StrategyKind {
    fn from(s: StrategyName) -> Self {
        match s {
            StrategyName::Variable => StrategyKind::VariableRate,
            StrategyName::Fixed => StrategyKind::FixedRate,
            StrategyName::Power => StrategyKind::PowerAdapted,
            StrategyName::Parallel => StrategyKind::ParallelPair,
        }
    }
}

/// Grid of axis values: an explicit list, or `lin:lo:hi:n` / `log:lo:hi:n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Pattern(String),
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>, ConfigError> {
        match self {
            GridSpec::Values(v) => Ok(v.clone()),
            GridSpec::Pattern(s) => parse_grid(s),
        }
    }
}

impl FromStr for GridSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_grid(s).map(|_| GridSpec::Pattern(s.to_owned()))
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |why: &str| ConfigError::Grid(s.to_owned(), why.to_owned());
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [kind @ ("lin" | "log"), lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|_| bad("point count must be an integer"))?;
            if n == 0 {
                return Err(bad("need at least one point"));
            }
            if *kind == "log" {
                if !(lo > 0.0 && hi > 0.0) {
                    return Err(bad("log grid needs positive ends"));
                }
                Ok(crate::figures::log_grid(lo, hi, n))
            } else {
                Ok(crate::figures::lin_grid(lo, hi, n))
            }
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(bad("expected `a,b,c`, `lin:lo:hi:n` or `log:lo:hi:n`")),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    /// Fading power at which to also report the coding rate.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<SweepAxis>,
    pub grid: Option<GridSpec>,
    pub mode: Option<SweepMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSection {
    pub id: Option<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Bits per block.
    pub arrival: Option<f64>,
    /// Sets the arrival to `m R_E(theta)` of the strategy.
    pub arrival_theta: Option<f64>,
    pub blocks: Option<u64>,
    pub warmup: Option<u64>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub bin_bits: Option<f64>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub snr_db: Option<f64>,
    pub snr: Option<f64>,
    pub m: Option<u64>,
    pub theta: Option<f64>,
    pub strategy: Option<StrategyName>,
    pub eps: Option<f64>,
    pub rate_fixed: Option<f64>,
    pub quadrature: Option<QuadratureScheme>,
    pub nodes: Option<usize>,
    pub tolerance: Option<f64>,
    pub clamp_nonnegative: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    #[serde(default)]
    pub rate: RateSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub figure: FigureSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let c = ConfigFile::parse(
            r#"
            snr_db = 0.0
            m = 1000
            theta = 0.01
            strategy = "parallel"
            eps = 0.01
            quadrature = "gauss-laguerre"
            nodes = 64
            format = "json"

            [sweep]
            axis = "snr_db"
            grid = [-5.0, 0.0, 5.0]
            mode = "optimize"

            [simulate]
            arrival_theta = 0.01
            replicas = 4
            "#,
        )
        .unwrap();
        assert_eq!(c.strategy, Some(StrategyName::Parallel));
        assert_eq!(c.quadrature, Some(QuadratureScheme::GaussLaguerre));
        assert_eq!(c.format, Some(Format::Json));
        assert_eq!(c.sweep.axis, Some(SweepAxis::SnrDb));
        assert_eq!(c.sweep.grid.unwrap().points().unwrap(), vec![-5.0, 0.0, 5.0]);
        assert_eq!(c.simulate.replicas, Some(4));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigFile::parse("snr_dB = 1").is_err());
        assert!(ConfigFile::parse("[sweep]\nsteps = 3").is_err());
    }

    #[test]
    fn grid_patterns() {
        assert_eq!(parse_grid("0.1, 0.2,0.3").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("lin:0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("log:1e-3:1:4").unwrap();
        assert!((g[2] - 0.1).abs() < 1e-15);
        for bad in ["log:0:1:3", "lin:0:1:0", "lin:0:1", "a,b", "lin:0:1:x"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
        assert!(matches!(
            ConfigFile::parse("[sweep]\ngrid = \"log:1e-3:1:5\"")
                .unwrap()
                .sweep
                .grid,
            Some(GridSpec::Pattern(_))
        ));
    }
}
