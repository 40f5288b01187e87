//! Run configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! seed = 42
//! out = "results"
//! periods = ["full", "pre-ETS", { name = "late", start = 2015, end = 2022 }]
//! window_length = 5
//! bins = 20
//! bootstrap = 500
//! window_bootstrap = 200
//! average_periods = ["pre-ETS", "ETS-3"]
//! formats = ["table", "json"]
//!
//! [input]
//! emissions = "emissions.csv"
//! gdp = "gdp.csv"
//! # or: combined = "panel.csv"
//!
//! [years]
//! start = 1990
//! end = 2022
//! ```
//!
//! Relative paths in the file are resolved against the file's directory.

use std::path::{Path, PathBuf};

use emission_dynamics::convergence::{DEFAULT_BOOTSTRAP_REPLICATES, MIN_BOOTSTRAP_REPLICATES};
use emission_dynamics::panel::PeriodDefinition;
use emission_dynamics::scaling::DEFAULT_BINS;
use emission_dynamics::windows::{DEFAULT_WINDOW_BOOTSTRAP, DEFAULT_WINDOW_LENGTH};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {}: {source}", path.display())]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub emissions: Option<PathBuf>,
    pub gdp: Option<PathBuf>,
    pub combined: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PeriodSpec {
    Named(String),
    Custom { name: String, start: i32, end: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// The per-period and per-window CSV tables.
    Table,
    /// `report.json` with every estimate.
    Json,
}

/// The config file as written.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub input: InputSection,
    pub years: Option<YearRange>,
    pub periods: Option<Vec<PeriodSpec>>,
    pub window_length: Option<usize>,
    pub bins: Option<usize>,
    pub bootstrap: Option<usize>,
    pub window_bootstrap: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub average_periods: Option<Vec<String>>,
    pub formats: Option<Vec<OutputFormat>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: ConfigFile = toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        rebase(&mut cfg.input.emissions);
        rebase(&mut cfg.input.gdp);
        rebase(&mut cfg.input.combined);
        rebase(&mut cfg.out);
        Ok(cfg)
    }
}

/// Values given on the command line; each replaces the config file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input_emissions: Option<PathBuf>,
    pub input_gdp: Option<PathBuf>,
    pub input_combined: Option<PathBuf>,
    pub periods: Option<Vec<PeriodSpec>>,
    pub window_length: Option<usize>,
    pub bins: Option<usize>,
    pub bootstrap: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inputs {
    Separate { emissions: PathBuf, gdp: PathBuf },
    Combined(PathBuf),
}

impl Inputs {
    /// `(role, path)` pairs, for the manifest.
    pub fn files(&self) -> Vec<(&'static str, &Path)> {
        match self {
            Inputs::Separate { emissions, gdp } => vec![("emissions", emissions), ("gdp", gdp)],
            Inputs::Combined(p) => vec![("combined", p)],
        }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Inputs,
    pub years: Option<YearRange>,
    pub periods: Vec<PeriodDefinition>,
    pub window_length: usize,
    pub n_bins: usize,
    /// Bootstrap replicates per period.
    pub bootstrap: usize,
    /// Bootstrap replicates per moving window.
    pub window_bootstrap: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Periods compared in `period_averages.csv`. Defaults to pre-ETS and
    /// ETS-3 when both are requested, else the first and last requested.
    pub average_periods: [PeriodDefinition; 2],
    pub formats: Vec<OutputFormat>,
}

/// Parses `name` (a canonical period) or `name=start-end`.
pub fn parse_period(text: &str) -> Result<PeriodSpec, ConfigError> {
    let text = text.trim();
    match text.split_once('=') {
        None => Ok(PeriodSpec::Named(text.to_string())),
        Some((name, range)) => {
            let bad = || ConfigError::Invalid(format!("period {text:?}: expected name=START-END"));
            let (a, b) = range.split_once('-').ok_or_else(bad)?;
            Ok(PeriodSpec::Custom {
                name: name.trim().to_string(),
                start: a.trim().parse().map_err(|_| bad())?,
                end: b.trim().parse().map_err(|_| bad())?,
            })
        }
    }
}

fn resolve_period(spec: &PeriodSpec) -> Result<PeriodDefinition, ConfigError> {
    match spec {
        PeriodSpec::Named(name) => PeriodDefinition::canonical_by_name(name).ok_or_else(|| {
            let known: Vec<String> = PeriodDefinition::canonical().into_iter().map(|p| p.name).collect();
            ConfigError::Invalid(format!("unknown period {name:?}; canonical periods are {}", known.join(", ")))
        }),
        PeriodSpec::Custom { name, start, end } => {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(ConfigError::Invalid(format!(
                    "period name {name:?} must be non-empty and use only letters, digits, '-', '_' or '.'"
                )));
            }
            PeriodDefinition::new(name.clone(), *start, *end).map_err(|e| ConfigError::Invalid(e.to_string()))
        }
    }
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, over: Overrides) -> Result<Self, ConfigError> {
        let emissions = over.input_emissions.or(file.input.emissions);
        let gdp = over.input_gdp.or(file.input.gdp);
        let combined = over.input_combined.or(file.input.combined);
        let inputs = match (emissions, gdp, combined) {
            (Some(e), Some(g), None) => Inputs::Separate { emissions: e, gdp: g },
            (None, None, Some(c)) => Inputs::Combined(c),
            (_, _, Some(_)) => {
                return Err(ConfigError::Invalid(
                    "give either a combined input or separate emissions and GDP inputs, not both".into(),
                ))
            }
            _ => {
                return Err(ConfigError::Invalid(
                    "inputs missing: need emissions and GDP files, or a combined file".into(),
                ))
            }
        };
        for (role, path) in inputs.files() {
            if !path.is_file() {
                return Err(ConfigError::Invalid(format!("{role} input {} does not exist", path.display())));
            }
        }

        let seed = over
            .seed
            .or(file.seed)
            .ok_or_else(|| ConfigError::Invalid("seed is required (bootstrap and fit fallbacks are stochastic)".into()))?;
        let out = over
            .out
            .or(file.out)
            .ok_or_else(|| ConfigError::Invalid("output directory (out) is required".into()))?;

        let periods = match over.periods.or(file.periods) {
            Some(specs) => specs.iter().map(resolve_period).collect::<Result<Vec<_>, _>>()?,
            None => PeriodDefinition::canonical(),
        };
        if periods.is_empty() {
            return Err(ConfigError::Invalid("no periods requested".into()));
        }
        for (k, p) in periods.iter().enumerate() {
            if periods[..k].iter().any(|q| q.name == p.name) {
                return Err(ConfigError::Invalid(format!("period {:?} listed twice", p.name)));
            }
        }

        let average_periods = match file.average_periods {
            Some(names) => {
                let defs = names
                    .iter()
                    .map(|n| {
                        periods
                            .iter()
                            .find(|p| &p.name == n)
                            .cloned()
                            .map_or_else(|| resolve_period(&PeriodSpec::Named(n.clone())), Ok)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                <[PeriodDefinition; 2]>::try_from(defs)
                    .map_err(|_| ConfigError::Invalid("average_periods must name exactly two periods".into()))?
            }
            None => {
                let (pre, ets3) = (PeriodDefinition::pre_ets(), PeriodDefinition::ets3());
                if periods.contains(&pre) && periods.contains(&ets3) {
                    [pre, ets3]
                } else {
                    [periods[0].clone(), periods[periods.len() - 1].clone()]
                }
            }
        };

        let window_length = over.window_length.or(file.window_length).unwrap_or(DEFAULT_WINDOW_LENGTH);
        if window_length == 0 {
            return Err(ConfigError::Invalid("window_length must be positive".into()));
        }
        let n_bins = over.bins.or(file.bins).unwrap_or(DEFAULT_BINS);
        if n_bins < 3 {
            return Err(ConfigError::Invalid(format!("bins must be at least 3, got {n_bins}")));
        }
        let bootstrap = over.bootstrap.or(file.bootstrap).unwrap_or(DEFAULT_BOOTSTRAP_REPLICATES);
        let window_bootstrap = file.window_bootstrap.unwrap_or(DEFAULT_WINDOW_BOOTSTRAP.min(bootstrap));
        for (name, b) in [("bootstrap", bootstrap), ("window_bootstrap", window_bootstrap)] {
            if b < MIN_BOOTSTRAP_REPLICATES {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be at least {MIN_BOOTSTRAP_REPLICATES}, got {b}"
                )));
            }
        }
        if let Some(y) = file.years {
            if y.start > y.end {
                return Err(ConfigError::Invalid(format!("years: start {} after end {}", y.start, y.end)));
            }
        }
        let mut formats = file.formats.unwrap_or_else(|| vec![OutputFormat::Table, OutputFormat::Json]);
        formats.sort_by_key(|f| *f as u8);
        formats.dedup();

        Ok(Self {
            inputs,
            years: file.years,
            periods,
            window_length,
            n_bins,
            bootstrap,
            window_bootstrap,
            seed,
            out,
            average_periods,
            formats,
        })
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}
