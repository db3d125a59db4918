//! Declarative run configuration.
//!
//! A run is reproducible from a committed TOML file plus the CLI flags that
//! override it; flags always win. The `report` subcommand drives the whole
//! pipeline from one such file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use ecolife::dataset::io::DatasetFormat;
use ecolife::dataset::KindFilter;
use ecolife::date::{Cadence, Day};

use crate::CliError;

pub const FIXTURE_STORE_ENV: &str = "ECOLIFE_FIXTURE_STORE";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub beta: Option<Day>,
    pub trust_window: Option<Window>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub correct: CorrectSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub from: Day,
    pub to: Day,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub mode: Option<String>,
    pub fixture_store: Option<PathBuf>,
    pub timeout_secs: Option<u64>,
    pub retries: Option<u32>,
    pub repeat: Option<u32>,
    pub successors: Option<PathBuf>,
    pub phrases: Option<Vec<String>>,
    pub phrases_version: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectSection {
    pub kind_filter: Option<KindFilter>,
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub cadence: Option<Cadence>,
    pub rq1_cadence: Option<Cadence>,
    pub range: Option<Window>,
    pub scenario: Option<String>,
    pub reference_date: Option<Day>,
    pub n_boot: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub input: Option<PathBuf>,
    pub format: Option<DatasetFormat>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let raw = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        RunConfig::from_toml_str(&raw)
            .map_err(|e| CliError::usage(format!("invalid config `{}`: {e}", path.display())))
    }

    pub fn from_toml_str(raw: &str) -> Result<RunConfig, toml::de::Error> {
        toml::from_str(raw)
    }

    pub fn load_opt(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
        match path {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::default()),
        }
    }
}

/// Parse `FROM:TO` (both ISO dates).
pub fn parse_window(raw: &str) -> Result<(Day, Day), String> {
    let (from, to) = raw
        .split_once(':')
        .ok_or_else(|| format!("expected FROM:TO, got `{raw}`"))?;
    let from = Day::parse_iso(from).map_err(|e| e.to_string())?;
    let to = Day::parse_iso(to).map_err(|e| e.to_string())?;
    if from > to {
        return Err(format!("window start {from} is after end {to}"));
    }
    Ok((from, to))
}
