//! Run configuration: a TOML file with full command-line overrides. Flags
//! win over file values; `BLOCKSTAB_WORKERS` sets the worker default.

use blockstab::network::PeriodSpec;
use blockstab::stability::Scoping;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{0}`: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("cannot parse config `{0}`: {1}")]
    Toml(PathBuf, toml::de::Error),
    #[error("invalid k specification `{0}` (expected an integer or `scan:MIN..MAX`)")]
    BadKSpec(String),
    #[error("no input file given (flag --input or config key `input`)")]
    MissingInput,
    #[error("config defines no periods")]
    NoPeriods,
    #[error("invalid scoping `{0}` (expected `cores` or `literal`)")]
    BadScoping(String),
    #[error(transparent)]
    Periods(#[from] blockstab::network::NetworkError),
}

/// Cluster count request for one discipline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KSpec {
    Fixed(u32),
    Scan { min: u32, max: u32 },
}

pub fn parse_k_spec(raw: &str) -> Result<KSpec, ConfigError> {
    let bad = || ConfigError::BadKSpec(raw.to_string());
    if let Ok(k) = raw.parse::<u32>() {
        if k == 0 {
            return Err(bad());
        }
        return Ok(KSpec::Fixed(k));
    }
    let range = raw.strip_prefix("scan:").ok_or_else(bad)?;
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let min: u32 = lo.parse().map_err(|_| bad())?;
    let max: u32 = hi.parse().map_err(|_| bad())?;
    if min == 0 || max < min {
        return Err(bad());
    }
    Ok(KSpec::Scan { min, max })
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    replicates: Option<usize>,
    restarts: Option<usize>,
    workers: Option<usize>,
    scoping: Option<String>,
    roster: Option<PathBuf>,
    freeze_cliques: Option<bool>,
    min_clique_size: Option<usize>,
    refit_bridging: Option<bool>,
    periods: Option<Vec<PeriodSpec>>,
    k: Option<BTreeMap<String, toml::Value>>,
    thresholds: Option<ThresholdsConfig>,
    gap: Option<GapFileConfig>,
    analysis: Option<AnalysisFileConfig>,
    fields: Option<BTreeMap<String, String>>,
    regression: Option<RegressionFileConfig>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ThresholdsConfig {
    bridging_density: Option<f64>,
    transition_share: Option<f64>,
    split_min_share: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GapFileConfig {
    k_max: Option<usize>,
    reference_sets: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AnalysisFileConfig {
    k: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RegressionFileConfig {
    reference_field: Option<String>,
}

/// Command-line overrides passed down from the argument parser.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub config: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub restarts: Option<usize>,
    pub workers: Option<usize>,
    pub k: Option<String>,
}

/// Fully resolved configuration; everything the pipeline reads.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    #[serde(skip)]
    pub out: PathBuf,
    pub seed: u64,
    pub replicates: usize,
    /// 0 means automatic (by network size).
    pub restarts: usize,
    #[serde(skip)]
    pub workers: usize,
    pub scoping: Scoping,
    pub roster: Option<PathBuf>,
    pub freeze_cliques: bool,
    pub min_clique_size: usize,
    pub refit_bridging: bool,
    pub periods: Vec<PeriodSpec>,
    pub default_k: KSpec,
    pub k_overrides: BTreeMap<String, KSpec>,
    pub bridging_density: f64,
    pub transition_share: f64,
    pub split_min_share: f64,
    pub gap_k_max: usize,
    pub gap_reference_sets: usize,
    pub analysis_k: Option<usize>,
    pub fields: BTreeMap<String, String>,
    pub reference_field: String,
}

fn k_value_to_spec(value: &toml::Value) -> Result<KSpec, ConfigError> {
    match value {
        toml::Value::Integer(k) if *k > 0 => Ok(KSpec::Fixed(*k as u32)),
        toml::Value::String(s) => parse_k_spec(s),
        other => Err(ConfigError::BadKSpec(other.to_string())),
    }
}

pub fn resolve(cli: &CliOverrides) -> Result<RunConfig, ConfigError> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Io(path.clone(), e))?;
            toml::from_str(&raw).map_err(|e| ConfigError::Toml(path.clone(), e))?
        }
        None => FileConfig::default(),
    };

    let input = cli
        .input
        .clone()
        .or(file.input)
        .ok_or(ConfigError::MissingInput)?;
    let periods = file.periods.unwrap_or_default();
    if periods.is_empty() {
        return Err(ConfigError::NoPeriods);
    }
    blockstab::network::validate_periods(&periods)?;

    let scoping = match file.scoping.as_deref() {
        None | Some("cores") => Scoping::Cores,
        Some("literal") => Scoping::Literal,
        Some(other) => return Err(ConfigError::BadScoping(other.to_string())),
    };

    let mut default_k = KSpec::Fixed(1);
    let mut k_overrides = BTreeMap::new();
    if let Some(table) = &file.k {
        for (name, value) in table {
            let spec = k_value_to_spec(value)?;
            if name == "default" {
                default_k = spec;
            } else {
                k_overrides.insert(name.clone(), spec);
            }
        }
    }
    if let Some(raw) = &cli.k {
        default_k = parse_k_spec(raw)?;
    }

    let workers = cli
        .workers
        .or(file.workers)
        .or_else(|| {
            std::env::var("BLOCKSTAB_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);

    let thresholds = file.thresholds.unwrap_or_default();
    let gap = file.gap.unwrap_or_default();
    Ok(RunConfig {
        input,
        out: cli.out.clone().or(file.out).unwrap_or_else(|| "out".into()),
        seed: cli.seed.or(file.seed).unwrap_or(20100101),
        replicates: cli.replicates.or(file.replicates).unwrap_or(5000),
        restarts: cli.restarts.or(file.restarts).unwrap_or(0),
        workers,
        scoping,
        roster: file.roster,
        freeze_cliques: file.freeze_cliques.unwrap_or(false),
        min_clique_size: file.min_clique_size.unwrap_or(2),
        refit_bridging: file.refit_bridging.unwrap_or(false),
        periods,
        default_k,
        k_overrides,
        bridging_density: thresholds.bridging_density.unwrap_or(0.8),
        transition_share: thresholds.transition_share.unwrap_or(0.5),
        split_min_share: thresholds.split_min_share.unwrap_or(0.25),
        gap_k_max: gap.k_max.unwrap_or(6),
        gap_reference_sets: gap.reference_sets.unwrap_or(100),
        analysis_k: file.analysis.and_then(|a| a.k),
        fields: file.fields.unwrap_or_default(),
        reference_field: file
            .regression
            .and_then(|r| r.reference_field)
            .unwrap_or_else(|| "humanities".to_string()),
    })
}

impl RunConfig {
    pub fn k_for(&self, discipline: &str) -> &KSpec {
        self.k_overrides.get(discipline).unwrap_or(&self.default_k)
    }

    pub fn restarts_option(&self) -> Option<usize> {
        if self.restarts == 0 {
            None
        } else {
            Some(self.restarts)
        }
    }
}

/// Directory-safe discipline name.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// The manifest recorded next to the outputs. Worker count and directory
/// paths are excluded so reruns stay byte-identical.
pub fn manifest_json(cfg: &RunConfig) -> String {
    let mut value = serde_json::to_value(cfg).expect("config serializes");
    let map = value.as_object_mut().unwrap();
    map.remove("out");
    let mut text = serde_json::to_string_pretty(&value).expect("manifest serializes");
    text.push('\n');
    text
}

pub fn out_path(out: &Path, parts: &[&str]) -> PathBuf {
    let mut path = out.to_path_buf();
    for part in parts {
        path.push(part);
    }
    path
}
