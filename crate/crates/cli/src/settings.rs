//! Merging of the JSON config file with command-line flags. Flags win;
//! anything unset in both falls back to the library defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::{CommonArgs, EstimateArgs, PoolArgs, TruthArgs};
use svyalign::data::{load_population, ColumnMap, PopulationFrame, SyntheticParams};
use svyalign::harness::{CalibrationConfig, PopulationSource, ScenarioConfig};
use svyalign::indicators::IndicatorKind;
use svyalign::pooling::{CombineMode, WeightMode};
use svyalign::{Error, Result};

/// Config file layout; every key mirrors a command-line flag.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub population: Option<PathBuf>,
    pub columns: Option<ColumnMap>,
    pub synthetic: Option<SyntheticParams>,
    pub households: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub align_on: Option<String>,
    pub weights: Option<Vec<String>>,
    pub combine: Option<Vec<String>>,
    pub indicators: Option<Vec<String>>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub calibration: Option<CalibrationConfig>,
    pub parallel: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }
}

pub struct Settings {
    pub scenario: ScenarioConfig,
    /// Whether the column names were given explicitly.
    explicit_columns: bool,
    out: Option<PathBuf>,
}

fn columns(common: &CommonArgs, file: &FileConfig) -> (ColumnMap, bool) {
    let explicit = file.columns.is_some()
        || common.household_column.is_some()
        || common.income_column.is_some()
        || common.aux_column.is_some();
    let mut map = file.columns.clone().unwrap_or_default();
    if let Some(c) = &common.household_column {
        map.household = c.clone();
    }
    if let Some(c) = &common.income_column {
        map.income = c.clone();
    }
    if let Some(c) = &common.aux_column {
        map.aux = c.clone();
    }
    (map, explicit)
}

fn source(common: &CommonArgs, file: &FileConfig) -> (PopulationSource, bool) {
    let (map, explicit) = columns(common, file);
    match common.population.clone().or_else(|| file.population.clone()) {
        Some(path) => (PopulationSource::File { path, columns: map }, explicit),
        None => (
            PopulationSource::Synthetic(file.synthetic.clone().unwrap_or_default()),
            explicit,
        ),
    }
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn indicators(flag: &Option<Vec<String>>, file: &FileConfig) -> Result<Vec<IndicatorKind>> {
    match flag.as_ref().or(file.indicators.as_ref()) {
        Some(list) => parse_list(list),
        None => Ok(IndicatorKind::HEADLINE.to_vec()),
    }
}

/// `alignment` in the weight list resolves through `--align-on`.
fn weight_modes(weights: Option<&Vec<String>>, align_on: Option<&String>) -> Result<Vec<WeightMode>> {
    let aligned = match align_on.map(|s| s.trim().to_ascii_lowercase()) {
        None => None,
        Some(s) if matches!(s.as_str(), "indicator" | "own" | "target") => Some(WeightMode::OwnAlignment),
        Some(s) if s == "median" => Some(WeightMode::MedianAlignment),
        Some(s) => return Err(Error::Config(format!("--align-on must be `indicator` or `median`, got `{s}`"))),
    };
    let Some(list) = weights else {
        return Ok(match aligned {
            Some(mode) => vec![WeightMode::Sampling, mode],
            None => WeightMode::ALL.to_vec(),
        });
    };
    let mut modes = Vec::new();
    for item in list.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let mode = if item.eq_ignore_ascii_case("alignment") {
            aligned.unwrap_or(WeightMode::OwnAlignment)
        } else {
            item.parse()?
        };
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    Ok(modes)
}

impl Settings {
    pub fn for_estimate(args: &EstimateArgs, file: FileConfig) -> Result<Self> {
        let (population, explicit_columns) = source(&args.common, &file);
        let n_h = args
            .households
            .or(file.households)
            .ok_or_else(|| Error::Config("estimate needs --households <n>".into()))?;
        let mut scenario = ScenarioConfig::single(
            population,
            n_h,
            args.replications.or(file.replications).unwrap_or(1000),
            args.seed.or(file.seed).unwrap_or(1),
        );
        scenario.indicators = indicators(&args.indicators, &file)?;
        scenario.parallel = !args.serial && file.parallel.unwrap_or(true);
        scenario.validate()?;
        Ok(Settings {
            scenario,
            explicit_columns,
            out: args.out.clone().or(file.out),
        })
    }

    pub fn for_pool(args: &PoolArgs, file: FileConfig) -> Result<Self> {
        let (population, explicit_columns) = source(&args.common, &file);
        let n1 = args
            .n1
            .or(file.n1)
            .ok_or_else(|| Error::Config("pool needs --n1 <n>".into()))?;
        let n2 = args
            .n2
            .or(file.n2)
            .ok_or_else(|| Error::Config("pool needs --n2 <n>".into()))?;
        let mut scenario = ScenarioConfig::pooling(
            population,
            n1,
            n2,
            args.replications.or(file.replications).unwrap_or(1000),
            args.seed.or(file.seed).unwrap_or(1),
        );
        scenario.indicators = indicators(&args.indicators, &file)?;
        scenario.weight_modes = weight_modes(
            args.weights.as_ref().or(file.weights.as_ref()),
            args.align_on.as_ref().or(file.align_on.as_ref()),
        )?;
        if let Some(list) = args.combine.as_ref().or(file.combine.as_ref()) {
            scenario.combine_modes = parse_list::<CombineMode>(list)?;
        }
        if let Some(c) = file.calibration.clone() {
            scenario.calibration = c;
        }
        scenario.parallel = !args.serial && file.parallel.unwrap_or(true);
        scenario.validate()?;
        Ok(Settings {
            scenario,
            explicit_columns,
            out: args.out.clone().or(file.out),
        })
    }

    pub fn for_truth(args: &TruthArgs, file: FileConfig) -> Result<Self> {
        let (population, explicit_columns) = source(&args.common, &file);
        Ok(Settings {
            scenario: ScenarioConfig::single(population, 2, 1, 1),
            explicit_columns,
            out: None,
        })
    }

    /// Loads the population. Without explicit column names a file that
    /// lacks the default columns is retried with the layout `synth` writes.
    pub fn load_population(&self) -> Result<PopulationFrame> {
        match &self.scenario.population {
            PopulationSource::File { path, columns } => match load_population(path, columns) {
                Err(Error::MissingColumn(c)) if !self.explicit_columns => {
                    match load_population(path, &ColumnMap::canonical()) {
                        Err(Error::MissingColumn(_)) => Err(Error::MissingColumn(c)),
                        other => other,
                    }
                }
                other => other,
            },
            synthetic => synthetic.load(),
        }
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        self.out
            .clone()
            .ok_or_else(|| Error::Config("an output directory is required (--out <dir>)".into()))
    }
}
