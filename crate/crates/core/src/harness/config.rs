use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alignment::CalibrationSpec;
use crate::data::{generate_synthetic_population, load_population, ColumnMap, PopulationFrame, SyntheticParams};
use crate::design::SampleDraw;
use crate::indicators::IndicatorKind;
use crate::pooling::{CombineMode, WeightMode};
use crate::{Error, Result};

/// Where the population comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationSource {
    File {
        path: PathBuf,
        #[serde(default)]
        columns: ColumnMap,
    },
    Synthetic(SyntheticParams),
}

impl Default for PopulationSource {
    fn default() -> Self {
        PopulationSource::Synthetic(SyntheticParams::default())
    }
}

impl PopulationSource {
    pub fn load(&self) -> Result<PopulationFrame> {
        match self {
            PopulationSource::File { path, columns } => load_population(path, columns),
            PopulationSource::Synthetic(params) => generate_synthetic_population(params),
        }
    }
}

/// Calibration settings shared by both samples. The auxiliary totals are
/// always taken from the loaded population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    /// Include an intercept column calibrated to the population size.
    pub intercept: bool,
    /// Design effects d₁, d₂.
    pub design_effects: [f64; 2],
    /// Constant distance factor q applied to every unit.
    pub q: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            intercept: true,
            design_effects: [1.0, 1.0],
            q: 1.0,
        }
    }
}

fn default_replications() -> usize {
    1000
}

fn default_seed() -> u64 {
    1
}

fn default_indicators() -> Vec<IndicatorKind> {
    IndicatorKind::HEADLINE.to_vec()
}

fn default_weight_modes() -> Vec<WeightMode> {
    WeightMode::ALL.to_vec()
}

fn default_combine_modes() -> Vec<CombineMode> {
    CombineMode::ALL.to_vec()
}

fn default_parallel() -> bool {
    true
}

/// A Monte Carlo scenario. A missing `n_h2` means a single-sample run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub population: PopulationSource,
    pub n_h1: usize,
    #[serde(default)]
    pub n_h2: Option<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_indicators")]
    pub indicators: Vec<IndicatorKind>,
    #[serde(default = "default_weight_modes")]
    pub weight_modes: Vec<WeightMode>,
    #[serde(default = "default_combine_modes")]
    pub combine_modes: Vec<CombineMode>,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

impl ScenarioConfig {
    pub fn single(population: PopulationSource, n_h: usize, replications: usize, seed: u64) -> Self {
        ScenarioConfig {
            population,
            n_h1: n_h,
            n_h2: None,
            replications,
            seed,
            indicators: default_indicators(),
            weight_modes: vec![WeightMode::Sampling],
            combine_modes: Vec::new(),
            calibration: CalibrationConfig::default(),
            parallel: true,
        }
    }

    pub fn pooling(population: PopulationSource, n_h1: usize, n_h2: usize, replications: usize, seed: u64) -> Self {
        ScenarioConfig {
            n_h2: Some(n_h2),
            weight_modes: default_weight_modes(),
            combine_modes: default_combine_modes(),
            ..Self::single(population, n_h1, replications, seed)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid scenario config: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks that do not need the population.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.n_h1 < 2 || self.n_h2.is_some_and(|n| n < 2) {
            return Err(Error::Config(
                "each sample needs at least 2 households for a variance estimate".into(),
            ));
        }
        let pooled = self.n_h2.is_some() && !self.indicators.is_empty();
        if pooled && (self.weight_modes.is_empty() || self.combine_modes.is_empty()) {
            return Err(Error::Config("pooling needs at least one weight mode and one combine mode".into()));
        }
        let c = &self.calibration;
        if c.design_effects.iter().chain([&c.q]).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("design effects and q must be positive".into()));
        }
        Ok(())
    }

    /// Checks against the loaded population.
    pub fn validate_against(&self, frame: &PopulationFrame) -> Result<()> {
        self.validate()?;
        let h = frame.household_count();
        let needed = self.n_h1 + self.n_h2.unwrap_or(0);
        if needed > h {
            return Err(Error::Config(format!(
                "scenario needs {needed} households but the population has {h}"
            )));
        }
        Ok(())
    }
}

/// Population quantities the calibration totals are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationTotals {
    pub persons: f64,
    pub aux: f64,
}

impl PopulationTotals {
    pub fn of(frame: &PopulationFrame) -> Self {
        PopulationTotals {
            persons: frame.len() as f64,
            aux: frame.aux_total(),
        }
    }
}

/// The calibration spec of one sample: optional intercept plus the
/// auxiliary variable, calibrated to population totals.
pub fn calibration_spec(
    sample: &SampleDraw,
    totals: PopulationTotals,
    config: &CalibrationConfig,
    which: usize,
) -> Result<CalibrationSpec<f64>> {
    let spec = if config.intercept {
        CalibrationSpec::intercept_and(&sample.aux, totals.persons, totals.aux)?
    } else {
        CalibrationSpec::new(sample.aux.clone(), 1, vec![totals.aux])?.with_columns(["aux"])
    };
    let spec = spec.with_design_effect(config.design_effects[which])?;
    if config.q == 1.0 {
        Ok(spec)
    } else {
        spec.with_q(vec![config.q; sample.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_uses_defaults() {
        let c = ScenarioConfig::from_json(r#"{"n_h1": 500, "n_h2": 1000}"#).unwrap();
        assert_eq!(c.replications, 1000);
        assert_eq!(c.seed, 1);
        assert_eq!(c.indicators, IndicatorKind::HEADLINE.to_vec());
        assert_eq!(c.weight_modes.len(), 3);
        assert_eq!(c.population, PopulationSource::default());
        c.validate().unwrap();
    }

    #[test]
    fn file_source_parses() {
        let c = ScenarioConfig::from_json(
            r#"{"population": {"kind": "file", "path": "eusilc.csv", "columns": {"household": "hid"}},
                "n_h1": 1000, "weight_modes": ["median-alignment"], "combine_modes": ["optimal"]}"#,
        )
        .unwrap();
        match c.population {
            PopulationSource::File { path, columns } => {
                assert_eq!(path, PathBuf::from("eusilc.csv"));
                assert_eq!(columns.household, "hid");
                assert_eq!(columns.income, "eqIncome");
            }
            other => panic!("unexpected source {other:?}"),
        }
        assert_eq!(c.weight_modes, vec![WeightMode::MedianAlignment]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(matches!(ScenarioConfig::from_json("{"), Err(Error::Config(_))));
        assert!(matches!(ScenarioConfig::from_json(r#"{"n_h1": 5, "bogus": 1}"#), Err(Error::Config(_))));
        let mut c = ScenarioConfig::single(PopulationSource::default(), 100, 0, 1);
        assert!(c.validate().is_err());
        c.replications = 1;
        c.n_h1 = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn oversized_scenario_is_rejected_against_the_population() {
        let frame = PopulationSource::Synthetic(SyntheticParams {
            households: 10,
            ..SyntheticParams::default()
        })
        .load()
        .unwrap();
        let c = ScenarioConfig::pooling(PopulationSource::default(), 6, 5, 1, 1);
        assert!(matches!(c.validate_against(&frame), Err(Error::Config(_))));
    }
}
