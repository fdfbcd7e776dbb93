//! Population microdata: CSV ingestion, household grouping and a synthetic
//! fallback population.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, weighted::WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::indicators::{self, IndicatorKind, IndicatorResult, WeightedSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PersonRecord {
    pub person_id: String,
    pub household_id: String,
    /// Equivalized income, the study variable.
    pub eq_income: f64,
    /// Auxiliary variable with a known population total.
    pub aux: f64,
}

/// Column names used to read a population file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    /// Person identifier column; row numbers are used when absent.
    pub person: Option<String>,
    pub household: String,
    pub income: String,
    pub aux: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            person: None,
            household: "db030".into(),
            income: "eqIncome".into(),
            aux: "py010n".into(),
        }
    }
}

impl ColumnMap {
    /// The layout written by [`PopulationFrame::write_csv`].
    pub fn canonical() -> Self {
        ColumnMap {
            person: Some("person_id".into()),
            household: "household_id".into(),
            income: "eq_income".into(),
            aux: "aux".into(),
        }
    }
}

/// Person records grouped by household, household-major.
///
/// Households appear in order of first appearance in the source and the
/// members of each household occupy a contiguous run of positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationFrame {
    persons: Vec<PersonRecord>,
    households: Vec<Range<usize>>,
    household_index: HashMap<String, usize>,
}

impl PopulationFrame {
    /// Groups records by household, preserving first-appearance order of
    /// households and file order within each household.
    pub fn from_records(records: Vec<PersonRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::data(0, "population has no records"));
        }
        let mut order: Vec<String> = Vec::new();
        let mut members: HashMap<String, Vec<PersonRecord>> = HashMap::new();
        for rec in records {
            if rec.household_id.is_empty() {
                return Err(Error::data(0, format!("person `{}` has an empty household id", rec.person_id)));
            }
            if !rec.eq_income.is_finite() {
                return Err(Error::data(0, format!("person `{}` has a non-finite income", rec.person_id)));
            }
            if !rec.aux.is_finite() || rec.aux < 0.0 {
                return Err(Error::data(0, format!("person `{}` has an invalid auxiliary value", rec.person_id)));
            }
            members
                .entry(rec.household_id.clone())
                .or_insert_with(|| {
                    order.push(rec.household_id.clone());
                    Vec::new()
                })
                .push(rec);
        }

        let mut persons = Vec::with_capacity(members.values().map(Vec::len).sum());
        let mut households = Vec::with_capacity(order.len());
        let mut household_index = HashMap::with_capacity(order.len());
        for (h, id) in order.into_iter().enumerate() {
            let group = members.remove(&id).expect("household recorded in order list");
            let start = persons.len();
            persons.extend(group);
            households.push(start..persons.len());
            household_index.insert(id, h);
        }
        Ok(PopulationFrame {
            persons,
            households,
            household_index,
        })
    }

    pub fn persons(&self) -> &[PersonRecord] {
        &self.persons
    }

    /// Number of persons, N.
    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    /// Number of households, H.
    pub fn household_count(&self) -> usize {
        self.households.len()
    }

    /// Person positions of household `h`.
    pub fn household(&self, h: usize) -> Range<usize> {
        self.households[h].clone()
    }

    pub fn household_ranges(&self) -> &[Range<usize>] {
        &self.households
    }

    pub fn household_by_id(&self, id: &str) -> Option<usize> {
        self.household_index.get(id).copied()
    }

    pub fn household_sizes(&self) -> Vec<usize> {
        self.households.iter().map(|r| r.len()).collect()
    }

    pub fn incomes(&self) -> Vec<f64> {
        self.persons.iter().map(|p| p.eq_income).collect()
    }

    pub fn aux_values(&self) -> Vec<f64> {
        self.persons.iter().map(|p| p.aux).collect()
    }

    pub fn aux_total(&self) -> f64 {
        self.persons.iter().map(|p| p.aux).sum()
    }

    /// Checks that every household id forms exactly one contiguous run.
    pub fn is_household_contiguous(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        let mut prev: Option<&str> = None;
        for p in &self.persons {
            if prev != Some(p.household_id.as_str()) {
                if !seen.insert(p.household_id.as_str()) {
                    return false;
                }
                prev = Some(p.household_id.as_str());
            }
        }
        true
    }

    /// Pearson correlation between the auxiliary variable and income.
    pub fn aux_income_correlation(&self) -> f64 {
        pearson(&self.aux_values(), &self.incomes())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["person_id", "household_id", "eq_income", "aux"])?;
        for p in &self.persons {
            out.write_record([
                p.person_id.as_str(),
                p.household_id.as_str(),
                &p.eq_income.to_string(),
                &p.aux.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Reads a comma-delimited population file with a header row.
pub fn load_population(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<PopulationFrame> {
    let file = std::fs::File::open(path)?;
    read_population(std::io::BufReader::new(file), columns)
}

pub fn read_population<R: Read>(reader: R, columns: &ColumnMap) -> Result<PopulationFrame> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(Error::data(1, "empty file"));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let household_col = find(&columns.household)?;
    let income_col = find(&columns.income)?;
    let aux_col = find(&columns.aux)?;
    let person_col = columns.person.as_deref().map(find).transpose()?;

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let cell = |col: usize| row.get(col).map(str::trim).unwrap_or("");
        let number = |col: usize, what: &str| -> Result<f64> {
            let raw = cell(col);
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::data(line, format!("cannot parse {what} value `{raw}`")))?;
            if !v.is_finite() {
                return Err(Error::data(line, format!("{what} value `{raw}` is not finite")));
            }
            Ok(v)
        };
        let eq_income = number(income_col, "income")?;
        let aux = number(aux_col, "auxiliary")?;
        if aux < 0.0 {
            return Err(Error::data(line, format!("auxiliary value {aux} is negative")));
        }
        let household_id = cell(household_col).to_string();
        if household_id.is_empty() {
            return Err(Error::data(line, "empty household id"));
        }
        let person_id = match person_col {
            Some(col) => cell(col).to_string(),
            None => (i + 1).to_string(),
        };
        records.push(PersonRecord {
            person_id,
            household_id,
            eq_income,
            aux,
        });
    }
    if records.is_empty() {
        return Err(Error::data(1, "file has a header but no records"));
    }
    PopulationFrame::from_records(records)
}

/// Evaluates an indicator on the whole frame with unit weights.
pub fn population_truth(frame: &PopulationFrame, kind: IndicatorKind) -> Result<IndicatorResult<f64>> {
    let series = WeightedSeries::unweighted(frame.incomes())?;
    indicators::evaluate(kind, &series)
}

/// Parameters of the synthetic household population.
///
/// Household sizes follow a categorical law on 1..=5; equivalized income is
/// log-normal and shared by all household members; the auxiliary variable is
/// a per-person log-normal linked to income through a Gaussian copula tuned
/// to the requested Pearson correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub seed: u64,
    pub households: usize,
    /// Probabilities of household sizes 1 through 5.
    pub size_probs: [f64; 5],
    pub income_log_mean: f64,
    pub income_log_sd: f64,
    pub aux_log_mean: f64,
    pub aux_log_sd: f64,
    pub aux_correlation: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            seed: 1,
            households: 6000,
            size_probs: [0.30, 0.30, 0.16, 0.16, 0.08],
            income_log_mean: 18_000f64.ln(),
            income_log_sd: 0.48,
            aux_log_mean: 14_000f64.ln(),
            aux_log_sd: 0.6,
            aux_correlation: 0.36,
        }
    }
}

pub fn generate_synthetic_population(params: &SyntheticParams) -> Result<PopulationFrame> {
    if params.households < 2 {
        return Err(Error::Config(format!(
            "synthetic population needs at least 2 households, got {}",
            params.households
        )));
    }
    if params.size_probs.iter().any(|p| !p.is_finite() || *p < 0.0) || params.size_probs.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Config("household size probabilities must be non-negative with a positive sum".into()));
    }
    for (name, sd) in [("income_log_sd", params.income_log_sd), ("aux_log_sd", params.aux_log_sd)] {
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::Config(format!("{name} must be positive, got {sd}")));
        }
    }
    if !params.income_log_mean.is_finite() || !params.aux_log_mean.is_finite() {
        return Err(Error::Config("log-means must be finite".into()));
    }
    if !(-1.0..=1.0).contains(&params.aux_correlation) {
        return Err(Error::Config(format!(
            "aux_correlation must lie in [-1, 1], got {}",
            params.aux_correlation
        )));
    }

    let latent = latent_correlation(params.aux_correlation, params.income_log_sd, params.aux_log_sd);
    let noise_scale = (1.0 - latent * latent).max(0.0).sqrt();
    let sizes = WeightedIndex::new(params.size_probs).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut records = Vec::new();
    let mut person = 0usize;
    for h in 0..params.households {
        let size = sizes.sample(&mut rng) + 1;
        let z: f64 = StandardNormal.sample(&mut rng);
        let income = (params.income_log_mean + params.income_log_sd * z).exp();
        let household_id = format!("{}", h + 1);
        for _ in 0..size {
            let e: f64 = StandardNormal.sample(&mut rng);
            let u = latent * z + noise_scale * e;
            let aux = (params.aux_log_mean + params.aux_log_sd * u).exp();
            person += 1;
            records.push(PersonRecord {
                person_id: person.to_string(),
                household_id: household_id.clone(),
                eq_income: income,
                aux,
            });
        }
    }
    PopulationFrame::from_records(records)
}

/// Latent normal correlation giving Pearson correlation `target` between two
/// log-normals with log-scale deviations `s1` and `s2`, clamped to the
/// attainable range.
fn latent_correlation(target: f64, s1: f64, s2: f64) -> f64 {
    let spread = ((s1 * s1).exp_m1() * (s2 * s2).exp_m1()).sqrt();
    let arg = 1.0 + target * spread;
    if arg <= 0.0 {
        return -1.0;
    }
    (arg.ln() / (s1 * s2)).clamp(-1.0, 1.0)
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
