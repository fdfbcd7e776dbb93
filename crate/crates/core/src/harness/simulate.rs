use rayon::prelude::*;
use serde::Serialize;

use super::config::{calibration_spec, PopulationTotals, ScenarioConfig};
use crate::data::{population_truth, PopulationFrame};
use crate::design::{draw_sample, draw_two_disjoint_samples, TwoStageDesign};
use crate::indicators::{evaluate, IndicatorKind, WeightedSeries};
use crate::linearization::linearize;
use crate::pooling::{estimate_aligned, CombineMode, WeightMode};
use crate::variance::{deville_variance_block, standard_error};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Single,
    Pooling,
}

/// One estimate of one replication. Single-sample rows leave the second
/// sample's fields and δ empty and carry no combine mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRow {
    pub replicate: usize,
    pub indicator: IndicatorKind,
    pub weight_mode: WeightMode,
    pub combine_mode: Option<CombineMode>,
    pub theta1: f64,
    pub theta2: Option<f64>,
    pub delta: Option<f64>,
    pub combined: f64,
    pub var1: f64,
    pub var2: Option<f64>,
    pub combined_var: f64,
    pub negative_weights: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    pub indicator: IndicatorKind,
    pub value: f64,
}

/// Five-number summary (type-7 quantiles) with Tukey fences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    /// Most extreme observations inside the fences.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: usize,
}

/// Aggregates over the replications of one (indicator, weight, combine) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub indicator: IndicatorKind,
    pub weight_mode: WeightMode,
    pub combine_mode: Option<CombineMode>,
    pub replications: usize,
    pub mean: f64,
    /// Monte Carlo standard deviation, denominator R − 1.
    pub mc_sd: f64,
    /// Standard error of `mean`, mc_sd/√R.
    pub mc_se: f64,
    /// Mean of the per-replication linearization standard errors.
    pub mean_lin_se: f64,
    pub mean_delta: Option<f64>,
    pub mean_negative_weights: f64,
    pub truth: Option<f64>,
    pub five: FiveNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub kind: RunKind,
    pub config: ScenarioConfig,
    pub population_size: usize,
    pub households: usize,
    pub truth: Vec<TruthRow>,
    pub rows: Vec<ReplicationRow>,
    pub summary: Vec<SummaryRow>,
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_number(values: &[f64]) -> FiveNumber {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile_type7(&s, 0.25);
    let q3 = quantile_type7(&s, 0.75);
    let iqr = q3 - q1;
    let (lower_fence, upper_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let mut inside = s.iter().copied().filter(|v| (lower_fence..=upper_fence).contains(v));
    let whisker_low = inside.clone().next().unwrap_or(f64::NAN);
    let whisker_high = inside.next_back().unwrap_or(f64::NAN);
    FiveNumber {
        min: s.first().copied().unwrap_or(f64::NAN),
        q1,
        median: quantile_type7(&s, 0.5),
        q3,
        max: s.last().copied().unwrap_or(f64::NAN),
        lower_fence,
        upper_fence,
        whisker_low,
        whisker_high,
        outliers: s.iter().filter(|v| !(lower_fence..=upper_fence).contains(*v)).count(),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with denominator n − 1 (0 for a single value).
pub fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn truth_rows(frame: &PopulationFrame, indicators: &[IndicatorKind]) -> Result<Vec<TruthRow>> {
    indicators
        .iter()
        .map(|&k| Ok(TruthRow { indicator: k, value: population_truth(frame, k)?.value }))
        .collect()
}

/// Runs `per_replicate` for 0..R, in parallel or not, keeping replicate order.
fn run_replicates<F>(config: &ScenarioConfig, per_replicate: F) -> Result<Vec<ReplicationRow>>
where
    F: Fn(usize) -> Result<Vec<ReplicationRow>> + Sync,
{
    let chunks: Vec<Result<Vec<ReplicationRow>>> = if config.parallel {
        (0..config.replications).into_par_iter().map(&per_replicate).collect()
    } else {
        (0..config.replications).map(&per_replicate).collect()
    };
    let mut rows = Vec::new();
    for chunk in chunks {
        rows.extend(chunk?);
    }
    Ok(rows)
}

fn summarize(rows: &[ReplicationRow], truth: &[TruthRow]) -> Vec<SummaryRow> {
    type Key = (IndicatorKind, WeightMode, Option<CombineMode>);
    let mut keys: Vec<Key> = Vec::new();
    for r in rows {
        let key = (r.indicator, r.weight_mode, r.combine_mode);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(indicator, weight_mode, combine_mode)| {
            let cell: Vec<&ReplicationRow> = rows
                .iter()
                .filter(|r| r.indicator == indicator && r.weight_mode == weight_mode && r.combine_mode == combine_mode)
                .collect();
            let values: Vec<f64> = cell.iter().map(|r| r.combined).collect();
            let ses: Vec<f64> = cell.iter().map(|r| r.combined_var.max(0.0).sqrt()).collect();
            let deltas: Vec<f64> = cell.iter().filter_map(|r| r.delta).collect();
            let negatives: Vec<f64> = cell.iter().map(|r| r.negative_weights as f64).collect();
            let mc_sd = sample_sd(&values);
            SummaryRow {
                indicator,
                weight_mode,
                combine_mode,
                replications: values.len(),
                mean: mean(&values),
                mc_sd,
                mc_se: mc_sd / (values.len() as f64).sqrt(),
                mean_lin_se: mean(&ses),
                mean_delta: (!deltas.is_empty()).then(|| mean(&deltas)),
                mean_negative_weights: mean(&negatives),
                truth: truth.iter().find(|t| t.indicator == indicator).map(|t| t.value),
                five: five_number(&values),
            }
        })
        .collect()
}

pub fn run_single_sample(config: &ScenarioConfig) -> Result<SimulationReport> {
    config.validate()?;
    let frame = config.population.load()?;
    run_single_sample_on(config, &frame)
}

/// Single-sample study: each replication draws one sample and estimates every
/// indicator with its linearization variance.
pub fn run_single_sample_on(config: &ScenarioConfig, frame: &PopulationFrame) -> Result<SimulationReport> {
    config.validate_against(frame)?;
    let design = TwoStageDesign::for_frame(frame, config.n_h1)?;
    let truth = truth_rows(frame, &config.indicators)?;
    let rows = run_replicates(config, |rep| {
        let sample = draw_sample(frame, &design, config.seed, rep as u64)?;
        let series = WeightedSeries::new(sample.income.clone(), sample.weights.clone())?;
        config
            .indicators
            .iter()
            .map(|&kind| {
                let theta = evaluate(kind, &series)?.value;
                let z = linearize(kind, &series)?;
                let v = deville_variance_block(&z.z, &sample)?;
                standard_error(&v)?;
                let var = v.value.max(0.0);
                Ok(ReplicationRow {
                    replicate: rep,
                    indicator: kind,
                    weight_mode: WeightMode::Sampling,
                    combine_mode: None,
                    theta1: theta,
                    theta2: None,
                    delta: None,
                    combined: theta,
                    var1: var,
                    var2: None,
                    combined_var: var,
                    negative_weights: 0,
                })
            })
            .collect()
    })?;
    let summary = summarize(&rows, &truth);
    Ok(SimulationReport {
        kind: RunKind::Single,
        config: config.clone(),
        population_size: frame.len(),
        households: frame.household_count(),
        truth,
        rows,
        summary,
    })
}

pub fn run_pooling_scenario(config: &ScenarioConfig) -> Result<SimulationReport> {
    config.validate()?;
    let frame = config.population.load()?;
    run_pooling_scenario_on(config, &frame)
}

/// Two-sample study: each replication draws two household-disjoint samples
/// and pools every requested indicator under every weighting and
/// combination rule.
pub fn run_pooling_scenario_on(config: &ScenarioConfig, frame: &PopulationFrame) -> Result<SimulationReport> {
    let n_h2 = config
        .n_h2
        .ok_or_else(|| Error::Config("pooling scenario needs a second sample size".into()))?;
    config.validate_against(frame)?;
    let d1 = TwoStageDesign::for_frame(frame, config.n_h1)?;
    let d2 = TwoStageDesign::for_frame(frame, n_h2)?;
    let totals = PopulationTotals::of(frame);
    let truth = truth_rows(frame, &config.indicators)?;
    let rows = run_replicates(config, |rep| {
        let (s1, s2) = draw_two_disjoint_samples(frame, &d1, &d2, config.seed, rep as u64)?;
        let spec1 = calibration_spec(&s1, totals, &config.calibration, 0)?;
        let spec2 = calibration_spec(&s2, totals, &config.calibration, 1)?;
        let mut out = Vec::new();
        for &kind in &config.indicators {
            for &mode in &config.weight_modes {
                let pair = estimate_aligned([&s1, &s2], [&spec1, &spec2], kind, mode)?;
                for &combine in &config.combine_modes {
                    let p = pair.combine(combine)?;
                    out.push(ReplicationRow {
                        replicate: rep,
                        indicator: kind,
                        weight_mode: mode,
                        combine_mode: Some(combine),
                        theta1: p.theta1,
                        theta2: Some(p.theta2),
                        delta: Some(p.delta),
                        combined: p.combined,
                        var1: p.var1,
                        var2: Some(p.var2),
                        combined_var: p.combined_var,
                        negative_weights: p.negative_weights,
                    });
                }
            }
        }
        Ok(out)
    })?;
    let summary = summarize(&rows, &truth);
    Ok(SimulationReport {
        kind: RunKind::Pooling,
        config: config.clone(),
        population_size: frame.len(),
        households: frame.household_count(),
        truth,
        rows,
        summary,
    })
}

/// Dispatches on the presence of a second sample size.
pub fn run(config: &ScenarioConfig) -> Result<SimulationReport> {
    if config.n_h2.is_some() {
        run_pooling_scenario(config)
    } else {
        run_single_sample(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SyntheticParams;
    use crate::harness::config::PopulationSource;

    fn small() -> PopulationSource {
        PopulationSource::Synthetic(SyntheticParams {
            households: 120,
            ..SyntheticParams::default()
        })
    }

    #[test]
    fn type7_quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_type7(&s, 0.25), 1.75);
        assert_eq!(quantile_type7(&s, 0.5), 2.5);
        assert_eq!(quantile_type7(&s, 1.0), 4.0);
        let f = five_number(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!((f.q1, f.median, f.q3), (2.0, 3.0, 4.0));
        assert_eq!(f.outliers, 1);
        assert_eq!(f.whisker_high, 4.0);
    }

    #[test]
    fn sd_uses_r_minus_one() {
        assert!((sample_sd(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(sample_sd(&[7.0]), 0.0);
    }

    #[test]
    fn census_replications_reproduce_the_truth() {
        let frame = small().load().unwrap();
        let config = ScenarioConfig::single(small(), frame.household_count(), 3, 9);
        let report = run_single_sample_on(&config, &frame).unwrap();
        assert_eq!(report.rows.len(), 3 * 4);
        for s in &report.summary {
            let truth = s.truth.unwrap();
            assert!((s.mean - truth).abs() <= 1e-9 * truth.abs(), "{:?}", s.indicator);
            assert!(s.mc_sd <= 1e-9 * truth.abs());
            assert!(s.mean_lin_se <= 1e-6 * truth.abs().max(1.0));
        }
    }

    #[test]
    fn pooling_row_count() {
        let frame = small().load().unwrap();
        let config = ScenarioConfig::pooling(small(), 30, 40, 2, 3);
        let report = run_pooling_scenario_on(&config, &frame).unwrap();
        assert_eq!(report.rows.len(), 2 * 4 * 3 * 2);
        assert_eq!(report.summary.len(), 4 * 3 * 2);
        for r in &report.rows {
            let (lo, hi) = (r.theta1.min(r.theta2.unwrap()), r.theta1.max(r.theta2.unwrap()));
            assert!(r.combined >= lo - 1e-9 * hi.abs() && r.combined <= hi + 1e-9 * hi.abs());
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let frame = small().load().unwrap();
        let mut config = ScenarioConfig::pooling(small(), 30, 40, 4, 5);
        let parallel = run_pooling_scenario_on(&config, &frame).unwrap();
        config.parallel = false;
        let serial = run_pooling_scenario_on(&config, &frame).unwrap();
        assert_eq!(parallel.rows, serial.rows);
    }
}
