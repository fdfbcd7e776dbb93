//! Weighted point estimators of the income distribution: totals, quantiles,
//! kernel density, quintile share ratio, Gini coefficient and the
//! at-risk-of-poverty family.
//!
//! Every estimator takes the weights as given, so the same code serves
//! design weights, calibrated weights and alignment weights. Gini and RMPG
//! are reported in percent, ARPR as a percentage in `[0, 100]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    Median,
    Qsr,
    Gini,
    Rmpg,
    Arpt,
    Arpr,
    PoorMedian,
}

impl IndicatorKind {
    /// The four indicators of the simulation study.
    pub const HEADLINE: [IndicatorKind; 4] = [
        IndicatorKind::Median,
        IndicatorKind::Qsr,
        IndicatorKind::Gini,
        IndicatorKind::Rmpg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndicatorKind::Median => "median",
            IndicatorKind::Qsr => "qsr",
            IndicatorKind::Gini => "gini",
            IndicatorKind::Rmpg => "rmpg",
            IndicatorKind::Arpt => "arpt",
            IndicatorKind::Arpr => "arpr",
            IndicatorKind::PoorMedian => "poor_median",
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndicatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "median" => IndicatorKind::Median,
            "qsr" | "s80/s20" => IndicatorKind::Qsr,
            "gini" => IndicatorKind::Gini,
            "rmpg" => IndicatorKind::Rmpg,
            "arpt" => IndicatorKind::Arpt,
            "arpr" => IndicatorKind::Arpr,
            "poor_median" | "mp" => IndicatorKind::PoorMedian,
            other => return Err(Error::Config(format!("unknown indicator `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorWarning {
    /// Every income value is identical.
    AllTied,
    /// The kernel density at the relevant quantile could not be estimated.
    DensityUnavailable,
}

/// Income values with weights and a cached ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSeries<T> {
    y: Vec<T>,
    w: Vec<T>,
    order: Arc<[usize]>,
    nhat: T,
    total: T,
    abs_weight: T,
}

impl<T: Real> WeightedSeries<T> {
    /// Weights must be finite with a positive sum. Negative individual
    /// weights are accepted because regression-type calibration can produce
    /// them.
    pub fn new(y: Vec<T>, w: Vec<T>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Contract("weighted series must not be empty".into()));
        }
        if y.len() != w.len() {
            return Err(Error::Contract(format!(
                "{} values but {} weights",
                y.len(),
                w.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("series values must be finite".into()));
        }
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).expect("finite values"));
        Self::with_order(y, w, order.into())
    }

    pub fn unweighted(y: Vec<T>) -> Result<Self> {
        let w = vec![T::one(); y.len()];
        Self::new(y, w)
    }

    fn with_order(y: Vec<T>, w: Vec<T>, order: Arc<[usize]>) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("weights must be finite".into()));
        }
        let nhat: T = w.iter().copied().sum();
        if nhat <= T::zero() {
            return Err(Error::Contract("weights must have a positive sum".into()));
        }
        let total = y.iter().zip(&w).map(|(&a, &b)| a * b).sum();
        let abs_weight = w.iter().map(|v| v.abs()).sum();
        Ok(WeightedSeries {
            y,
            w,
            order,
            nhat,
            total,
            abs_weight,
        })
    }

    /// Same values under a different weight vector; reuses the sort order.
    pub fn reweighted(&self, w: Vec<T>) -> Result<Self> {
        if w.len() != self.y.len() {
            return Err(Error::Contract(format!(
                "{} values but {} weights",
                self.y.len(),
                w.len()
            )));
        }
        Self::with_order(self.y.clone(), w, self.order.clone())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.y
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    /// Positions sorted by ascending value.
    pub fn sorted_view(&self) -> &[usize] {
        &self.order
    }

    /// N̂ = Σ w_k.
    pub fn nhat(&self) -> T {
        self.nhat
    }

    /// Ŷ = Σ w_k y_k.
    pub fn total(&self) -> T {
        self.total
    }

    pub fn all_tied(&self) -> bool {
        let first = self.y[self.order[0]];
        self.y[self.order[self.len() - 1]] == first
    }

    /// Units with value strictly below `threshold`, keeping their weights.
    pub fn below(&self, threshold: T) -> Option<Self> {
        let picked: Vec<usize> = self
            .order
            .iter()
            .copied()
            .take_while(|&i| self.y[i] < threshold)
            .collect();
        if picked.is_empty() {
            return None;
        }
        let y = picked.iter().map(|&i| self.y[i]).collect();
        let w = picked.iter().map(|&i| self.w[i]).collect();
        let order: Vec<usize> = (0..picked.len()).collect();
        Self::with_order(y, w, order.into()).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorResult<T> {
    pub kind: IndicatorKind,
    /// Point estimate; Gini and RMPG in percent, ARPR in percent.
    pub value: T,
    pub nhat: T,
    pub total: T,
    /// Intermediate quantities such as quantiles, partial totals and densities.
    pub extras: Vec<(&'static str, T)>,
    pub warnings: Vec<IndicatorWarning>,
}

impl<T: Real> IndicatorResult<T> {
    fn new(kind: IndicatorKind, value: T, series: &WeightedSeries<T>) -> Self {
        let mut warnings = Vec::new();
        if series.all_tied() {
            warnings.push(IndicatorWarning::AllTied);
        }
        IndicatorResult {
            kind,
            value,
            nhat: series.nhat(),
            total: series.total(),
            extras: Vec::new(),
            warnings,
        }
    }

    pub fn extra(&self, name: &str) -> Option<T> {
        self.extras.iter().find(|(k, _)| *k == name).map(|&(_, v)| v)
    }
}

pub fn ht_total<T: Real>(series: &WeightedSeries<T>) -> T {
    series.total()
}

pub fn ht_size<T: Real>(series: &WeightedSeries<T>) -> T {
    series.nhat()
}

/// Weighted a-quantile.
///
/// Walking the ascending values with cumulative weight C_j: when C_j equals
/// aN̂ the estimate is the midpoint (y_j + y_{j+1})/2, otherwise it is the
/// first value whose cumulative weight exceeds aN̂. Equality is tested up to
/// the rounding error of the cumulative sum.
///
/// # Panics
/// If `a` is not strictly between 0 and 1.
pub fn weighted_quantile<T: Real>(series: &WeightedSeries<T>, a: T) -> T {
    assert!(a > T::zero() && a < T::one(), "quantile order must lie in (0, 1)");
    let target = a * series.nhat;
    let tol = T::epsilon() * T::count(series.len()) * series.abs_weight;
    let order = series.sorted_view();
    let mut cum = T::zero();
    for (pos, &i) in order.iter().enumerate() {
        cum = cum + series.w[i];
        if (cum - target).abs() <= tol {
            if let Some(&next) = order.get(pos + 1) {
                return (series.y[i] + series.y[next]) / T::lit(2.0);
            }
            return series.y[i];
        }
        if cum > target {
            return series.y[i];
        }
    }
    series.y[order[order.len() - 1]]
}

/// Weighted empirical distribution function Σ w_k 1(y_k ≤ x) / N̂.
pub fn weighted_cdf<T: Real>(series: &WeightedSeries<T>, x: T) -> T {
    let below: T = series
        .y
        .iter()
        .zip(&series.w)
        .filter(|(&y, _)| y <= x)
        .map(|(_, &w)| w)
        .sum();
    below / series.nhat
}

/// Weighted standard deviation with denominator N̂.
pub fn weighted_sd<T: Real>(series: &WeightedSeries<T>) -> T {
    let mean = series.total / series.nhat;
    let ss: T = series
        .y
        .iter()
        .zip(&series.w)
        .map(|(&y, &w)| w * (y - mean) * (y - mean))
        .sum();
    (ss / series.nhat).max(T::zero()).sqrt()
}

/// Bandwidth ĥ = σ̂ N̂^(−1/5).
pub fn bandwidth<T: Real>(series: &WeightedSeries<T>) -> Result<T> {
    let sd = weighted_sd(series);
    if !(sd > T::zero()) {
        return Err(Error::Degenerate(
            "all values are equal, the kernel bandwidth is zero".into(),
        ));
    }
    Ok(sd * series.nhat.powf(T::lit(-0.2)))
}

/// Gaussian kernel density at `x` with an explicit bandwidth.
pub fn kde_density_with_bandwidth<T: Real>(series: &WeightedSeries<T>, x: T, h: T) -> T {
    let norm = T::one() / (T::TAU()).sqrt();
    let half = T::lit(0.5);
    let sum: T = series
        .y
        .iter()
        .zip(&series.w)
        .map(|(&y, &w)| {
            let u = (x - y) / h;
            w * norm * (-half * u * u).exp()
        })
        .sum();
    sum / (h * series.nhat)
}

/// Gaussian kernel density at `x` with the bandwidth rule of [`bandwidth`].
pub fn kde_density<T: Real>(series: &WeightedSeries<T>, x: T) -> Result<T> {
    let h = bandwidth(series)?;
    Ok(kde_density_with_bandwidth(series, x, h))
}

/// Ŷ_a = Σ w_k y_k 1(y_k ≤ q).
pub fn partial_total<T: Real>(series: &WeightedSeries<T>, q: T) -> T {
    series
        .y
        .iter()
        .zip(&series.w)
        .filter(|(&y, _)| y <= q)
        .map(|(&y, &w)| w * y)
        .sum()
}

/// Per-unit cumulative weight N̂_k = Σ_ℓ w_ℓ 1(y_ℓ ≤ y_k) and cumulative
/// total Ŷ_k = Σ_ℓ w_ℓ y_ℓ 1(y_ℓ ≤ y_k), in the series' original order.
/// Tied values share the same cumulative quantities.
pub fn cumulative_below<T: Real>(series: &WeightedSeries<T>) -> (Vec<T>, Vec<T>) {
    let n = series.len();
    let order = series.sorted_view();
    let mut nk = vec![T::zero(); n];
    let mut yk = vec![T::zero(); n];
    let (mut cum_n, mut cum_y) = (T::zero(), T::zero());
    let mut start = 0;
    while start < n {
        let value = series.y[order[start]];
        let mut end = start;
        while end < n && series.y[order[end]] == value {
            cum_n = cum_n + series.w[order[end]];
            cum_y = cum_y + series.w[order[end]] * value;
            end += 1;
        }
        for &i in &order[start..end] {
            nk[i] = cum_n;
            yk[i] = cum_y;
        }
        start = end;
    }
    (nk, yk)
}

pub fn median<T: Real>(series: &WeightedSeries<T>) -> Result<IndicatorResult<T>> {
    let q = weighted_quantile(series, T::lit(0.5));
    let mut out = IndicatorResult::new(IndicatorKind::Median, q, series);
    out.extras.push(("q50", q));
    match kde_density(series, q) {
        Ok(f) => out.extras.push(("density", f)),
        Err(_) => out.warnings.push(IndicatorWarning::DensityUnavailable),
    }
    Ok(out)
}

/// Quintile share ratio (Ŷ − Ŷ_0.8) / Ŷ_0.2.
///
/// When every income is equal both partial totals equal Ŷ and the estimate
/// is 0, flagged with [`IndicatorWarning::AllTied`].
pub fn qsr<T: Real>(series: &WeightedSeries<T>) -> Result<IndicatorResult<T>> {
    let q20 = weighted_quantile(series, T::lit(0.2));
    let q80 = weighted_quantile(series, T::lit(0.8));
    let y20 = partial_total(series, q20);
    let y80 = partial_total(series, q80);
    if !(y20 > T::zero()) {
        return Err(Error::Degenerate(format!(
            "income share of the bottom quintile is not positive ({y20})"
        )));
    }
    let value = (series.total - y80) / y20;
    let mut out = IndicatorResult::new(IndicatorKind::Qsr, value, series);
    out.extras
        .extend([("q20", q20), ("q80", q80), ("y20", y20), ("y80", y80)]);
    Ok(out)
}

/// Gini coefficient in percent, ΣΣ w_k w_ℓ |y_k − y_ℓ| / (2 N̂ Ŷ), evaluated
/// in O(n log n) as Σ_k w_k (N̂_k y_k − Ŷ_k) / (N̂ Ŷ).
pub fn gini<T: Real>(series: &WeightedSeries<T>) -> Result<IndicatorResult<T>> {
    let value = gini_fraction(series)? * T::lit(100.0);
    Ok(IndicatorResult::new(IndicatorKind::Gini, value, series))
}

pub(crate) fn gini_fraction<T: Real>(series: &WeightedSeries<T>) -> Result<T> {
    if !(series.total > T::zero()) {
        return Err(Error::Degenerate(format!(
            "Gini coefficient needs a positive total, got {}",
            series.total
        )));
    }
    let (nk, yk) = cumulative_below(series);
    let num: T = (0..series.len())
        .map(|k| series.w[k] * (nk[k] * series.y[k] - yk[k]))
        .sum();
    Ok(num / (series.nhat * series.total))
}

/// ARPT = 0.6 · median.
pub fn arpt<T: Real>(series: &WeightedSeries<T>) -> T {
    T::lit(0.6) * weighted_quantile(series, T::lit(0.5))
}

/// Share of weight at or below the ARPT, in percent.
pub fn arpr<T: Real>(series: &WeightedSeries<T>) -> Result<IndicatorResult<T>> {
    let threshold = arpt(series);
    let value = weighted_cdf(series, threshold) * T::lit(100.0);
    let mut out = IndicatorResult::new(IndicatorKind::Arpr, value, series);
    out.extras.push(("arpt", threshold));
    Ok(out)
}

/// Weighted median of the units strictly below the ARPT.
pub fn poor_median<T: Real>(series: &WeightedSeries<T>) -> Result<T> {
    let threshold = arpt(series);
    let poor = series.below(threshold).ok_or(Error::PovertyDegenerate {
        threshold: threshold.as_f64(),
    })?;
    Ok(weighted_quantile(&poor, T::lit(0.5)))
}

/// Relative median at-risk-of-poverty gap (ARPT − m_p) / ARPT, in percent.
pub fn rmpg<T: Real>(series: &WeightedSeries<T>) -> Result<IndicatorResult<T>> {
    let threshold = arpt(series);
    let mp = poor_median(series)?;
    let value = (threshold - mp) / threshold * T::lit(100.0);
    let mut out = IndicatorResult::new(IndicatorKind::Rmpg, value, series);
    out.extras.extend([
        ("arpt", threshold),
        ("poor_median", mp),
        ("arpr", weighted_cdf(series, threshold)),
    ]);
    Ok(out)
}

pub fn evaluate<T: Real>(kind: IndicatorKind, series: &WeightedSeries<T>) -> Result<IndicatorResult<T>> {
    match kind {
        IndicatorKind::Median => median(series),
        IndicatorKind::Qsr => qsr(series),
        IndicatorKind::Gini => gini(series),
        IndicatorKind::Rmpg => rmpg(series),
        IndicatorKind::Arpr => arpr(series),
        IndicatorKind::Arpt => Ok(IndicatorResult::new(kind, arpt(series), series)),
        IndicatorKind::PoorMedian => {
            let mp = poor_median(series)?;
            Ok(IndicatorResult::new(kind, mp, series))
        }
    }
}
