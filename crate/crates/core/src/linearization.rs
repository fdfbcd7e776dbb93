//! Plug-in linearized variables ẑ_k of the indicators.
//!
//! Each function evaluates the estimated influence of unit k on the
//! indicator under whatever weights the series carries. The weighted total
//! Σ w_k ẑ_k is the linear approximation of the estimator, so the design
//! variance of that total (see [`crate::variance`]) approximates the
//! indicator's variance. Percent-scale indicators (Gini, RMPG, ARPR) carry
//! percent-scale linearized variables.

use serde::{Deserialize, Serialize};

use crate::indicators::{
    self, cumulative_below, kde_density, partial_total, weighted_cdf, weighted_quantile, IndicatorKind,
    WeightedSeries,
};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsTag {
    Design,
    Calibrated,
    Aligned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedVariable<T> {
    /// One value per unit, in series order.
    pub z: Vec<T>,
    pub indicator: IndicatorKind,
    pub weights_used: WeightsTag,
}

impl<T: Real> LinearizedVariable<T> {
    fn design(indicator: IndicatorKind, z: Vec<T>) -> Self {
        LinearizedVariable {
            z,
            indicator,
            weights_used: WeightsTag::Design,
        }
    }

    pub fn with_tag(mut self, tag: WeightsTag) -> Self {
        self.weights_used = tag;
        self
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Σ w_k ẑ_k.
    pub fn weighted_total(&self, w: &[T]) -> T {
        self.z.iter().zip(w).map(|(&z, &w)| z * w).sum()
    }
}

fn density_at<T: Real>(series: &WeightedSeries<T>, x: T, what: &str) -> Result<T> {
    let f = kde_density(series, x)?;
    if !(f > T::zero()) || !f.is_finite() {
        return Err(Error::Degenerate(format!("estimated density at the {what} is zero")));
    }
    Ok(f)
}

fn indicator<T: Real>(cond: bool) -> T {
    if cond {
        T::one()
    } else {
        T::zero()
    }
}

fn median_z<T: Real>(series: &WeightedSeries<T>, scale: T) -> Result<Vec<T>> {
    let q = weighted_quantile(series, T::lit(0.5));
    let f = density_at(series, q, "median")?;
    let c = -scale / (f * series.nhat());
    let half = T::lit(0.5);
    Ok(series
        .values()
        .iter()
        .map(|&y| c * (indicator::<T>(y <= q) - half))
        .collect())
}

/// ẑ_k = −(1/f̂(Q̂_0.5)) (1/N̂) [1(y_k ≤ Q̂_0.5) − 0.5].
pub fn lin_median<T: Real>(series: &WeightedSeries<T>) -> Result<LinearizedVariable<T>> {
    Ok(LinearizedVariable::design(IndicatorKind::Median, median_z(series, T::one())?))
}

/// Linearized quintile share ratio.
pub fn lin_qsr<T: Real>(series: &WeightedSeries<T>) -> Result<LinearizedVariable<T>> {
    let q20 = weighted_quantile(series, T::lit(0.2));
    let q80 = weighted_quantile(series, T::lit(0.8));
    let y20 = partial_total(series, q20);
    let y80 = partial_total(series, q80);
    if !(y20 > T::zero()) {
        return Err(Error::Degenerate(format!(
            "income share of the bottom quintile is not positive ({y20})"
        )));
    }
    let top = series.total() - y80;
    let (p20, p80) = (T::lit(0.2), T::lit(0.8));
    let z = series
        .values()
        .iter()
        .map(|&y| {
            let upper = y - p80 * q80 + (q80 - y) * indicator::<T>(y <= q80);
            let lower = p20 * q20 - (q20 - y) * indicator::<T>(y <= q20);
            upper / y20 - top * lower / (y20 * y20)
        })
        .collect();
    Ok(LinearizedVariable::design(IndicatorKind::Qsr, z))
}

/// Linearized Gini coefficient, percent scale:
/// ẑ_k = [2 N̂_k (y_k − Ŷ_k/N̂_k) + Ŷ − N̂ y_k − Ĝ (Ŷ + y_k N̂)] / (N̂ Ŷ),
/// with N̂_k and Ŷ_k the weight and income of units with y ≤ y_k.
pub fn lin_gini<T: Real>(series: &WeightedSeries<T>) -> Result<LinearizedVariable<T>> {
    let g = indicators::gini_fraction(series)?;
    let (nhat, total) = (series.nhat(), series.total());
    let (nk, yk) = cumulative_below(series);
    let two = T::lit(2.0);
    let scale = T::lit(100.0) / (nhat * total);
    let z = series
        .values()
        .iter()
        .enumerate()
        .map(|(k, &y)| {
            let bracket = two * (nk[k] * y - yk[k]) + total - nhat * y - g * (total + y * nhat);
            bracket * scale
        })
        .collect();
    Ok(LinearizedVariable::design(IndicatorKind::Gini, z))
}

/// ẑ_k^ARPT = 0.6 ẑ_k^median.
pub fn lin_arpt<T: Real>(series: &WeightedSeries<T>) -> Result<LinearizedVariable<T>> {
    let z = median_z(series, T::one())?
        .into_iter()
        .map(|z| T::lit(0.6) * z)
        .collect();
    Ok(LinearizedVariable::design(IndicatorKind::Arpt, z))
}

struct PovertyLinearization<T> {
    threshold: T,
    arpt_z: Vec<T>,
    // ARPR as a fraction
    arpr_z: Vec<T>,
}

fn poverty_parts<T: Real>(series: &WeightedSeries<T>) -> Result<PovertyLinearization<T>> {
    let threshold = indicators::arpt(series);
    let arpt_z: Vec<T> = lin_arpt(series)?.z;
    let rate = weighted_cdf(series, threshold);
    let f_arpt = density_at(series, threshold, "poverty threshold")?;
    let inv_n = T::one() / series.nhat();
    let arpr_z = series
        .values()
        .iter()
        .zip(&arpt_z)
        .map(|(&y, &za)| inv_n * (indicator::<T>(y <= threshold) - rate) + f_arpt * za)
        .collect();
    Ok(PovertyLinearization {
        threshold,
        arpt_z,
        arpr_z,
    })
}

/// Linearized at-risk-of-poverty rate, percent scale:
/// 100 · [(1/N̂)(1(y_k ≤ ARPT) − ARPR) + f̂(ARPT) ẑ_k^ARPT].
pub fn lin_arpr<T: Real>(series: &WeightedSeries<T>) -> Result<LinearizedVariable<T>> {
    let parts = poverty_parts(series)?;
    let z = parts.arpr_z.into_iter().map(|z| z * T::lit(100.0)).collect();
    Ok(LinearizedVariable::design(IndicatorKind::Arpr, z))
}

fn poor_median_z<T: Real>(series: &WeightedSeries<T>, parts: &PovertyLinearization<T>) -> Result<(T, Vec<T>)> {
    let poor = series.below(parts.threshold).ok_or(Error::PovertyDegenerate {
        threshold: parts.threshold.as_f64(),
    })?;
    let mp = weighted_quantile(&poor, T::lit(0.5));
    let f_mp = density_at(series, mp, "poor median")?;
    let cdf_mp = weighted_cdf(series, mp);
    let inv_n = T::one() / series.nhat();
    let half = T::lit(0.5);
    let z = series
        .values()
        .iter()
        .zip(&parts.arpr_z)
        .map(|(&y, &zr)| (half * zr - inv_n * (indicator::<T>(y <= mp) - cdf_mp)) / f_mp)
        .collect();
    Ok((mp, z))
}

/// Linearized median of the poor:
/// (1/f̂(m̂_p)) [ẑ_k^ARPR / 2 − (1/N̂)(1(y_k ≤ m̂_p) − F̂(m̂_p))],
/// with ẑ^ARPR on the fraction scale and F̂ the weighted empirical CDF.
pub fn lin_poor_median<T: Real>(series: &WeightedSeries<T>) -> Result<LinearizedVariable<T>> {
    let parts = poverty_parts(series)?;
    let (_, z) = poor_median_z(series, &parts)?;
    Ok(LinearizedVariable::design(IndicatorKind::PoorMedian, z))
}

/// Linearized RMPG, percent scale:
/// 100 · (m̂_p ẑ_k^ARPT − ARPT ẑ_k^{m_p}) / ARPT².
pub fn lin_rmpg<T: Real>(series: &WeightedSeries<T>) -> Result<LinearizedVariable<T>> {
    let parts = poverty_parts(series)?;
    let (mp, zmp) = poor_median_z(series, &parts)?;
    let t = parts.threshold;
    let scale = T::lit(100.0) / (t * t);
    let z = parts
        .arpt_z
        .iter()
        .zip(&zmp)
        .map(|(&za, &zm)| (mp * za - t * zm) * scale)
        .collect();
    Ok(LinearizedVariable::design(IndicatorKind::Rmpg, z))
}

pub fn linearize<T: Real>(kind: IndicatorKind, series: &WeightedSeries<T>) -> Result<LinearizedVariable<T>> {
    match kind {
        IndicatorKind::Median => lin_median(series),
        IndicatorKind::Qsr => lin_qsr(series),
        IndicatorKind::Gini => lin_gini(series),
        IndicatorKind::Rmpg => lin_rmpg(series),
        IndicatorKind::Arpt => lin_arpt(series),
        IndicatorKind::Arpr => lin_arpr(series),
        IndicatorKind::PoorMedian => lin_poor_median(series),
    }
}

/// Dispatch on an indicator name.
pub fn linearize_named<T: Real>(name: &str, series: &WeightedSeries<T>) -> Result<LinearizedVariable<T>> {
    linearize(name.parse()?, series)
}
