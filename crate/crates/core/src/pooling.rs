//! Pooling two independent samples of the same population.
//!
//! 1. linearize the statistic used for alignment under the design weights;
//! 2. align the two samples on that linearized variable;
//! 3. re-evaluate the target indicator and its linearized variable under the
//!    alignment weights and take the design variance of each sample;
//! 4. combine the two estimates with weight δ.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alignment::{align, CalibrationSpec};
use crate::design::SampleDraw;
use crate::indicators::{evaluate, IndicatorKind, WeightedSeries};
use crate::linearization::{linearize, WeightsTag};
use crate::variance::{deville_variance_block, standard_error};
use crate::{Error, Real, Result};

/// Which weights each sample's estimate is computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Design weights, no alignment.
    Sampling,
    /// Aligned on the target indicator's own linearized variable.
    OwnAlignment,
    /// Aligned on the median's linearized variable, whatever the target.
    MedianAlignment,
}

impl WeightMode {
    pub const ALL: [WeightMode; 3] = [WeightMode::Sampling, WeightMode::OwnAlignment, WeightMode::MedianAlignment];

    pub fn name(self) -> &'static str {
        match self {
            WeightMode::Sampling => "sampling",
            WeightMode::OwnAlignment => "own-alignment",
            WeightMode::MedianAlignment => "median-alignment",
        }
    }

    /// The statistic whose linearized variable drives the alignment.
    pub fn align_on(self, target: IndicatorKind) -> Option<IndicatorKind> {
        match self {
            WeightMode::Sampling => None,
            WeightMode::OwnAlignment => Some(target),
            WeightMode::MedianAlignment => Some(IndicatorKind::Median),
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "sampling" => Ok(WeightMode::Sampling),
            "own-alignment" | "own" => Ok(WeightMode::OwnAlignment),
            "median-alignment" | "median" => Ok(WeightMode::MedianAlignment),
            other => Err(Error::Config(format!("unknown weight mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineMode {
    /// δ = 1/2.
    Simple,
    /// δ = V₂ / (V₁ + V₂).
    Optimal,
}

impl CombineMode {
    pub const ALL: [CombineMode; 2] = [CombineMode::Simple, CombineMode::Optimal];

    pub fn name(self) -> &'static str {
        match self {
            CombineMode::Simple => "simple",
            CombineMode::Optimal => "optimal",
        }
    }
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "simple" => Ok(CombineMode::Simple),
            "optimal" => Ok(CombineMode::Optimal),
            other => Err(Error::Config(format!("unknown combine mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingWarning {
    /// Both variances were zero in optimal mode; δ fell back to 1/2.
    ZeroVariances,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combination<T> {
    pub delta: T,
    pub combined: T,
    pub combined_var: T,
    pub warning: Option<PoolingWarning>,
}

/// θ̂_c = δθ̂₁ + (1−δ)θ̂₂ with variance δ²V₁ + (1−δ)²V₂.
pub fn combine<T: Real>(theta1: T, var1: T, theta2: T, var2: T, mode: CombineMode) -> Result<Combination<T>> {
    if !(var1 >= T::zero()) || !(var2 >= T::zero()) {
        return Err(Error::Contract(format!("variances must be non-negative, got {var1} and {var2}")));
    }
    let half = T::lit(0.5);
    let (delta, warning) = match mode {
        CombineMode::Simple => (half, None),
        CombineMode::Optimal => {
            let sum = var1 + var2;
            if sum > T::zero() {
                (var2 / sum, None)
            } else {
                (half, Some(PoolingWarning::ZeroVariances))
            }
        }
    };
    let rest = T::one() - delta;
    Ok(Combination {
        delta,
        combined: delta * theta1 + rest * theta2,
        combined_var: delta * delta * var1 + rest * rest * var2,
        warning,
    })
}

/// Per-sample estimates under one weighting, before combination.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair<T> {
    pub target: IndicatorKind,
    pub weight_mode: WeightMode,
    pub theta1: T,
    pub theta2: T,
    pub var1: T,
    pub var2: T,
    /// Count of negative weights across both samples.
    pub negative_weights: usize,
    /// z₁ᵀa₁ and z₂ᵀa₂ for the alignment variable (design-weight totals in
    /// sampling mode).
    pub linearized_totals: [T; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledEstimate<T> {
    pub target: IndicatorKind,
    pub theta1: T,
    pub theta2: T,
    pub var1: T,
    pub var2: T,
    pub delta: T,
    pub combined: T,
    pub combined_var: T,
    pub weight_mode: WeightMode,
    pub combine_mode: CombineMode,
    pub negative_weights: usize,
    pub warning: Option<PoolingWarning>,
}

impl<T: Real> AlignedPair<T> {
    pub fn combine(&self, mode: CombineMode) -> Result<PooledEstimate<T>> {
        let c = combine(self.theta1, self.var1, self.theta2, self.var2, mode)?;
        Ok(PooledEstimate {
            target: self.target,
            theta1: self.theta1,
            theta2: self.theta2,
            var1: self.var1,
            var2: self.var2,
            delta: c.delta,
            combined: c.combined,
            combined_var: c.combined_var,
            weight_mode: self.weight_mode,
            combine_mode: mode,
            negative_weights: self.negative_weights,
            warning: c.warning,
        })
    }
}

fn design_series<T: Real>(sample: &SampleDraw) -> Result<WeightedSeries<T>> {
    WeightedSeries::new(sample.income.iter().map(|&y| T::lit(y)).collect(), sample.weights_as())
}

/// Steps 1–3: the per-sample target estimates and their variances under the
/// requested weighting.
pub fn estimate_aligned<T: Real>(
    samples: [&SampleDraw; 2],
    specs: [&CalibrationSpec<T>; 2],
    target: IndicatorKind,
    weight_mode: WeightMode,
) -> Result<AlignedPair<T>> {
    let base = [design_series::<T>(samples[0])?, design_series::<T>(samples[1])?];

    let (series, negative_weights, linearized_totals) = match weight_mode.align_on(target) {
        None => (base, 0, None),
        Some(on) => {
            let z1 = linearize(on, &base[0])?.z;
            let z2 = linearize(on, &base[1])?.z;
            let r = align(specs[0], base[0].weights(), &z1, specs[1], base[1].weights(), &z2)?;
            let totals = [
                z1.iter().zip(&r.a1).map(|(&z, &a)| z * a).sum(),
                z2.iter().zip(&r.a2).map(|(&z, &a)| z * a).sum(),
            ];
            let negative = r.negative_weights();
            let s1 = base[0].reweighted(r.a1)?;
            let s2 = base[1].reweighted(r.a2)?;
            ([s1, s2], negative, Some(totals))
        }
    };

    let tag = if weight_mode == WeightMode::Sampling { WeightsTag::Design } else { WeightsTag::Aligned };
    let mut theta = [T::zero(); 2];
    let mut var = [T::zero(); 2];
    let mut own_totals = [T::zero(); 2];
    for i in 0..2 {
        theta[i] = evaluate(target, &series[i])?.value;
        let z = linearize(target, &series[i])?.with_tag(tag);
        own_totals[i] = z.weighted_total(series[i].weights());
        let v = deville_variance_block(&z.z, samples[i])?;
        standard_error(&v)?;
        var[i] = v.value.max(T::zero());
    }
    Ok(AlignedPair {
        target,
        weight_mode,
        theta1: theta[0],
        theta2: theta[1],
        var1: var[0],
        var2: var[1],
        negative_weights,
        linearized_totals: linearized_totals.unwrap_or(own_totals),
    })
}

/// Algorithm 1 for one target, weighting and combination rule.
pub fn pool<T: Real>(
    samples: [&SampleDraw; 2],
    specs: [&CalibrationSpec<T>; 2],
    target: IndicatorKind,
    weight_mode: WeightMode,
    combine_mode: CombineMode,
) -> Result<PooledEstimate<T>> {
    estimate_aligned(samples, specs, target, weight_mode)?.combine(combine_mode)
}
