//! Design-based variance of a weighted linearized total,
//! V̂ = Σ_k Σ_ℓ Δ̃_{kℓ} ẑ_k ẑ_ℓ / (π_k π_ℓ).
//!
//! [`deville_variance_naive`] is the literal double sum for any design that
//! exposes second-order inclusion probabilities. [`deville_variance_block`]
//! exploits the structure of the two-stage household design: Δ̃ takes one
//! value within a household and another across households, so the double
//! sum collapses to household totals and runs in O(n).

use serde::{Deserialize, Serialize};

use crate::design::{InclusionProbabilities, SampleDraw};
use crate::indicators::IndicatorKind;
use crate::linearization::LinearizedVariable;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariancePath {
    Naive,
    Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate<T> {
    /// May be slightly negative from rounding; see [`standard_error`].
    pub value: T,
    pub path: VariancePath,
    pub indicator: Option<IndicatorKind>,
    /// Magnitude of the summed terms, the reference for the negativity check.
    pub scale: T,
}

impl<T: Real> VarianceEstimate<T> {
    pub fn for_indicator(mut self, kind: IndicatorKind) -> Self {
        self.indicator = Some(kind);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardError<T> {
    pub value: T,
    /// The variance was a tiny negative number and was clamped to zero.
    pub clamped: bool,
}

fn check_len<T>(z: &[T], n: usize) -> Result<()> {
    if z.len() != n {
        return Err(Error::Contract(format!(
            "linearized variable has {} values but the sample has {n} units",
            z.len()
        )));
    }
    Ok(())
}

/// Literal double sum over all pairs of sampled units.
pub fn deville_variance_naive<T: Real, D: InclusionProbabilities>(z: &[T], design: &D) -> Result<VarianceEstimate<T>> {
    let n = design.sample_size();
    check_len(z, n)?;
    let expanded: Vec<T> = (0..n).map(|k| z[k] / design.first_order::<T>(k)).collect();
    let pi: Vec<T> = (0..n).map(|k| design.first_order::<T>(k)).collect();
    let mut value = T::zero();
    let mut scale = T::zero();
    for k in 0..n {
        for l in 0..n {
            let joint = design.second_order::<T>(k, l);
            if !(joint > T::zero()) {
                return Err(Error::Design(format!(
                    "joint inclusion probability of units {k} and {l} is zero"
                )));
            }
            let delta = (joint - pi[k] * pi[l]) / joint;
            let term = delta * expanded[k] * expanded[l];
            value = value + term;
            scale = scale + term.abs();
        }
    }
    Ok(VarianceEstimate {
        value,
        path: VariancePath::Naive,
        indicator: None,
        scale,
    })
}

/// O(n) evaluation for the two-stage household design:
/// Δ̃_w Σ_j T_j² + Δ̃_c (S² − Σ_j T_j²), with T_j the household totals of
/// ẑ_k/π_k and S their sum.
pub fn deville_variance_block<T: Real>(z: &[T], sample: &SampleDraw) -> Result<VarianceEstimate<T>> {
    check_len(z, sample.len())?;
    let design = sample.design();
    let within = design.within_delta::<T>();
    let cross = design.cross_delta::<T>()?;
    let inv_pi = T::one() / design.first_order::<T>();

    let mut seen = std::collections::HashSet::new();
    let mut sum_sq = T::zero();
    let mut total = T::zero();
    for run in sample.household_runs() {
        if !seen.insert(sample.household_of[run.start]) {
            return Err(Error::Contract(
                "sample units are not grouped contiguously by household".into(),
            ));
        }
        let t: T = z[run].iter().map(|&v| v * inv_pi).sum();
        sum_sq = sum_sq + t * t;
        total = total + t;
    }
    let within_part = within * sum_sq;
    let cross_part = cross * (total * total - sum_sq);
    Ok(VarianceEstimate {
        value: within_part + cross_part,
        path: VariancePath::Block,
        indicator: None,
        scale: within_part.abs() + cross_part.abs(),
    })
}

/// Block-path variance of a linearized variable, tagged with its indicator.
pub fn deville_variance<T: Real>(lin: &LinearizedVariable<T>, sample: &SampleDraw) -> Result<VarianceEstimate<T>> {
    Ok(deville_variance_block(&lin.z, sample)?.for_indicator(lin.indicator))
}

/// √V̂. Negative variances down to −1e−9 of the term scale are treated as
/// rounding and clamped to zero; anything below that is an error.
pub fn standard_error<T: Real>(v: &VarianceEstimate<T>) -> Result<StandardError<T>> {
    if v.value >= T::zero() {
        return Ok(StandardError {
            value: v.value.sqrt(),
            clamped: false,
        });
    }
    let floor = T::lit(1e-9) * v.scale.max(T::min_positive_value());
    if -v.value <= floor || -v.value <= T::lit(1e-12) {
        return Ok(StandardError {
            value: T::zero(),
            clamped: true,
        });
    }
    Err(Error::Numerical(format!(
        "variance estimate {} is negative beyond rounding (scale {})",
        v.value, v.scale
    )))
}
