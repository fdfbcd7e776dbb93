//! Design-based estimation of income inequality and poverty indicators from
//! two-stage household samples, with linearization variances and alignment
//! weights that pool two independent samples through the indicators'
//! linearized variables.
//!
//! The numerical core ([`indicators`], [`linearization`], [`variance`],
//! [`alignment`], [`pooling`]) is generic over the scalar type through the
//! [`Real`] trait. The Monte Carlo driver in [`harness`] runs in `f64`.

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod alignment;
pub mod data;
pub mod design;
mod error;
pub mod harness;
pub mod indicators;
pub mod linearization;
pub mod pooling;
mod scalar;
pub mod variance;

pub use error::{Error, Result};
pub use scalar::Real;

pub use alignment::{AlignmentResult, CalibrationSpec, Calibrator};
pub use data::{ColumnMap, PersonRecord, PopulationFrame, SyntheticParams};
pub use design::{SampleDraw, TwoStageDesign};
pub use indicators::{IndicatorKind, IndicatorResult, WeightedSeries};
pub use linearization::{LinearizedVariable, WeightsTag};
pub use pooling::{CombineMode, PooledEstimate, WeightMode};
pub use variance::{VarianceEstimate, VariancePath};

/// Double-precision weighted income series.
pub type Series = WeightedSeries<f64>;
/// Single-precision weighted income series.
pub type Series32 = WeightedSeries<f32>;
pub type Indicator = IndicatorResult<f64>;
pub type Linearized = LinearizedVariable<f64>;
pub type Variance = VarianceEstimate<f64>;
pub type Alignment = AlignmentResult<f64>;
pub type Calibration = CalibrationSpec<f64>;
pub type Pooled = PooledEstimate<f64>;
