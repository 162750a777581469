//! Bjøntegaard Delta metrics for codec comparisons, and tooling that shows
//! when averaging RD curves over a test set disagrees with averaging the
//! per-sequence BD-rates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod bd_metrics;
pub mod error;
pub mod interpolation;
pub mod io_report;
pub mod rd_model;
pub mod synthetic;

pub use aggregation::{
    compare, leave_one_out, mean_of_metrics, AggregateCurve, AveragingMode, CompareSettings,
    ComparisonReport, SequenceBd, Verdict,
};
pub use bd_metrics::{bd_psnr, bd_rate, overlap, BdMetric, BdOptions, BdResult};
pub use error::{Axis, Error, Result};
pub use interpolation::{FitPolicy, Interpolator};
pub use rd_model::{validate_curve, validate_set, EvaluationSet, RateUnit, RdCurve, RdPoint};
