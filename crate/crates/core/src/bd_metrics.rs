//! Bjøntegaard Delta rate and PSNR between two RD curves.
//!
//! Integration is always clipped to the overlap of the two curves; nothing
//! is ever extrapolated.

use serde::{Deserialize, Serialize};

use crate::error::{Axis, Error, Result};
use crate::interpolation::{
    fit_cubic_polyfit, fit_pchip, to_fit_domain, FitDomain, FitFallback, FitPolicy, FittedCurve,
    Interpolator, LinearRdCurve,
};
use crate::rd_model::RdCurve;

/// Overlaps narrower than this (dB) count as no overlap.
pub const MIN_QUALITY_OVERLAP: f64 = 0.01;
/// Overlaps narrower than this (log10 rate units) count as no overlap.
pub const MIN_LOG_RATE_OVERLAP: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BdMetric {
    /// Percent rate difference at equal quality.
    BdRate,
    /// dB quality difference at equal rate.
    BdPsnr,
}

/// A BD value together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdResult {
    pub value: f64,
    pub metric: BdMetric,
    /// Integration bounds: dB for BD-rate, log10 rate for BD-PSNR.
    pub overlap_low: f64,
    pub overlap_high: f64,
    pub interpolator: Interpolator,
    /// Cubic fallbacks that fired for the reference and test fits, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fallbacks: Vec<FitFallback>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BdOptions {
    pub interpolator: Interpolator,
    #[serde(default)]
    pub fit_policy: FitPolicy,
}

impl From<Interpolator> for BdOptions {
    fn from(interpolator: Interpolator) -> Self {
        Self {
            interpolator,
            fit_policy: FitPolicy::Strict,
        }
    }
}

fn span(curve: &RdCurve, axis: Axis) -> (f64, f64) {
    match axis {
        Axis::Quality => curve.quality_span(),
        Axis::LogRate => curve.log_rate_span(),
    }
}

/// Intersection of the two curves' spans along `axis`.
pub fn overlap(reference: &RdCurve, test: &RdCurve, axis: Axis) -> Result<(f64, f64)> {
    let r = span(reference, axis);
    let t = span(test, axis);
    let lo = r.0.max(t.0);
    let hi = r.1.min(t.1);
    let min_width = match axis {
        Axis::Quality => MIN_QUALITY_OVERLAP,
        Axis::LogRate => MIN_LOG_RATE_OVERLAP,
    };
    if hi - lo < min_width {
        return Err(Error::NoOverlap {
            axis,
            reference: r,
            test: t,
        });
    }
    Ok((lo, hi))
}

enum Model {
    Poly(FittedCurve),
    Linear(LinearRdCurve),
}

impl Model {
    fn fit(curve: &RdCurve, domain: FitDomain, opts: BdOptions) -> Result<Self> {
        let knots = to_fit_domain(curve, domain)?;
        Ok(match opts.interpolator {
            Interpolator::CubicPolyfit => Model::Poly(fit_cubic_polyfit(&knots, opts.fit_policy)?),
            Interpolator::Pchip => Model::Poly(fit_pchip(&knots)?),
            Interpolator::Linear => Model::Linear(LinearRdCurve::new(curve)),
        })
    }

    fn fallback(&self) -> Option<FitFallback> {
        match self {
            Model::Poly(f) => f.fallback(),
            Model::Linear(_) => None,
        }
    }

    fn integrate(&self, domain: FitDomain, lo: f64, hi: f64) -> Result<f64> {
        match (self, domain) {
            (Model::Poly(f), _) => f.integrate(lo, hi),
            (Model::Linear(c), FitDomain::QualityToLograte) => c.integrate_log_rate(lo, hi),
            (Model::Linear(c), FitDomain::LograteToQuality) => c.integrate_quality(lo, hi),
        }
    }
}

/// Fitted log10-rate as a function of quality, for the given interpolator.
pub fn log_rate_at(curve: &RdCurve, quality: f64, opts: impl Into<BdOptions>) -> Result<f64> {
    let opts = opts.into();
    match Model::fit(curve, FitDomain::QualityToLograte, opts)? {
        Model::Poly(f) => f.evaluate(quality),
        Model::Linear(c) => Ok(c.rate_at(quality)?.log10()),
    }
}

fn mean_gap(
    reference: &RdCurve,
    test: &RdCurve,
    domain: FitDomain,
    axis: Axis,
    opts: BdOptions,
) -> Result<(f64, f64, f64, Vec<FitFallback>)> {
    if reference.rate_unit() != test.rate_unit() {
        return Err(Error::MixedUnits {
            first: reference.rate_unit().to_string(),
            second: test.rate_unit().to_string(),
        });
    }
    let (lo, hi) = overlap(reference, test, axis)?;
    let ref_fit = Model::fit(reference, domain, opts)?;
    let test_fit = Model::fit(test, domain, opts)?;
    let gap = test_fit.integrate(domain, lo, hi)? - ref_fit.integrate(domain, lo, hi)?;
    let fallbacks = [ref_fit.fallback(), test_fit.fallback()]
        .into_iter()
        .flatten()
        .collect();
    Ok((gap / (hi - lo), lo, hi, fallbacks))
}

/// BD-rate of `test` against `reference`, in percent. Negative means the
/// test codec needs less rate for the same quality.
pub fn bd_rate(
    reference: &RdCurve,
    test: &RdCurve,
    opts: impl Into<BdOptions>,
) -> Result<BdResult> {
    let opts = opts.into();
    let (mean_log_gap, lo, hi, fallbacks) = mean_gap(
        reference,
        test,
        FitDomain::QualityToLograte,
        Axis::Quality,
        opts,
    )?;
    Ok(BdResult {
        value: 100.0 * (10f64.powf(mean_log_gap) - 1.0),
        metric: BdMetric::BdRate,
        overlap_low: lo,
        overlap_high: hi,
        interpolator: opts.interpolator,
        fallbacks,
    })
}

/// BD-PSNR of `test` against `reference`, in dB. Positive means the test
/// codec reaches higher quality at the same rate.
pub fn bd_psnr(
    reference: &RdCurve,
    test: &RdCurve,
    opts: impl Into<BdOptions>,
) -> Result<BdResult> {
    let opts = opts.into();
    let (value, lo, hi, fallbacks) = mean_gap(
        reference,
        test,
        FitDomain::LograteToQuality,
        Axis::LogRate,
        opts,
    )?;
    Ok(BdResult {
        value,
        metric: BdMetric::BdPsnr,
        overlap_low: lo,
        overlap_high: hi,
        interpolator: opts.interpolator,
        fallbacks,
    })
}
