//! Curve fitting and exact definite integration in the BD fit domains.
//!
//! Two polynomial interpolators work in the log-rate plane: the classic
//! single cubic through four points, and monotone piecewise cubic Hermite
//! interpolation (PCHIP). Both are stored as piecewise polynomials so that
//! integrals come from antiderivatives, never quadrature.
//!
//! [`LinearRdCurve`] is the third model: piecewise linear in the plain
//! rate/quality plane, with the logarithm integrated in closed form. It
//! reproduces linear RD curves exactly.

mod linear;
mod pchip;
mod poly;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rd_model::RdCurve;

pub use linear::LinearRdCurve;
pub use pchip::{fit_pchip, pchip_slopes};
pub use poly::{fit_cubic_polyfit, FitPolicy};

/// Which interpolator a BD computation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolator {
    /// Single polynomial of degree ≤ 3 through four points.
    CubicPolyfit,
    /// Monotone piecewise cubic Hermite.
    Pchip,
    /// Piecewise linear in the rate/quality plane.
    Linear,
}

impl std::fmt::Display for Interpolator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Interpolator::CubicPolyfit => "cubic_polyfit",
            Interpolator::Pchip => "pchip",
            Interpolator::Linear => "linear",
        })
    }
}

/// Orientation of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitDomain {
    /// Abscissa quality (dB), ordinate log10(rate). Used by BD-rate.
    QualityToLograte,
    /// Abscissa log10(rate), ordinate quality. Used by BD-PSNR.
    LograteToQuality,
}

/// Fallback that fired when the cubic fit did not get exactly four knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFallback {
    Linear,
    Quadratic,
    LeastSquaresCubic,
}

/// Maps a curve into `(x, y)` knots of the requested domain, sorted by x.
pub fn to_fit_domain(curve: &RdCurve, domain: FitDomain) -> Result<Vec<(f64, f64)>> {
    let mut knots: Vec<(f64, f64)> = curve
        .points()
        .iter()
        .map(|p| match domain {
            FitDomain::QualityToLograte => (p.quality, p.rate.log10()),
            FitDomain::LograteToQuality => (p.rate.log10(), p.quality),
        })
        .collect();
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    check_knots(&knots)?;
    Ok(knots)
}

pub(crate) fn check_knots(knots: &[(f64, f64)]) -> Result<()> {
    for w in knots.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateAbscissa { x: w[0].0 });
        }
        if w[1].0 < w[0].0 {
            return Err(Error::UnsortedKnots);
        }
    }
    Ok(())
}

/// Polynomial piece valid on `[lo, hi]`, in the local variable
/// `t = (x - origin) / scale`, coefficients in ascending powers of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub origin: f64,
    pub scale: f64,
    pub coeffs: Vec<f64>,
}

impl Segment {
    fn local(&self, x: f64) -> f64 {
        (x - self.origin) / self.scale
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = self.local(x);
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// Antiderivative (zero at `origin`) evaluated at `x`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let t = self.local(x);
        let inner = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, c)| acc * t + c / (k as f64 + 1.0));
        self.scale * inner * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    CubicPolyfit,
    Pchip,
}

/// A fitted piecewise polynomial over `[first knot x, last knot x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedCurve {
    kind: FitKind,
    knots: Vec<(f64, f64)>,
    segments: Vec<Segment>,
    interpolating: bool,
    fallback: Option<FitFallback>,
}

/// Slack allowed at the domain edges, relative to the abscissa magnitude.
const EDGE_TOLERANCE: f64 = 1e-12;

impl FittedCurve {
    pub(crate) fn new(
        kind: FitKind,
        knots: Vec<(f64, f64)>,
        segments: Vec<Segment>,
        interpolating: bool,
        fallback: Option<FitFallback>,
    ) -> Self {
        Self {
            kind,
            knots,
            segments,
            interpolating,
            fallback,
        }
    }

    pub fn kind(&self) -> FitKind {
        self.kind
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// False only for the least-squares fallback.
    pub fn is_interpolating(&self) -> bool {
        self.interpolating
    }

    pub fn fallback(&self) -> Option<FitFallback> {
        self.fallback
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    /// Coefficients in ascending powers of `x` for single-piece fits.
    pub fn monomial_coefficients(&self) -> Option<Vec<f64>> {
        match self.segments.as_slice() {
            [seg] => Some(expand_monomial(seg)),
            _ => None,
        }
    }

    fn clamp_to_domain(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let (dlo, dhi) = self.domain();
        let slack = |v: f64| EDGE_TOLERANCE * v.abs().max(1.0);
        if lo < dlo - slack(dlo) || hi > dhi + slack(dhi) {
            return Err(Error::OutOfDomain {
                lo,
                hi,
                domain_lo: dlo,
                domain_hi: dhi,
            });
        }
        Ok((lo.max(dlo), hi.min(dhi)))
    }

    fn segment_at(&self, x: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.hi < x);
        &self.segments[idx.min(self.segments.len() - 1)]
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let (x, _) = self.clamp_to_domain(x, x)?;
        Ok(self.segment_at(x).eval(x))
    }

    /// Exact integral over `[lo, hi]` from the piecewise antiderivative.
    pub fn integrate(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) {
            return Err(Error::EmptyInterval { lo, hi });
        }
        let (lo, hi) = self.clamp_to_domain(lo, hi)?;
        Ok(self
            .segments
            .iter()
            .filter(|s| s.hi > lo && s.lo < hi)
            .map(|s| {
                let a = s.lo.max(lo);
                let b = s.hi.min(hi);
                s.antiderivative(b) - s.antiderivative(a)
            })
            .sum())
    }
}

/// Free-function form of [`FittedCurve::integrate`].
pub fn integrate(fit: &FittedCurve, lo: f64, hi: f64) -> Result<f64> {
    fit.integrate(lo, hi)
}

fn expand_monomial(seg: &Segment) -> Vec<f64> {
    // c_k ((x - o)/s)^k = c_k s^-k Σ_j C(k,j) x^j (-o)^(k-j)
    let n = seg.coeffs.len();
    let mut out = vec![0.0; n];
    for (k, c) in seg.coeffs.iter().enumerate() {
        let factor = c / seg.scale.powi(k as i32);
        let mut binom = 1.0;
        for (j, slot) in out.iter_mut().enumerate().take(k + 1) {
            if j > 0 {
                binom = binom * (k + 1 - j) as f64 / j as f64;
            }
            *slot += factor * binom * (-seg.origin).powi((k - j) as i32);
        }
    }
    out
}
