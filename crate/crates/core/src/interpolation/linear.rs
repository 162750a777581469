use std::f64::consts::LN_10;

use super::check_knots;
use crate::error::{Error, Result};
use crate::rd_model::{RdCurve, RdPoint};

/// Piecewise linear interpolation in the rate/quality plane.
///
/// The BD integrands (log10 of a linear rate, or a linear quality over
/// log-rate) have closed-form antiderivatives on each piece, so integrals
/// are exact. A curve that is linear in (rate, quality) is reproduced with
/// no interpolation error at all.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRdCurve {
    points: Vec<RdPoint>,
}

impl LinearRdCurve {
    pub fn new(curve: &RdCurve) -> Self {
        Self {
            points: curve.points().to_vec(),
        }
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    fn quality_knots(&self) -> Result<()> {
        let knots: Vec<(f64, f64)> = self.points.iter().map(|p| (p.quality, p.rate)).collect();
        check_knots(&knots)
    }

    fn check(lo: f64, hi: f64, dlo: f64, dhi: f64) -> Result<(f64, f64)> {
        if !(lo < hi) {
            return Err(Error::EmptyInterval { lo, hi });
        }
        let slack = |v: f64| 1e-12 * v.abs().max(1.0);
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

    /// Linearly interpolated rate at quality `q`.
    pub fn rate_at(&self, q: f64) -> Result<f64> {
        self.quality_knots()?;
        let first = self.points[0].quality;
        let last = self.points[self.points.len() - 1].quality;
        let slack = |v: f64| 1e-12 * v.abs().max(1.0);
        if q < first - slack(first) || q > last + slack(last) {
            return Err(Error::OutOfDomain {
                lo: q,
                hi: q,
                domain_lo: first,
                domain_hi: last,
            });
        }
        let q = q.clamp(first, last);
        let idx = self
            .points
            .windows(2)
            .position(|w| q <= w[1].quality)
            .unwrap_or(self.points.len() - 2);
        let (a, b) = (self.points[idx], self.points[idx + 1]);
        Ok(a.rate + (b.rate - a.rate) * (q - a.quality) / (b.quality - a.quality))
    }

    /// ∫ log10(rate(q)) dq over `[lo, hi]` in quality.
    pub fn integrate_log_rate(&self, lo: f64, hi: f64) -> Result<f64> {
        self.quality_knots()?;
        let first = self.points[0].quality;
        let last = self.points[self.points.len() - 1].quality;
        let (lo, hi) = Self::check(lo, hi, first, last)?;
        let mut total = 0.0;
        for w in self.points.windows(2) {
            let (p, n) = (w[0], w[1]);
            let a = p.quality.max(lo);
            let b = n.quality.min(hi);
            if b <= a {
                continue;
            }
            let slope = (n.rate - p.rate) / (n.quality - p.quality);
            let ra = if a == p.quality {
                p.rate
            } else {
                p.rate + slope * (a - p.quality)
            };
            let rb = if b == n.quality {
                n.rate
            } else {
                p.rate + slope * (b - p.quality)
            };
            total += (b - a) * mean_ln(ra, rb);
        }
        Ok(total / LN_10)
    }

    /// ∫ quality(10^x) dx over `[lo, hi]` in log10-rate.
    pub fn integrate_quality(&self, lo: f64, hi: f64) -> Result<f64> {
        let first = self.points[0].rate.log10();
        let last = self.points[self.points.len() - 1].rate.log10();
        let (lo, hi) = Self::check(lo, hi, first, last)?;
        let mut total = 0.0;
        for w in self.points.windows(2) {
            let (p, n) = (w[0], w[1]);
            let (xp, xn) = (p.rate.log10(), n.rate.log10());
            let a = xp.max(lo);
            let b = xn.min(hi);
            if b <= a {
                continue;
            }
            let ra = if a == xp { p.rate } else { 10f64.powf(a) };
            let rb = if b == xn { n.rate } else { 10f64.powf(b) };
            let slope = (n.quality - p.quality) / (n.rate - p.rate);
            total += (p.quality - slope * p.rate) * (b - a) + slope * (rb - ra) / LN_10;
        }
        Ok(total)
    }
}

/// Mean of ln(r) along a straight segment from rate `u` to rate `v`.
fn mean_ln(u: f64, v: f64) -> f64 {
    let l = (v / u).ln();
    if l.abs() < 1e-8 {
        0.5 * (u.ln() + v.ln())
    } else {
        v.ln() + l / l.exp_m1() - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd_model::RateUnit;

    fn curve(pairs: &[(f64, f64)]) -> LinearRdCurve {
        LinearRdCurve::new(&RdCurve::from_pairs("a", "s", RateUnit::Bpp, pairs).unwrap())
    }

    fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
        h * (0.5 * (f(lo) + f(hi)) + inner)
    }

    #[test]
    fn log_rate_integral_matches_quadrature() {
        let c = curve(&[(1.0, 30.0), (3.0, 31.0), (5.0, 32.5), (9.0, 33.0)]);
        let exact = c.integrate_log_rate(30.4, 32.8).unwrap();
        let numeric = trapezoid(|q| c.rate_at(q).unwrap().log10(), 30.4, 32.8, 200_000);
        assert!((exact - numeric).abs() < 1e-8, "{exact} vs {numeric}");
    }

    #[test]
    fn quality_integral_matches_quadrature() {
        let c = curve(&[(1.0, 30.0), (3.0, 31.0), (5.0, 32.5), (9.0, 33.0)]);
        let pts = c.points().to_vec();
        let q = |x: f64| {
            let r = 10f64.powf(x);
            let i = pts
                .windows(2)
                .position(|w| r <= w[1].rate)
                .unwrap_or(pts.len() - 2);
            let (a, b) = (pts[i], pts[i + 1]);
            a.quality + (b.quality - a.quality) * (r - a.rate) / (b.rate - a.rate)
        };
        let (lo, hi) = (0.1, 0.9);
        let exact = c.integrate_quality(lo, hi).unwrap();
        let numeric = trapezoid(q, lo, hi, 200_000);
        assert!((exact - numeric).abs() < 1e-8, "{exact} vs {numeric}");
    }

    #[test]
    fn mean_ln_is_stable_near_equal_rates() {
        let u = 2.0;
        let v = 2.0 * (1.0 + 1e-10);
        assert!((mean_ln(u, v) - 0.5 * (u.ln() + v.ln())).abs() < 1e-15);
        let (u, v) = (1.0f64, std::f64::consts::E);
        // ∫_1^e ln r dr / (e - 1) = 1 / (e - 1)
        assert!((mean_ln(u, v) - 1.0 / (v - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn rate_at_interpolates_and_rejects_outside() {
        let c = curve(&[(1.0, 30.0), (3.0, 32.0)]);
        assert!((c.rate_at(31.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(c.rate_at(29.0).is_err());
        assert!(c.rate_at(33.0).is_err());
        assert!(c.integrate_log_rate(31.0, 31.0).is_err());
    }
}
