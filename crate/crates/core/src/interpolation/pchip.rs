use super::{check_knots, FitKind, FittedCurve, Segment};
use crate::error::{Error, Result};

/// Knot derivatives for monotone cubic Hermite interpolation.
///
/// Interior slopes are the weighted harmonic mean of the neighbouring secant
/// slopes, zero at local extrema. End slopes use the one-sided three-point
/// formula, clamped so the end interval stays monotone.
pub fn pchip_slopes(knots: &[(f64, f64)]) -> Result<Vec<f64>> {
    let n = knots.len();
    if n < 2 {
        return Err(Error::TooFewKnots { got: n });
    }
    check_knots(knots)?;

    let h: Vec<f64> = knots.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let delta: Vec<f64> = knots
        .windows(2)
        .zip(&h)
        .map(|(w, h)| (w[1].1 - w[0].1) / h)
        .collect();

    if n == 2 {
        return Ok(vec![delta[0]; 2]);
    }

    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 <= 0.0 {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    Ok(d)
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Monotone piecewise cubic Hermite interpolant through sorted knots.
pub fn fit_pchip(knots: &[(f64, f64)]) -> Result<FittedCurve> {
    let slopes = pchip_slopes(knots)?;
    let segments = knots
        .windows(2)
        .zip(slopes.windows(2))
        .map(|(w, s)| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let h = x1 - x0;
            let del = (y1 - y0) / h;
            let c2 = (3.0 * del - 2.0 * s[0] - s[1]) / h;
            let c3 = (s[0] + s[1] - 2.0 * del) / (h * h);
            Segment {
                lo: x0,
                hi: x1,
                origin: x0,
                scale: 1.0,
                coeffs: vec![y0, s[0], c2, c3],
            }
        })
        .collect();
    Ok(FittedCurve::new(
        FitKind::Pchip,
        knots.to_vec(),
        segments,
        true,
        None,
    ))
}
