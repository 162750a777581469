//! Test-only oracles, written independently of the library's fitting code.
#![allow(dead_code)]

use bdgap::{RateUnit, RdCurve};
use proptest::prelude::*;

/// Lagrange-form evaluation of the interpolating polynomial.
pub fn lagrange(knots: &[(f64, f64)], x: f64) -> f64 {
    knots
        .iter()
        .enumerate()
        .map(|(i, &(xi, yi))| {
            let basis: f64 = knots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &(xj, _))| (x - xj) / (xi - xj))
                .product();
            yi * basis
        })
        .sum()
}

/// PCHIP evaluated through the Hermite basis functions, with slopes from a
/// direct transcription of the weighted-harmonic-mean rule.
pub fn pchip_oracle(knots: &[(f64, f64)], x: f64) -> f64 {
    let n = knots.len();
    let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
    let ys: Vec<f64> = knots.iter().map(|k| k.1).collect();
    let h: Vec<f64> = (0..n - 1).map(|i| xs[i + 1] - xs[i]).collect();
    let m: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d = vec![m[0], m[0]];
    } else {
        for i in 1..n - 1 {
            if m[i - 1] > 0.0 && m[i] > 0.0 || m[i - 1] < 0.0 && m[i] < 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / m[i - 1] + w2 / m[i]);
            }
        }
        let edge = |h0: f64, h1: f64, m0: f64, m1: f64| {
            let s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
            if s * m0 <= 0.0 {
                0.0
            } else if m0 * m1 < 0.0 && s.abs() > 3.0 * m0.abs() {
                3.0 * m0
            } else {
                s
            }
        };
        d[0] = edge(h[0], h[1], m[0], m[1]);
        d[n - 1] = edge(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
    }
    let i = (0..n - 1).find(|&i| x <= xs[i + 1]).unwrap_or(n - 2);
    let t = (x - xs[i]) / h[i];
    let h00 = 2.0 * t.powi(3) - 3.0 * t.powi(2) + 1.0;
    let h10 = t.powi(3) - 2.0 * t.powi(2) + t;
    let h01 = -2.0 * t.powi(3) + 3.0 * t.powi(2);
    let h11 = t.powi(3) - t.powi(2);
    h00 * ys[i] + h10 * h[i] * d[i] + h01 * ys[i + 1] + h11 * h[i] * d[i + 1]
}

pub fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
    h * (0.5 * (f(lo) + f(hi)) + inner)
}

/// Mean of `f` over `[lo, hi]` from `n` midpoint samples.
pub fn dense_mean(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| f(lo + (i as f64 + 0.5) * h)).sum::<f64>() / n as f64
}

#[derive(Clone, Copy, Debug)]
pub enum OracleFit {
    Cubic,
    Pchip,
}

fn oracle_eval(kind: OracleFit, knots: &[(f64, f64)], x: f64) -> f64 {
    match kind {
        OracleFit::Cubic => lagrange(knots, x),
        OracleFit::Pchip => pchip_oracle(knots, x),
    }
}

fn knots(curve: &RdCurve, quality_first: bool) -> Vec<(f64, f64)> {
    curve
        .points()
        .iter()
        .map(|p| {
            if quality_first {
                (p.quality, p.rate.log10())
            } else {
                (p.rate.log10(), p.quality)
            }
        })
        .collect()
}

/// BD-rate by sampling both fitted curves at `n` qualities.
pub fn dense_bd_rate(reference: &RdCurve, test: &RdCurve, kind: OracleFit, n: usize) -> f64 {
    let (a, b) = (knots(reference, true), knots(test, true));
    let lo = a[0].0.max(b[0].0);
    let hi = a[a.len() - 1].0.min(b[b.len() - 1].0);
    let gap = dense_mean(
        |q| oracle_eval(kind, &b, q) - oracle_eval(kind, &a, q),
        lo,
        hi,
        n,
    );
    100.0 * (10f64.powf(gap) - 1.0)
}

/// BD-PSNR by sampling both fitted curves at `n` log-rates.
pub fn dense_bd_psnr(reference: &RdCurve, test: &RdCurve, kind: OracleFit, n: usize) -> f64 {
    let (a, b) = (knots(reference, false), knots(test, false));
    let lo = a[0].0.max(b[0].0);
    let hi = a[a.len() - 1].0.min(b[b.len() - 1].0);
    dense_mean(
        |x| oracle_eval(kind, &b, x) - oracle_eval(kind, &a, x),
        lo,
        hi,
        n,
    )
}

pub fn curve(codec: &str, seq: &str, pairs: &[(f64, f64)]) -> RdCurve {
    RdCurve::from_pairs(codec, seq, RateUnit::Bpp, pairs).unwrap()
}

/// Monotone 4-point curve: rates grow by factors in [1.3, 3], PSNR by
/// increments in [0.5, 4] dB.
pub fn arb_points(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    (
        0.005f64..2.0,
        25.0f64..40.0,
        prop::collection::vec((1.3f64..3.0, 0.5f64..4.0), n - 1),
    )
        .prop_map(|(r0, q0, steps)| {
            let mut out = vec![(r0, q0)];
            for (fr, dq) in steps {
                let (r, q) = *out.last().unwrap();
                out.push((r * fr, q + dq));
            }
            out
        })
}

/// Two 4-point curves whose quality ranges overlap by at least 1 dB.
pub fn arb_pair() -> impl Strategy<Value = (RdCurve, RdCurve)> {
    (arb_points(4), arb_points(4), 0.5f64..2.0, -1.5f64..1.5).prop_filter_map(
        "quality overlap too small",
        |(a, b, rate_factor, q_shift)| {
            let b: Vec<(f64, f64)> = b
                .iter()
                .map(|&(r, q)| (r * rate_factor, q - b[0].1 + a[0].1 + q_shift))
                .collect();
            let lo = a[0].1.max(b[0].1);
            let hi = a[3].1.min(b[3].1);
            (hi - lo > 1.0).then(|| (curve("ref", "s", &a), curve("test", "s", &b)))
        },
    )
}
