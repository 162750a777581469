use serde::{Deserialize, Serialize};

use super::{check_knots, FitFallback, FitKind, FittedCurve, Segment};
use crate::error::{Error, Result};

/// What the cubic fit does when it does not receive exactly four knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitPolicy {
    /// Exactly four knots or an error.
    #[default]
    Strict,
    /// 2 knots → line, 3 → quadratic, more than 4 → least-squares cubic.
    Fallback,
}

/// Fits the unique degree-≤3 polynomial through four knots.
///
/// The system is solved in centred, scaled coordinates so that the
/// Vandermonde matrix stays well conditioned for PSNR-sized abscissae.
pub fn fit_cubic_polyfit(knots: &[(f64, f64)], policy: FitPolicy) -> Result<FittedCurve> {
    check_knots(knots)?;
    let n = knots.len();
    let (degree, fallback) = match (n, policy) {
        (4, _) => (3, None),
        (2, FitPolicy::Fallback) => (1, Some(FitFallback::Linear)),
        (3, FitPolicy::Fallback) => (2, Some(FitFallback::Quadratic)),
        (n, FitPolicy::Fallback) if n > 4 => (3, Some(FitFallback::LeastSquaresCubic)),
        (n, _) => return Err(Error::WrongKnotCount { got: n }),
    };

    let lo = knots[0].0;
    let hi = knots[n - 1].0;
    let origin = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo);
    let ts: Vec<f64> = knots.iter().map(|(x, _)| (x - origin) / scale).collect();
    let ys: Vec<f64> = knots.iter().map(|(_, y)| *y).collect();

    let cols = degree + 1;
    let vander: Vec<Vec<f64>> = ts
        .iter()
        .map(|t| (0..cols).map(|k| t.powi(k as i32)).collect())
        .collect();

    let coeffs = if n == cols {
        solve(vander, ys)
    } else {
        // Normal equations; cols = 4 and |t| ≤ 1 keep this well conditioned.
        let mut ata = vec![vec![0.0; cols]; cols];
        let mut atb = vec![0.0; cols];
        for (row, y) in vander.iter().zip(&ys) {
            for i in 0..cols {
                atb[i] += row[i] * y;
                for j in 0..cols {
                    ata[i][j] += row[i] * row[j];
                }
            }
        }
        solve(ata, atb)
    }
    .ok_or(Error::DuplicateAbscissa { x: lo })?;

    let segment = Segment {
        lo,
        hi,
        origin,
        scale,
        coeffs,
    };
    Ok(FittedCurve::new(
        FitKind::CubicPolyfit,
        knots.to_vec(),
        vec![segment],
        fallback != Some(FitFallback::LeastSquaresCubic),
        fallback,
    ))
}

/// Gaussian elimination with partial pivoting. `None` if singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (x, pivot_x) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * pivot_x;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}
