//! Test-set aggregation: mean of per-sequence BD-rates versus the BD-rate of
//! averaged RD curves, conflict classification, and leave-one-out analysis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bd_metrics::{bd_rate, log_rate_at, BdMetric, BdOptions, BdResult, MIN_QUALITY_OVERLAP};
use crate::error::{Error, Result};
use crate::interpolation::{FitPolicy, Interpolator};
use crate::rd_model::{EvaluationSet, RdCurve, RdPoint};

/// Sequence label carried by averaged curves.
pub const AVERAGE_SEQUENCE: &str = "average";

/// How RD curves are averaged across sequences.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AveragingMode {
    /// Mean of the i-th rate and i-th quality over sequences.
    #[default]
    IndexAligned,
    /// Mean fitted rate at common quality values. `points` grid values are
    /// spread evenly over the quality range shared by every sequence.
    QualityGrid { points: usize },
}

/// Averaged RD curve of one codec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub codec: String,
    pub mode: AveragingMode,
    pub source_sequences: Vec<String>,
    pub curve: RdCurve,
}

impl AggregateCurve {
    pub fn points(&self) -> &[RdPoint] {
        self.curve.points()
    }
}

/// Index-aligned average: point i is the mean of every sequence's point i.
pub fn average_curve_index_aligned(set: &EvaluationSet, codec: &str) -> Result<AggregateCurve> {
    let curves = set.curves_for(codec)?;
    let counts: Vec<usize> = curves.iter().map(|c| c.len()).collect();
    if counts.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::RaggedPointCounts {
            codec: codec.to_string(),
            counts,
        });
    }
    let n = curves.len() as f64;
    let points = (0..counts[0])
        .map(|i| {
            let rate: f64 = curves.iter().map(|c| c.points()[i].rate).sum();
            let quality: f64 = curves.iter().map(|c| c.points()[i].quality).sum();
            RdPoint::new(rate / n, quality / n)
        })
        .collect();
    Ok(AggregateCurve {
        codec: codec.to_string(),
        mode: AveragingMode::IndexAligned,
        source_sequences: set.sequences().to_vec(),
        curve: RdCurve::new(codec, AVERAGE_SEQUENCE, set.rate_unit(), points)?,
    })
}

fn check_grid_point(curve: &RdCurve, q: f64) -> Result<()> {
    let (lo, hi) = curve.quality_span();
    if q < lo || q > hi {
        return Err(Error::GridOutsideSpan {
            sequence: curve.sequence().to_string(),
            quality: q,
            span_lo: lo,
            span_hi: hi,
        });
    }
    Ok(())
}

/// Quality-grid average: at each grid quality, the mean over sequences of
/// the fitted rate. Every grid value must lie inside every sequence's span.
pub fn average_curve_quality_grid(
    set: &EvaluationSet,
    codec: &str,
    grid: &[f64],
    opts: impl Into<BdOptions>,
) -> Result<AggregateCurve> {
    let opts = opts.into();
    let curves = set.curves_for(codec)?;
    for curve in &curves {
        for &q in grid {
            check_grid_point(curve, q)?;
        }
    }
    let n = curves.len() as f64;
    let points = grid
        .iter()
        .map(|&q| {
            let total = curves
                .iter()
                .map(|c| log_rate_at(c, q, opts).map(|lr| 10f64.powf(lr)))
                .sum::<Result<f64>>()?;
            Ok(RdPoint::new(total / n, q))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AggregateCurve {
        codec: codec.to_string(),
        mode: AveragingMode::QualityGrid { points: grid.len() },
        source_sequences: set.sequences().to_vec(),
        curve: RdCurve::new(codec, AVERAGE_SEQUENCE, set.rate_unit(), points)?,
    })
}

/// Evenly spaced grid over the quality range every sequence of `codec`
/// covers. Fails on disjoint operating ranges, naming the sequence whose
/// span ends lowest.
pub fn shared_quality_grid(set: &EvaluationSet, codec: &str, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidConfig(format!(
            "quality grid needs at least 2 points, got {points}"
        )));
    }
    let curves = set.curves_for(codec)?;
    let lowest_top = curves
        .iter()
        .min_by(|a, b| a.quality_span().1.total_cmp(&b.quality_span().1))
        .ok_or(Error::EmptySet)?;
    let highest_bottom = curves
        .iter()
        .max_by(|a, b| a.quality_span().0.total_cmp(&b.quality_span().0))
        .ok_or(Error::EmptySet)?;
    let lo = highest_bottom.quality_span().0;
    let hi = lowest_top.quality_span().1;
    if hi - lo < MIN_QUALITY_OVERLAP {
        let (span_lo, span_hi) = lowest_top.quality_span();
        return Err(Error::GridOutsideSpan {
            sequence: lowest_top.sequence().to_string(),
            quality: lo,
            span_lo,
            span_hi,
        });
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect())
}

/// Averaged curve of `codec` under `mode`.
pub fn average_curve(
    set: &EvaluationSet,
    codec: &str,
    mode: &AveragingMode,
    opts: impl Into<BdOptions>,
) -> Result<AggregateCurve> {
    match mode {
        AveragingMode::IndexAligned => average_curve_index_aligned(set, codec),
        AveragingMode::QualityGrid { points } => {
            let grid = shared_quality_grid(set, codec, *points)?;
            average_curve_quality_grid(set, codec, &grid, opts)
        }
    }
}

/// Unweighted arithmetic mean of BD values of one metric kind.
pub fn mean_of_metrics<'a>(results: impl IntoIterator<Item = &'a BdResult>) -> Result<f64> {
    let mut kind: Option<BdMetric> = None;
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in results {
        match kind {
            Some(k) if k != r.metric => return Err(Error::MixedMetricKinds),
            _ => kind = Some(r.metric),
        }
        sum += r.value;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    SignConflict,
    MagnitudeDivergence,
}

impl Verdict {
    pub fn is_conflict(self) -> bool {
        self != Verdict::Consistent
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::SignConflict => "sign_conflict",
            Verdict::MagnitudeDivergence => "magnitude_divergence",
        })
    }
}

/// Sign conflict when both values are nonzero (beyond `zero_tolerance`)
/// with opposite signs; otherwise magnitude divergence when they differ by
/// more than `threshold` percentage points; otherwise consistent.
pub fn classify(mean: f64, on_average: f64, threshold: f64, zero_tolerance: f64) -> (Verdict, f64) {
    let sign = |v: f64| {
        if v.abs() <= zero_tolerance {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };
    let divergence = (mean - on_average).abs();
    let (a, b) = (sign(mean), sign(on_average));
    let verdict = if a != 0 && b != 0 && a != b {
        Verdict::SignConflict
    } else if divergence > threshold {
        Verdict::MagnitudeDivergence
    } else {
        Verdict::Consistent
    };
    (verdict, divergence)
}

/// Knobs of a test-set comparison, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSettings {
    pub interpolator: Interpolator,
    #[serde(default)]
    pub fit_policy: FitPolicy,
    pub averaging_mode: AveragingMode,
    /// Percentage points.
    pub divergence_threshold: f64,
    /// BD-rates within this many percentage points of zero have no sign.
    pub zero_tolerance: f64,
}

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 2.0;
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-6;

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            interpolator: Interpolator::Pchip,
            fit_policy: FitPolicy::Strict,
            averaging_mode: AveragingMode::IndexAligned,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            zero_tolerance: DEFAULT_ZERO_TOLERANCE,
        }
    }
}

impl CompareSettings {
    pub fn with_interpolator(mut self, interpolator: Interpolator) -> Self {
        self.interpolator = interpolator;
        self
    }

    pub fn bd_options(&self) -> BdOptions {
        BdOptions {
            interpolator: self.interpolator,
            fit_policy: self.fit_policy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub reference: String,
    pub test: String,
    #[serde(flatten)]
    pub compare: CompareSettings,
}

/// Per-sequence BD-rate, or why it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SequenceBd {
    Defined(BdResult),
    Undefined { reason: String },
}

impl SequenceBd {
    pub fn value(&self) -> Option<f64> {
        match self {
            SequenceBd::Defined(r) => Some(r.value),
            SequenceBd::Undefined { .. } => None,
        }
    }

    pub fn result(&self) -> Option<&BdResult> {
        match self {
            SequenceBd::Defined(r) => Some(r),
            SequenceBd::Undefined { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub settings: ReportSettings,
    pub per_sequence: BTreeMap<String, SequenceBd>,
    /// Mean of the defined per-sequence BD-rates (%).
    pub mean_of_metrics: f64,
    /// BD-rate between the two averaged curves (%).
    pub metric_on_average: f64,
    pub verdict: Verdict,
    /// |mean_of_metrics − metric_on_average| in percentage points.
    pub divergence: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Runs both methodologies on `reference` vs `test` and classifies the gap.
pub fn compare(
    set: &EvaluationSet,
    reference: &str,
    test: &str,
    settings: &CompareSettings,
) -> Result<ComparisonReport> {
    for codec in [reference, test] {
        if !set.has_codec(codec) {
            return Err(Error::UnknownCodec(codec.to_string()));
        }
    }
    let opts = settings.bd_options();
    let mut warnings = Vec::new();
    let mut per_sequence = BTreeMap::new();
    for sequence in set.sequences() {
        let outcome = match bd_rate(
            set.curve(reference, sequence)?,
            set.curve(test, sequence)?,
            opts,
        ) {
            Ok(r) => SequenceBd::Defined(r),
            Err(e @ Error::NoOverlap { .. }) => {
                warnings.push(format!(
                    "sequence `{sequence}`: BD-rate undefined ({e}); excluded from the mean of metrics"
                ));
                SequenceBd::Undefined {
                    reason: e.to_string(),
                }
            }
            Err(e) => return Err(e),
        };
        per_sequence.insert(sequence.clone(), outcome);
    }
    let mean = mean_of_metrics(per_sequence.values().filter_map(SequenceBd::result))?;

    let ref_avg = average_curve(set, reference, &settings.averaging_mode, opts)?;
    let test_avg = average_curve(set, test, &settings.averaging_mode, opts)?;
    let on_average = bd_rate(&ref_avg.curve, &test_avg.curve, opts)?.value;

    let (verdict, divergence) = classify(
        mean,
        on_average,
        settings.divergence_threshold,
        settings.zero_tolerance,
    );
    Ok(ComparisonReport {
        settings: ReportSettings {
            reference: reference.to_string(),
            test: test.to_string(),
            compare: settings.clone(),
        },
        per_sequence,
        mean_of_metrics: mean,
        metric_on_average: on_average,
        verdict,
        divergence,
        warnings,
    })
}

/// One report per sequence, each computed with that sequence excluded.
pub fn leave_one_out(
    set: &EvaluationSet,
    reference: &str,
    test: &str,
    settings: &CompareSettings,
) -> Result<BTreeMap<String, ComparisonReport>> {
    let n = set.sequences().len();
    if n < 2 {
        return Err(Error::TooFewSequences(n));
    }
    set.sequences()
        .iter()
        .map(|s| {
            let reduced = set.without_sequence(s)?;
            Ok((s.clone(), compare(&reduced, reference, test, settings)?))
        })
        .collect()
}
