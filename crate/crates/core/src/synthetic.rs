//! The two-codec, two-video linear counterexample, and a seeded random
//! search for test sets where averaging RD curves flips the verdict.
//!
//! In the linear scenario both codecs produce identical points on video-1,
//! while on video-2 codec-2 uses the same line shifted up by one rate point.
//! Per-video BD-rates are therefore zero, but the index-aligned average
//! curves only coincide when `dp2 * db1 == dp1 * db2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{
    average_curve_index_aligned, compare, CompareSettings, ComparisonReport, Verdict,
};
use crate::error::{Error, Result};
use crate::interpolation::Interpolator;
use crate::rd_model::{validate_set, EvaluationSet, RateUnit, RdCurve, RdPoint};

pub const CODEC_1: &str = "codec-1";
pub const CODEC_2: &str = "codec-2";
pub const VIDEO_1: &str = "video-1";
pub const VIDEO_2: &str = "video-2";

/// Tolerance on the equivalence-condition residual.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-12;

/// Linear RD construction for two codecs on two videos.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearScenario {
    /// First rate of video-1.
    pub r1_start: f64,
    /// First PSNR of video-1 (dB).
    pub p1_start: f64,
    /// Rate step on video-1.
    pub db1: f64,
    /// PSNR step on video-1.
    pub dp1: f64,
    pub r2_start: f64,
    pub p2_start: f64,
    pub db2: f64,
    pub dp2: f64,
    /// Points per codec per video.
    pub n: usize,
}

impl LinearScenario {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("db1", self.db1),
            ("dp1", self.dp1),
            ("db2", self.db2),
            ("dp2", self.dp2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if self.n < 2 {
            return Err(Error::InvalidScenario(format!(
                "n must be >= 2, got {}",
                self.n
            )));
        }
        for (name, v) in [("r1", self.r1_start), ("r2", self.r2_start)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if !self.p1_start.is_finite() || !self.p2_start.is_finite() {
            return Err(Error::InvalidScenario("PSNR anchors must be finite".into()));
        }
        Ok(())
    }

    fn video1(&self, i: usize) -> RdPoint {
        let k = i as f64;
        RdPoint::new(self.r1_start + k * self.db1, self.p1_start + k * self.dp1)
    }

    fn video2(&self, i: usize) -> RdPoint {
        let k = i as f64;
        RdPoint::new(self.r2_start + k * self.db2, self.p2_start + k * self.dp2)
    }

    /// Multiplies every rate quantity by `k`.
    pub fn scale_rates(&self, k: f64) -> Self {
        Self {
            r1_start: self.r1_start * k,
            db1: self.db1 * k,
            r2_start: self.r2_start * k,
            db2: self.db2 * k,
            ..*self
        }
    }
}

/// Materializes the scenario as a 2 codecs × 2 videos evaluation set.
pub fn build_scenario(s: &LinearScenario) -> Result<EvaluationSet> {
    s.validate()?;
    let n = s.n;
    let v1: Vec<RdPoint> = (0..n).map(|i| s.video1(i)).collect();
    let v2_first: Vec<RdPoint> = (0..n).map(|i| s.video2(i)).collect();
    let v2_shifted: Vec<RdPoint> = (1..=n).map(|i| s.video2(i)).collect();
    validate_set(vec![
        RdCurve::new(CODEC_1, VIDEO_1, RateUnit::Bpp, v1.clone())?,
        RdCurve::new(CODEC_2, VIDEO_1, RateUnit::Bpp, v1)?,
        RdCurve::new(CODEC_1, VIDEO_2, RateUnit::Bpp, v2_first)?,
        RdCurve::new(CODEC_2, VIDEO_2, RateUnit::Bpp, v2_shifted)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceCheck {
    pub holds: bool,
    /// `dp2 * db1 - dp1 * db2`.
    pub residual: f64,
}

/// Whether the averaged curves of the two codecs coincide.
pub fn equivalence_condition(s: &LinearScenario) -> EquivalenceCheck {
    let residual = s.dp2 * s.db1 - s.dp1 * s.db2;
    EquivalenceCheck {
        holds: residual.abs() < EQUIVALENCE_TOLERANCE,
        residual,
    }
}

/// `P = slope * R + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest |P - (slope * R + intercept)| over the fitted points.
    pub max_residual: f64,
}

impl LineFit {
    /// Line through the first two points, intercept from the first point.
    pub fn through(points: &[RdPoint]) -> Self {
        let (a, b) = (points[0], points[1]);
        let slope = (b.quality - a.quality) / (b.rate - a.rate);
        let intercept = a.quality - slope * a.rate;
        let max_residual = points
            .iter()
            .map(|p| (p.quality - (slope * p.rate + intercept)).abs())
            .fold(0.0, f64::max);
        Self {
            slope,
            intercept,
            max_residual,
        }
    }
}

/// Line fits through each codec's index-aligned average curve.
pub fn average_line_fits(s: &LinearScenario) -> Result<(LineFit, LineFit)> {
    let set = build_scenario(s)?;
    let c1 = average_curve_index_aligned(&set, CODEC_1)?;
    let c2 = average_curve_index_aligned(&set, CODEC_2)?;
    Ok((LineFit::through(c1.points()), LineFit::through(c2.points())))
}

/// Everything the linear scenario produces, for printing or checking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: LinearScenario,
    pub equivalence: EquivalenceCheck,
    pub codec_1_fit: LineFit,
    pub codec_2_fit: LineFit,
    /// Codec-2 intercept minus codec-1 intercept (dB).
    pub intercept_gap: f64,
    pub report: ComparisonReport,
}

pub fn scenario_report(s: &LinearScenario, settings: &CompareSettings) -> Result<ScenarioReport> {
    if settings.interpolator == Interpolator::CubicPolyfit && s.n < 4 {
        return Err(Error::InvalidScenario(format!(
            "cubic interpolation needs n >= 4, got {}",
            s.n
        )));
    }
    let set = build_scenario(s)?;
    let report = compare(&set, CODEC_1, CODEC_2, settings)?;
    let (f1, f2) = average_line_fits(s)?;
    Ok(ScenarioReport {
        scenario: *s,
        equivalence: equivalence_condition(s),
        codec_1_fit: f1,
        codec_2_fit: f2,
        intercept_gap: f2.intercept - f1.intercept,
        report,
    })
}

/// Default comparison settings for linear scenarios: the linear
/// interpolator reproduces the constructed lines exactly.
pub fn scenario_settings() -> CompareSettings {
    CompareSettings::default().with_interpolator(Interpolator::Linear)
}

/// How sequences' operating ranges are laid out in a random search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeLayout {
    /// Every sequence gets its own slice of the rate and PSNR ranges.
    #[default]
    Disjoint,
    /// Every sequence draws from the full ranges.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub num_sequences: usize,
    pub points_per_curve: usize,
    pub rate_range: (f64, f64),
    pub psnr_range: (f64, f64),
    pub layout: RangeLayout,
    pub trials: u64,
    pub seed: u64,
    pub settings: CompareSettings,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            num_sequences: 2,
            points_per_curve: 4,
            rate_range: (0.01, 1.0),
            psnr_range: (28.0, 44.0),
            layout: RangeLayout::Disjoint,
            trials: 10_000,
            seed: 42,
            settings: CompareSettings::default(),
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        if self.num_sequences < 1 {
            return bad("num_sequences must be >= 1".into());
        }
        if self.points_per_curve < 2 {
            return bad("points_per_curve must be >= 2".into());
        }
        let (rlo, rhi) = self.rate_range;
        if !(rlo > 0.0 && rhi > rlo && rhi.is_finite()) {
            return bad(format!(
                "rate range ({rlo}, {rhi}) must satisfy 0 < lo < hi"
            ));
        }
        let (plo, phi) = self.psnr_range;
        if !(phi > plo && plo.is_finite() && phi.is_finite()) {
            return bad(format!("psnr range ({plo}, {phi}) must satisfy lo < hi"));
        }
        Ok(())
    }

    /// `(rate_range, psnr_range)` of sequence `s`.
    fn band(&self, s: usize) -> ((f64, f64), (f64, f64)) {
        match self.layout {
            RangeLayout::Shared => (self.rate_range, self.psnr_range),
            RangeLayout::Disjoint => {
                let k = self.num_sequences as f64;
                let (llo, lhi) = (self.rate_range.0.ln(), self.rate_range.1.ln());
                let lw = (lhi - llo) / k;
                let pw = (self.psnr_range.1 - self.psnr_range.0) / k;
                let i = s as f64;
                (
                    ((llo + i * lw).exp(), (llo + (i + 1.0) * lw).exp()),
                    (
                        self.psnr_range.0 + i * pw,
                        self.psnr_range.0 + (i + 1.0) * pw,
                    ),
                )
            }
        }
    }
}

/// A test set on which the two methodologies disagree in sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadoxInstance {
    pub trial: u64,
    pub set: EvaluationSet,
    pub report: ComparisonReport,
}

pub const SEARCH_REFERENCE: &str = "reference";
pub const SEARCH_TEST: &str = "test";

/// Random monotone curve: log-uniform sorted rates, PSNR built from a
/// uniform start plus cumulative positive increments.
fn random_curve(
    rng: &mut ChaCha8Rng,
    codec: &str,
    sequence: &str,
    points: usize,
    (rlo, rhi): (f64, f64),
    (plo, phi): (f64, f64),
) -> Result<RdCurve> {
    let (llo, lhi) = (rlo.ln(), rhi.ln());
    let mut rates: Vec<f64> = (0..points).map(|_| rng.gen_range(llo..lhi).exp()).collect();
    rates.sort_by(f64::total_cmp);
    let span = phi - plo;
    let step = 0.75 * span / (points - 1) as f64;
    let mut q = plo + rng.gen_range(0.0..0.25 * span);
    let mut out = Vec::with_capacity(points);
    for (i, rate) in rates.into_iter().enumerate() {
        if i > 0 {
            q += rng.gen_range(0.2 * step..step);
        }
        out.push(RdPoint::new(rate, q));
    }
    RdCurve::new(codec, sequence, RateUnit::Bpp, out)
}

/// Generates the evaluation set for one trial. The generator state depends
/// only on `(seed, trial)`.
pub fn trial_set(config: &SearchConfig, trial: u64) -> Result<EvaluationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial);
    let mut curves = Vec::with_capacity(2 * config.num_sequences);
    for s in 0..config.num_sequences {
        let name = format!("seq-{}", s + 1);
        let (rates, psnrs) = config.band(s);
        for codec in [SEARCH_REFERENCE, SEARCH_TEST] {
            curves.push(random_curve(
                &mut rng,
                codec,
                &name,
                config.points_per_curve,
                rates,
                psnrs,
            )?);
        }
    }
    validate_set(curves)
}

fn run_trial(config: &SearchConfig, trial: u64) -> Result<Option<ParadoxInstance>> {
    let set = trial_set(config, trial)?;
    let report = match compare(&set, SEARCH_REFERENCE, SEARCH_TEST, &config.settings) {
        Ok(r) => r,
        // Degenerate draws (no overlap anywhere) are not instances.
        Err(Error::NoOverlap { .. } | Error::EmptyInput) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok((report.verdict == Verdict::SignConflict).then_some(ParadoxInstance { trial, set, report }))
}

/// Every trial whose mean of per-sequence BD-rates and averaged-curve
/// BD-rate disagree in sign. Results are in trial order regardless of how
/// the trials were scheduled.
pub fn search_paradox(config: &SearchConfig) -> Result<Vec<ParadoxInstance>> {
    config.validate()?;
    let found: Vec<Option<ParadoxInstance>> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}
