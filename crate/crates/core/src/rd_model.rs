//! Rate-distortion measurements and their validation.
//!
//! Every type here is immutable once constructed. Curves are always sorted by
//! strictly increasing rate with non-decreasing quality, and an
//! [`EvaluationSet`] is always a dense codec × sequence matrix in one rate unit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit of the rate axis. Declared by the data, never inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateUnit {
    #[default]
    Bpp,
    Kbps,
}

impl fmt::Display for RateUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateUnit::Bpp => f.write_str("bpp"),
            RateUnit::Kbps => f.write_str("kbps"),
        }
    }
}

impl FromStr for RateUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bpp" => Ok(RateUnit::Bpp),
            "kbps" => Ok(RateUnit::Kbps),
            other => Err(Error::UnknownUnit(other.to_string())),
        }
    }
}

/// One operating point: rate plus PSNR in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub rate: f64,
    #[serde(rename = "psnr")]
    pub quality: f64,
}

impl RdPoint {
    pub fn new(rate: f64, quality: f64) -> Self {
        Self { rate, quality }
    }
}

impl From<(f64, f64)> for RdPoint {
    fn from((rate, quality): (f64, f64)) -> Self {
        Self { rate, quality }
    }
}

/// A validated RD curve for one (codec, sequence) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct RdCurve {
    label: String,
    sequence: String,
    rate_unit: RateUnit,
    points: Vec<RdPoint>,
}

#[derive(Deserialize)]
struct RawCurve {
    label: String,
    sequence: String,
    rate_unit: RateUnit,
    points: Vec<RdPoint>,
}

impl TryFrom<RawCurve> for RdCurve {
    type Error = Error;

    fn try_from(raw: RawCurve) -> Result<Self> {
        RdCurve::new(raw.label, raw.sequence, raw.rate_unit, raw.points)
    }
}

/// Sorts `points` by rate and checks every curve invariant.
pub fn validate_curve(points: &[RdPoint]) -> Result<Vec<RdPoint>> {
    if points.len() < 2 {
        return Err(Error::EmptyOrSingleton { len: points.len() });
    }
    for p in points {
        if !(p.rate > 0.0) || !p.rate.is_finite() {
            return Err(Error::NonPositiveRate { rate: p.rate });
        }
        if !p.quality.is_finite() {
            return Err(Error::NonFiniteQuality { quality: p.quality });
        }
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        a.rate
            .total_cmp(&b.rate)
            .then(a.quality.total_cmp(&b.quality))
    });
    for w in sorted.windows(2) {
        if w[0].rate == w[1].rate {
            return Err(Error::DuplicateRate { rate: w[0].rate });
        }
        if w[1].quality < w[0].quality {
            return Err(Error::NonMonotoneQuality {
                lower_rate: w[0].rate,
                lower_quality: w[0].quality,
                higher_rate: w[1].rate,
                higher_quality: w[1].quality,
            });
        }
    }
    Ok(sorted)
}

/// Drops every point that another point dominates (lower rate and higher
/// quality), then validates. Returns the kept points and one note per drop.
pub fn repair_dominated(points: &[RdPoint]) -> Result<(Vec<RdPoint>, Vec<RdPoint>)> {
    let (kept, dropped): (Vec<RdPoint>, Vec<RdPoint>) = points.iter().partition(|p| {
        !points
            .iter()
            .any(|o| o.rate < p.rate && o.quality > p.quality)
    });
    Ok((validate_curve(&kept)?, dropped))
}

impl RdCurve {
    pub fn new(
        label: impl Into<String>,
        sequence: impl Into<String>,
        rate_unit: RateUnit,
        points: Vec<RdPoint>,
    ) -> Result<Self> {
        let points = validate_curve(&points)?;
        Ok(Self {
            label: label.into(),
            sequence: sequence.into(),
            rate_unit,
            points,
        })
    }

    /// Convenience constructor from `(rate, quality)` tuples.
    pub fn from_pairs(
        label: impl Into<String>,
        sequence: impl Into<String>,
        rate_unit: RateUnit,
        pairs: &[(f64, f64)],
    ) -> Result<Self> {
        Self::new(
            label,
            sequence,
            rate_unit,
            pairs.iter().copied().map(RdPoint::from).collect(),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sequence(&self) -> &str {
        &self.sequence
    }

    pub fn rate_unit(&self) -> RateUnit {
        self.rate_unit
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(min, max)` quality in dB.
    pub fn quality_span(&self) -> (f64, f64) {
        let lo = self
            .points
            .iter()
            .map(|p| p.quality)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .points
            .iter()
            .map(|p| p.quality)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// `(min, max)` of log10(rate).
    pub fn log_rate_span(&self) -> (f64, f64) {
        (
            self.points[0].rate.log10(),
            self.points[self.points.len() - 1].rate.log10(),
        )
    }

    /// Same points under a different label/sequence.
    pub fn relabeled(&self, label: impl Into<String>, sequence: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            sequence: sequence.into(),
            rate_unit: self.rate_unit,
            points: self.points.clone(),
        }
    }

    /// Applies `f` to every point and revalidates.
    pub fn map_points(&self, f: impl Fn(RdPoint) -> RdPoint) -> Result<Self> {
        Self::new(
            self.label.clone(),
            self.sequence.clone(),
            self.rate_unit,
            self.points.iter().copied().map(f).collect(),
        )
    }
}

/// Dense codecs × sequences matrix of curves sharing one rate unit.
///
/// Codec and sequence identifiers are kept sorted so that every derived
/// result is independent of input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSet", into = "RawSet")]
pub struct EvaluationSet {
    rate_unit: RateUnit,
    codecs: Vec<String>,
    sequences: Vec<String>,
    curves: BTreeMap<(String, String), RdCurve>,
}

#[derive(Serialize, Deserialize)]
struct RawSet {
    rate_unit: RateUnit,
    curves: Vec<RdCurve>,
}

impl TryFrom<RawSet> for EvaluationSet {
    type Error = Error;

    fn try_from(raw: RawSet) -> Result<Self> {
        let set = validate_set(raw.curves)?;
        if set.rate_unit != raw.rate_unit {
            return Err(Error::MixedUnits {
                first: raw.rate_unit.to_string(),
                second: set.rate_unit.to_string(),
            });
        }
        Ok(set)
    }
}

impl From<EvaluationSet> for RawSet {
    fn from(set: EvaluationSet) -> Self {
        RawSet {
            rate_unit: set.rate_unit,
            curves: set.curves.into_values().collect(),
        }
    }
}

/// Builds a dense evaluation set, rejecting gaps, duplicates and mixed units.
pub fn validate_set(curves: Vec<RdCurve>) -> Result<EvaluationSet> {
    let first_unit = curves.first().ok_or(Error::EmptySet)?.rate_unit;
    let mut codecs = BTreeSet::new();
    let mut sequences = BTreeSet::new();
    let mut cells = BTreeMap::new();
    for curve in curves {
        if curve.rate_unit != first_unit {
            return Err(Error::MixedUnits {
                first: first_unit.to_string(),
                second: curve.rate_unit.to_string(),
            });
        }
        codecs.insert(curve.label.clone());
        sequences.insert(curve.sequence.clone());
        let key = (curve.label.clone(), curve.sequence.clone());
        if cells.contains_key(&key) {
            return Err(Error::DuplicateCell {
                codec: key.0,
                sequence: key.1,
            });
        }
        cells.insert(key, curve);
    }
    for codec in &codecs {
        for sequence in &sequences {
            if !cells.contains_key(&(codec.clone(), sequence.clone())) {
                return Err(Error::MissingCell {
                    codec: codec.clone(),
                    sequence: sequence.clone(),
                });
            }
        }
    }
    Ok(EvaluationSet {
        rate_unit: first_unit,
        codecs: codecs.into_iter().collect(),
        sequences: sequences.into_iter().collect(),
        curves: cells,
    })
}

impl EvaluationSet {
    pub fn rate_unit(&self) -> RateUnit {
        self.rate_unit
    }

    /// Codec identifiers, sorted.
    pub fn codecs(&self) -> &[String] {
        &self.codecs
    }

    /// Sequence identifiers, sorted.
    pub fn sequences(&self) -> &[String] {
        &self.sequences
    }

    pub fn has_codec(&self, codec: &str) -> bool {
        self.codecs.iter().any(|c| c == codec)
    }

    pub fn curve(&self, codec: &str, sequence: &str) -> Result<&RdCurve> {
        if !self.has_codec(codec) {
            return Err(Error::UnknownCodec(codec.to_string()));
        }
        self.curves
            .get(&(codec.to_string(), sequence.to_string()))
            .ok_or_else(|| Error::UnknownSequence(sequence.to_string()))
    }

    /// All curves of `codec`, in sequence order.
    pub fn curves_for(&self, codec: &str) -> Result<Vec<&RdCurve>> {
        self.sequences
            .iter()
            .map(|s| self.curve(codec, s))
            .collect()
    }

    /// Every curve, ordered by (codec, sequence).
    pub fn curves(&self) -> impl Iterator<Item = &RdCurve> {
        self.curves.values()
    }

    /// The same set with `sequence` removed.
    pub fn without_sequence(&self, sequence: &str) -> Result<EvaluationSet> {
        if !self.sequences.iter().any(|s| s == sequence) {
            return Err(Error::UnknownSequence(sequence.to_string()));
        }
        validate_set(
            self.curves
                .values()
                .filter(|c| c.sequence != sequence)
                .cloned()
                .collect(),
        )
    }
}
