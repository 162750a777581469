use std::fmt;

use serde::{Deserialize, Serialize};

/// Axis along which two curves are intersected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// PSNR in dB.
    Quality,
    /// log10 of the rate.
    LogRate,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Quality => f.write_str("quality"),
            Axis::LogRate => f.write_str("log-rate"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("curve needs at least 2 points, got {len}")]
    EmptyOrSingleton { len: usize },
    #[error("duplicate rate {rate}")]
    DuplicateRate { rate: f64 },
    #[error("quality decreases from {lower_quality} dB at rate {lower_rate} to {higher_quality} dB at rate {higher_rate}")]
    NonMonotoneQuality {
        lower_rate: f64,
        lower_quality: f64,
        higher_rate: f64,
        higher_quality: f64,
    },
    #[error("rate must be positive, got {rate}")]
    NonPositiveRate { rate: f64 },
    #[error("quality must be finite, got {quality}")]
    NonFiniteQuality { quality: f64 },

    #[error("missing curve for codec `{codec}` on sequence `{sequence}`")]
    MissingCell { codec: String, sequence: String },
    #[error("curves mix rate units ({first} and {second})")]
    MixedUnits { first: String, second: String },
    #[error("more than one curve for codec `{codec}` on sequence `{sequence}`")]
    DuplicateCell { codec: String, sequence: String },
    #[error("evaluation set is empty")]
    EmptySet,
    #[error("unknown codec `{0}`")]
    UnknownCodec(String),
    #[error("unknown sequence `{0}`")]
    UnknownSequence(String),

    #[error("two knots share abscissa {x}")]
    DuplicateAbscissa { x: f64 },
    #[error("knots must be sorted by strictly increasing abscissa")]
    UnsortedKnots,
    #[error("cubic polynomial fit needs exactly 4 knots, got {got}")]
    WrongKnotCount { got: usize },
    #[error("interpolation needs at least 2 knots, got {got}")]
    TooFewKnots { got: usize },
    #[error("integration interval [{lo}, {hi}] is empty")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("[{lo}, {hi}] lies outside the fit domain [{domain_lo}, {domain_hi}]")]
    OutOfDomain {
        lo: f64,
        hi: f64,
        domain_lo: f64,
        domain_hi: f64,
    },

    #[error(
        "no {axis} overlap: reference spans [{:.4}, {:.4}], test spans [{:.4}, {:.4}]",
        reference.0, reference.1, test.0, test.1
    )]
    NoOverlap {
        axis: Axis,
        reference: (f64, f64),
        test: (f64, f64),
    },

    #[error("codec `{codec}` has ragged point counts across sequences ({counts:?}); index-aligned averaging is undefined")]
    RaggedPointCounts { codec: String, counts: Vec<usize> },
    #[error("grid quality {quality} dB lies outside the span [{span_lo}, {span_hi}] of sequence `{sequence}`")]
    GridOutsideSpan {
        sequence: String,
        quality: f64,
        span_lo: f64,
        span_hi: f64,
    },
    #[error("no values to aggregate")]
    EmptyInput,
    #[error("cannot average BD-rate and BD-PSNR values together")]
    MixedMetricKinds,
    #[error("leave-one-out needs at least 2 sequences, got {0}")]
    TooFewSequences(usize),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed header `{found}`, expected `codec,sequence,rate,psnr`")]
    MalformedHeader { found: String },
    #[error("line {line}: non-numeric {field} `{value}`")]
    NonNumericField {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: duplicate (codec, sequence, rate) row")]
    DuplicateTriple { line: usize },
    #[error("line {line}: expected 4 fields, got {got}")]
    WrongFieldCount { line: usize, got: usize },
    #[error("unknown rate unit `{0}` (expected bpp or kbps)")]
    UnknownUnit(String),
    #[error("invalid output name `{0}`")]
    InvalidName(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
