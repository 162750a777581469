//! RD CSV ingest, report rendering, and plot-data export.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::{AggregateCurve, ComparisonReport, SequenceBd};
use crate::error::{Error, Result};
use crate::rd_model::{repair_dominated, validate_set, EvaluationSet, RateUnit, RdCurve, RdPoint};

pub const RD_HEADER: [&str; 4] = ["codec", "sequence", "rate", "psnr"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdRow {
    pub codec: String,
    pub sequence: String,
    pub rate: f64,
    pub psnr: f64,
}

/// Parsed RD CSV rows, not yet grouped into curves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RdTable {
    pub rate_unit: RateUnit,
    pub rows: Vec<RdRow>,
}

fn parse_unit_comment(line: &str) -> Result<RateUnit> {
    let body = line.trim_start_matches('#').trim();
    match body.split_once('=') {
        Some((key, value)) if key.trim() == "rate_unit" => value.parse(),
        _ => Err(Error::UnknownUnit(body.to_string())),
    }
}

fn parse_number(field: &'static str, raw: &str, line: usize) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::NonNumericField {
            line,
            field,
            value: raw.to_string(),
        })
}

/// Parses `codec,sequence,rate,psnr` rows, with an optional leading
/// `# rate_unit=bpp|kbps` line. Line numbers in errors are 1-based.
pub fn parse_rd_csv(text: &str) -> Result<RdTable> {
    let mut rate_unit = RateUnit::default();
    let mut body = text;
    let mut line_offset = 0;
    if let Some(first) = text.lines().next() {
        if first.trim_start().starts_with('#') {
            rate_unit = parse_unit_comment(first)?;
            body = text.split_once('\n').map_or("", |(_, rest)| rest);
            line_offset = 1;
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(body.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r?,
        None => {
            return Err(Error::MalformedHeader {
                found: String::new(),
            })
        }
    };
    if header.iter().map(str::trim).ne(RD_HEADER) {
        return Err(Error::MalformedHeader {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize) + line_offset;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != 4 {
            return Err(Error::WrongFieldCount {
                line,
                got: record.len(),
            });
        }
        let row = RdRow {
            codec: record[0].trim().to_string(),
            sequence: record[1].trim().to_string(),
            rate: parse_number("rate", &record[2], line)?,
            psnr: parse_number("psnr", &record[3], line)?,
        };
        if !seen.insert((row.codec.clone(), row.sequence.clone(), row.rate.to_bits())) {
            return Err(Error::DuplicateTriple { line });
        }
        rows.push(row);
    }
    Ok(RdTable { rate_unit, rows })
}

impl RdTable {
    /// Groups rows into curves and validates the resulting set. With
    /// `allow_nonmonotone`, dominated points are dropped and reported as
    /// warnings instead of failing.
    pub fn into_set(self, allow_nonmonotone: bool) -> Result<(EvaluationSet, Vec<String>)> {
        let mut groups: BTreeMap<(String, String), Vec<RdPoint>> = BTreeMap::new();
        for row in self.rows {
            groups
                .entry((row.codec, row.sequence))
                .or_default()
                .push(RdPoint::new(row.rate, row.psnr));
        }
        let mut warnings = Vec::new();
        let mut curves = Vec::with_capacity(groups.len());
        for ((codec, sequence), points) in groups {
            let points = if allow_nonmonotone {
                let (kept, dropped) = repair_dominated(&points)?;
                for p in dropped {
                    warnings.push(format!(
                        "{codec}/{sequence}: dropped dominated point (rate {}, psnr {})",
                        p.rate, p.quality
                    ));
                }
                kept
            } else {
                points
            };
            curves.push(RdCurve::new(codec, sequence, self.rate_unit, points)?);
        }
        Ok((validate_set(curves)?, warnings))
    }
}

/// Parses and validates in one step.
pub fn load_rd_csv(text: &str, allow_nonmonotone: bool) -> Result<(EvaluationSet, Vec<String>)> {
    parse_rd_csv(text)?.into_set(allow_nonmonotone)
}

/// Renders `v` rounded to 9 significant digits, in shortest form.
pub fn fmt_sig9(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    format!("{rounded}")
}

/// Writes every curve of `set` as RD CSV, including the unit comment.
pub fn emit_rd_csv(set: &EvaluationSet) -> String {
    let mut out = format!("# rate_unit={}\n{}\n", set.rate_unit(), RD_HEADER.join(","));
    for curve in set.curves() {
        for p in curve.points() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                csv_field(curve.label()),
                csv_field(curve.sequence()),
                fmt_sig9(p.rate),
                fmt_sig9(p.quality)
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

/// JSON or a markdown table shaped like a per-sequence BD-rate table.
pub fn emit_report(report: &ComparisonReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => markdown(report),
    }
}

pub fn parse_report_json(text: &str) -> Result<ComparisonReport> {
    Ok(serde_json::from_str(text)?)
}

fn markdown(report: &ComparisonReport) -> String {
    let s = &report.settings;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "BD-rate of `{}` against `{}` (interpolator: {}, averaging: {}, threshold: {} pp)\n",
        s.test,
        s.reference,
        s.compare.interpolator,
        match s.compare.averaging_mode {
            crate::aggregation::AveragingMode::IndexAligned => "index_aligned".to_string(),
            crate::aggregation::AveragingMode::QualityGrid { points } =>
                format!("quality_grid ({points} points)"),
        },
        s.compare.divergence_threshold
    );

    let mut header: Vec<String> = report.per_sequence.keys().cloned().collect();
    header.extend([
        "Average of BD-rates".to_string(),
        "BD-rate on average RD curve".to_string(),
        "Verdict".to_string(),
    ]);
    let mut row: Vec<String> = report
        .per_sequence
        .values()
        .map(|v| match v {
            SequenceBd::Defined(r) => format!("{:.2}", r.value),
            SequenceBd::Undefined { .. } => "n/a".to_string(),
        })
        .collect();
    row.extend([
        format!("{:.2}", report.mean_of_metrics),
        format!("{:.2}", report.metric_on_average),
        report.verdict.to_string(),
    ]);

    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", vec!["---"; header.len()].join("|"));
    let _ = writeln!(out, "| {} |", row.join(" | "));
    let _ = writeln!(out, "\nDivergence: {:.2} pp", report.divergence);
    for w in &report.warnings {
        let _ = writeln!(out, "\nWarning: {w}");
    }
    out
}

fn plot_rows<'a>(curves: impl Iterator<Item = (&'a str, &'a [RdPoint])>) -> String {
    let mut rows: Vec<(&str, RdPoint)> = curves
        .flat_map(|(codec, pts)| pts.iter().map(move |p| (codec, *p)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(b.0).then(a.1.rate.total_cmp(&b.1.rate)));
    let mut out = String::from("codec,rate,psnr\n");
    for (codec, p) in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            csv_field(codec),
            fmt_sig9(p.rate),
            fmt_sig9(p.quality)
        );
    }
    out
}

fn safe_file_name(sequence: &str) -> Result<String> {
    if sequence.is_empty()
        || sequence == "."
        || sequence == ".."
        || sequence.contains(['/', '\\', '\0'])
    {
        return Err(Error::InvalidName(sequence.to_string()));
    }
    Ok(format!("{sequence}.csv"))
}

/// Writes `<sequence>.csv` per sequence and `average.csv` when aggregates
/// are given. Returns the written paths in order.
pub fn emit_plot_data(
    set: &EvaluationSet,
    aggregates: &[AggregateCurve],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for sequence in set.sequences() {
        let path = dir.join(safe_file_name(sequence)?);
        let curves = set
            .curves()
            .filter(|c| c.sequence() == sequence)
            .map(|c| (c.label(), c.points()));
        std::fs::write(&path, plot_rows(curves))?;
        written.push(path);
    }
    if !aggregates.is_empty() {
        let path = dir.join("average.csv");
        let curves = aggregates.iter().map(|a| (a.codec.as_str(), a.points()));
        std::fs::write(&path, plot_rows(curves))?;
        written.push(path);
    }
    Ok(written)
}
