// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bdgap::aggregation::{average_curve, AveragingMode, DEFAULT_DIVERGENCE_THRESHOLD};
use bdgap::io_report::{emit_plot_data, emit_rd_csv, emit_report, load_rd_csv, ReportFormat};
use bdgap::synthetic::{
    build_scenario, scenario_report, search_paradox, LinearScenario, RangeLayout, ScenarioReport,
    SearchConfig,
};
use bdgap::{
    bd_psnr, bd_rate, compare, leave_one_out, BdOptions, CompareSettings, ComparisonReport, Error,
    EvaluationSet, FitPolicy, Interpolator,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status contract.
const EXIT_OK: u8 = 0;
const EXIT_CONFLICT: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NO_OVERLAP: u8 = 3;

#[derive(Parser)]
#[command(
    name = "bdgap",
    version,
    about = "BD-rate comparisons and RD-curve averaging checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BD-rate or BD-PSNR of one sequence.
    Bd(BdArgs),
    /// Mean of per-sequence BD-rates versus BD-rate of averaged curves.
    Compare(CompareArgs),
    /// Two-codec, two-video linear counterexample.
    Synth(SynthArgs),
    /// Seeded random search for sign-conflicting test sets.
    Search(SearchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InterpArg {
    Cubic,
    Pchip,
    Linear,
}

impl From<InterpArg> for Interpolator {
    fn from(a: InterpArg) -> Self {
        match a {
            InterpArg::Cubic => Interpolator::CubicPolyfit,
            InterpArg::Pchip => Interpolator::Pchip,
            InterpArg::Linear => Interpolator::Linear,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Rate,
    Psnr,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Index,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Markdown,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Disjoint,
    Shared,
}

#[derive(Args)]
struct InputArgs {
    /// RD CSV (`codec,sequence,rate,psnr`) or an evaluation-set JSON file.
    curves_file: PathBuf,
    /// Drop dominated points instead of rejecting non-monotone curves.
    #[arg(long)]
    allow_nonmonotone: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum, default_value = "pchip")]
    interpolator: InterpArg,
    /// Let the cubic fit fall back to lower degree or least squares when a
    /// curve does not have exactly four points.
    #[arg(long)]
    fallback: bool,
}

impl FitArgs {
    fn options(&self) -> BdOptions {
        BdOptions {
            interpolator: self.interpolator.into(),
            fit_policy: if self.fallback {
                FitPolicy::Fallback
            } else {
                FitPolicy::Strict
            },
        }
    }
}

#[derive(Args)]
struct BdArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    reference: String,
    #[arg(long)]
    test: String,
    #[arg(long)]
    sequence: String,
    #[arg(long, value_enum, default_value = "rate")]
    metric: MetricArg,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    reference: String,
    #[arg(long)]
    test: String,
    #[arg(long, value_enum, default_value = "index")]
    mode: ModeArg,
    /// Grid size for `--mode grid`.
    #[arg(long, default_value_t = 8)]
    grid_points: usize,
    /// Divergence threshold in percentage points.
    #[arg(long, default_value_t = DEFAULT_DIVERGENCE_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
    /// One report per excluded sequence.
    #[arg(long)]
    loo: bool,
    /// Also write per-sequence and averaged plot CSVs here.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    db1: f64,
    #[arg(long, default_value_t = 1.0)]
    dp1: f64,
    #[arg(long, default_value_t = 2.0)]
    db2: f64,
    #[arg(long, default_value_t = 1.0)]
    dp2: f64,
    #[arg(long, default_value_t = 1.0)]
    r1: f64,
    #[arg(long, default_value_t = 40.0)]
    p1: f64,
    #[arg(long, default_value_t = 1.0)]
    r2: f64,
    #[arg(long, default_value_t = 30.0)]
    p2: f64,
    #[arg(long, value_enum, default_value = "linear")]
    interpolator: InterpArg,
    /// Write the generated curves as RD CSV.
    #[arg(long)]
    emit_curves: Option<PathBuf>,
    /// Print the full scenario as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 2)]
    sequences: usize,
    #[arg(long, default_value_t = 4)]
    points: usize,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Rate range as `lo,hi`.
    #[arg(long, default_value = "0.01,1", value_parser = parse_range)]
    rate_range: (f64, f64),
    /// PSNR range as `lo,hi`.
    #[arg(long, default_value = "28,44", value_parser = parse_range)]
    psnr_range: (f64, f64),
    #[arg(long, value_enum, default_value = "disjoint")]
    layout: LayoutArg,
    #[arg(long, value_enum, default_value = "pchip")]
    interpolator: InterpArg,
    /// Output JSON file for the instances.
    #[arg(long)]
    out: PathBuf,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((lo, hi))
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoOverlap { .. } => EXIT_NO_OVERLAP,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    }
}

fn load(input: &InputArgs) -> Result<EvaluationSet, Failure> {
    let path = &input.curves_file;
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let (set, warnings) = if is_json {
        // Either a bare evaluation set or a search instance carrying one.
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
        if let Some(inner) = value.get_mut("set") {
            value = inner.take();
        }
        (
            serde_json::from_value(value).map_err(Error::from)?,
            Vec::new(),
        )
    } else {
        load_rd_csv(&text, input.allow_nonmonotone)?
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(set)
}

fn run_bd(args: &BdArgs) -> Result<u8, Failure> {
    let set = load(&args.input)?;
    let reference = set.curve(&args.reference, &args.sequence)?;
    let test = set.curve(&args.test, &args.sequence)?;
    let opts = args.fit.options();
    let (result, name, unit, axis) = match args.metric {
        MetricArg::Rate => (bd_rate(reference, test, opts)?, "BD-rate", "%", "dB"),
        MetricArg::Psnr => (
            bd_psnr(reference, test, opts)?,
            "BD-PSNR",
            " dB",
            "log10 rate",
        ),
    };
    println!("{name}: {:.2}{unit}", result.value);
    println!(
        "overlap: [{:.4}, {:.4}] {axis}",
        result.overlap_low, result.overlap_high
    );
    println!("interpolator: {}", result.interpolator);
    for f in &result.fallbacks {
        println!("fallback: {f:?}");
    }
    Ok(EXIT_OK)
}

fn compare_settings(args: &CompareArgs) -> Result<CompareSettings, Failure> {
    if !(args.threshold >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold must be >= 0, got {}",
            args.threshold
        ))
        .into());
    }
    let opts = args.fit.options();
    Ok(CompareSettings {
        interpolator: opts.interpolator,
        fit_policy: opts.fit_policy,
        averaging_mode: match args.mode {
            ModeArg::Index => AveragingMode::IndexAligned,
            ModeArg::Grid => AveragingMode::QualityGrid {
                points: args.grid_points,
            },
        },
        divergence_threshold: args.threshold,
        ..CompareSettings::default()
    })
}

fn print_warnings(report: &ComparisonReport) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn run_compare(args: &CompareArgs) -> Result<u8, Failure> {
    let set = load(&args.input)?;
    let settings = compare_settings(args)?;
    let format: ReportFormat = args.format.into();

    if let Some(dir) = &args.plot_dir {
        let aggregates = [&args.reference, &args.test]
            .into_iter()
            .map(|c| average_curve(&set, c, &settings.averaging_mode, settings.bd_options()))
            .collect::<Result<Vec<_>, _>>()?;
        emit_plot_data(&set, &aggregates, dir)?;
    }

    let conflict = if args.loo {
        let reports = leave_one_out(&set, &args.reference, &args.test, &settings)?;
        reports.values().for_each(print_warnings);
        print!("{}", render_loo(&reports, format));
        reports.values().any(|r| r.verdict.is_conflict())
    } else {
        let report = compare(&set, &args.reference, &args.test, &settings)?;
        print_warnings(&report);
        print!("{}", emit_report(&report, format));
        report.verdict.is_conflict()
    };
    Ok(if conflict { EXIT_CONFLICT } else { EXIT_OK })
}

fn render_loo(reports: &BTreeMap<String, ComparisonReport>, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            for (excluded, report) in reports {
                let _ = writeln!(out, "## Excluding `{excluded}`\n");
                out.push_str(&emit_report(report, ReportFormat::Markdown));
                out.push('\n');
            }
            out
        }
    }
}

fn render_scenario(r: &ScenarioReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "equivalence residual (dp2*db1 - dp1*db2): {} ({})",
        r.equivalence.residual,
        if r.equivalence.holds {
            "holds"
        } else {
            "violated"
        }
    );
    let _ = writeln!(
        out,
        "average line codec-1: slope {}, intercept {}",
        r.codec_1_fit.slope, r.codec_1_fit.intercept
    );
    let _ = writeln!(
        out,
        "average line codec-2: slope {}, intercept {}",
        r.codec_2_fit.slope, r.codec_2_fit.intercept
    );
    let _ = writeln!(out, "intercept gap: {}", r.intercept_gap);
    for (seq, v) in &r.report.per_sequence {
        match v.value() {
            Some(v) => {
                let _ = writeln!(out, "BD-rate {seq}: {v:.6}%");
            }
            None => {
                let _ = writeln!(out, "BD-rate {seq}: undefined");
            }
        }
    }
    let _ = writeln!(
        out,
        "mean of per-video BD-rates: {:.6}%",
        r.report.mean_of_metrics
    );
    let _ = writeln!(
        out,
        "BD-rate on average curves: {:.6}%",
        r.report.metric_on_average
    );
    let _ = writeln!(out, "verdict: {}", r.report.verdict);
    out
}

fn run_synth(args: &SynthArgs) -> Result<u8, Failure> {
    let scenario = LinearScenario {
        r1_start: args.r1,
        p1_start: args.p1,
        db1: args.db1,
        dp1: args.dp1,
        r2_start: args.r2,
        p2_start: args.p2,
        db2: args.db2,
        dp2: args.dp2,
        n: args.n,
    };
    let settings = CompareSettings::default().with_interpolator(args.interpolator.into());
    let report = scenario_report(&scenario, &settings)?;
    if let Some(path) = &args.emit_curves {
        let set = build_scenario(&scenario)?;
        fs::write(path, emit_rd_csv(&set)).map_err(|e| io_failure(path, e))?;
    }
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("scenario serializes")
        );
    } else {
        print!("{}", render_scenario(&report));
    }
    Ok(EXIT_OK)
}

fn run_search(args: &SearchArgs) -> Result<u8, Failure> {
    let config = SearchConfig {
        num_sequences: args.sequences,
        points_per_curve: args.points,
        rate_range: args.rate_range,
        psnr_range: args.psnr_range,
        layout: match args.layout {
            LayoutArg::Disjoint => RangeLayout::Disjoint,
            LayoutArg::Shared => RangeLayout::Shared,
        },
        trials: args.trials,
        seed: args.seed,
        settings: CompareSettings::default().with_interpolator(args.interpolator.into()),
    };
    let found = search_paradox(&config)?;
    let mut json = serde_json::to_string_pretty(&found).map_err(Error::from)?;
    json.push('\n');
    fs::write(&args.out, json).map_err(|e| io_failure(&args.out, e))?;
    println!(
        "{} paradox instance(s) in {} trial(s) written to {}",
        found.len(),
        args.trials,
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Bd(a) => run_bd(a),
        Command::Compare(a) => run_compare(a),
        Command::Synth(a) => run_synth(a),
        Command::Search(a) => run_search(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
