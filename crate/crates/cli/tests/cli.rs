use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bdgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdgap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const PAIR: &str = "codec,sequence,rate,psnr\n\
    a,s,1,30\na,s,2,33\na,s,4,36\na,s,8,39\n\
    b,s,1,30\nb,s,2,33\nb,s,4,36\nb,s,8,39\n\
    c,s,2,30\nc,s,4,33\nc,s,8,36\nc,s,16,39\n\
    d,s,1,50\nd,s,2,53\nd,s,4,56\nd,s,8,59\n";

fn bd(file: &str, test: &str) -> Output {
    bdgap(&[
        "bd",
        file,
        "--reference",
        "a",
        "--test",
        test,
        "--sequence",
        "s",
    ])
}

#[test]
fn bd_prints_percentages() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "pair.csv", PAIR);
    let same = bd(&file, "b");
    assert_eq!(same.status.code(), Some(0));
    assert!(
        stdout(&same).contains("BD-rate: 0.00%"),
        "{}",
        stdout(&same)
    );
    let doubled = bd(&file, "c");
    assert!(
        stdout(&doubled).contains("BD-rate: 100.00%"),
        "{}",
        stdout(&doubled)
    );
}

#[test]
fn disjoint_quality_ranges_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "pair.csv", PAIR);
    let out = bd(&file, "d");
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(
        err.contains("30") && err.contains("39") && err.contains("50") && err.contains("59"),
        "{err}"
    );
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.csv",
        "codec,sequence,rate,psnr\na,s,x,30\na,s,2,31\n",
    );
    let out = bd(&bad, "a");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
    let missing = bd(dir.path().join("nope.csv").to_str().unwrap(), "a");
    assert_eq!(missing.status.code(), Some(2));
    let nonmono = write(
        dir.path(),
        "nm.csv",
        "codec,sequence,rate,psnr\na,s,1,30\na,s,2,29\na,s,3,33\n",
    );
    assert_eq!(bd(&nonmono, "a").status.code(), Some(2));
}

/// Three sequences where the per-sequence mean and the averaged curve
/// disagree in sign.
const CONFLICT: &str = "codec,sequence,rate,psnr\n\
    ref,Bosphorus,0.05,38\nref,Bosphorus,0.1,40\nref,Bosphorus,0.2,42\nref,Bosphorus,0.4,44\n\
    test,Bosphorus,0.0485,38\ntest,Bosphorus,0.097,40\ntest,Bosphorus,0.194,42\ntest,Bosphorus,0.388,44\n\
    ref,HoneyBee,0.03,37\nref,HoneyBee,0.06,38.5\nref,HoneyBee,0.12,40\nref,HoneyBee,0.24,41\n\
    test,HoneyBee,0.0285,37\ntest,HoneyBee,0.057,38.5\ntest,HoneyBee,0.114,40\ntest,HoneyBee,0.228,41\n\
    ref,Beauty,0.1,33\nref,Beauty,0.3,33.5\nref,Beauty,0.5,34\nref,Beauty,0.7,34.5\n\
    test,Beauty,0.297,33.5\ntest,Beauty,0.495,34\ntest,Beauty,0.693,34.5\ntest,Beauty,0.891,35\n";

fn compare(file: &str, extra: &[&str]) -> Output {
    let mut args = vec!["compare", file, "--reference", "ref", "--test", "test"];
    args.extend_from_slice(extra);
    bdgap(&args)
}

#[test]
fn compare_conflict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "c.csv", CONFLICT);
    let out = compare(&file, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("sign_conflict"));
    let json = compare(&file, &["--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["verdict"], "sign_conflict");
    assert_eq!(v["per_sequence"].as_object().unwrap().len(), 3);
}

#[test]
fn single_sequence_compare_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let one: String = CONFLICT
        .lines()
        .filter(|l| !l.contains("Honey") && !l.contains("Beauty"))
        .map(|l| format!("{l}\n"))
        .collect();
    let file = write(dir.path(), "one.csv", &one);
    let out = compare(&file, &["--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mean_of_metrics"], v["metric_on_average"]);
    assert_eq!(v["verdict"], "consistent");
}

#[test]
fn leave_one_out_reports_every_exclusion_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "c.csv", CONFLICT);
    let out = compare(&file, &["--loo", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["Beauty", "Bosphorus", "HoneyBee"]);
    assert_eq!(v["Beauty"]["verdict"], "consistent");
    let md = stdout(&compare(&file, &["--loo"]));
    let b = md.find("## Excluding `Beauty`").unwrap();
    let h = md.find("## Excluding `HoneyBee`").unwrap();
    assert!(b < h);
}

#[test]
fn plot_dir_gets_one_file_per_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "c.csv", CONFLICT);
    let plots = dir.path().join("plots");
    compare(&file, &["--plot-dir", plots.to_str().unwrap()]);
    let mut names: Vec<String> = fs::read_dir(&plots)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["Beauty.csv", "Bosphorus.csv", "HoneyBee.csv", "average.csv"]
    );
}

#[test]
fn grid_mode_needs_a_shared_quality_range() {
    let dir = tempfile::tempdir().unwrap();
    // Beauty sits entirely below the other sequences in quality.
    let disjoint = compare(&write(dir.path(), "c.csv", CONFLICT), &["--mode", "grid"]);
    assert_eq!(disjoint.status.code(), Some(2));
    assert!(
        stderr(&disjoint).contains("Beauty"),
        "{}",
        stderr(&disjoint)
    );

    let shared: String = CONFLICT
        .lines()
        .filter(|l| !l.contains("Beauty"))
        .map(|l| format!("{l}\n"))
        .collect();
    let out = compare(
        &write(dir.path(), "s.csv", &shared),
        &["--mode", "grid", "--format", "json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["settings"]["averaging_mode"]["kind"], "quality_grid");
    assert_eq!(v["settings"]["averaging_mode"]["points"], 8);
}

#[test]
fn synth_defaults_show_the_counterexample() {
    let out = bdgap(&["synth"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("violated"), "{text}");
    assert!(text.contains("BD-rate video-1: 0.000000%"), "{text}");
    assert!(!text.contains("verdict: consistent"), "{text}");
}

#[test]
fn synth_equivalent_scenario_agrees() {
    let out = bdgap(&["synth", "--json", "--db2", "2", "--dp2", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["equivalence"]["holds"], true);
    assert!(v["report"]["metric_on_average"].as_f64().unwrap().abs() < 1e-4);
    assert_eq!(v["report"]["verdict"], "consistent");
}

#[test]
fn synth_rejects_bad_parameters() {
    assert_eq!(bdgap(&["synth", "--db1", "0"]).status.code(), Some(2));
    assert_eq!(
        bdgap(&["synth", "--n", "3", "--interpolator", "cubic"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn emitted_synth_curves_reproduce_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("synth.csv");
    let out = bdgap(&["synth", "--json", "--emit-curves", csv.to_str().unwrap()]);
    let synth: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let again = bdgap(&[
        "compare",
        csv.to_str().unwrap(),
        "--reference",
        "codec-1",
        "--test",
        "codec-2",
        "--interpolator",
        "linear",
        "--format",
        "json",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&again.stdout).unwrap();
    for key in ["mean_of_metrics", "metric_on_average"] {
        let (a, b) = (
            synth["report"][key].as_f64().unwrap(),
            report[key].as_f64().unwrap(),
        );
        assert!((a - b).abs() < 1e-9, "{key}: {a} vs {b}");
    }
    assert_eq!(synth["report"]["verdict"], report["verdict"]);
}

#[test]
fn search_is_reproducible_and_instances_reverify() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = bdgap(&["search", "--trials", "300", "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let found: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert!(!found.is_empty());
    for (i, inst) in found.iter().take(5).enumerate() {
        let file = write(dir.path(), &format!("inst{i}.json"), &inst.to_string());
        let out = bdgap(&[
            "compare",
            &file,
            "--reference",
            "reference",
            "--test",
            "test",
            "--format",
            "json",
        ]);
        assert_eq!(out.status.code(), Some(1));
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report, inst["report"]);
    }
}

#[test]
fn zero_trials_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bdgap(&[
        "search",
        "--trials",
        "0",
        "--out",
        dir.path().join("x.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
