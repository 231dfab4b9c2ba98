use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vat_activity::ingest::{write_recording, write_subjects, Gender, RecordingFormat, SubjectRecord};
use vat_activity::pipeline::{self, RunMeta, SubjectFeatures};
use vat_activity::synth::{gen_sleep, SleepSpec};

fn vatest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vatest"))
        .args(args)
        .output()
        .expect("spawn vatest")
}

fn ok(args: &[&str]) -> Output {
    let out = vatest(args);
    assert!(
        out.status.success(),
        "vatest {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data lines of a CSV written by the tool, skipping the `#` run header.
fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// SplitMix64 stream mapped to [0, 1).
struct Unit(u64);

impl Unit {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// A 40-subject feature table and matching subjects file whose VAT depends on
/// a handful of gait and sleep columns.
fn write_feature_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let n_gait = vat_activity::gait::gait_feature_names().len();
    let n_sleep = vat_activity::sleep::sleep_feature_names().len();
    let mut u = Unit(17);
    let mut rows = Vec::new();
    let mut subjects = Vec::new();
    for i in 0..40 {
        let gait: Vec<f64> = (0..n_gait).map(|_| u.next()).collect();
        let sleep: Vec<f64> = (0..n_sleep).map(|_| u.next()).collect();
        let age = 25.0 + 30.0 * u.next();
        let waist = 70.0 + 40.0 * u.next();
        let height = 160.0 + 25.0 * u.next();
        let weight = 55.0 + 45.0 * u.next();
        let vat = 400.0 + 300.0 * gait[0] - 200.0 * gait[7] + 250.0 * sleep[3] + 8.0 * (waist - 70.0) + 20.0 * u.next();
        let id = format!("P{i:03}");
        rows.push(SubjectFeatures {
            subject_id: id.clone(),
            gait_hours: 5.0 + u.next(),
            gait: Some(gait),
            sleep: Some(sleep),
        });
        subjects.push(SubjectRecord {
            subject_id: id,
            age_years: Some(age),
            gender: Some(if i % 2 == 0 { Gender::Male } else { Gender::Female }),
            height_cm: Some(height),
            weight_kg: Some(weight),
            bmi_kg_m2: Some(weight / (height / 100.0).powi(2)),
            waist_cm: Some(waist),
            vat_g: Some(vat),
        });
    }
    let table = dir.join("features.csv");
    pipeline::write_features(&table, &RunMeta::new("fixture", None, "fixture"), &rows).unwrap();
    let subjects_path = dir.join("subjects.csv");
    write_subjects(fs::File::create(&subjects_path).unwrap(), &subjects).unwrap();
    (table, subjects_path)
}

fn evaluate(table: &Path, subjects: &Path, out: &Path, features: &[&str]) -> Output {
    let mut args = vec![
        "evaluate",
        "--feature-table",
        s(table),
        "--subjects",
        s(subjects),
        "--repeats",
        "5",
        "--seed",
        "7",
        "--out",
        s(out),
    ];
    for f in features {
        args.extend(["--features", f]);
    }
    vatest(&args)
}

#[test]
fn synth_extract_is_reproducible_and_reports_exclusions() {
    let tmp = tempfile::tempdir().unwrap();
    let cohort = tmp.path().join("cohort");
    ok(&[
        "synth", "--n-subjects", "3", "--walk-bouts", "2", "--sleep-s", "7500", "--seed", "3", "--out", s(&cohort),
    ]);
    let recordings = cohort.join("recordings");
    assert_eq!(fs::read_dir(&recordings).unwrap().count(), 6);

    // A subject who never walks: ten quiet minutes only.
    let quiet = gen_sleep(
        &SleepSpec {
            duration_s: 600.0,
            movements: Vec::new(),
            ..SleepSpec::default()
        },
        5,
    );
    let mut quiet = quiet;
    quiet.subject_id = "Q001".into();
    write_recording(&recordings.join("Q001__rest.csv"), &quiet, RecordingFormat::CsvTxyz).unwrap();

    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    ok(&["extract", "--recordings", s(&recordings), "--out", s(&first)]);
    ok(&["--sequential", "extract", "--recordings", s(&recordings), "--out", s(&second)]);

    let lines = data_lines(&first.join("features.csv"));
    assert_eq!(lines.len(), 4, "header plus three subjects");
    let n_cols = 1 + pipeline::feature_table_columns().len();
    assert_eq!(n_cols, 422);
    for line in &lines {
        assert_eq!(line.split(',').count(), n_cols);
    }
    assert!(lines[1..].iter().all(|l| !l.contains("NA")), "synthetic subjects sleep");
    assert!(fs::read_to_string(first.join("features.csv")).unwrap().starts_with("# vat-activity "));

    let exclusions = data_lines(&first.join("exclusions.csv"));
    assert!(exclusions.iter().any(|l| l.starts_with("Q001,NO_GAIT")), "{exclusions:?}");

    for name in ["features.csv", "exclusions.csv"] {
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap(),
            "{name} differs between runs"
        );
    }
}

#[test]
fn evaluate_is_deterministic_and_reports_each_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let (table, subjects) = write_feature_fixture(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let features = ["gait", "sleep", "gait+sleep"];
    let out = evaluate(&table, &subjects, &a, &features);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = evaluate(&table, &subjects, &b, &features);
    assert!(out.status.success());

    for name in ["report.json", "predictions.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let configs = report["configurations"].as_array().unwrap();
    assert_eq!(configs.len(), 3);
    assert_eq!(report["meta"]["seed"], 7);
    for c in configs {
        let r = &c["result"];
        assert_eq!(r["n_repeats"], 5);
        assert_eq!(r["folds"].as_array().unwrap().len(), 5);
        let sp = r["spearman_r"]["mean"].as_f64().unwrap();
        assert!((-1.0..=1.0).contains(&sp));
    }
}

#[test]
fn fuse_with_unit_weight_reproduces_the_input() {
    let tmp = tempfile::tempdir().unwrap();
    let (table, subjects) = write_feature_fixture(tmp.path());
    let eval = tmp.path().join("eval");
    let out = evaluate(&table, &subjects, &eval, &["gait", "sleep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let preds = eval.join("predictions.csv");
    let gait = format!("{}:gait", s(&preds));
    let sleep = format!("{}:sleep", s(&preds));
    let fused = tmp.path().join("fused");
    ok(&["fuse", "--predictions", &gait, "--predictions", &sleep, "--weights", "1,0", "--out", s(&fused)]);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fused.join("fused_metrics.json")).unwrap()).unwrap();
    let fused_m = &summary["fused_metrics"];
    let input_m = &summary["input_metrics"][0];
    for key in ["spearman", "pearson", "mae", "rmse"] {
        let (f, i) = (fused_m[key].as_f64().unwrap(), input_m[key].as_f64().unwrap());
        assert!((f - i).abs() <= 1e-9 * i.abs().max(1.0), "{key}: {f} vs {i}");
    }
    assert_eq!(
        data_lines(&fused.join("fused_predictions.csv")).len(),
        data_lines(&preds).len() / 2 + 1
    );

    let bad = vatest(&["fuse", "--predictions", &gait, "--predictions", &sleep, "--weights", "0.5,0.6", "--out", s(&fused)]);
    assert_eq!(bad.status.code(), Some(2), "{}", String::from_utf8_lossy(&bad.stderr));
}

#[test]
fn invalid_settings_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let (table, subjects) = write_feature_fixture(tmp.path());
    let out = tmp.path().join("out");

    let unknown = evaluate(&table, &subjects, &out, &["gait+steps"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("steps"));

    let missing = evaluate(&tmp.path().join("absent.csv"), &subjects, &out, &["gait"]);
    assert_eq!(missing.status.code(), Some(2));

    let bad_frac = vatest(&[
        "evaluate", "--feature-table", s(&table), "--subjects", s(&subjects), "--train-frac", "1.5", "--out", s(&out),
    ]);
    assert_eq!(bad_frac.status.code(), Some(2));

    assert_eq!(vatest(&["evaluate"]).status.code(), Some(2), "clap usage error");
}

#[test]
fn too_few_subjects_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (table, subjects) = write_feature_fixture(tmp.path());
    let out = tmp.path().join("out");
    // An age window nobody falls into leaves no rows to fit.
    let res = vatest(&[
        "evaluate", "--feature-table", s(&table), "--subjects", s(&subjects), "--features", "gait", "--min-age", "80",
        "--max-age", "90", "--out", s(&out),
    ]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}
