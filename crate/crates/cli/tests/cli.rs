//! Black-box checks of the command-line surface: exit codes, file
//! outputs, config precedence, and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_motifrank"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn synth_log(dir: &Path, users: u32, weeks: u32, seed: u64) -> (PathBuf, PathBuf) {
    let out = dir.join("synth");
    let output = run(&[
        "synth",
        "--users",
        &users.to_string(),
        "--weeks",
        &weeks.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    (out.join("messages.txt"), out.join("joins.txt"))
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let output = run(&["train", "--no-such-flag"]);
    assert_exit(&output, 2);
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "ingest",
        "--events",
        "/definitely/not/a/file.txt",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 3);
}

#[test]
fn malformed_log_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 2 notatime\n").unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "ingest",
        "--events",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 3);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 1"), "stderr: {stderr}");
}

#[test]
fn synth_round_trips_through_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let (events, joins) = synth_log(dir.path(), 60, 6, 5);
    let out = dir.path().join("ingest");
    let output = run(&[
        "ingest",
        "--events",
        events.to_str().unwrap(),
        "--joins",
        joins.to_str().unwrap(),
        "--horizon",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    assert!(out.join("store.ndjson").exists());
    assert!(out.join("manifest.json").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("ingest_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["users"], 60);
    assert_eq!(summary["horizon_weeks"], 6);
}

#[test]
fn train_emits_eval_reports_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (events, joins) = synth_log(dir.path(), 80, 6, 9);
    let out = dir.path().join("train");
    let output = run(&[
        "train",
        "--events",
        events.to_str().unwrap(),
        "--joins",
        joins.to_str().unwrap(),
        "--horizon",
        "6",
        "--k",
        "2",
        "--bins",
        "3",
        "--trees",
        "30",
        "--folds",
        "4",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let eval: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("eval.json")).unwrap()).unwrap();
    assert!(eval["mae"].as_f64().unwrap() >= 0.0);
    assert_eq!(eval["n_folds"], 4);
    assert_eq!(eval["dataset"]["k"], 2);
    assert!(out.join("eval.csv").exists());
    assert!(out.join("dataset_features.csv").exists());
    assert!(out.join("dataset_labels.csv").exists());
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["format_version"], 1);
    assert_eq!(model["trees"].as_array().unwrap().len(), 30);

    // Exactly one manifest per output directory.
    let manifests = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .contains("manifest")
        })
        .count();
    assert_eq!(manifests, 1);
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let (events, joins) = synth_log(dir.path(), 60, 6, 2);
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        format!(
            r#"{{"events": "{}", "joins": "{}", "horizon": 6, "k": 2, "bins": 3, "trees": 25, "folds": 4}}"#,
            events.display(),
            joins.display()
        ),
    )
    .unwrap();

    let out = dir.path().join("viaconfig");
    let output = run(&[
        "train",
        "--config",
        config_path.to_str().unwrap(),
        "--trees",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    // Flag wins over config; config fills the rest.
    assert_eq!(manifest["settings"]["trees"], 10);
    assert_eq!(manifest["settings"]["k"], 2);
    assert_eq!(manifest["settings"]["horizon"], 6);
    let digested: Vec<String> = manifest["inputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["path"].as_str().unwrap().to_string())
        .collect();
    assert!(digested.iter().any(|p| p.ends_with("config.json")));
    assert!(digested.iter().any(|p| p.ends_with("messages.txt")));
}

#[test]
fn figure_commands_emit_expected_headers() {
    let dir = tempfile::tempdir().unwrap();
    let (events, joins) = synth_log(dir.path(), 80, 6, 13);
    let base: Vec<String> = vec![
        "--events".into(),
        events.to_str().unwrap().into(),
        "--joins".into(),
        joins.to_str().unwrap().into(),
        "--horizon".into(),
        "6".into(),
    ];

    let checks: Vec<(&str, &str, &str)> = vec![
        ("activity", "fig1_activity.csv", "week,messages"),
        ("pagerank", "pagerank.csv", "week,user,score,rank"),
        ("encode", "motifs.csv", "user,"),
        ("newmsg", "fig4_rankcounts.csv", "rank,new_messages"),
    ];
    for (command, file, header) in checks {
        let out = dir.path().join(command);
        let mut args: Vec<String> = vec![command.into()];
        args.extend(base.clone());
        args.push("--out".into());
        args.push(out.to_str().unwrap().into());
        let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let output = run(&arg_refs);
        assert_exit(&output, 0);
        let text = fs::read_to_string(out.join(file)).unwrap();
        assert!(
            text.starts_with(header),
            "{command}: {file} starts with {}",
            text.lines().next().unwrap_or("")
        );
    }

    let out = dir.path().join("correlate");
    let mut args: Vec<String> = vec!["correlate".into()];
    args.extend(base.clone());
    args.push("--out".into());
    args.push(out.to_str().unwrap().into());
    let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let output = run(&arg_refs);
    assert_exit(&output, 0);
    for file in [
        "fig3_scatter.csv",
        "fig3_correlation.csv",
        "fig3_correlation.json",
        "fig5_weekly_rho.csv",
        "fig5_weekly_rho.json",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }
}

#[test]
fn permutation_p_method_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let (events, joins) = synth_log(dir.path(), 60, 6, 21);
    let out = dir.path().join("perm");
    let output = run(&[
        "correlate",
        "--events",
        events.to_str().unwrap(),
        "--joins",
        joins.to_str().unwrap(),
        "--horizon",
        "6",
        "--p-method",
        "permutation",
        "--p-iterations",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("fig3_correlation.json")).unwrap())
            .unwrap();
    let p = report["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
}

fn non_manifest_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .collect();
    files.sort();
    files
}

#[test]
fn reproduce_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (events, joins) = synth_log(dir.path(), 100, 6, 31);
    let mut outputs = Vec::new();
    for (label, jobs) in [("a", "2"), ("b", "1")] {
        let out = dir.path().join(format!("repro_{label}"));
        let output = run(&[
            "reproduce",
            "--events",
            events.to_str().unwrap(),
            "--joins",
            joins.to_str().unwrap(),
            "--horizon",
            "6",
            "--k",
            "2",
            "--bins",
            "3",
            "--trees",
            "25",
            "--folds",
            "4",
            "--splits",
            "5",
            "--seed",
            "17",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_exit(&output, 0);
        outputs.push(out);
    }
    let first = non_manifest_files(&outputs[0]);
    let second = non_manifest_files(&outputs[1]);
    assert_eq!(first.len(), second.len());
    assert!(first.len() >= 15, "expected the full figure set");
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a.file_name(), b.file_name());
        let left = fs::read(a).unwrap();
        let right = fs::read(b).unwrap();
        assert_eq!(left, right, "{} differs across runs", a.display());
    }
}
