//! Integration tests of the command-line surface: exit codes, artifact
//! contracts, and the combined report.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn convaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convaudit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = convaudit(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn help_exits_zero() {
    let out = convaudit(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "segment",
        "asr-eval",
        "label",
        "train",
        "predict",
        "evaluate",
        "fairness",
        "disparity",
        "synth",
        "report",
        "pipeline",
    ] {
        assert!(text.contains(sub), "help misses {sub}");
    }
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = convaudit(&["segment", "--corpus", "x.jsonl", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_is_named_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = convaudit(&[
        "--out",
        dir.path().to_str().unwrap(),
        "segment",
        "--corpus",
        "/nonexistent/corpus.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/corpus.jsonl"), "{stderr}");
}

#[test]
fn malformed_corpus_reports_line_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    fs::write(&corpus, "{\"visit_id\": \"v1\"\nnot json\n").unwrap();
    let out = convaudit(&[
        "--out",
        dir.path().to_str().unwrap(),
        "segment",
        "--corpus",
        corpus.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":1:"), "line number missing: {stderr}");
}

#[test]
fn out_of_range_prediction_score_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "--out",
        out_dir.to_str().unwrap(),
        "synth",
        "--n-visits",
        "6",
    ]);
    let preds = dir.path().join("bad.jsonl");
    fs::write(
        &preds,
        "{\"visit_id\": \"v0000\", \"segment_index\": 0, \"signal\": \"warmth\", \"role\": \"provider\", \"score\": 1.2}\n",
    )
    .unwrap();
    let out = convaudit(&[
        "--out",
        out_dir.to_str().unwrap(),
        "disparity",
        "--corpus",
        out_dir.join("corpus.jsonl").to_str().unwrap(),
        "--predictions",
        preds.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pipeline_writes_the_stage_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_str = out_dir.to_str().unwrap();
    run_ok(&[
        "--out",
        out_str,
        "--seed",
        "7",
        "synth",
        "--n-visits",
        "20",
        "--coded-fraction",
        "0.6",
    ]);
    run_ok(&[
        "--out",
        out_str,
        "--seed",
        "7",
        "pipeline",
        "--corpus",
        out_dir.join("corpus.jsonl").to_str().unwrap(),
        "--ratings",
        out_dir.join("ratings.csv").to_str().unwrap(),
        "--refs",
        out_dir.join("refs").to_str().unwrap(),
    ]);
    for artifact in [
        "segments.csv",
        "labels.csv",
        "models",
        "predictions.jsonl",
        "evaluation.csv",
        "fairness.csv",
        "disparity.csv",
        "asr_eval.csv",
        "pipeline.manifest.json",
    ] {
        assert!(
            out_dir.join(artifact).exists(),
            "missing artifact {artifact}"
        );
    }
    // the manifest lists outputs and digests inputs
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("pipeline.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "pipeline");
    assert!(manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v == "segments.csv"));
    assert!(!manifest["inputs"].as_object().unwrap().is_empty());
    // report over the artifacts
    run_ok(&["--out", out_str, "report"]);
    let report = fs::read_to_string(out_dir.join("report.md")).unwrap();
    for heading in [
        "Signal catalog",
        "High-label distribution",
        "Transcript quality",
        "classifier performance",
        "Prediction fairness",
        "disparities between groups",
    ] {
        assert!(report.contains(heading), "report misses {heading}");
    }
}

#[test]
fn pipeline_with_external_predictions_skips_training() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_str = out_dir.to_str().unwrap();
    run_ok(&[
        "--out",
        out_str,
        "synth",
        "--n-visits",
        "16",
        "--coded-fraction",
        "0.5",
    ]);
    run_ok(&[
        "--out",
        out_str,
        "pipeline",
        "--corpus",
        out_dir.join("corpus.jsonl").to_str().unwrap(),
        "--ratings",
        out_dir.join("ratings.csv").to_str().unwrap(),
        "--predictions",
        out_dir.join("oracle_predictions.jsonl").to_str().unwrap(),
    ]);
    assert!(!out_dir.join("models").exists(), "external run must not train");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("pipeline.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["score_source"], "external");
}

#[test]
fn train_then_predict_round_trips_models() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_str = out_dir.to_str().unwrap();
    run_ok(&[
        "--out",
        out_str,
        "synth",
        "--n-visits",
        "18",
        "--corruption-rate",
        "0.0",
    ]);
    let corpus = out_dir.join("corpus.jsonl");
    run_ok(&[
        "--out",
        out_str,
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--ratings",
        out_dir.join("ratings.csv").to_str().unwrap(),
    ]);
    let n_models = fs::read_dir(out_dir.join("models"))
        .unwrap()
        .filter(|e| {
            e.as_ref().unwrap().path().extension().and_then(|x| x.to_str()) == Some("model")
        })
        .count();
    assert!(n_models > 0);
    run_ok(&[
        "--out",
        out_str,
        "predict",
        "--corpus",
        corpus.to_str().unwrap(),
        "--models",
        out_dir.join("models").to_str().unwrap(),
    ]);
    let predictions = fs::read_to_string(out_dir.join("predictions.jsonl")).unwrap();
    let n_lines = predictions.lines().count();
    assert!(n_lines >= n_models, "{n_lines} lines for {n_models} models");
    // predictions parse back under the wire schema
    for line in predictions.lines().take(5) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let score = v["score"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&score));
    }
}

#[test]
fn report_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/artifacts");
    for entry in fs::read_dir(&data).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    run_ok(&["--out", dir.path().to_str().unwrap(), "report"]);
    let got = fs::read_to_string(dir.path().join("report.md")).unwrap();
    let golden = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/report_golden.md"),
    )
    .unwrap();
    assert_eq!(got, golden, "report.md deviates from the golden file");
}

#[test]
fn label_command_reports_exclusions() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("ratings.csv");
    let mut csv = String::from("visit_id,segment_index,signal,role,rating\n");
    for i in 0..50 {
        csv.push_str(&format!("v{i},0,nervousness,provider,1\n"));
        csv.push_str(&format!(
            "v{i},0,warmth,provider,{}\n",
            if i % 2 == 0 { 5 } else { 1 }
        ));
    }
    fs::write(&ratings, csv).unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "--out",
        out_dir.to_str().unwrap(),
        "label",
        "--ratings",
        ratings.to_str().unwrap(),
    ]);
    let labels = fs::read_to_string(out_dir.join("labels.csv")).unwrap();
    assert!(labels.contains("nervousness,provider,0.000000,false,single_class"));
    assert!(labels.contains("warmth,provider,0.500000,true,"));
}
