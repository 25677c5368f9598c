use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vocalq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vocalq")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = vocalq(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_object(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or_default().to_string();
    serde_json::from_str(&line).unwrap_or_else(|_| panic!("stderr is not a JSON error: {line}"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn analyze_compare_and_viz_on_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["fixtures", "--out", p(d)]);
    for name in ["good_singer", "poor_singer"] {
        ok(&["analyze", p(&d.join(format!("{name}.wav"))), "--tonic", "220", "--out", p(&d.join(format!("{name}.json")))]);
    }

    let good = read_json(&d.join("good_singer.json"));
    assert_eq!(good["warnings"].as_array().unwrap().len(), 0);
    assert_eq!(good["quantum"]["exact"]["probabilities"].as_array().unwrap().len(), 512);
    assert_eq!(good["quantum"]["sampled"]["shots"], 8192);
    assert_eq!(good["input"]["sha256"].as_str().unwrap().len(), 64);

    let stdout = ok(&["compare", p(&d.join("good_singer.json")), p(&d.join("poor_singer.json")), "--out", p(&d.join("cmp.json"))]);
    assert!(stdout.contains("pitch_dev_cents"));
    let cmp = read_json(&d.join("cmp.json"));
    let delta = cmp["per_feature_deltas"]["pitch_dev_cents"].as_f64().unwrap();
    assert!((15.0..=25.0).contains(&delta), "delta {delta}");
    assert!(cmp["js_divergence"].as_f64().unwrap() >= 0.0);

    ok(&["viz", p(&d.join("good_singer.json")), "--out", p(&d.join("plots/good.svg"))]);
    let svg = std::fs::read_to_string(d.join("plots/good.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("bar")).count(), 512);
}

#[test]
fn analyze_is_deterministic_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["fixtures", "--out", p(d)]);
    let wav = d.join("poor_singer.wav");
    for out in ["a.json", "b.json"] {
        ok(&["analyze", p(&wav), "--tonic", "220", "--seed", "7", "--out", p(&d.join(out))]);
    }
    let (mut a, mut b) = (read_json(&d.join("a.json")), read_json(&d.join("b.json")));
    a.as_object_mut().unwrap().remove("generated_unix_s");
    b.as_object_mut().unwrap().remove("generated_unix_s");
    assert_eq!(a, b);
}

#[test]
fn silence_reports_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["fixtures", "--out", p(d)]);
    ok(&["analyze", p(&d.join("silence.wav")), "--tonic", "220", "--out", p(&d.join("s.json"))]);
    let r = read_json(&d.join("s.json"));
    let warnings: Vec<&str> = r["warnings"].as_array().unwrap().iter().map(|w| w.as_str().unwrap()).collect();
    assert!(warnings.iter().any(|w| w.contains("pitch_dev_cents")), "{warnings:?}");
}

#[test]
fn failures_exit_with_json_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let missing = vocalq(&["analyze", p(&d.join("nope.wav")), "--tonic", "220", "--out", p(&d.join("x.json"))]);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(error_object(&missing)["exit_code"], 1);

    std::fs::write(d.join("junk.wav"), b"not a wav file").unwrap();
    let junk = vocalq(&["analyze", p(&d.join("junk.wav")), "--tonic", "220", "--out", p(&d.join("x.json"))]);
    assert_eq!(junk.status.code(), Some(1));
    assert_eq!(error_object(&junk)["error"], "MalformedContainer");

    ok(&["fixtures", "--out", p(d)]);
    let wav = d.join("good_singer.wav");
    ok(&["analyze", p(&wav), "--tonic", "220", "--out", p(&d.join("f.json"))]);
    ok(&["analyze", p(&wav), "--tonic", "220", "--mode", "interference", "--out", p(&d.join("i.json"))]);
    let mixed = vocalq(&["compare", p(&d.join("f.json")), p(&d.join("i.json")), "--out", p(&d.join("c.json"))]);
    assert_eq!(mixed.status.code(), Some(2));
    assert_eq!(error_object(&mixed)["error"], "ModeMismatch");
}

#[test]
fn train_then_grade_on_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["fixtures", "--out", p(d), "--corpus", "2"]);
    let corpus = d.join("corpus");
    let tonics: BTreeMap<String, f64> = serde_json::from_str(&std::fs::read_to_string(corpus.join("tonics.json")).unwrap()).unwrap();
    assert_eq!(tonics.len(), 8);
    for (wav, tonic) in &tonics {
        let out = corpus.join(wav.replace(".wav", ".json"));
        ok(&["analyze", p(&corpus.join(wav)), "--tonic", &tonic.to_string(), "--out", p(&out)]);
    }

    let model = d.join("model.json");
    let stdout = ok(&[
        "train", "--reports", p(&corpus), "--labels", p(&corpus.join("labels.csv")), "--out", p(&model), "--epochs", "50",
    ]);
    assert!(stdout.contains("training_accuracy"));
    let first = std::fs::read_to_string(&model).unwrap();
    ok(&["train", "--reports", p(&corpus), "--labels", p(&corpus.join("labels.csv")), "--out", p(&model), "--epochs", "50"]);
    assert_eq!(first, std::fs::read_to_string(&model).unwrap());

    let (report, _) = tonics.iter().next().unwrap();
    let stdout = ok(&["grade", "--model", p(&model), p(&corpus.join(report.replace(".wav", ".json")))]);
    let grade: u8 = stdout.lines().next().unwrap().strip_prefix("grade ").unwrap().parse().unwrap();
    assert!((2..=5).contains(&grade));
    assert!(stdout.contains("pitch:"));
}
