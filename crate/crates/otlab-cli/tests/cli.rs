//! End-to-end tests of the otlab binary: exit status contract, config
//! diagnostics and report reproducibility.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn otlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn otlab_with_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otlab"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("otlab-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn params_solve_prints_the_derived_set() {
    let out = otlab(&["params", "solve", "--epsilon", "0.1", "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["parameter_set"]["c"], 20);
    let x = doc["parameter_set"]["x"].as_f64().unwrap();
    assert!(x > 39.0 && x < 40.0, "x = {x}");
    assert_eq!(doc["validation"]["violations"].as_array().unwrap().len(), 0);

    let table = otlab(&["params", "solve", "--epsilon", "0.1"]);
    assert!(table.status.success());
    let text = stdout(&table);
    assert!(text.contains("c                20"), "{text}");
}

#[test]
fn params_solve_rejects_bad_epsilon() {
    let out = otlab(&["params", "solve", "--epsilon", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("epsilon"));
}

#[test]
fn attack_crepeau_honest_sender_exits_zero() {
    let out = otlab(&[
        "attack", "crepeau", "--s", "0", "--N", "300", "--trials", "1000",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("attack rate         0 "));
}

#[test]
fn attack_crepeau_with_garbage_demonstrates_the_break() {
    let out = otlab(&[
        "attack", "crepeau", "--s", "5", "--N", "300", "--trials", "4000",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("BoundViolated"));
}

#[test]
fn attack_crepeau_rejects_bad_big_n() {
    let out = otlab(&["attack", "crepeau", "--s", "5", "--N", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("multiple of 3"));
}

#[test]
fn unknown_flag_exits_two_with_usage() {
    let out = otlab(&["params", "solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).to_lowercase().contains("usage"));
}

#[test]
fn bounds_prints_all_formulas() {
    let path = temp_path("bounds.json");
    fs::write(
        &path,
        r#"{"version":1,"protocol":"ot12","c":3,"beta":3.0,"big_n":200,"alpha":0.45,"rounds_x":2,"ell":32}"#,
    )
    .unwrap();
    let out = otlab(&["bounds", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("receive threshold n  79"), "{text}");
    assert!(text.contains("pf_st"), "{text}");
    assert!(text.contains("pa_st"), "{text}");
    assert!(text.contains("pb_st"), "{text}");
    fs::remove_file(&path).ok();
}

fn campaign_json(output_path: &str) -> String {
    format!(
        r#"{{
  "version": 1,
  "trials": 1500,
  "master_seed": 42,
  "output": {{"path": "{output_path}", "format": "csv"}},
  "scenarios": [
    {{"protocol": "crepeau", "label": "attack-s5", "big_n": 300, "s": 5, "ell": 32,
      "event": "alice_identified", "bound": "auto"}},
    {{"protocol": "crepeau", "label": "abort-s0", "big_n": 300, "s": 0, "ell": 32,
      "event": "abort", "bound": "none"}}
  ]
}}"#
    )
}

#[test]
fn simulate_writes_reports_and_flags_violations() {
    let cfg_path = temp_path("campaign.json");
    let out_path = temp_path("report.csv");
    fs::write(&cfg_path, campaign_json(out_path.to_str().unwrap())).unwrap();

    let out = otlab(&[
        "simulate",
        "crepeau",
        "--config",
        cfg_path.to_str().unwrap(),
    ]);
    // the s=5 attack scenario must violate the paper's floor
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let csv = fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("label,trials,successes,rate,ci_low,ci_high,bound,verdict"));
    assert!(csv.contains("attack-s5"));
    assert!(csv.contains("BoundViolated"));
    assert!(csv.contains("abort-s0"));
    assert!(csv.contains("NoBound"));

    fs::remove_file(&cfg_path).ok();
    fs::remove_file(&out_path).ok();
}

#[test]
fn simulate_reruns_are_byte_identical_and_thread_independent() {
    let cfg_path = temp_path("campaign-repro.json");
    let out_path = temp_path("report-repro.csv");
    fs::write(&cfg_path, campaign_json(out_path.to_str().unwrap())).unwrap();
    let args = ["simulate", "crepeau", "--config"];

    otlab_with_env(
        &[&args[..], &[cfg_path.to_str().unwrap()]].concat(),
        "OTLAB_THREADS",
        "1",
    );
    let first = fs::read(&out_path).unwrap();
    otlab_with_env(
        &[&args[..], &[cfg_path.to_str().unwrap()]].concat(),
        "OTLAB_THREADS",
        "3",
    );
    let second = fs::read(&out_path).unwrap();
    assert_eq!(first, second);

    // JSON output reproduces too
    let json_path = temp_path("report-repro.jsonl");
    let jargs = [
        "simulate",
        "crepeau",
        "--config",
        cfg_path.to_str().unwrap(),
        "--output",
        json_path.to_str().unwrap(),
        "--format",
        "json",
    ];
    otlab(&jargs);
    let ja = fs::read(&json_path).unwrap();
    otlab(&jargs);
    let jb = fs::read(&json_path).unwrap();
    assert_eq!(ja, jb);
    for line in String::from_utf8(ja).unwrap().lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }

    fs::remove_file(&cfg_path).ok();
    fs::remove_file(&out_path).ok();
    fs::remove_file(&json_path).ok();
}

#[test]
fn simulate_rejects_malformed_config_naming_the_field() {
    let cfg_path = temp_path("bad-campaign.json");
    fs::write(
        &cfg_path,
        r#"{"version": 1, "master_seed": 1, "scenarios": []}"#,
    )
    .unwrap();
    let out = otlab(&[
        "simulate",
        "crepeau",
        "--config",
        cfg_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("trials"), "{}", stderr(&out));

    fs::write(
        &cfg_path,
        r#"{"version": 7, "trials": 10, "master_seed": 1,
            "scenarios": [{"protocol": "crepeau", "label": "x", "big_n": 30, "s": 0, "ell": 8, "event": "abort"}]}"#,
    )
    .unwrap();
    let out = otlab(&[
        "simulate",
        "crepeau",
        "--config",
        cfg_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("version"), "{}", stderr(&out));
    fs::remove_file(&cfg_path).ok();
}

#[test]
fn simulate_exits_zero_when_everything_is_within_bounds() {
    let cfg_path = temp_path("clean-campaign.json");
    fs::write(
        &cfg_path,
        r#"{"version": 1, "trials": 500, "master_seed": 3,
            "scenarios": [{"protocol": "crepeau", "label": "honest", "big_n": 300, "s": 0,
                           "ell": 32, "event": "alice_identified", "bound": "auto"}]}"#,
    )
    .unwrap();
    let out = otlab(&[
        "simulate",
        "crepeau",
        "--config",
        cfg_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("WithinBound"));
    fs::remove_file(&cfg_path).ok();
}

#[test]
fn bounds_rejects_bad_files() {
    let path = temp_path("bounds-bad.json");
    fs::write(
        &path,
        r#"{"version":9,"protocol":"crepeau","big_n":300,"s":5,"ell":32}"#,
    )
    .unwrap();
    let out = otlab(&["bounds", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("version"), "{}", stderr(&out));

    fs::write(&path, r#"{"version":1,"protocol":"nonesuch"}"#).unwrap();
    let out = otlab(&["bounds", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = otlab(&["bounds", "--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    fs::remove_file(&path).ok();
}

#[test]
fn bounds_handles_ech_and_crepeau_schemas() {
    let path = temp_path("bounds-ech.json");
    fs::write(
        &path,
        r#"{"version":1,"protocol":"ech","alpha":0.4,"rounds_x":2,"n_t":100,"ell":8,"n_a":2,"n_b":10}"#,
    )
    .unwrap();
    let out = otlab(&["bounds", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("pf_ech"), "{text}");
    assert!(text.contains("pa_ech"), "{text}");
    assert!(text.contains("pb_ech"), "{text}");

    fs::write(
        &path,
        r#"{"version":1,"protocol":"crepeau","big_n":300,"s":5,"ell":32}"#,
    )
    .unwrap();
    let out = otlab(&["bounds", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("attack probability"));
    fs::remove_file(&path).ok();
}

#[test]
fn simulate_rejects_protocol_mismatch() {
    let cfg_path = temp_path("mismatch.json");
    fs::write(
        &cfg_path,
        r#"{"version": 1, "trials": 10, "master_seed": 1,
            "scenarios": [{"protocol": "crepeau", "label": "x", "big_n": 30, "s": 0, "ell": 8, "event": "abort"}]}"#,
    )
    .unwrap();
    let out = otlab(&["simulate", "ot12", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("crepeau"), "{}", stderr(&out));
    fs::remove_file(&cfg_path).ok();
}

#[test]
fn simulate_dumps_transcript_records() {
    let cfg_path = temp_path("campaign-tr.json");
    let out_path = temp_path("report-tr.csv");
    let tr_path = temp_path("transcripts.jsonl");
    fs::write(&cfg_path, campaign_json(out_path.to_str().unwrap())).unwrap();
    let out = otlab(&[
        "simulate",
        "crepeau",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trials",
        "50",
        "--transcripts",
        tr_path.to_str().unwrap(),
        "--transcript-count",
        "2",
    ]);
    assert!(out.status.code().is_some(), "{}", stderr(&out));
    let text = fs::read_to_string(&tr_path).unwrap();
    // 2 scenarios x 2 trials x (header + 2 record lines)
    assert_eq!(text.lines().count(), 12, "{text}");
    for line in text.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    fs::remove_file(&cfg_path).ok();
    fs::remove_file(&out_path).ok();
    fs::remove_file(&tr_path).ok();
}
