//! End-to-end tests of the `crackseg` binary.

use std::path::Path;
use std::process::{Command, Output};

fn crackseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crackseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().last().expect("stdout has a result line");
    serde_json::from_str(line).expect("stdout line is valid JSON")
}

fn synth_dir(dir: &Path, n: u32, seed: u64, shadow: bool) {
    let mut args = vec![
        "synth".to_string(),
        "--out".into(),
        dir.display().to_string(),
        "--n".into(),
        n.to_string(),
        "--seed".into(),
        seed.to_string(),
    ];
    if shadow {
        args.push("--shadow".into());
    }
    let out = crackseg(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn segment_recursive_writes_mask_and_json() {
    let dir = tempfile::tempdir().unwrap();
    synth_dir(dir.path(), 1, 7, true);
    let input = dir.path().join("crack_000.png");
    let mask = dir.path().join("mask.png");
    let trace = dir.path().join("trace.json");
    let out = crackseg(&[
        "segment",
        "--method",
        "recursive-otsu",
        "--cs",
        "0.25",
        "--trace",
        trace.to_str().unwrap(),
        input.to_str().unwrap(),
        "-o",
        mask.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(mask.is_file());
    assert!(trace.is_file());
    let json = stdout_json(&out);
    assert_eq!(json["stop_reason"], "contrast_exceeded");
    assert!(json["t_u"].is_number());
    assert!(json["q"].is_number());
    assert!(json["contrast_sequence"].is_array());
    // trace file parses and agrees with the reported threshold
    let trace_json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&trace).unwrap()).unwrap();
    assert_eq!(trace_json["t_u"], json["t_u"]);
}

#[test]
fn segment_constant_image_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("constant.png");
    let img = crackseg::imaging::GrayImage::from_raw(8, 8, vec![77; 64]);
    crackseg::imaging::save_gray_png(&img, &path).unwrap();
    let out = crackseg(&[
        "segment",
        "--method",
        "otsu",
        path.to_str().unwrap(),
        "-o",
        dir.path().join("m.png").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("degenerate"), "stderr names the rule: {msg}");
}

#[test]
fn segment_missing_input_exits_3() {
    let out = crackseg(&["segment", "--method", "otsu", "/nonexistent/x.png"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flag_exits_2() {
    let out = crackseg(&["segment", "--method", "otsu", "--bogus", "x.png"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tiny_cs_collapses_to_global_otsu() {
    let dir = tempfile::tempdir().unwrap();
    synth_dir(dir.path(), 1, 9, false);
    let input = dir.path().join("crack_000.png");
    let rec = stdout_json(&crackseg(&[
        "segment",
        "--method",
        "recursive-otsu",
        "--cs",
        "1e-9",
        input.to_str().unwrap(),
    ]));
    let otsu = stdout_json(&crackseg(&[
        "segment",
        "--method",
        "otsu",
        input.to_str().unwrap(),
    ]));
    assert_eq!(rec["t_u"], otsu["final_threshold"]);
}

#[test]
fn synth_is_seed_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth_dir(a.path(), 1, 7, false);
    synth_dir(b.path(), 1, 7, false);
    let img_a = std::fs::read(a.path().join("crack_000.png")).unwrap();
    let img_b = std::fs::read(b.path().join("crack_000.png")).unwrap();
    assert_eq!(img_a, img_b);
    let t_a = std::fs::read(a.path().join("crack_000.truth.png")).unwrap();
    let t_b = std::fs::read(b.path().join("crack_000.truth.png")).unwrap();
    assert_eq!(t_a, t_b);
}

#[test]
fn bench_writes_reports_and_prints_aggregate_json() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    synth_dir(dir.path(), 3, 21, true);
    let out = crackseg(&[
        "bench",
        "--dir",
        dir.path().to_str().unwrap(),
        "--methods",
        "otsu,recursive-otsu",
        "--out",
        out_dir.path().to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    assert_eq!(json["rows"], 6);
    assert_eq!(json["aggregate"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(out_dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("image,method,q,final_threshold,iterations,stop_reason,wall_time_ms"));
    assert_eq!(csv.lines().count(), 7);
    assert!(out_dir.path().join("report.json").is_file());
    // human table went to stderr, not stdout
    assert!(String::from_utf8_lossy(&out.stderr).contains("mean Q"));
}

#[test]
fn bench_rerun_is_byte_identical_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    synth_dir(dir.path(), 2, 33, true);
    let strip = |csv: &str| {
        csv.lines()
            .map(|l| l.rsplit_once(',').map(|(r, _)| r.to_string()).unwrap_or_default())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut runs = Vec::new();
    for jobs in ["1", "8"] {
        let out_dir = tempfile::tempdir().unwrap();
        let out = crackseg(&[
            "bench",
            "--dir",
            dir.path().to_str().unwrap(),
            "--out",
            out_dir.path().to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(out.status.success());
        runs.push(strip(
            &std::fs::read_to_string(out_dir.path().join("report.csv")).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn inspect_emits_histogram_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    synth_dir(dir.path(), 1, 5, false);
    let input = dir.path().join("crack_000.png");
    let out = crackseg(&["inspect", input.to_str().unwrap()]);
    assert!(out.status.success());
    let json = stdout_json(&out);
    assert_eq!(json["histogram"].as_array().unwrap().len(), 256);
    assert!(json["trace"]["t_u"].is_number());
    assert!(json["global_otsu"]["threshold"].is_number());
}
