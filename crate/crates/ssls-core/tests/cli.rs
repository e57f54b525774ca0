//! End-to-end checks of the `ssls` binary: exit codes, formats and the
//! ingest -> stats -> query round trip.

mod common;

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ssls")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn ssls")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ssls-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn toy() -> String {
    common::toy_path().to_str().unwrap().to_string()
}

#[test]
fn query_document_shape_and_values() {
    let toy = toy();
    let out = run(&["query", "--fixture", &toy, "--k", "2", "--algo", "exact"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["algorithm"], "exact");
    assert_eq!(doc["score"]["members"], serde_json::json!([5, 7]));
    let total = doc["score"]["total"].as_f64().unwrap();
    assert!((total - 1.450833).abs() < 1e-5);
    assert_eq!(doc["selected"][0]["name"], "p5");
    // deterministic surface carries no wall-clock field by default
    assert!(doc["telemetry"].get("wall_ms").is_none());
    let timed = run(&[
        "query",
        "--fixture",
        &toy,
        "--k",
        "2",
        "--algo",
        "exact",
        "--timings",
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(doc["telemetry"]["wall_ms"].is_number());
}

#[test]
fn usage_errors_exit_2() {
    let toy = toy();
    let out = run(&["query", "--fixture", &toy, "--k", "2", "--algo", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    // clap-level usage errors also exit 2
    let out = run(&["query", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    // no source and no SSLS_DATA_DIR
    let out = Command::new(bin())
        .args(["stats"])
        .env_remove("SSLS_DATA_DIR")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempdir("data");
    let edges = dir.join("edges.tsv");
    let checkins = dir.join("checkins.tsv");
    std::fs::write(&edges, "1\t2\n").unwrap();
    // conflicting coordinates for location 9
    std::fs::write(&checkins, "1\t\t30.0\t-97.0\t9\n2\t\t31.5\t-97.0\t9\n").unwrap();
    let out = run(&[
        "ingest",
        "--edges",
        edges.to_str().unwrap(),
        "--checkins",
        checkins.to_str().unwrap(),
        "--out",
        dir.join("snap.ssls").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn infeasible_queries_exit_4() {
    let dir = tempdir("infeasible");
    let edges = dir.join("edges.tsv");
    let checkins = dir.join("checkins.tsv");
    std::fs::write(&edges, "1\t2\n").unwrap();
    std::fs::write(&checkins, "1\t\t30.0\t-97.0\t9\n").unwrap();
    let snap = dir.join("snap.ssls");
    let out = run(&[
        "ingest",
        "--edges",
        edges.to_str().unwrap(),
        "--checkins",
        checkins.to_str().unwrap(),
        "--out",
        snap.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // user 99 does not exist
    let out = run(&[
        "query",
        "--snapshot",
        snap.to_str().unwrap(),
        "--user",
        "99",
        "--k",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
    // user 1's only friend has no check-ins
    let out = run(&[
        "query",
        "--snapshot",
        snap.to_str().unwrap(),
        "--user",
        "1",
        "--k",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
    // k larger than the candidate set on the toy fixture
    let toy = toy();
    let out = run(&["query", "--fixture", &toy, "--k", "11"]);
    assert_eq!(out.status.code(), Some(4));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn ingest_stats_round_trip() {
    let dir = tempdir("roundtrip");
    let (edges, checkins) = common::sample_dataset();
    let edges_path = dir.join("edges.tsv");
    let checkins_path = dir.join("checkins.tsv");
    std::fs::write(&edges_path, &edges).unwrap();
    std::fs::write(&checkins_path, &checkins).unwrap();
    let snap = dir.join("snap.ssls");
    let out = run(&[
        "ingest",
        "--edges",
        edges_path.to_str().unwrap(),
        "--checkins",
        checkins_path.to_str().unwrap(),
        "--out",
        snap.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("users 14"), "{stdout}");
    // independent recount of the input files
    let edge_lines: std::collections::BTreeSet<(u64, u64)> = edges
        .lines()
        .map(|l| {
            let mut it = l.split('\t');
            let a: u64 = it.next().unwrap().parse().unwrap();
            let b: u64 = it.next().unwrap().parse().unwrap();
            (a.min(b), a.max(b))
        })
        .collect();
    let checkin_lines = checkins.lines().count();
    let stats_out = run(&["stats", "--snapshot", snap.to_str().unwrap()]);
    let stats = String::from_utf8(stats_out.stdout.clone()).unwrap();
    assert!(
        stats.contains(&format!("edges {}", edge_lines.len())),
        "{stats}"
    );
    assert!(
        stats.contains(&format!("checkins {checkin_lines}")),
        "{stats}"
    );
    let ac_line = stats.lines().find(|l| l.starts_with("ac ")).unwrap();
    let ac: f64 = ac_line[3..].parse().unwrap();
    assert!((ac - checkin_lines as f64 / 14.0).abs() < 1e-6);

    // SSLS_DATA_DIR supplies the default snapshot location
    std::fs::copy(&snap, dir.join("snapshot.ssls")).unwrap();
    let out = Command::new(bin())
        .args(["stats"])
        .env("SSLS_DATA_DIR", dir.to_str().unwrap())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(out.stdout, stats_out.stdout);

    // a query against the snapshot emits GeoJSON on request
    let geo = dir.join("sel.geojson");
    let out = run(&[
        "query",
        "--snapshot",
        snap.to_str().unwrap(),
        "--user",
        "2",
        "--metric",
        "haversine",
        "--k",
        "3",
        "--geojson",
        geo.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let geojson: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&geo).unwrap()).unwrap();
    assert_eq!(geojson["type"], "FeatureCollection");
    let features = geojson["features"].as_array().unwrap();
    assert!(features
        .iter()
        .any(|f| f["properties"]["role"] == "selected"));
    assert!(features
        .iter()
        .any(|f| f["properties"]["role"] == "friend-checkin"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn score_dump_matches_fixture_values() {
    let toy = toy();
    let out = run(&["score-dump", "--fixture", &toy]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "locid,s_sc,s_sp,r_ss");
    let row6 = lines.clone().find(|l| l.starts_with("6,")).unwrap();
    assert_eq!(row6, "6,0.428571,0.699248,0.563910");
    let row8 = lines.find(|l| l.starts_with("8,")).unwrap();
    assert_eq!(row8, "8,0.571429,0.750571,0.661000");
}

#[test]
fn bench_header_only_when_sample_is_zero() {
    let dir = tempdir("bench0");
    let (edges, checkins) = common::sample_dataset();
    std::fs::write(dir.join("edges.tsv"), &edges).unwrap();
    std::fs::write(dir.join("checkins.tsv"), &checkins).unwrap();
    let snap = dir.join("snap.ssls");
    run(&[
        "ingest",
        "--edges",
        dir.join("edges.tsv").to_str().unwrap(),
        "--checkins",
        dir.join("checkins.tsv").to_str().unwrap(),
        "--out",
        snap.to_str().unwrap(),
    ]);
    let out = run(&[
        "bench",
        "--snapshot",
        snap.to_str().unwrap(),
        "--group",
        "50",
        "--sample",
        "0",
        "--k-list",
        "2",
        "--algos",
        "exact",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.trim(),
        "user,algo,k,alpha,omega,f,precision,mmd_spatial,mmd_ss,sc_theta,se"
    );
    // an empty group is an explicit failure
    let out = run(&[
        "bench",
        "--snapshot",
        snap.to_str().unwrap(),
        "--group",
        "1000",
        "--sample",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(4));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn omega_extremes_are_clamped_with_a_warning() {
    let toy = toy();
    let out = run(&["query", "--fixture", &toy, "--k", "2", "--omega", "1.0"]);
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("clamped"), "{err}");
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let omega = doc["omega"].as_f64().unwrap();
    assert!(omega < 1.0 && omega > 0.999_998);
}
