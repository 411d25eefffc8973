mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::data_path;
use healthroute::dataset_io::{self, file_digest, manifest_path};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_healthroute"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn setup(n: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data_path("tarragona_routes.csv"), dir.path().join("routes.csv")).unwrap();
    ok(
        dir.path(),
        &["gen-citizens", "--n", n, "--seed", "5", "--out", "citizens.csv"],
    );
    ok(
        dir.path(),
        &[
            "gen-ratings",
            "--citizens",
            "citizens.csv",
            "--routes",
            "routes.csv",
            "--seed",
            "6",
            "--with-oracle",
            "--out",
            "ratings.csv",
        ],
    );
    dir
}

#[test]
fn exit_codes() {
    let dir = setup("300");
    let d = dir.path();
    assert_eq!(run(d, &["--help"]).status.code(), Some(0));
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(d, &["gen-citizens", "--n", "10"]).status.code(), Some(1));
    assert_eq!(run(d, &["stats", "--citizens", "missing.csv"]).status.code(), Some(1));
    assert_eq!(
        run(
            d,
            &["evaluate", "--ratings", "ratings.csv", "--seed", "1", "--fraction", "0"]
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(d, &["gen-citizens", "--n", "0", "--seed", "1", "--out", "x.csv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(d, &["recommend", "--ratings", "ratings.csv", "--user", "100000"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(
            d,
            &[
                "recommend",
                "--ratings",
                "ratings.csv",
                "--user",
                "1",
                "--citizens",
                "citizens.csv"
            ]
        )
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn malformed_route_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data_path("tarragona_routes.csv")).unwrap();
    let broken = text.replacen(
        "Very good,Idle",
        "Very good,Idle\nRoute_z,\"95°0'0\"\"N 1°0'0\"\"E\",\"41°0'0\"\"N 1°0'0\"\"E\",,1.0,0,Good,Idle",
        1,
    );
    std::fs::write(dir.path().join("bad.csv"), broken).unwrap();
    let out = run(dir.path(), &["ingest-routes", "--in", "bad.csv", "--out", "clean.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:3"), "{err}");
    assert!(err.contains("95"), "{err}");
}

#[test]
fn ingest_round_trips_routes() {
    let dir = tempfile::tempdir().unwrap();
    let input = data_path("tarragona_routes.csv");
    let out = ok(
        dir.path(),
        &["ingest-routes", "--in", input.to_str().unwrap(), "--out", "clean.csv"],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("Route_a"));
    let original = dataset_io::read_routes(&input).unwrap();
    let again = dataset_io::read_routes(&dir.path().join("clean.csv")).unwrap();
    assert_eq!(original.len(), again.len());
    for (a, b) in original.iter().zip(&again) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.distance_km, b.distance_km);
        assert_eq!(a.pavement, b.pavement);
        assert!((a.start.latitude() - b.start.latitude()).abs() < 1e-12);
        assert_eq!(a.checkpoints.len(), b.checkpoints.len());
    }
}

#[test]
fn regenerates_citizens_from_manifest() {
    let dir = setup("500");
    let d = dir.path();
    let manifest = dataset_io::read_manifest(&manifest_path(&d.join("citizens.csv"))).unwrap();
    let cfg = manifest.configs.population.clone().unwrap();
    std::fs::write(d.join("population.toml"), cfg.to_toml()).unwrap();
    let seed = manifest.seed.to_string();
    let n = manifest.shapes.n_users.to_string();
    ok(
        d,
        &[
            "gen-citizens",
            "--n",
            &n,
            "--seed",
            &seed,
            "--config",
            "population.toml",
            "--out",
            "again.csv",
        ],
    );
    assert_eq!(
        file_digest(&d.join("again.csv")).unwrap(),
        manifest.outputs["citizens.csv"]
    );
    let again = dataset_io::read_manifest(&manifest_path(&d.join("again.csv"))).unwrap();
    assert_eq!(again.config_digests, manifest.config_digests);
}

#[test]
fn stats_and_evaluate_report() {
    let dir = setup("2000");
    let d = dir.path();
    let out = ok(d, &["stats", "--citizens", "citizens.csv", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["prevalence"]["n"], 2000);
    assert!(v["distinct_profiles"].as_u64().unwrap() <= 64);

    let mut cfg = healthroute::PopulationConfig::default();
    cfg.prevalence.p_visual = 0.30;
    std::fs::write(d.join("wrong.toml"), cfg.to_toml()).unwrap();
    assert_eq!(
        run(d, &["stats", "--citizens", "citizens.csv", "--config", "wrong.toml"])
            .status
            .code(),
        Some(3)
    );

    let out = ok(d, &["evaluate", "--ratings", "ratings.csv", "--seed", "2", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["cf"]["mae"].as_f64().unwrap() > 0.0);
    assert!(v["oracle"]["mae"].as_f64().is_some());
}

#[test]
fn recommendation_file_respects_filter() {
    let dir = setup("400");
    let d = dir.path();
    ok(
        d,
        &[
            "recommend",
            "--ratings",
            "ratings.csv",
            "--citizens",
            "citizens.csv",
            "--routes",
            "routes.csv",
            "--user",
            "3",
            "--n",
            "11",
            "--include-rated",
            "--threshold",
            "6.5",
            "--out",
            "recs.csv",
        ],
    );
    let text = std::fs::read_to_string(d.join("recs.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with('#') && header.contains("threshold=6.5"), "{header}");
    assert_eq!(
        lines.next().unwrap(),
        "user_id,rank,route_id,predicted,support,deterministic_rating,pass"
    );
    let mut last = f64::INFINITY;
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1], (i + 1).to_string());
        let predicted: f64 = f[3].parse().unwrap();
        assert!(predicted <= last);
        last = predicted;
        assert!(f[5].parse::<f64>().unwrap() >= 6.5);
        assert_eq!(f[6], "true");
    }
    let manifest = dataset_io::read_manifest(&manifest_path(&d.join("recs.csv"))).unwrap();
    assert!(manifest
        .verify_output("recs.csv", &d.join("recs.csv"))
        .unwrap()
        .is_none());
}
