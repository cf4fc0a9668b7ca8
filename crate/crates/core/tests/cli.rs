//! The `microcomb` binary: flags, exit codes and manifests.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use microcomb_rf::cli::RunManifest;

fn microcomb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microcomb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> RunManifest {
    let text = fs::read_to_string(dir.join("manifest.json")).expect("manifest written");
    serde_json::from_str(&text).expect("manifest parses")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn sinc_design_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = microcomb(&[
        "design",
        "sinc",
        "--taps",
        "80",
        "--bw",
        "1e9",
        "--center",
        "10e9",
        "--out",
        path(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = manifest(dir.path());
    for f in [
        "taps.json",
        "response.csv",
        "metrics.json",
        "scenario.json",
        "manifest.json",
    ] {
        assert!(m.files.iter().any(|x| x == Path::new(f)), "{f} missing");
        assert!(dir.path().join(f).is_file(), "{f} not on disk");
    }
    assert_eq!(m.seed, 0);
    assert!(m.defaulted.iter().any(|f| f == "design.apodization_sigma"));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    let bw = metrics["achieved_bandwidth_hz"].as_f64().unwrap();
    assert!((bw / 1e9 - 1.0).abs() < 0.15, "{bw}");
}

#[test]
fn even_hilbert_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = microcomb(&[
        "design",
        "hilbert",
        "--taps",
        "80",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(manifest(dir.path()).status, "failed");
}

#[test]
fn center_beyond_nyquist_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = microcomb(&[
        "design",
        "sinc",
        "--center",
        "30e9",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn unknown_flags_are_rejected() {
    let out = microcomb(&["design", "sinc", "--bandwith", "1e9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = microcomb(&["beamform", "--help"]);
    let help = String::from_utf8_lossy(&out.stdout);
    for flag in ["--scenario", "--out", "--seed", "--elements", "--tau"] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn bad_scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    fs::write(&file, r#"{"schema_version": 1, "comb": {"fsr_hz": 0}}"#).unwrap();
    let out = microcomb(&[
        "simulate",
        "--scenario",
        path(&file),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fsr > 0"));

    fs::write(&file, "{\"schema_version\": 1,\n \"comb\": {,}}").unwrap();
    let out = microcomb(&["simulate", "--scenario", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = microcomb(&[
        "simulate",
        "--scenario",
        path(&dir.path().join("missing.json")),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn beamform_flags_and_out_of_range_delay() {
    let dir = tempfile::tempdir().unwrap();
    let out = microcomb(&[
        "beamform",
        "--tau",
        "0,2e-11",
        "--step",
        "0.05",
        "--out",
        path(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sweep = fs::read_to_string(dir.path().join("beamwidth_sweep.csv")).unwrap();
    let widths: Vec<f64> = sweep
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(widths.len(), 4);
    assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");

    let out = microcomb(&["beamform", "--tau", "1e-9", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn replay_from_emitted_scenario_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = microcomb(&[
        "channelize",
        "--filter-fsr",
        "51e9",
        "--channels",
        "6",
        "--base-offset",
        "2e9",
        "--weights",
        "1,0,1,1,0,1",
        "--seed",
        "5",
        "--out",
        path(a.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let scenario = a.path().join("scenario.json");
    let out = microcomb(&[
        "channelize",
        "--scenario",
        path(&scenario),
        "--out",
        path(b.path()),
    ]);
    assert!(out.status.success());
    let first = manifest(a.path());
    let second = manifest(b.path());
    assert_eq!(first.files, second.files);
    assert_eq!(second.seed, 5);
    for f in first
        .files
        .iter()
        .filter(|f| f.extension().is_some_and(|e| e == "csv"))
    {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{}",
            f.display()
        );
    }
}

#[test]
fn bundled_scenarios_simulate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(&root).unwrap() {
        let file = entry.unwrap().path();
        if file.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let dir = tempfile::tempdir().unwrap();
        let out = microcomb(&[
            "simulate",
            "--scenario",
            path(&file),
            "--out",
            path(dir.path()),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}: {}",
            file.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        assert_eq!(manifest(dir.path()).status, "ok", "{}", file.display());
        seen += 1;
    }
    assert!(seen >= 4);
}
