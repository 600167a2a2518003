use std::path::Path;
use std::process::{Command, Output};

use starkcomb::config::DEFAULT_CONFIG_TOML;
use starkcomb::scenario::{csv_body, parse_csv};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starkcomb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(scenario: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![scenario, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn plan_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("plan", dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    let (meta, cols, rows) = parse_csv(&text);
    assert_eq!(
        cols,
        [
            "line_index",
            "line_GHz",
            "position_cm",
            "lo_power_dBm",
            "spacing_to_next_cm"
        ]
    );
    assert_eq!(rows.len(), 21);
    assert!(meta.iter().any(|(k, _)| k == "config_sha256"));
    assert!(meta.iter().any(|(k, v)| k == "scenario" && v == "plan"));
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 7.98);
    assert_eq!(rows[20][2].parse::<f64>().unwrap(), 2.0);
    assert_eq!(rows[20][4], "");
    assert!(dir.path().join("plan_manifest.json").exists());
    assert!(dir.path().join("profile.csv").exists());
}

#[test]
fn every_subcommand_succeeds_and_is_deterministic() {
    for scenario in [
        "plan",
        "response",
        "linearity",
        "sensitivity",
        "sweep2cell",
        "eit",
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert!(
            run_in(scenario, a.path(), &[]).status.success(),
            "{scenario}"
        );
        assert!(
            run_in(scenario, b.path(), &["--seed", "7"])
                .status
                .success(),
            "{scenario}"
        );
        let mut names: Vec<_> = std::fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert!(names.len() >= 2, "{scenario}: {names:?}");
        for name in names {
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert_eq!(x, y, "{scenario}: {name:?} differs");
        }
    }
}

#[test]
fn explicit_default_config_matches_bundled() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DEFAULT_CONFIG_TOML);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run_in("sensitivity", &a, &["--config", &cfg])
        .status
        .success());
    assert!(run_in("sensitivity", &b, &[]).status.success());
    assert_eq!(
        std::fs::read(a.join("sensitivity.csv")).unwrap(),
        std::fs::read(b.join("sensitivity.csv")).unwrap()
    );
}

#[test]
fn timestamp_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain");
    let stamped = dir.path().join("stamped");
    assert!(run_in("plan", &plain, &[]).status.success());
    assert!(run_in("plan", &stamped, &["--timestamp"]).status.success());
    let p = std::fs::read_to_string(plain.join("plan.csv")).unwrap();
    let s = std::fs::read_to_string(stamped.join("plan.csv")).unwrap();
    assert!(!p.contains("generated_unix_s"));
    assert!(s.contains("generated_unix_s"));
    assert_eq!(csv_body(&p), csv_body(&s));
}

#[test]
fn empty_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = run_in("plan", &dir.path().join("o"), &["--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse"));
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        "plan",
        dir.path(),
        &["--config", "/nonexistent/config.toml"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_value_exits_2_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &DEFAULT_CONFIG_TOML.replace("rolloff_order = 2", "rolloff_order = 0"),
    );
    let out = run_in("response", &dir.path().join("o"), &["--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("channel.rolloff_order"));
}

#[test]
fn crowded_plan_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &DEFAULT_CONFIG_TOML.replace("min_gap_cm = 0.0", "min_gap_cm = 0.23"),
    );
    let out = run_in("plan", &dir.path().join("o"), &["--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unreachable_line_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &DEFAULT_CONFIG_TOML.replace("line_count = 21", "line_count = 25"),
    );
    let out = run_in("plan", &dir.path().join("o"), &["--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reachable band"));
}

#[test]
fn unknown_subcommand_fails() {
    let out = run(&["bogus"]);
    assert!(!out.status.success());
}

#[test]
fn single_line_response_has_5_mhz_half_width() {
    let dir = tempfile::tempdir().unwrap();
    let text = DEFAULT_CONFIG_TOML
        .replace("line_count = 21", "line_count = 1")
        .replace(
            "start_hz = 8.02e9\nstop_hz = 8.24e9",
            "start_hz = 8.115e9\nstop_hz = 8.145e9",
        );
    let cfg = write_config(dir.path(), &text);
    let out = run_in("response", dir.path(), &["--config", &cfg]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (_, cols, rows) =
        parse_csv(&std::fs::read_to_string(dir.path().join("response_bandwidth.csv")).unwrap());
    let col = |n: &str| cols.iter().position(|c| c == n).unwrap();
    let channel = &rows[0];
    let lo: f64 = channel[col("lower_3dB_GHz")].parse().unwrap();
    let hi: f64 = channel[col("upper_3dB_GHz")].parse().unwrap();
    // floored curve, 100 kHz grid: within 1 kHz of +/- 5 MHz
    assert!((lo * 1e9 - 8.125e9).abs() < 1e3, "{lo}");
    assert!((hi * 1e9 - 8.135e9).abs() < 1e3, "{hi}");
}
