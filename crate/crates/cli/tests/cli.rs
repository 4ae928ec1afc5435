use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spinbath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinbath")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn rdja_scan_on_resonance_has_unit_contrast() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "rdja-scan", "spectrum": {"point_mass": {"detuning_mhz": 0}},
            "grid": {"start": 0, "stop": 300, "step": 50}}"#,
    );
    let out = dir.path().join("r.csv");
    let o = spinbath(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau_ns,p0_u1,p0_u2,p0_u3,p0_u4,contrast"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    for r in rows {
        assert_eq!(r.rsplit(',').next(), Some("1"), "{r}");
    }
}

#[test]
fn same_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "echo-scan", "grid": {"start": 100, "stop": 240, "step": 20}, "method": "mc:2000",
            "signal": {"c_max": 1.3e6, "c_min": 0.9e6, "shots": 1, "noisy": true}}"#,
    );
    let a = dir.path().join("a");
    let run = || {
        let o = spinbath(&["--config", &cfg, "--out", a.to_str().unwrap(), "--format", "both", "--seed", "11"]);
        assert!(o.status.success(), "{}", stderr(&o));
        (fs::read(a.with_extension("csv")).unwrap(), fs::read(a.with_extension("json")).unwrap())
    };
    let first = run();
    let second = run();
    assert_eq!(first.0, second.0, "csv differs");
    assert_eq!(first.1, second.1, "json differs");
    assert!(!first.0.contains(&b'\r') && !first.1.contains(&b'\r'));
    let csv = fs::read_to_string(a.with_extension("csv")).unwrap();
    assert!(csv.starts_with("t2_ns,p0_constant,p0_balanced,pos\n"));
    let json = fs::read_to_string(a.with_extension("json")).unwrap();
    assert!(json.contains("\"schema_version\": 1"));
    assert!(json.contains("\"seed\": 11"));
    assert!(json.contains("\"method\": \"mc:2000:11\""));
}

#[test]
fn stdout_when_no_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "rabi", "spectrum": {"point_mass": {"detuning_mhz": 0}}, "grid": {"start": 0, "stop": 93.109869646, "step": 93.109869646}}"#,
    );
    let o = spinbath(&["--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "duration_ns,p0");
    assert_eq!(lines[1], "0,1");
    let p0: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!(p0.abs() < 1e-9, "{p0}");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "trace-distance", "grid": {"start": 0, "stop": 100, "step": 50}, "method": "quadrature:8"}"#,
    );
    let o = spinbath(&["--config", &cfg, "--format", "json", "--method", "mc:50:3", "--ideal-pulses"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\"method\": \"mc:50:3\""), "{text}");
    assert!(text.contains("\"ideal_pulses\": true"));
}

#[test]
fn run_seq_from_dsl() {
    let dir = tempfile::tempdir().unwrap();
    let dsl = write(dir.path(), "s.seq", "rabi 5.37MHz\nseq flip:\n  pulse X 90\n  pulse X 90\n");
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"kind": "run-seq", "spectrum": {{"point_mass": {{"detuning_mhz": 0}}}}, "dsl": {{"path": {dsl:?}, "sequence": "flip"}}}}"#
        ),
    );
    let o = spinbath(&["--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((row[0] - 93.1098696461).abs() < 1e-6);
    assert!(row[1].abs() < 1e-9);
}

#[test]
fn exit_code_one_for_config_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad_grid = write(dir.path(), "g.json", r#"{"kind": "rdja-scan", "grid": {"start": 0, "stop": 10, "step": 0}}"#);
    let o = spinbath(&["--config", &bad_grid]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("E_CONFIG"));

    let dsl = write(dir.path(), "bad.seq", "seq s:\n  delay 400 ns\n");
    let cfg = write(
        dir.path(),
        "d.json",
        &format!(r#"{{"kind": "run-seq", "dsl": {{"path": {dsl:?}, "sequence": "s"}}}}"#),
    );
    let o = spinbath(&["--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("E_DSL_MALFORMED_NUMBER"), "{}", stderr(&o));
    assert!(stderr(&o).contains("2:12"), "{}", stderr(&o));

    let o = spinbath(&["--config", &bad_grid, "--method", "simpson:3"]);
    assert_eq!(o.status.code(), Some(1));

    let o = spinbath(&["--bogus-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_code_three_for_io_errors() {
    let o = spinbath(&["--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("E_IO"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"kind": "rabi", "grid": {"start": 0, "stop": 10, "step": 5}}"#);
    let o = spinbath(&["--config", &cfg, "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn exit_code_two_for_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    // a flat curve has no oscillation, so the fit cannot even start
    let data = write(dir.path(), "flat.csv", "t_ns,value\n0,0.5\n10,0.5\n20,0.5\n30,0.5\n40,0.5\n50,0.5\n60,0.5\n70,0.5\n");
    let cfg = write(dir.path(), "c.json", &format!(r#"{{"kind": "fit", "input": {data:?}}}"#));
    let o = spinbath(&["--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
