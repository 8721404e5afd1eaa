use std::path::Path;
use std::process::{Command, Output};

fn rydgate(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydgate"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("RYDGATE_DATA")
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

/// A small, fast search: few restarts and a coarse grid are enough to check
/// the plumbing.
const FAST: &str = r#"{
  "ratio": 2.1,
  "optimizer": {"restarts": 2, "coarse_restarts": 2, "max_iterations": 200, "t_min": 11.0, "t_max": 14.0, "t_resolution": 0.5},
  "seed": 3
}"#;

#[test]
fn repeated_runs_write_identical_pulses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fast.json");
    write(&cfg, FAST);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = rydgate(&["optimize", "--config", cfg.to_str().unwrap()], out);
        assert!(
            o.status.success() || o.status.code() == Some(3),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    for name in [
        "pulse_time_optimal.json",
        "scan.csv",
        "report_time_optimal.json",
    ] {
        let ta = std::fs::read_to_string(a.join(name)).unwrap();
        assert!(
            ta == std::fs::read_to_string(b.join(name)).unwrap(),
            "{name} differs"
        );
    }
    let scan = std::fs::read_to_string(a.join("scan.csv")).unwrap();
    assert!(scan.starts_with("# "));
}

#[test]
fn corrupted_pulse_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let pulse = dir.path().join("bad.json");
    write(&pulse, r#"{"ratio": 2.1, "steps": [0.1, "#);
    let o = rydgate(&["budget", "--pulse", pulse.to_str().unwrap()], dir.path());
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let missing = dir.path().join("missing.json");
    let o = rydgate(
        &["budget", "--pulse", missing.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
}

fn write_pulse(path: &Path, ratio: f64) {
    let steps: Vec<String> = (0..120).map(|k| format!("{}", 0.01 * k as f64)).collect();
    write(
        path,
        &format!(
            r#"{{"ratio": {ratio}, "omega_max_rad_s": 62831853.07179586, "duration_T_omega": 12.0,
                "steps": [{}], "rotation": {{"theta": 0.0, "varphi": 0.0, "lambda": 0.0}}}}"#,
            steps.join(",")
        ),
    );
}

#[test]
fn empty_noise_gives_only_the_reference_row() {
    let dir = tempfile::tempdir().unwrap();
    let pulse = dir.path().join("p.json");
    write_pulse(&pulse, 2.1);
    let cfg = dir.path().join("c.json");
    write(&cfg, r#"{"ratio": 2.1, "noise": {}}"#);
    let out = dir.path().join("o");
    let o = rydgate(
        &[
            "budget",
            "--config",
            cfg.to_str().unwrap(),
            "--pulse",
            pulse.to_str().unwrap(),
        ],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("budget.csv")).unwrap();
    let data: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(data.len(), 1);
    assert!(data[0].starts_with("no_noise,"));
}

#[test]
fn ratio_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let pulse = dir.path().join("p.json");
    write_pulse(&pulse, 3.0);
    let o = rydgate(
        &[
            "budget",
            "--ratio",
            "2.1",
            "--pulse",
            pulse.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn echoed_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = rydgate(
        &["protocols", "--ratios", "50", "--n", "75", "--seed", "9"],
        &first,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo = first.join("config.json");
    let second = dir.path().join("second");
    let o = rydgate(
        &[
            "protocols",
            "--ratios",
            "50",
            "--config",
            echo.to_str().unwrap(),
        ],
        &second,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a: serde_json::Value = serde_json::from_slice(&std::fs::read(&echo).unwrap()).unwrap();
    let mut b: serde_json::Value =
        serde_json::from_slice(&std::fs::read(second.join("config.json")).unwrap()).unwrap();
    // only the output directory differs
    b["config"]["out_dir"] = a["config"]["out_dir"].clone();
    assert_eq!(a, b);
    assert_eq!(a["config"]["n"], 75);
    assert_eq!(
        std::fs::read(first.join("protocols.csv")).unwrap(),
        std::fs::read(second.join("protocols.csv")).unwrap()
    );
    let csv = std::fs::read_to_string(first.join("protocols.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn invalid_inputs_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = rydgate(&["info", "--omega-max-mhz=-3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MHz"));
    let o = rydgate(&["info", "--laser-axis", "y"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let cfg = dir.path().join("c.json");
    write(&cfg, r#"{"ratio": 2.1, "r_um": 20.0}"#);
    let o = rydgate(&["info", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn info_prints_derived_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let o = rydgate(&["info", "--r-um", "20"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let j = v["derived"]["j_2pi_mhz"].as_f64().unwrap();
    assert!((j - 4.5875).abs() < 1e-3, "{j}");
    assert!(v["config"]["ratio"].is_null());
}

#[test]
fn data_table_can_be_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("species.json");
    write(&table, "not json");
    let o = Command::new(env!("CARGO_BIN_EXE_rydgate"))
        .args(["info"])
        .env("RYDGATE_DATA", &table)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}
