use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fdde-stab"));
    c.env_remove("FDDE_STAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let mut all = args.to_vec();
    all.extend(["--out", &path]);
    let out = run(&all);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

#[test]
fn classify_reports_susu_with_critical_delays() {
    let v = json(&[
        "classify", "--alpha", "0.4", "--k", "4.62", "--gamma", "3.69",
    ]);
    assert_eq!(v["kind"], "classification");
    assert_eq!(v["tag"], "SUSU");
    let got: Vec<f64> = v["critical_delays"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    for (g, w) in got.iter().zip([0.0560, 0.2925, 0.4344]) {
        assert!((g - w).abs() < 5e-3, "{got:?}");
    }
    assert_eq!(got.len(), 3);
    assert_eq!(v["config"]["k"], 4.62);
    assert_eq!(v["config"]["command"], "classify");
}

#[test]
fn negative_arguments_parse() {
    let v = json(&[
        "classify", "--alpha", "0.4", "--k", "0.23", "--gamma", "-0.12",
    ]);
    assert_eq!(v["tag"], "USU");
}

#[test]
fn tau_plane_summary_values() {
    let v = json(&[
        "tau-plane",
        "--alpha",
        "0.4",
        "--k",
        "1.02",
        "--gamma",
        "0.3",
        "--v-samples",
        "800",
    ]);
    assert_eq!(v["kind"], "boundary");
    assert!((v["tau2a_star"].as_f64().unwrap() - 1.16102).abs() < 1e-3);
    let min = v["tau2_min"]["tau2"].as_f64().unwrap();
    let all_min = v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["tau2"].as_f64().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(min <= all_min && min > 0.9);
    assert_eq!(v["config"]["v_samples"], 800);
}

#[test]
fn simulate_first_order_decay() {
    let v = json(&[
        "simulate",
        "--alpha",
        "1",
        "--k",
        "0",
        "--gamma",
        "1",
        "--horizon",
        "5",
        "--phi",
        "1",
    ]);
    let times = v["times"].as_array().unwrap();
    let values = v["values"].as_array().unwrap();
    assert_eq!(times.len(), values.len());
    for (t, x) in times.iter().zip(values) {
        let (t, x) = (t.as_f64().unwrap(), x.as_f64().unwrap());
        assert!((x - (-t).exp()).abs() < 1e-3);
    }
    assert_eq!(v["verdict"], "Stable");
}

#[test]
fn csv_carries_provenance_and_columns() {
    let out = run(&[
        "simulate",
        "--alpha",
        "0.5",
        "--k",
        "1",
        "--gamma",
        "2",
        "--tau2",
        "0.5",
        "--horizon",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# kind: trajectory"));
    let config: Value =
        serde_json::from_str(lines.next().unwrap().strip_prefix("# config: ").unwrap()).unwrap();
    assert_eq!(config["tau2"], 0.5);
    assert!(lines.next().unwrap().starts_with("# summary: "));
    assert_eq!(lines.next(), Some("t,x"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "tau-plane",
        "--alpha",
        "0.4",
        "--k",
        "1.02",
        "--gamma",
        "0.3",
        "--v-samples",
        "400",
        "--format",
        "csv",
    ];
    let a = write_to(dir.path(), "a.csv", &args);
    let b = write_to(dir.path(), "b.csv", &args);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = [
        "classify", "--alpha", "0.4", "--k", "9.8", "--gamma", "10.56",
    ];
    let one = bin()
        .args(args)
        .env("FDDE_STAB_THREADS", "1")
        .output()
        .unwrap();
    let two = bin()
        .args(args)
        .env("FDDE_STAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, two.stdout);
    let bad = bin()
        .args(args)
        .env("FDDE_STAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(64));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(64));
    assert_eq!(run(&["classify", "--alpha", "0.4"]).status.code(), Some(64));
    assert_eq!(
        run(&["classify", "--alpha", "x", "--k", "1", "--gamma", "0.5"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(run(&["hopf", "--alpha", "0.4"]).status.code(), Some(64));
    let domain = run(&["classify", "--alpha", "1.5", "--k", "1", "--gamma", "0.5"]);
    assert_eq!(domain.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&domain.stderr).contains("alpha"));
    // Stable for every delay: no Hopf delay, still a success.
    assert_eq!(
        run(&["hopf", "--alpha", "0.5", "--a", "-2", "--b", "-1"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["verify", "--input", "/nonexistent/artifact.json"])
            .status
            .code(),
        Some(66)
    );
}

#[test]
fn hopf_from_coefficients() {
    let v = json(&["hopf", "--alpha", "0.4", "--a", "1.4", "--b", "-2"]);
    assert_eq!(v["tag"], "Ssr");
    assert!(v["hopf_delay"].as_f64().unwrap() > 0.0);
    let from_model = json(&[
        "hopf", "--alpha", "0.4", "--k", "2", "--gamma", "0.6", "--tau2", "0.1",
    ]);
    assert!((from_model["a"].as_f64().unwrap() - 1.4).abs() < 1e-12);
}

#[test]
fn curves_emit_both_families() {
    let v = json(&[
        "curves",
        "--alpha",
        "0.4",
        "--k-min",
        "0.5",
        "--k-max",
        "6",
        "--samples",
        "12",
    ]);
    let ids: Vec<&str> = v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["curve_id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"h1") && ids.contains(&"h2"), "{ids:?}");
}

#[test]
fn verify_classification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let art = write_to(
        dir.path(),
        "c.csv",
        &[
            "classify", "--alpha", "0.4", "--k", "4.62", "--gamma", "3.69", "--format", "csv",
        ],
    );
    let v = json(&["verify", "--input", &art]);
    assert_eq!(v["passed"], true);
    assert_eq!(v["artifact_kind"], "classification");
    let sims = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["check"] == "simulation")
        .count();
    assert_eq!(sims, 4);
}

#[test]
fn verify_slice_passes_three_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let art = write_to(
        dir.path(),
        "s.json",
        &[
            "slice",
            "--alpha",
            "0.4",
            "--k",
            "1.02",
            "--gamma",
            "0.3",
            "--tau2",
            "1.1",
            "--v-samples",
            "800",
        ],
    );
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&art).unwrap()).unwrap();
    assert_eq!(s["intervals"].as_array().unwrap().len(), 3);
    let v = json(&["verify", "--input", &art]);
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 6);
}

#[test]
fn verify_empty_boundary_passes_vacuously() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    std::fs::write(
        &path,
        r#"{"kind":"boundary","config":{"command":"tau-plane","alpha":0.4,"k":1.02,"gamma":0.3},"points":[]}"#,
    )
    .unwrap();
    let v = json(&["verify", "--input", path.to_str().unwrap()]);
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 0);
}

#[test]
fn verify_flags_corrupted_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let art = write_to(
        dir.path(),
        "b.csv",
        &[
            "tau-plane",
            "--alpha",
            "0.4",
            "--k",
            "1.02",
            "--gamma",
            "0.3",
            "--v-samples",
            "200",
            "--format",
            "csv",
        ],
    );
    let good = run(&["verify", "--input", &art]);
    assert_eq!(good.status.code(), Some(0));
    let text = std::fs::read_to_string(&art).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let last = lines.len() - 1;
    let mut cols: Vec<String> = lines[last].split(',').map(str::to_string).collect();
    cols[2] = format!("{}", cols[2].parse::<f64>().unwrap() + 0.1);
    lines[last] = cols.join(",");
    std::fs::write(&art, lines.join("\n")).unwrap();
    let bad = run(&["verify", "--input", &art]);
    assert_eq!(bad.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(report["failed"], 1);
}

#[test]
fn verify_rejects_malformed_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.json");
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(
        run(&["verify", "--input", path.to_str().unwrap()])
            .status
            .code(),
        Some(66)
    );
}
