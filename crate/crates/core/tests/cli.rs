use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(format!("{name}.toml"))
}

fn varigeo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varigeo"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn run(sub: &str, name: &str, extra: &[&str]) -> (i32, Value, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let path = problem(name);
    let mut args = vec![sub, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = varigeo(&args, dir.path());
    let code = out.status.code().unwrap();
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json, dir)
}

fn stage<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["stages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["stage"] == name)
        .unwrap_or_else(|| panic!("no stage {name}"))
}

#[test]
fn exit_codes() {
    let cases = [
        ("derive", "cocontact_hamiltonian", 0),
        ("derive", "harmonic_oscillator", 0),
        ("derive", "time_dependent", 5),
        ("derive", "missing_time", 2),
        ("classify", "missing_time", 2),
        ("verify", "damped_oscillator", 0),
        ("verify", "corrupted", 7),
        ("integrate", "action_dependent_unpinned", 6),
        ("integrate", "cocontact_hamiltonian", 2),
    ];
    for (sub, name, want) in cases {
        let (code, json, _dir) = run(sub, name, &[]);
        assert_eq!(code, want, "{sub} {name}");
        if !json.is_null() {
            assert_eq!(json["exit_code"], want);
        }
    }
}

#[test]
fn inconsistent_still_reports() {
    let (code, json, _dir) = run("derive", "time_dependent", &[]);
    assert_eq!(code, 5);
    let d = &stage(&json, "lagrangian")["dynamics"];
    assert_eq!(d["verdict"], "inconsistent");
    assert!(d["witness"].as_str().unwrap().contains("0 = "));
}

#[test]
fn derive_is_deterministic_and_echoes_seed() {
    let path = problem("damped_oscillator");
    let dir = tempfile::tempdir().unwrap();
    let args = ["derive", path.to_str().unwrap(), "--seed", "17", "--trials", "5"];
    let a = varigeo(&args, dir.path());
    let b = varigeo(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let json: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(json["seed"], 17);
    assert_eq!(json["trials"], 5);
    assert_eq!(json["tool"], "varigeo");
}

#[test]
fn cocontact_field_components() {
    let (_, json, _dir) = run("derive", "cocontact_hamiltonian", &[]);
    let d = &stage(&json, "cocontact_hamiltonian")["dynamics"];
    assert_eq!(d["verdict"], "unique");
    let comps: Vec<(String, String)> = d["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["coordinate"].as_str().unwrap().into(),
                c["value"].as_str().unwrap().into(),
            )
        })
        .collect();
    assert_eq!(comps[0], ("t".into(), "1".into()));
    assert_eq!(comps[1], ("q".into(), "D(H, p)".into()));
}

#[test]
fn classify_flags() {
    let (code, json, _dir) = run("classify", "action_dependent", &[]);
    assert_eq!(code, 0);
    let s = &stage(&json, "classify")["structure"];
    assert_eq!(s["contact_reeb"]["exists"], false);
    assert_eq!(s["lcs"]["holds"], true);
    assert_eq!(s["hessian"]["regular"], false);

    let (_, json, _dir) = run("classify", "split_action", &[]);
    let pm = &stage(&json, "classify")["structure"]["premulticontact"];
    assert_eq!(pm["sufficient"]["exists"], false);
    assert_eq!(pm["surface_reeb"]["field"], "-∂qb");
}

#[test]
fn integrate_writes_csv() {
    let (code, json, dir) = run("integrate", "action_dependent", &[]);
    assert_eq!(code, 0, "{json}");
    let csv = dir.path().join("action_dependent.csv");
    let mut rd = csv::Reader::from_path(&csv).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..4], ["t", "q", "v", "s"]);
    for row in rd.records() {
        let row = row.unwrap();
        let t: f64 = row[0].parse().unwrap();
        let s: f64 = row[3].parse().unwrap();
        assert!((s - t.exp()).abs() <= 1e-6 * t.exp(), "t = {t}, s = {s}");
    }
    let sf = json["integration"]["final_state"]["s"].as_f64().unwrap();
    assert!((sf / 10f64.exp() - 1.0).abs() < 1e-5);
}

#[test]
fn integrate_csv_flag_and_monitors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("damped.csv");
    let (code, json, _cwd) = run("integrate", "damped_oscillator", &["--csv", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.exists());
    for m in json["integration"]["monitors"].as_array().unwrap() {
        let name = m["name"].as_str().unwrap();
        let v = m["max_abs"].as_f64().unwrap();
        if name == "sigma_t" || name.starts_with("drift_") || name == "power_balance" {
            assert!(v < 1e-8, "{name} = {v}");
        }
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let path = problem("skinner_rusk");
    let o = varigeo(
        &["verify", path.to_str().unwrap(), "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success());
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(json["verification"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"] == true));
}
