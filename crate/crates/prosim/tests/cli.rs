use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_prosim");

fn prosim(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(dir)
        .current_dir(dir)
        .env_remove("PROSIM_CONFIG")
        .env("RUST_LOG", "off")
        .output()
        .expect("spawn prosim")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn digest(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

const PROFILE: &str = r#"[
  {"channel":"biceps","segments":[{"t0":1,"t1":4,"u":0.3},{"t0":4,"t1":7,"u":0.6},{"t0":7,"t1":10,"u":0.8}]},
  {"channel":"triceps","segments":[{"t0":1,"t1":4,"u":0.05},{"t0":4,"t1":7,"u":0.15},{"t0":7,"t1":10,"u":0.1}]}
]"#;

fn synth_recording(dir: &Path) -> PathBuf {
    write(dir, "profile.json", PROFILE);
    let o = prosim(dir, &["synth", "profile.json", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("semg.csv")
}

#[test]
fn synth_then_condition_row_counts() {
    let dir = TempDir::new().unwrap();
    let rec = synth_recording(dir.path());
    assert_eq!(rows(&rec), 10_000);
    let o = prosim(dir.path(), &["condition", "semg.csv"]);
    assert_eq!(code(&o), 0);
    let env = dir.path().join("envelopes.csv");
    assert_eq!(rows(&env), 10_000 - 500);
    let header = std::fs::read_to_string(&env)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, "t_ms,biceps_env,triceps_env,trapezius_env,pectoralis_env");
}

#[test]
fn synth_is_seed_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    for d in [&a, &b] {
        synth_recording(d.path());
    }
    write(c.path(), "profile.json", PROFILE);
    assert_eq!(code(&prosim(c.path(), &["synth", "profile.json", "--seed", "6"])), 0);
    let h = |d: &TempDir| digest(&d.path().join("semg.csv"));
    assert_eq!(h(&a), h(&b));
    assert_ne!(h(&a), h(&c));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(
        d,
        "bad.json",
        r#"[{"channel":"biceps","segments":[{"t0":0,"t1":1,"u":1.5}]}]"#,
    );
    write(d, "junk.json", "{not json");
    write(d, "short.csv", "t_ms,biceps_mV\n0,0.1\n");
    for args in [
        &["synth", "bad.json"][..],
        &["synth", "junk.json"],
        &["synth", "missing.json"],
        &["condition", "short.csv"],
        &["condition", "missing.csv"],
        &["simulate", "--scenario", "glass"],
        &["simulate", "--scenario", "egg", "--script", "nope"],
        &["characterize", "--noise", "-1"],
    ] {
        let o = prosim(d, args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn estimate_requires_calibration() {
    let dir = TempDir::new().unwrap();
    synth_recording(dir.path());
    assert_eq!(code(&prosim(dir.path(), &["estimate", "semg.csv"])), 2);
}

#[test]
fn calibrate_then_estimate() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth_recording(d);
    write(
        d,
        "protocol.json",
        r#"{"rest":{"t0_ms":500,"t1_ms":1000},"trials":[
            {"t0_ms":1000,"t1_ms":4000,"load_kg":0.5},
            {"t0_ms":4000,"t1_ms":7000,"load_kg":1.5},
            {"t0_ms":7000,"t1_ms":10000,"load_kg":2.5}]}"#,
    );
    let o = prosim(d, &["calibrate", "semg.csv", "protocol.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cal = json(&d.join("calibration.json"));
    assert_eq!(cal["kappa"].as_array().unwrap().len(), 1);
    assert!(cal["stiffness_scale"].as_f64().unwrap() > 0.0);
    let report = json(&d.join("calibration_report.json"));
    assert_eq!(report["n"], 3);

    let o = prosim(d, &["estimate", "semg.csv", "--calibration", "calibration.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let refs = d.join("references.csv");
    assert_eq!(rows(&refs), 10_000 - 500);
    let text = std::fs::read_to_string(&refs).unwrap();
    let floor = cal["stiffness_floor"].as_f64().unwrap();
    let top = floor + cal["stiffness_scale"].as_f64().unwrap();
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[2] >= floor - 1e-12 && v[2] <= top + 1e-12, "{line}");
    }
}

#[test]
fn single_load_calibration_exits_3() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth_recording(d);
    write(
        d,
        "protocol.json",
        r#"{"trials":[{"t0_ms":1000,"t1_ms":4000,"load_kg":1},{"t0_ms":4000,"t1_ms":7000,"load_kg":1}]}"#,
    );
    assert_eq!(code(&prosim(d, &["calibrate", "semg.csv", "protocol.json"])), 3);
}

#[test]
fn short_recording_fatigue_exits_4() {
    let dir = TempDir::new().unwrap();
    synth_recording(dir.path());
    let o = prosim(dir.path(), &["fatigue-fit", "semg.csv"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient"));
}

#[test]
fn characterize_writes_fits_and_plot() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let o = prosim(d, &["characterize", "--mode", "position", "--trials", "3", "--svg"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&d.join("summary.json"));
    assert_eq!(summary["mode"], "position");
    let levels = summary["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 3);
    for l in levels {
        let k = l["mean_slope"].as_f64().unwrap();
        assert!((k - 0.165).abs() < 0.0165, "{l}");
    }
    assert_eq!(rows(&d.join("fits.csv")), 9);
    assert!(rows(&d.join("samples.csv")) > 9);
    assert!(std::fs::read_to_string(d.join("force_deflection.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn simulate_is_byte_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let o = prosim(
            d.path(),
            &["simulate", "--scenario", "egg", "--script", "gentle", "--seed", "11"],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let t = |d: &TempDir| d.path().join("telemetry.jsonl");
    assert_eq!(digest(&t(&a)), digest(&t(&b)));
    assert_eq!(rows(&t(&a)) + 1, 3000);
    let summary = json(&a.path().join("summary.json"));
    assert_eq!(summary["outcome"], "holding");
    assert_eq!(summary["ticks"], 3000);
}

#[test]
fn simulate_accepts_a_script_file() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(
        d,
        "grip.json",
        r#"[{"channel":"trapezius","segments":[{"t0":0.2,"t1":3,"u":1}]}]"#,
    );
    let o = prosim(d, &["simulate", "--scenario", "rigid_block", "--script", "grip.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&d.join("summary.json"))["ticks"], 1500);
}

#[test]
fn config_file_and_env_fallback() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "profile.json", PROFILE);
    write(d, "seed7.toml", "[synth]\nseed = 7\n");
    write(d, "bad.toml", "[synth]\nsneed = 7\n");

    let run = |envcfg: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(BIN);
        c.args(["synth", "profile.json", "--out"])
            .arg(d)
            .args(extra)
            .current_dir(d);
        match envcfg {
            Some(p) => c.env("PROSIM_CONFIG", p),
            None => c.env_remove("PROSIM_CONFIG"),
        };
        let o = c.output().unwrap();
        (
            code(&o),
            if code(&o) == 0 {
                digest(&d.join("semg.csv"))
            } else {
                vec![]
            },
        )
    };
    let (c1, by_flag) = run(None, &["--seed", "7"]);
    let (c2, by_file) = run(None, &["--config", "seed7.toml"]);
    let (c3, by_env) = run(Some("seed7.toml"), &[]);
    let (c4, default) = run(None, &[]);
    assert_eq!((c1, c2, c3, c4), (0, 0, 0, 0));
    assert_eq!(by_flag, by_file);
    assert_eq!(by_flag, by_env);
    assert_ne!(by_flag, default);
    assert_eq!(run(Some("bad.toml"), &[]).0, 2);
    assert_eq!(run(None, &["--config", "missing.toml"]).0, 2);
}

#[test]
fn estimate_routes_channels() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let profile = prosim_core::SessionConfig::default().nominal_profile().unwrap();
    std::fs::write(d.join("calibration.json"), serde_json::to_string(&profile).unwrap()).unwrap();
    write(
        d,
        "profile.json",
        r#"[
          {"channel":"biceps","segments":[{"t0":3,"t1":6,"u":0.6}]},
          {"channel":"triceps","segments":[{"t0":3,"t1":6,"u":0.6}]},
          {"channel":"trapezius","segments":[{"t0":6,"t1":9,"u":0.8}]}
        ]"#,
    );
    assert_eq!(code(&prosim(d, &["synth", "profile.json"])), 0);
    let o = prosim(d, &["estimate", "semg.csv", "--calibration", "calibration.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(d.join("references.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t_ms,s_imcj,s_ref,theta_ref,c_fi");
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let floor = profile.stiffness_floor;
    let in_window = |t0: f64, t1: f64| rows.iter().filter(move |r| r[0] >= t0 && r[0] < t1);
    for r in in_window(0.0, 3000.0) {
        assert_eq!(r[2], floor, "rest at {} ms", r[0]);
        assert_eq!(r[3], 0.0);
    }
    for r in in_window(4000.0, 6000.0) {
        assert!(r[2] > floor + 0.4 * profile.stiffness_scale, "co-contraction at {} ms", r[0]);
        assert_eq!(r[3], 0.0);
    }
    for r in in_window(7500.0, 9000.0) {
        assert!(r[3] > 0.7 * profile.theta_range_rad[1], "trapezius at {} ms", r[0]);
        assert!(r[1] < 0.05, "stiffness channels at {} ms: {}", r[0], r[1]);
    }
}
