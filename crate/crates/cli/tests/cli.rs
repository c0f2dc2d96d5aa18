use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn epps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epps"))
        .args(args)
        .output()
        .expect("spawn epps")
}

fn run_noh(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--mode",
        "simulate-noh",
        "--c",
        "0.4",
        "--mu1",
        "15",
        "--mu2",
        "25",
        "--steps",
        "100000",
        "--dts",
        "60..600:180",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    epps(&args)
}

fn curve(dir: &Path) -> String {
    fs::read_to_string(dir.join("curve.csv")).unwrap()
}

#[test]
fn simulate_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_noh(dir.path(), &["--save-ticks"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["curve.csv", "curve.json", "manifest.json", "ticks.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    for dt in [60, 240, 420, 600] {
        assert!(dir.path().join(format!("overlap_{dt}.csv")).exists());
    }
    let text = curve(dir.path());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("dt,plain,compensated,filtered,n_used"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn manifest_rerun_reproduces_outputs() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    assert!(run_noh(first.path(), &[]).status.success());
    let manifest = first.path().join("manifest.json");
    let out = epps(&[
        "run",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        second.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for entry in fs::read_dir(first.path()).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "manifest.json" {
            continue;
        }
        assert_eq!(
            fs::read(first.path().join(&name)).unwrap(),
            fs::read(second.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn config_file_equals_flags() {
    let flags = tempfile::tempdir().unwrap();
    let cfg = tempfile::tempdir().unwrap();
    assert!(run_noh(flags.path(), &[]).status.success());
    let json = r#"{
        "mode": "simulate-noh", "seed": 3,
        "noh": {"c": 0.4, "n_steps": 100000},
        "mu": [15, 25],
        "dts": [60, 240, 420, 600],
        "output_dir": "ignored"
    }"#;
    let path = cfg.path().join("config.json");
    fs::write(&path, json).unwrap();
    let out_dir = cfg.path().join("out");
    let out = epps(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(curve(flags.path()), curve(&out_dir));
}

#[test]
fn from_file_on_simulated_ticks() {
    let sim = tempfile::tempdir().unwrap();
    assert!(run_noh(sim.path(), &["--save-ticks"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let ticks = sim.path().join("ticks.csv");
    let out = epps(&[
        "run",
        "--mode",
        "from-file",
        "--ticks",
        ticks.to_str().unwrap(),
        "--dts",
        "300,600,1200,2400",
        "--symbols",
        "S2,S1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = curve(dir.path());
    assert_eq!(text.lines().count(), 5);
    assert!(!text.contains("NaN"), "{text}");
}

#[test]
fn invalid_parameter_is_usage_error_naming_field() {
    let out = epps(&["run", "--mode", "simulate-noh", "--c", "1.5", "--dts", "60"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`c`"));

    let out = epps(&["run", "--mode", "from-file", "--dts", "60"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ticks"));

    let out = epps(&["run", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));

    let out = epps(&["run", "--mode", "simulate-noh", "--dts", "60..x"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let out = epps(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("run"));
}

#[test]
fn total_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let ticks = dir.path().join("flat.csv");
    // constant prices: every estimator is degenerate
    fs::write(
        &ticks,
        "symbol,time,price\nA,0,10\nA,50,10\nA,100,10\nB,0,5\nB,70,5\nB,100,5\n",
    )
    .unwrap();
    let out = epps(&[
        "run",
        "--mode",
        "from-file",
        "--ticks",
        ticks.to_str().unwrap(),
        "--dts",
        "10,20",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(curve(&dir.path().join("out")).contains("NaN"));
}
