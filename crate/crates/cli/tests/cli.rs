use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use skewcmv_cli::{Cli, ExperimentConfig};

fn skewcmv(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewcmv"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = skewcmv(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_column(p: &Path, col: usize) -> Vec<f64> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn free_spectrum_is_equally_spaced() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["spectrum", "--source", "constant", "--lambda", "0", "--n", "8"]);
    let angles = csv_column(&dir.path().join("spectrum_n8.csv"), 1);
    assert_eq!(angles.len(), 8);
    for w in angles.windows(2) {
        assert!((w[1] - w[0] - 0.125).abs() < 1e-12, "{angles:?}");
    }
    let j = read_json(&dir.path().join("spectrum.json"));
    assert_eq!(j["config"]["command"], "spectrum");
    assert!(j["results"][0]["root_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["gaps", "--n", "60,90", "--lambda", "0.4,0.2", "--gnuplot"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 5, "{names:?}");
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert_eq!(x, y, "{n:?} differs");
    }
}

#[test]
fn usage_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["spectrum", "--lambda", "1.5"],
        &["spectrum", "--source", "nonsense"],
        &["wegner", "--arc", "0.1"],
        &["lyapunov", "--source", "constant"],
    ];
    for args in cases {
        let o = skewcmv(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn experiment_config_round_trips() {
    let cli = Cli::try_parse_from(["skewcmv", "green-scan", "--k", "3", "--lambda", "0.9", "--z", "-0.2", "--rate", "0.1"]).unwrap();
    let cfg = ExperimentConfig::new(&cli.command).unwrap();
    let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
    assert!(cfg.resolved_source.is_some());
}

#[test]
fn rational_weyl_sums_stay_bounded() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["weyl", "--omega", "0.25", "--n", "64,256,1024"]);
    let lin = csv_column(&dir.path().join("weyl.csv"), 1);
    let quad = csv_column(&dir.path().join("weyl.csv"), 2);
    // e(n/4) sums over full periods vanish; e(n²/4) cycles 1, i, 1, i
    for v in lin {
        assert!(v < 1e-9, "{v}");
    }
    for (q, l) in quad.iter().zip([64.0, 256.0, 1024.0]) {
        assert!((q - l / 2.0 * 2f64.sqrt()).abs() < 1e-6, "{q}");
    }
    let j = read_json(&dir.path().join("weyl.json"));
    assert!(j["results"]["sup_loglog_slope"].as_f64().unwrap() > 0.9);
}

#[test]
fn cubic_gap_statistics_are_poissonian() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gaps", "--k", "3", "--n", "400"]);
    let j = read_json(&dir.path().join("gaps.json"));
    let ks = j["results"][0]["ks_exp1"].as_f64().unwrap();
    assert!(ks < 0.1, "KS {ks}");
}

#[test]
fn small_laplace_comparison() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["laplace", "--n", "100,200"]);
    let diffs = csv_column(&dir.path().join("laplace.csv"), 3);
    assert_eq!(diffs.len(), 2);
    for d in diffs {
        assert!(d.is_finite() && d < 0.1, "{d}");
    }
}

#[test]
fn recurrence_and_lyapunov_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["recurrence", "--n", "20000", "--eps", "0.1", "--delta", "0.1"]);
    let j = read_json(&dir.path().join("recurrence.json"));
    let row = &j["results"]["rows"][0];
    assert!(row["count"].as_u64().unwrap() as f64 <= row["bound"].as_f64().unwrap());
    assert!(j["results"]["diophantine_constant"].as_f64().unwrap() > 0.0);

    ok(dir.path(), &["lyapunov", "--n", "2000", "--grid", "8", "--lambda", "0.9", "--trace"]);
    let rel = csv_column(&dir.path().join("lyapunov.csv"), 4);
    assert!(rel[0] < 0.05, "{rel:?}");
    assert!(dir.path().join("lyapunov_trace.csv").exists());
}
