use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn klplate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_klplate")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run_config(mesh_grid: usize) -> Value {
    json!({
        "experiment": "run",
        "mesh": {"kind": "rectangle", "x0": 0, "x1": 1, "y0": 0, "y1": 1, "grid": mesh_grid},
        "params": {"rho_h": 1, "d": 1, "nu": 0.3},
        "boundary": {"default": "supported"},
        "initial": {"kind": "standing_wave", "m": 1, "n": 2},
        "scheme": "nb2",
        "t_end": 0.05,
        "probes": [[0.2, 0.1]],
        "output": {"snapshot_every": 10}
    })
}

fn probe_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn zero_run_records_zeros() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/zero.json");
    let o = klplate(&["run", "--config", cfg, "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let rows = probe_rows(&out.join("probes.csv"));
    assert!(rows.len() > 2);
    assert!(rows.iter().all(|r| r[1..].iter().all(|&v| v == 0.0)));
}

#[test]
fn runs_are_deterministic_and_stamped() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "run.json", &run_config(16));
    let dirs: Vec<PathBuf> = (0..2).map(|k| tmp.path().join(format!("o{k}"))).collect();
    for d in &dirs {
        let o = klplate(&["run", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--quiet"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "probes.csv"));
    assert!(names.iter().any(|n| n.to_string_lossy().ends_with(".vtk")));
    for n in &names {
        let a = fs::read(dirs[0].join(n)).unwrap();
        let text = String::from_utf8(a.clone()).unwrap();
        let name = n.to_string_lossy();
        if name.ends_with(".csv") {
            assert!(text.starts_with("# config: {"), "{name}");
            assert!(text.lines().nth(1).unwrap().starts_with("# config-sha256: "), "{name}");
        } else if name.ends_with(".vtk") {
            assert!(text.lines().nth(1).unwrap().contains("config-sha256="), "{name}");
        } else {
            assert!(text.contains("\"experiment\""), "{name}");
        }
        if name != "diagnostics.json" {
            // diagnostics carry the wall-clock time
            assert_eq!(a, fs::read(dirs[1].join(n)).unwrap(), "{name} differs between runs");
        }
    }
}

#[test]
fn standing_wave_probe_tracks_the_exact_solution() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = run_config(40);
    cfg["dt_max"] = json!(2e-4);
    let cfg = write_config(tmp.path(), "run.json", &cfg);
    let out = tmp.path().join("o");
    let o = klplate(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let omega = std::f64::consts::PI.powi(2) * 5.0;
    let shape = (std::f64::consts::PI * 0.2).sin() * (2.0 * std::f64::consts::PI * 0.1).sin();
    for r in probe_rows(&out.join("probes.csv")) {
        let exact = shape * (omega * r[0]).cos();
        assert!((r[1] - exact).abs() < 2e-3, "t={} {} vs {exact}", r[0], r[1]);
    }
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();

    let mut bad = run_config(16);
    bad["t_ending"] = json!(1.0);
    let p = write_config(tmp.path(), "bad.json", &bad);
    assert_eq!(klplate(&["run", "--config", p.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    let missing = tmp.path().join("nope.json");
    assert_eq!(klplate(&["run", "--config", missing.to_str().unwrap(), "--out", out]).status.code(), Some(1));

    let mut cfg = run_config(16);
    cfg["scheme"] = json!("pc22");
    cfg["t_end"] = json!(0.5);
    let p = write_config(tmp.path(), "unstable.json", &cfg);
    let o = klplate(&["run", "--config", p.to_str().unwrap(), "--out", out, "--csf", "4"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let chladni = json!({
        "experiment": "chladni",
        "mesh": {"kind": "rectangle", "x0": 0, "x1": 0.24, "y0": 0, "y1": 0.24, "grid": 12},
        "params": {"rho_h": 1, "d": 1, "nu": 0.3},
        "boundary": {"default": "free", "pins": [[0.12, 0.12]]},
        "forcing": {"kind": "sinusoid", "f0": 1, "frequency_hz": 1, "region": [0.11, 0.13, 0.11, 0.13]},
        "scheme": "nb2",
        "t_end": 0.01,
        "study": {"modes": 4, "target_hz": 0.0}
    });
    let p = write_config(tmp.path(), "chladni.json", &chladni);
    let o = klplate(&["chladni", "--config", p.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn single_grid_study_reports_no_order() {
    let tmp = TempDir::new().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/mms_square_clamped.json");
    let out = tmp.path().join("o");
    let o = klplate(&["mms", "--config", cfg, "--out", out.to_str().unwrap(), "--grid", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("n/a"), "{text}");
}

#[test]
fn eigs_recovers_supported_square_frequencies() {
    let tmp = TempDir::new().unwrap();
    let cfg = json!({
        "experiment": "eigs",
        "mesh": {"kind": "rectangle", "x0": 0, "x1": 1, "y0": 0, "y1": 1, "grid": 40},
        "params": {"rho_h": 1, "d": 1, "nu": 0.3},
        "boundary": {"default": "supported"},
        "t_end": 0,
        "study": {"modes": 3, "eig_tol": 1e-10}
    });
    let p = write_config(tmp.path(), "eigs.json", &cfg);
    let out = tmp.path().join("o");
    let o = klplate(&["eigs", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("modes.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
    let fcol = cols.iter().position(|c| *c == "frequency").expect("frequency column");
    let freqs: Vec<f64> = lines.map(|l| l.split(',').nth(fcol).unwrap().parse().unwrap()).collect();
    // continuum: (pi/2) (m^2 + n^2) for D = rho_h = 1 on the unit square
    let exact = [1.0, 2.5, 2.5].map(|s: f64| std::f64::consts::PI * s);
    for (f, e) in freqs.iter().zip(exact) {
        assert!((f - e).abs() < 2e-3 * e, "{f} vs {e}");
    }
    assert!(out.join("mode_001.vtk").exists());
}
