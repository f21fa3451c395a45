use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use klplate_ffi::*;
use serde_json::json;

fn wave_config() -> CString {
    let v = json!({
        "experiment": "run",
        "mesh": {"kind": "rectangle", "x0": 0, "x1": 1, "y0": 0, "y1": 1, "grid": 20},
        "params": {"rho_h": 1, "d": 1, "nu": 0.3},
        "boundary": {"default": "supported"},
        "initial": {"kind": "standing_wave", "m": 1, "n": 1},
        "scheme": "nb2",
        "dt_max": 1e-4,
        "t_end": 0.01
    });
    CString::new(v.to_string()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(klp_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn amplification_matches_known_values() {
    assert_eq!(klp_pc22_amplification(0.0, 0.0), 1.0);
    assert!(klp_pc22_amplification(0.0, 2.0) > 1.0);
    assert!(klp_pc22_amplification(-0.5, 0.5) < 1.0);
}

#[test]
fn stable_dt_and_errors() {
    let p = KlpPlateParams { rho_h: 1.0, k0: 0.0, tension: 0.0, d: 1.0, k1: 0.0, t1: 0.0, nu: 0.3 };
    let mut dt = 0.0;
    let s = unsafe { klp_stable_dt(&p, 0.0, 1.0, 0.0, 1.0, 21, 21, 0.9, &mut dt) };
    assert_eq!(s, KlpStatus::Ok);
    let mut dt2 = 0.0;
    unsafe { klp_stable_dt(&p, 0.0, 1.0, 0.0, 1.0, 41, 41, 0.9, &mut dt2) };
    assert!((dt / dt2 - 4.0).abs() < 0.2, "{dt} {dt2}");

    let s = unsafe { klp_stable_dt(ptr::null(), 0.0, 1.0, 0.0, 1.0, 21, 21, 0.9, &mut dt) };
    assert_eq!(s, KlpStatus::NullPointer);
    assert!(last_error().contains("params"));
    let s = unsafe { klp_stable_dt(&p, 0.0, 1.0, 0.0, 1.0, 3, 21, 0.9, &mut dt) };
    assert_eq!(s, KlpStatus::Config);
    let bad = KlpPlateParams { rho_h: -1.0, ..p };
    assert_ne!(unsafe { klp_stable_dt(&bad, 0.0, 1.0, 0.0, 1.0, 21, 21, 0.9, &mut dt) }, KlpStatus::Ok);
}

#[test]
fn simulation_lifecycle() {
    let cfg = wave_config();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { klp_simulation_from_json(cfg.as_ptr(), &mut sim) }, KlpStatus::Ok, "{}", last_error());
    assert!(!sim.is_null());
    let (mut n1, mut n2) = (0usize, 0usize);
    assert_eq!(unsafe { klp_simulation_grid_shape(sim, &mut n1, &mut n2) }, KlpStatus::Ok);
    assert_eq!((n1, n2), (21, 21));
    let dt = unsafe { klp_simulation_dt(sim) };
    assert!(dt > 0.0 && dt <= 1e-4);
    assert_eq!(unsafe { klp_simulation_advance(sim, 50) }, KlpStatus::Ok);
    let t = unsafe { klp_simulation_time(sim) };
    assert!((t - 50.0 * dt).abs() < 1e-12);

    let mut buf = vec![0.0; n1 * n2];
    assert_eq!(unsafe { klp_simulation_copy_displacement(sim, buf.as_mut_ptr(), 3) }, KlpStatus::OutOfRange);
    assert_eq!(unsafe { klp_simulation_copy_displacement(sim, buf.as_mut_ptr(), buf.len()) }, KlpStatus::Ok);
    let mut w = 0.0;
    assert_eq!(unsafe { klp_simulation_probe(sim, 0.5, 0.5, &mut w) }, KlpStatus::Ok);
    assert_eq!(w, buf[10 * n1 + 10]);
    let omega = 2.0 * std::f64::consts::PI.powi(2);
    assert!((w - (omega * t).cos()).abs() < 1e-2, "{w}");
    assert_eq!(unsafe { klp_simulation_probe(sim, 2.0, 0.5, &mut w) }, KlpStatus::OutOfRange);
    unsafe { klp_simulation_free(sim) };
    unsafe { klp_simulation_free(ptr::null_mut()) };
    assert!(unsafe { klp_simulation_time(ptr::null()) }.is_nan());
}

#[test]
fn bad_json_is_a_config_error() {
    let mut sim = ptr::null_mut();
    let cfg = CString::new("{\"experiment\": \"run\", \"bogus\": 1}").unwrap();
    assert_eq!(unsafe { klp_simulation_from_json(cfg.as_ptr(), &mut sim) }, KlpStatus::Config);
    assert!(sim.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { klp_simulation_from_json(ptr::null(), &mut sim) }, KlpStatus::NullPointer);
    let invalid = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { klp_simulation_from_json(invalid.as_ptr().cast(), &mut sim) }, KlpStatus::InvalidUtf8);
}

#[test]
fn modes_through_the_abi() {
    let cfg = wave_config();
    let mut modes = ptr::null_mut();
    assert_eq!(unsafe { klp_modes_solve_json(cfg.as_ptr(), 3, &mut modes) }, KlpStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { klp_modes_count(modes) }, 3);
    let mut f = 0.0;
    let mut lambda = 0.0;
    assert_eq!(unsafe { klp_modes_frequency(modes, 0, &mut f) }, KlpStatus::Ok);
    assert_eq!(unsafe { klp_modes_eigenvalue(modes, 0, &mut lambda) }, KlpStatus::Ok);
    assert!((f - std::f64::consts::PI).abs() < 1e-2 * std::f64::consts::PI, "{f}");
    assert!((lambda.sqrt() / (2.0 * std::f64::consts::PI) - f).abs() < 1e-12);
    assert_eq!(unsafe { klp_modes_frequency(modes, 3, &mut f) }, KlpStatus::OutOfRange);
    unsafe { klp_modes_free(modes) };
    assert_eq!(unsafe { klp_modes_count(ptr::null()) }, 0);
}

#[test]
fn status_messages_are_static() {
    for s in [KlpStatus::Ok, KlpStatus::Instability, KlpStatus::Panic] {
        let m = unsafe { CStr::from_ptr(klp_status_message(s)) };
        assert!(!m.to_bytes().is_empty());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/klplate.h");
    let src = format!(
        "#include \"{header}\"\nint main(void) {{ KlpPlateParams p = {{1, 0, 0, 1, 0, 0, 0.3}}; double dt; \
         return klp_stable_dt(&p, 0, 1, 0, 1, 9, 9, 0.9, &dt) == KLP_STATUS_OK ? 0 : 1; }}\n"
    );
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("t.c");
    std::fs::write(&c, src).unwrap();
    let Ok(o) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&c).output() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
