use std::f64::consts::PI;
use std::sync::Arc;

use klplate::analytic::{mms_boundary, mms_forcing_spec, mms_w, mms_wt, standing_wave, supported_omega};
use klplate::fdops::{BcKind, BoundarySpec, Field, PlateParams};
use klplate::mesh::build_rectangle;
use klplate::stability::stable_dt;
use klplate::stepper::{run, InitialConditions, Scheme, Simulation, SimulationConfig};
use klplate::PlateError;

fn mms_params() -> PlateParams {
    PlateParams { rho_h: 1.0, k0: 2.0, tension: 1.0, d: 0.01, k1: 5.0, t1: 0.1, nu: 0.1 }
}

fn mms_config(scheme: Scheme, n: usize, t_end: f64, dt: f64) -> SimulationConfig {
    let p = mms_params();
    let m = build_rectangle(-1.0, 1.0, -1.0, 1.0, n, n).unwrap();
    let mut cfg = SimulationConfig::new(p, m, mms_boundary(&m, BcKind::Clamped, p.nu), scheme, t_end);
    cfg.forcing = mms_forcing_spec(&p);
    cfg.dt = Some(dt);
    cfg
}

fn mms_initial() -> InitialConditions {
    InitialConditions::Functions { w0: Arc::new(|x, y| mms_w(x, y, 0.0)), v0: Arc::new(|x, y| mms_wt(x, y, 0.0)) }
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.physical().iter().zip(b.physical()).fold(0.0, |s, (x, y)| s.max((x - y).abs()))
}

/// Self-convergence in time on a fixed mesh: the spatial error cancels
/// against a fine-step reference.
fn temporal_ratios(scheme: Scheme, dt0: f64) -> (f64, f64) {
    let t_end = 0.2;
    let n = 13;
    let finals: Vec<Field> = [1.0, 2.0, 4.0, 32.0].iter().map(|k| run(mms_config(scheme, n, t_end, dt0 / k), &mms_initial()).unwrap().final_state.w).collect();
    let e: Vec<f64> = finals[..3].iter().map(|f| max_diff(f, &finals[3])).collect();
    (e[0] / e[1], e[1] / e[2])
}

#[test]
fn pc22_is_second_order_in_time() {
    let p = mms_params();
    let m = build_rectangle(-1.0, 1.0, -1.0, 1.0, 13, 13).unwrap();
    // at the stability limit the stiffest modes are not yet asymptotic
    let dt = 0.2 / (0.2 / stable_dt(&p, &m, 0.9).unwrap() * 4.0).ceil();
    let (r1, r2) = temporal_ratios(Scheme::Pc22, dt);
    assert!((r1 - 4.0).abs() < 0.5 && (r2 - 4.0).abs() < 0.5, "ratios {r1} {r2}");
}

#[test]
fn nb2_is_second_order_in_time() {
    let (r1, r2) = temporal_ratios(Scheme::Nb2, 0.02);
    assert!((r1 - 4.0).abs() < 0.5 && (r2 - 4.0).abs() < 0.5, "ratios {r1} {r2}");
}

fn supported_square(n: usize, p: PlateParams, scheme: Scheme, t_end: f64) -> SimulationConfig {
    let m = build_rectangle(0.0, 1.0, 0.0, 1.0, n, n).unwrap();
    SimulationConfig::new(p, m, BoundarySpec::uniform(&m, BcKind::Supported), scheme, t_end)
}

fn wave_initial(p: PlateParams) -> InitialConditions {
    InitialConditions::Functions { w0: Arc::new(move |x, y| standing_wave(1, 2, x, y, 0.0, 1.0, 1.0, &p)), v0: Arc::new(|_, _| 0.0) }
}

#[test]
fn nb2_conserves_energy_at_large_steps() {
    let p = PlateParams { rho_h: 1.0, k0: 1.0, tension: 0.5, d: 0.01, k1: 0.0, t1: 0.0, nu: 0.3 };
    let cfg = supported_square(21, p, Scheme::Nb2, 5.0);
    let mut sim = Simulation::new(cfg).unwrap();
    assert!(sim.dt() > 10.0 * stable_dt(&p, sim.mesh(), 0.9).unwrap());
    let mut s = sim.startup(&wave_initial(p)).unwrap();
    let e0 = sim.energy(&s);
    for _ in 0..sim.n_steps() {
        sim.step(&mut s).unwrap();
    }
    let e1 = sim.energy(&s);
    assert!((e1 - e0).abs() <= 1e-9 * e0, "{e0} -> {e1}");
}

#[test]
fn damping_never_adds_energy() {
    let p = PlateParams { rho_h: 1.0, k0: 1.0, tension: 0.5, d: 0.01, k1: 0.3, t1: 0.01, nu: 0.3 };
    for scheme in [Scheme::Pc22, Scheme::Nb2] {
        let mut sim = Simulation::new(supported_square(15, p, scheme, 1.0)).unwrap();
        let mut s = sim.startup(&wave_initial(p)).unwrap();
        let mut e = sim.energy(&s);
        let e0 = e;
        for _ in 0..sim.n_steps() {
            sim.step(&mut s).unwrap();
            let next = sim.energy(&s);
            assert!(next <= e * (1.0 + 1e-10), "{scheme:?}: {e} -> {next}");
            e = next;
        }
        assert!(e < 0.9 * e0, "{scheme:?} decayed only to {e} from {e0}");
    }
}

#[test]
fn rest_stays_at_rest() {
    let p = PlateParams::bending(1.0, 0.1, 0.3);
    for scheme in [Scheme::Pc22, Scheme::Nb2] {
        let mut cfg = supported_square(11, p, scheme, 0.5);
        cfg.probes = vec![[0.3, 0.4]];
        let out = run(cfg, &InitialConditions::Zero).unwrap();
        assert!(out.final_state.w.values.iter().all(|&v| v == 0.0));
        assert!(out.probes[0].w.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn oversized_pc22_step_aborts() {
    let p = PlateParams::bending(1.0, 1.0, 0.3);
    let mut cfg = supported_square(15, p, Scheme::Pc22, 1.0);
    cfg.csf = Some(3.0);
    match run(cfg, &wave_initial(p)) {
        Err(PlateError::Instability { step, norm, .. }) => {
            assert!(step > 0);
            assert!(norm > 1e10 || norm.is_nan());
        }
        other => panic!("expected instability, got {:?}", other.map(|o| o.diagnostics)),
    }
}

#[test]
fn standing_wave_probe_converges() {
    let p = PlateParams::bending(1.0, 0.01, 0.3);
    let t_end = 2.0 * PI / supported_omega(1, 2, 1.0, 1.0, &p) * 0.75;
    let probe = [0.2, 0.1];
    let mut errs = Vec::new();
    for n in [21, 41] {
        let mut cfg = supported_square(n, p, Scheme::Nb2, t_end);
        cfg.probes = vec![probe];
        cfg.dt_max = Some(t_end / 400.0);
        let out = run(cfg, &wave_initial(p)).unwrap();
        let err =
            out.times.iter().zip(&out.probes[0].w).map(|(&t, &w)| (w - standing_wave(1, 2, probe[0], probe[1], t, 1.0, 1.0, &p)).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[1] < 5e-3, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}
