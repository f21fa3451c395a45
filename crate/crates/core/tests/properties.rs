use klplate::fdops::assemble::assemble_with;
use klplate::fdops::{apply_b, apply_k, BcKind, BoundarySpec, Closure, DataOrder, Field, PlateParams};
use klplate::mesh::{build_annulus, build_rectangle, Mesh};
use klplate::spectra::{estimate_order, find_peaks, power_spectrum, two_sided_power, Window};
use klplate::stability::{in_region, pc22_amplification, pc22_roots, stable_dt, SuperEllipse};
use klplate::stepper::{choose_dt, newmark_oscillator_step, pc22_dahlquist_step, NewmarkParams, Scheme, SimulationConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

fn kind_of(k: u8) -> BcKind {
    match k % 3 {
        0 => BcKind::Clamped,
        1 => BcKind::Supported,
        _ => BcKind::Free,
    }
}

fn mesh_of(annulus: bool, n1: usize, n2: usize) -> Mesh {
    if annulus {
        build_annulus(0.3, 1.0, n1, 4 * n2).unwrap()
    } else {
        build_rectangle(0.0, 1.0, -0.5, 0.25, n1, n2).unwrap()
    }
}

fn random_field(m: &Mesh, rng: &mut ChaCha8Rng) -> Field {
    let mut f = Field::zeros(m);
    for v in f.values.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    f
}

fn params() -> PlateParams {
    PlateParams { rho_h: 1.3, k0: 2.0, tension: 0.7, d: 0.05, k1: 0.4, t1: 0.02, nu: 0.3 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn index_round_trip(annulus: bool, n1 in 5usize..30, n2 in 5usize..30, a in 0usize..1000, b in 0usize..1000) {
        let m = mesh_of(annulus, n1, n2);
        let i1 = (a % (m.n1 + 4)) as isize - 2;
        let i2 = (b % (m.n2 + 4)) as isize - 2;
        prop_assert_eq!(m.unindex(m.index(i1, i2)), (i1, i2));
    }

    #[test]
    fn locate_recovers_grid_points(annulus: bool, n1 in 5usize..30, n2 in 5usize..30, a in 0usize..1000, b in 0usize..1000) {
        let m = mesh_of(annulus, n1, n2);
        let (i1, i2) = ((a % m.n1) as isize, (b % m.n2) as isize);
        let (x, y) = m.coords(i1, i2);
        let (s1, s2) = m.locate(x, y).expect("grid point inside");
        prop_assert!((s1 - i1 as f64).abs() < 1e-9);
        prop_assert!((s2 - i2 as f64).abs() < 1e-9);
    }

    #[test]
    fn wrap_is_exact(n1 in 5usize..15, n2 in 5usize..15, seed: u64) {
        let m = mesh_of(true, n1, n2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = random_field(&m, &mut rng);
        m.wrap_fill(&mut f.values);
        let n2 = m.n2 as isize;
        for i1 in -2..m.n1 as isize + 2 {
            for k in 1..=2 {
                prop_assert_eq!(f.get(i1, -k).to_bits(), f.get(i1, n2 - k).to_bits());
                prop_assert_eq!(f.get(i1, n2 - 1 + k).to_bits(), f.get(i1, k - 1).to_bits());
            }
        }
    }

    #[test]
    fn assembled_matches_matrix_free(annulus: bool, k: u8, seed: u64, c0 in 0.1f64..3.0, ck in 1e-4f64..0.1, cb in 0.0f64..1.0) {
        let m = mesh_of(annulus, 9, 7);
        let p = params();
        let closure = Closure::new(&m, &BoundarySpec::uniform(&m, kind_of(k)), p.nu).unwrap();
        let a = assemble_with(&p, &closure, c0, ck, cb);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = random_field(&m, &mut rng);
        closure.fill(&mut f.values, 0.0, DataOrder::Homogeneous).unwrap();
        let x = a.gather(&f.values);
        let mut y = vec![0.0; x.len()];
        a.matrix.matvec(&x, &mut y);
        let kf = apply_k(&p, &m, &f);
        let bf = apply_b(&p, &m, &f);
        let scale = ck * kf.max_abs() + cb * bf.max_abs() + c0;
        for (r, &idx) in a.layout.pde.iter().enumerate() {
            let want = c0 * f.values[idx] + ck * kf.values[idx] + cb * bf.values[idx];
            prop_assert!((y[r] - want).abs() <= 1e-12 * scale, "row {}: {} vs {}", r, y[r], want);
        }
    }

    #[test]
    fn ghost_fill_is_idempotent(annulus: bool, k: u8, seed: u64) {
        let m = mesh_of(annulus, 8, 8);
        let closure = Closure::new(&m, &BoundarySpec::uniform(&m, kind_of(k)), 0.3).unwrap();
        let mut f = random_field(&m, &mut ChaCha8Rng::seed_from_u64(seed));
        closure.fill(&mut f.values, 0.0, DataOrder::Value).unwrap();
        let once = f.clone();
        closure.fill(&mut f.values, 0.0, DataOrder::Value).unwrap();
        let scale = once.values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (a, b) in once.values.iter().zip(&f.values) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
        prop_assert!(closure.residual(&f.values, 0.0, DataOrder::Value) <= 1e-10 * scale);
    }

    #[test]
    fn supported_operator_is_symmetric(n1 in 6usize..14, n2 in 6usize..14, seed: u64) {
        let m = build_rectangle(0.0, 1.0, 0.0, 0.7, n1, n2).unwrap();
        let p = PlateParams { rho_h: 1.0, k0: 0.5, tension: 0.3, d: 0.02, k1: 0.0, t1: 0.0, nu: 0.3 };
        let closure = Closure::new(&m, &BoundarySpec::uniform(&m, BcKind::Supported), p.nu).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = random_field(&m, &mut rng);
        let mut v = random_field(&m, &mut rng);
        closure.fill(&mut u.values, 0.0, DataOrder::Homogeneous).unwrap();
        closure.fill(&mut v.values, 0.0, DataOrder::Homogeneous).unwrap();
        let (ku, kv) = (apply_k(&p, &m, &u), apply_k(&p, &m, &v));
        let (mut uk, mut ku_v, mut norm) = (0.0, 0.0, 0.0);
        for i2 in 1..m.n2 as isize - 1 {
            for i1 in 1..m.n1 as isize - 1 {
                uk += u.get(i1, i2) * kv.get(i1, i2);
                ku_v += ku.get(i1, i2) * v.get(i1, i2);
                norm += (u.get(i1, i2) * kv.get(i1, i2)).abs();
            }
        }
        prop_assert!((uk - ku_v).abs() <= 1e-12 * norm, "{} vs {}", uk, ku_v);
    }

    #[test]
    fn dahlquist_step_follows_roots(re in -1.75f64..0.0, im in -1.2f64..1.2) {
        let z = Complex64::new(re, im);
        let (r1, r2) = pc22_roots(z);
        for r in [r1, r2] {
            let next = pc22_dahlquist_step(z, r, Complex64::new(1.0, 0.0));
            prop_assert!((next - r * r).norm() <= 1e-12 * (1.0 + r.norm_sqr()));
        }
        prop_assert!((pc22_amplification(z) - r1.norm().max(r2.norm())).abs() <= 1e-12);
    }

    #[test]
    fn region_is_stable(s in 0.0f64..std::f64::consts::PI, r in 0.0f64..1.0) {
        let e = SuperEllipse::default();
        let z = e.boundary_point(s) * r;
        prop_assert!(in_region(z, &e));
        prop_assert!(pc22_amplification(z) <= 1.0 + 1e-12);
    }

    #[test]
    fn newmark_conserves_oscillator_energy(omega in 0.1f64..1e3, dt in 1e-4f64..1.0, w0 in -1.0f64..1.0, v0 in -1.0f64..1.0) {
        let np = NewmarkParams::default();
        let (mut w, mut v) = (w0, v0);
        let mut a = -omega * omega * w;
        let e0 = omega * omega * w * w + v * v;
        for _ in 0..50 {
            (w, v, a) = newmark_oscillator_step(omega, dt, np, w, v, a);
        }
        let e = omega * omega * w * w + v * v;
        // roundoff grows with omega dt through the implicit solve
        prop_assert!((e - e0).abs() <= 1e-14 * 50.0 * (1.0 + omega * dt) * e0);
    }

    #[test]
    fn dt_lands_on_end_time(t_end in 1e-3f64..5.0, csf in 0.1f64..0.9, n in 6usize..20) {
        let m = build_rectangle(0.0, 1.0, 0.0, 1.0, n, n).unwrap();
        let p = PlateParams::bending(1.0, 1.0, 0.3);
        let mut cfg = SimulationConfig::new(p, m, BoundarySpec::uniform(&m, BcKind::Clamped), Scheme::Pc22, t_end);
        cfg.csf = Some(csf);
        let dt = choose_dt(&cfg).unwrap();
        prop_assert!(dt <= stable_dt(&p, &m, csf).unwrap() * (1.0 + 1e-12));
        let steps = t_end / dt;
        prop_assert!((steps - steps.round()).abs() < 1e-6);
    }

    #[test]
    fn parseval(x in prop::collection::vec(-10.0f64..10.0, 8..300)) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let energy: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
        let power: f64 = two_sided_power(&x, Window::Rectangular).iter().sum();
        prop_assert!((power - n * energy).abs() <= 1e-10 * (n * energy).max(1.0));
    }

    #[test]
    fn pure_tone_peak_within_half_bin(f in 3.0f64..50.0, phase in 0.0f64..6.3, len in 512usize..2048) {
        let dt = 1.0 / 128.0;
        let x: Vec<f64> = (0..len).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 * dt + phase).sin()).collect();
        let s = power_spectrum(&x, dt).unwrap();
        let peak = find_peaks(&s, 0.5)[0];
        prop_assert!((peak.frequency - f).abs() <= 0.5 * s.bin_width());
    }

    #[test]
    fn order_estimate_recovers_power(c in 0.01f64..100.0, p in 0.5f64..5.0, h0 in 0.01f64..1.0) {
        let hs = [h0, h0 / 2.0, h0 / 4.0, h0 / 8.0];
        let es: Vec<f64> = hs.iter().map(|h| c * h.powf(p)).collect();
        prop_assert!((estimate_order(&es, &hs).unwrap() - p).abs() < 1e-9);
    }
}
