//! C ABI over the klplate solver.
//!
//! Objects are opaque handles created by `klp_*_from_json` / `klp_*_solve_json`
//! and released by the matching `*_free`. Every call returns a `KlpStatus`;
//! the text of the last failure on the calling thread is available from
//! `klp_last_error`. Panics are caught at the boundary and reported as
//! `KLP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use klplate::config::ExperimentConfig;
use klplate::experiments::initial_conditions;
use klplate::fdops::PlateParams;
use klplate::mesh::build_rectangle;
use klplate::modal::{solve_modes, Mode};
use klplate::stability::{pc22_amplification, stable_dt};
use klplate::stepper::{Simulation, StepperState};
use klplate::PlateError;
use rustfft::num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Invalid = 4,
    Instability = 5,
    Solver = 6,
    NoConvergence = 7,
    NoDynamics = 8,
    Io = 9,
    OutOfRange = 10,
    Panic = 11,
}

/// Plate coefficients, field for field the library's `PlateParams`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KlpPlateParams {
    pub rho_h: f64,
    pub k0: f64,
    pub tension: f64,
    pub d: f64,
    pub k1: f64,
    pub t1: f64,
    pub nu: f64,
}

impl From<KlpPlateParams> for PlateParams {
    fn from(p: KlpPlateParams) -> Self {
        PlateParams { rho_h: p.rho_h, k0: p.k0, tension: p.tension, d: p.d, k1: p.k1, t1: p.t1, nu: p.nu }
    }
}

/// A running simulation.
pub struct KlpSimulation {
    sim: Simulation,
    state: StepperState,
}

/// Eigenpairs from a modal solve.
pub struct KlpModes {
    modes: Vec<Mode>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &PlateError) -> KlpStatus {
    match e {
        PlateError::Config(_) => KlpStatus::Config,
        PlateError::Invalid(_) | PlateError::NegativeEigenvalue(_) | PlateError::Resonant { .. } => KlpStatus::Invalid,
        PlateError::Instability { .. } => KlpStatus::Instability,
        PlateError::Solver(_) => KlpStatus::Solver,
        PlateError::NoConvergence { .. } => KlpStatus::NoConvergence,
        PlateError::NoDynamics => KlpStatus::NoDynamics,
        PlateError::Io(_) => KlpStatus::Io,
    }
}

/// Run `f` behind the boundary: errors and panics become status codes.
fn guard(f: impl FnOnce() -> Result<(), (KlpStatus, String)>) -> KlpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KlpStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            set_error(&format!("panic: {}", msg.unwrap_or_else(|| "unknown".into())));
            KlpStatus::Panic
        }
    }
}

fn lib(e: PlateError) -> (KlpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (KlpStatus, String) {
    (KlpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (KlpStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|e| (KlpStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (KlpStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn klp_status_message(status: KlpStatus) -> *const c_char {
    let s: &'static CStr = match status {
        KlpStatus::Ok => c"ok",
        KlpStatus::NullPointer => c"null pointer argument",
        KlpStatus::InvalidUtf8 => c"string is not valid UTF-8",
        KlpStatus::Config => c"configuration error",
        KlpStatus::Invalid => c"invalid input",
        KlpStatus::Instability => c"numerical instability",
        KlpStatus::Solver => c"linear solver failure",
        KlpStatus::NoConvergence => c"eigen solver did not converge",
        KlpStatus::NoDynamics => c"no dynamics",
        KlpStatus::Io => c"i/o error",
        KlpStatus::OutOfRange => c"index or buffer size out of range",
        KlpStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn klp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Largest root modulus of the predictor-corrector characteristic
/// polynomial at `z = re + i im`.
#[no_mangle]
pub extern "C" fn klp_pc22_amplification(re: f64, im: f64) -> f64 {
    catch_unwind(|| pc22_amplification(Complex64::new(re, im))).unwrap_or(f64::NAN)
}

/// Stable predictor-corrector step on the `n1 x n2` grid of the rectangle
/// `[x0, x1] x [y0, y1]`.
///
/// # Safety
/// `params` must point to a valid `KlpPlateParams`; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn klp_stable_dt(
    params: *const KlpPlateParams,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    n1: usize,
    n2: usize,
    csf: f64,
    out: *mut f64,
) -> KlpStatus {
    guard(|| {
        let p: PlateParams = (*params.as_ref().ok_or_else(|| null("params"))?).into();
        let out = out_ref(out, "out")?;
        p.validate().map_err(lib)?;
        let m = build_rectangle(x0, x1, y0, y1, n1, n2).map_err(lib)?;
        *out = stable_dt(&p, &m, csf).map_err(lib)?;
        Ok(())
    })
}

/// Build a simulation from an experiment configuration (JSON text) and
/// apply its initial conditions.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable. On
/// success `*out` owns a handle to release with `klp_simulation_free`.
#[no_mangle]
pub unsafe extern "C" fn klp_simulation_from_json(json: *const c_char, out: *mut *mut KlpSimulation) -> KlpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let cfg = ExperimentConfig::from_json(read_str(json, "json")?).map_err(lib)?;
        let sc = cfg.simulation().map_err(lib)?;
        let ic = initial_conditions(&cfg, &sc).map_err(lib)?;
        let mut sim = Simulation::new(sc).map_err(lib)?;
        let state = sim.startup(&ic).map_err(lib)?;
        *out = Box::into_raw(Box::new(KlpSimulation { sim, state }));
        Ok(())
    })
}

/// Release a simulation; null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from `klp_simulation_from_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn klp_simulation_free(sim: *mut KlpSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Take `steps` time steps. On failure the state is left at the last
/// completed step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn klp_simulation_advance(sim: *mut KlpSimulation, steps: usize) -> KlpStatus {
    guard(|| {
        let s = out_ref(sim, "sim")?;
        for _ in 0..steps {
            let mut next = s.state.clone();
            s.sim.step(&mut next).map_err(lib)?;
            s.state = next;
        }
        Ok(())
    })
}

/// Current time, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn klp_simulation_time(sim: *const KlpSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.state.t)
}

/// Time step, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn klp_simulation_dt(sim: *const KlpSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.sim.dt())
}

/// Grid points per direction.
///
/// # Safety
/// `sim` must be a live handle; `n1`, `n2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn klp_simulation_grid_shape(sim: *const KlpSimulation, n1: *mut usize, n2: *mut usize) -> KlpStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let m = s.sim.mesh();
        *out_ref(n1, "n1")? = m.n1;
        *out_ref(n2, "n2")? = m.n2;
        Ok(())
    })
}

/// Copy the displacement at the physical grid points, first index
/// fastest, into `buf` of length `len >= n1 * n2`.
///
/// # Safety
/// `sim` must be a live handle; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn klp_simulation_copy_displacement(sim: *const KlpSimulation, buf: *mut f64, len: usize) -> KlpStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let w = s.state.w.physical();
        if len < w.len() {
            return Err((KlpStatus::OutOfRange, format!("buffer holds {len} values, need {}", w.len())));
        }
        ptr::copy_nonoverlapping(w.as_ptr(), buf, w.len());
        Ok(())
    })
}

/// Displacement interpolated at `(x, y)`.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn klp_simulation_probe(sim: *const KlpSimulation, x: f64, y: f64, out: *mut f64) -> KlpStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let out = out_ref(out, "out")?;
        let m = s.sim.mesh();
        let (a, b) = m.locate(x, y).ok_or_else(|| (KlpStatus::OutOfRange, format!("({x}, {y}) lies outside the domain")))?;
        *out = s.state.w.interpolate(m, a, b);
        Ok(())
    })
}

/// Lowest `k` eigenpairs for the mesh, plate and boundary of a
/// configuration, to its `study.eig_tol`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable. On
/// success `*out` owns a handle to release with `klp_modes_free`.
#[no_mangle]
pub unsafe extern "C" fn klp_modes_solve_json(json: *const c_char, k: usize, out: *mut *mut KlpModes) -> KlpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let cfg = ExperimentConfig::from_json(read_str(json, "json")?).map_err(lib)?;
        let p = cfg.plate_params().map_err(lib)?;
        let m = cfg.mesh.build().map_err(lib)?;
        let b = cfg.boundary.build(&m, p.nu).map_err(lib)?;
        let modes = solve_modes(&p, &m, &b, k, cfg.study.eig_tol).map_err(lib)?;
        *out = Box::into_raw(Box::new(KlpModes { modes }));
        Ok(())
    })
}

/// Release a mode set; null is ignored.
///
/// # Safety
/// `modes` must be null or a handle from `klp_modes_solve_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn klp_modes_free(modes: *mut KlpModes) {
    if !modes.is_null() {
        drop(Box::from_raw(modes));
    }
}

/// Number of modes held, 0 for a null handle.
///
/// # Safety
/// `modes` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn klp_modes_count(modes: *const KlpModes) -> usize {
    modes.as_ref().map_or(0, |m| m.modes.len())
}

unsafe fn mode_field(modes: *const KlpModes, i: usize, out: *mut f64, f: fn(&Mode) -> f64) -> KlpStatus {
    guard(|| {
        let ms = modes.as_ref().ok_or_else(|| null("modes"))?;
        let out = out_ref(out, "out")?;
        let md = ms.modes.get(i).ok_or_else(|| (KlpStatus::OutOfRange, format!("mode {i} of {}", ms.modes.len())))?;
        *out = f(md);
        Ok(())
    })
}

/// Natural frequency (Hz) of mode `i`, ascending from 0.
///
/// # Safety
/// `modes` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn klp_modes_frequency(modes: *const KlpModes, i: usize, out: *mut f64) -> KlpStatus {
    mode_field(modes, i, out, |m| m.frequency)
}

/// Eigenvalue of mode `i`.
///
/// # Safety
/// `modes` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn klp_modes_eigenvalue(modes: *const KlpModes, i: usize, out: *mut f64) -> KlpStatus {
    mode_field(modes, i, out, |m| m.lambda)
}
