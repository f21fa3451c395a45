//! Time integration: the PC22 Adams predictor-corrector and the NB2
//! Newmark-beta scheme, with startup, forcing, probes and snapshots.

use std::sync::Arc;
use std::time::Instant;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};
use crate::fdops::assemble::{assemble_with, Assembled};
use crate::fdops::forcing::ForcingEval;
use crate::fdops::{for_physical, BoundarySpec, Closure, DataOrder, Field, ForcingSpec, Kernel, PlateParams};
use crate::linalg::{DirectSolver, LinearSolver};
use crate::mesh::Mesh;
use crate::stability::{mesh_symbol_max, stable_dt, Regime, SymbolBounds, CSF_NB2, CSF_PC22};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pc22,
    Nb2,
}

impl Scheme {
    pub fn default_csf(self) -> f64 {
        match self {
            Scheme::Pc22 => CSF_PC22,
            Scheme::Nb2 => CSF_NB2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Pc22 => "pc22",
            Scheme::Nb2 => "nb2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewmarkParams {
    pub beta: f64,
    pub gamma: f64,
}

impl Default for NewmarkParams {
    fn default() -> Self {
        NewmarkParams { beta: 0.25, gamma: 0.5 }
    }
}

impl NewmarkParams {
    pub fn unconditionally_stable(&self) -> bool {
        0.5 <= self.gamma && self.gamma <= 2.0 * self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolverKind {
    #[default]
    Direct,
    Bicgstab,
}

pub type SpaceInit = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum InitialConditions {
    Zero,
    Fields { w0: Field, v0: Field },
    Functions { w0: SpaceInit, v0: SpaceInit },
}

impl std::fmt::Debug for InitialConditions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialConditions::Zero => write!(f, "Zero"),
            InitialConditions::Fields { .. } => write!(f, "Fields"),
            InitialConditions::Functions { .. } => write!(f, "Functions"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub params: PlateParams,
    pub mesh: Mesh,
    pub bspec: BoundarySpec,
    pub forcing: ForcingSpec,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Stability factor; the scheme default when None.
    pub csf: Option<f64>,
    /// Explicit step, overriding the stability rule.
    pub dt: Option<f64>,
    /// Upper bound on the step (accuracy cap).
    pub dt_max: Option<f64>,
    pub probes: Vec<[f64; 2]>,
    /// Store a snapshot every this many steps (0: final state only).
    pub snapshot_every: usize,
    pub newmark: NewmarkParams,
    pub linear_solver: LinearSolverKind,
    /// |w|_inf above this aborts the run.
    pub abort_threshold: f64,
}

impl SimulationConfig {
    pub fn new(params: PlateParams, mesh: Mesh, bspec: BoundarySpec, scheme: Scheme, t_end: f64) -> Self {
        SimulationConfig {
            params,
            mesh,
            bspec,
            forcing: ForcingSpec::Zero,
            scheme,
            t_end,
            csf: None,
            dt: None,
            dt_max: None,
            probes: Vec::new(),
            snapshot_every: 0,
            newmark: NewmarkParams::default(),
            linear_solver: LinearSolverKind::Direct,
            abort_threshold: 1e10,
        }
    }
}

/// Solution level(s) carried between steps.
#[derive(Debug, Clone)]
pub struct StepperState {
    pub w: Field,
    pub v: Field,
    pub a: Field,
    /// Level n-1 (PC22 only).
    pub prev: Option<(Field, Field, Field)>,
    pub t: f64,
    pub dt: f64,
    pub step: usize,
}

struct Nb2System {
    op: Assembled,
    solver: LinearSolver,
    anorm: f64,
}

/// A configured simulation: closure, operators and (for NB2) the factored
/// Stage II matrix.
pub struct Simulation {
    pub cfg: SimulationConfig,
    closure: Closure,
    kernel: Kernel,
    forcing: ForcingEval,
    nb2: Option<Nb2System>,
    dt: f64,
    pub bounds: SymbolBounds,
    fbuf: Vec<f64>,
    s1: Field,
    s2: Field,
    s3: Field,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSeries {
    pub x: f64,
    pub y: f64,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub w: Field,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub k_hat_max: f64,
    pub b_hat_max: f64,
    pub lambda_max: [f64; 2],
    pub regime: Regime,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub times: Vec<f64>,
    pub probes: Vec<ProbeSeries>,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Diagnostics,
    pub final_state: StepperState,
}

/// Step used by a run: the stability (or explicit) step, capped, then
/// shortened so an integer number of steps lands on `t_end`.
pub fn choose_dt(cfg: &SimulationConfig) -> Result<f64> {
    let mut dt = match cfg.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => dt,
        Some(dt) => return Err(PlateError::Config(format!("explicit dt must be positive, got {dt}"))),
        None => stable_dt(&cfg.params, &cfg.mesh, cfg.csf.unwrap_or(cfg.scheme.default_csf()))?,
    };
    if let Some(cap) = cfg.dt_max {
        if !(cap > 0.0) {
            return Err(PlateError::Config(format!("dt_max must be positive, got {cap}")));
        }
        dt = dt.min(cap);
    }
    if cfg.t_end > 0.0 {
        let n = (cfg.t_end / dt * (1.0 - 1e-12)).ceil().max(1.0);
        dt = cfg.t_end / n;
    }
    Ok(dt)
}

impl Simulation {
    pub fn new(cfg: SimulationConfig) -> Result<Self> {
        cfg.params.validate()?;
        if !(cfg.t_end >= 0.0) {
            return Err(PlateError::Config(format!("t_end must be non-negative, got {}", cfg.t_end)));
        }
        if !cfg.forcing.region_hits(&cfg.mesh) {
            return Err(PlateError::Config("forcing region does not intersect the domain".into()));
        }
        for p in &cfg.probes {
            if cfg.mesh.locate(p[0], p[1]).is_none() {
                return Err(PlateError::Config(format!("probe ({}, {}) lies outside the domain", p[0], p[1])));
            }
        }
        let dt = choose_dt(&cfg)?;
        Self::with_dt(cfg, dt)
    }

    /// Build with a given step, bypassing the stability rule.
    pub fn with_dt(cfg: SimulationConfig, dt: f64) -> Result<Self> {
        cfg.params.validate()?;
        let m = cfg.mesh;
        let closure = Closure::new(&m, &cfg.bspec, cfg.params.nu)?;
        let kernel = Kernel::new(&cfg.params, &m);
        let forcing = ForcingEval::new(&cfg.forcing, &m);
        let bounds = mesh_symbol_max(&cfg.params, &m);
        let nb2 = match cfg.scheme {
            Scheme::Pc22 => None,
            Scheme::Nb2 => {
                let np = cfg.newmark;
                let op = assemble_with(&cfg.params, &closure, cfg.params.rho_h, np.beta * dt * dt, np.gamma * dt);
                let solver = match cfg.linear_solver {
                    LinearSolverKind::Direct => LinearSolver::Direct(DirectSolver::factor(&op.matrix)?),
                    LinearSolverKind::Bicgstab => LinearSolver::Iterative { matrix: op.matrix.clone(), tol: 1e-13, max_iter: 20_000 },
                };
                let anorm = op.matrix.norm_inf();
                Some(Nb2System { op, solver, anorm })
            }
        };
        Ok(Simulation {
            fbuf: vec![0.0; m.storage_len()],
            s1: Field::zeros(&m),
            s2: Field::zeros(&m),
            s3: Field::zeros(&m),
            cfg,
            closure,
            kernel,
            forcing,
            nb2,
            dt,
            bounds,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mesh(&self) -> &Mesh {
        &self.cfg.mesh
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    /// Number of steps needed to reach `t_end`.
    pub fn n_steps(&self) -> usize {
        if self.cfg.t_end <= 0.0 {
            0
        } else {
            (self.cfg.t_end / self.dt).round() as usize
        }
    }

    fn eval_forcing(&mut self, t: f64) -> bool {
        if self.forcing.is_zero() {
            return false;
        }
        self.forcing.eval_into(t, &mut self.fbuf);
        true
    }

    /// Acceleration from the equation of motion at time t.
    fn accel(&mut self, w: &Field, v: &Field, t: f64, out: &mut Field) {
        let has_f = self.eval_forcing(t);
        let f = if has_f { Some(&self.fbuf[..]) } else { None };
        self.kernel.accel_into(&w.values, &v.values, f, &mut out.values);
        out.time = t;
    }

    /// Fill ghosts of a displacement/velocity pair at time t.
    fn fill_pair(&self, w: &mut Field, v: &mut Field, t: f64) -> Result<()> {
        self.closure.fill(&mut w.values, t, DataOrder::Value)?;
        self.closure.fill(&mut v.values, t, DataOrder::Rate)?;
        w.time = t;
        v.time = t;
        Ok(())
    }

    /// Initial state; PC22 also gets a synthesized level t = -dt from one
    /// backward Taylor step.
    pub fn startup(&mut self, ic: &InitialConditions) -> Result<StepperState> {
        let m = self.cfg.mesh;
        let (mut w0, mut v0) = match ic {
            InitialConditions::Zero => (Field::zeros(&m), Field::zeros(&m)),
            InitialConditions::Fields { w0, v0 } => {
                if !w0.matches(&m) || !v0.matches(&m) {
                    return Err(PlateError::Invalid("initial fields do not match the mesh".into()));
                }
                (w0.clone(), v0.clone())
            }
            InitialConditions::Functions { w0, v0 } => (Field::from_fn(&m, |x, y| w0(x, y)), Field::from_fn(&m, |x, y| v0(x, y))),
        };
        self.fill_pair(&mut w0, &mut v0, 0.0)?;
        let mut a0 = Field::zeros(&m);
        self.accel(&w0, &v0, 0.0, &mut a0);
        let dt = self.dt;
        let prev = match self.cfg.scheme {
            Scheme::Nb2 => None,
            Scheme::Pc22 => {
                let mut wm = Field::zeros(&m);
                let mut vm = Field::zeros(&m);
                for k in 0..wm.values.len() {
                    wm.values[k] = w0.values[k] - dt * v0.values[k] + 0.5 * dt * dt * a0.values[k];
                    vm.values[k] = v0.values[k] - dt * a0.values[k];
                }
                self.fill_pair(&mut wm, &mut vm, -dt)?;
                let mut am = Field::zeros(&m);
                self.accel(&wm, &vm, -dt, &mut am);
                Some((wm, vm, am))
            }
        };
        Ok(StepperState { w: w0, v: v0, a: a0, prev, t: 0.0, dt, step: 0 })
    }

    pub fn step(&mut self, s: &mut StepperState) -> Result<()> {
        match self.cfg.scheme {
            Scheme::Pc22 => self.pc22_step(s)?,
            Scheme::Nb2 => self.nb2_step(s)?,
        }
        let norm = s.w.max_abs();
        if !(norm <= self.cfg.abort_threshold) {
            return Err(PlateError::Instability { step: s.step, time: s.t, norm });
        }
        Ok(())
    }

    /// One PC22 step: Adams-Bashforth predictor, trapezoidal corrector,
    /// ghosts filled after both stages.
    pub fn pc22_step(&mut self, s: &mut StepperState) -> Result<()> {
        let dt = s.dt;
        let t1 = s.t + dt;
        let m = self.cfg.mesh;
        let Some((wm, vm, am)) = s.prev.as_mut() else {
            return Err(PlateError::Invalid("PC22 needs the previous time level".into()));
        };
        let mut wp = std::mem::replace(&mut self.s1, Field::zeros(&Mesh { n1: 0, n2: 0, ..m }));
        let mut vp = std::mem::replace(&mut self.s2, Field::zeros(&Mesh { n1: 0, n2: 0, ..m }));
        let mut ap = std::mem::replace(&mut self.s3, Field::zeros(&Mesh { n1: 0, n2: 0, ..m }));
        {
            let (w, v, a) = (&s.w.values, &s.v.values, &s.a.values);
            let (v_old, a_old) = (&vm.values, &am.values);
            for_physical(&m, |k| {
                wp.values[k] = w[k] + dt * (1.5 * v[k] - 0.5 * v_old[k]);
                vp.values[k] = v[k] + dt * (1.5 * a[k] - 0.5 * a_old[k]);
            });
        }
        let r = self.fill_pair(&mut wp, &mut vp, t1);
        if let Err(e) = r {
            self.restore(wp, vp, ap);
            return Err(e);
        }
        self.accel(&wp, &vp, t1, &mut ap);
        {
            let (w, v, a) = (&s.w.values, &s.v.values, &s.a.values);
            for_physical(&m, |k| {
                wm.values[k] = w[k] + 0.5 * dt * (v[k] + vp.values[k]);
                vm.values[k] = v[k] + 0.5 * dt * (a[k] + ap.values[k]);
            });
        }
        let r = self.fill_pair(wm, vm, t1);
        if let Err(e) = r {
            self.restore(wp, vp, ap);
            return Err(e);
        }
        self.accel(wm, vm, t1, am);
        std::mem::swap(wm, &mut s.w);
        std::mem::swap(vm, &mut s.v);
        std::mem::swap(am, &mut s.a);
        self.restore(wp, vp, ap);
        s.t = t1;
        s.step += 1;
        Ok(())
    }

    fn restore(&mut self, a: Field, b: Field, c: Field) {
        self.s1 = a;
        self.s2 = b;
        self.s3 = c;
    }

    /// One NB2 step: prediction, implicit acceleration solve, update.
    pub fn nb2_step(&mut self, s: &mut StepperState) -> Result<()> {
        let dt = s.dt;
        let t1 = s.t + dt;
        let m = self.cfg.mesh;
        let np = self.cfg.newmark;
        let rho_h = self.cfg.params.rho_h;
        // Stage I: predictions into the scratch fields
        let mut wp = std::mem::replace(&mut self.s1, Field::zeros(&Mesh { n1: 0, n2: 0, ..m }));
        let mut vp = std::mem::replace(&mut self.s2, Field::zeros(&Mesh { n1: 0, n2: 0, ..m }));
        let mut rhs_f = std::mem::replace(&mut self.s3, Field::zeros(&Mesh { n1: 0, n2: 0, ..m }));
        {
            let (w, v, a) = (&s.w.values, &s.v.values, &s.a.values);
            let c = 0.5 * dt * dt * (1.0 - 2.0 * np.beta);
            let g = dt * (1.0 - np.gamma);
            for_physical(&m, |k| {
                wp.values[k] = w[k] + dt * v[k] + c * a[k];
                vp.values[k] = v[k] + g * a[k];
            });
        }
        let result = (|| -> Result<()> {
            self.fill_pair(&mut wp, &mut vp, t1)?;
            // Stage II: (rho_h + beta dt^2 K + gamma dt B) a = F - K wp - B vp
            self.accel(&wp, &vp, t1, &mut rhs_f);
            let sys = self.nb2.as_ref().expect("NB2 system");
            let mut x = vec![0.0; sys.op.layout.n_dofs()];
            for (r, &k) in sys.op.layout.pde.iter().enumerate() {
                x[r] = rho_h * rhs_f.values[k];
            }
            let rhs = x.clone();
            sys.solver.solve(&mut x)?;
            // normwise relative residual, with up to two refinement steps;
            // the BC rows are scaled far from the PDE rows
            let bnorm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut res = vec![0.0; x.len()];
            let mut refined = 0;
            loop {
                sys.op.matrix.matvec(&x, &mut res);
                res.iter_mut().zip(&rhs).for_each(|(r, b)| *r = b - *r);
                let err = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let xnorm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let scale = sys.anorm * xnorm + bnorm;
                if err <= 1e-10 * scale || err <= 1e-300 {
                    break;
                }
                if refined == 2 {
                    return Err(PlateError::Solver(format!("stage II residual {err:.3e} exceeds 1e-10 relative (scale {scale:.3e})")));
                }
                sys.solver.solve(&mut res)?;
                x.iter_mut().zip(&res).for_each(|(a, c)| *a += c);
                refined += 1;
            }
            // Stage III
            let b = np.beta * dt * dt;
            let g = np.gamma * dt;
            s.a.values.iter_mut().for_each(|v| *v = 0.0);
            for (j, &k) in sys.op.layout.pde.iter().chain(&sys.op.layout.bc).enumerate() {
                let acc = x[j];
                s.a.values[k] = acc;
                s.w.values[k] = wp.values[k] + b * acc;
                s.v.values[k] = vp.values[k] + g * acc;
            }
            m.wrap_fill(&mut s.a.values);
            s.a.time = t1;
            let (w, v) = (&mut s.w, &mut s.v);
            self.closure.fill(&mut w.values, t1, DataOrder::Value)?;
            self.closure.fill(&mut v.values, t1, DataOrder::Rate)?;
            w.time = t1;
            v.time = t1;
            Ok(())
        })();
        self.restore(wp, vp, rhs_f);
        result?;
        s.t = t1;
        s.step += 1;
        Ok(())
    }

    /// `rho_h |v|^2 + <w, K_h w>` over PDE points with area weights.
    pub fn energy(&mut self, s: &StepperState) -> f64 {
        let m = self.cfg.mesh;
        let mut kw = Field::zeros(&m);
        self.kernel.k_into(&s.w.values, &mut kw.values);
        let rho_h = self.cfg.params.rho_h;
        self.closure
            .layout
            .pde
            .iter()
            .map(|&k| {
                let (i1, _) = m.unindex(k);
                m.cell_weight(i1) * (rho_h * s.v.values[k] * s.v.values[k] + s.w.values[k] * kw.values[k])
            })
            .sum()
    }

    /// Integrate from the initial conditions to `t_end`, recording probes at
    /// every step.
    pub fn run(&mut self, ic: &InitialConditions) -> Result<RunOutput> {
        let start = Instant::now();
        let m = self.cfg.mesh;
        let locs: Vec<(f64, f64)> = self.cfg.probes.iter().map(|p| m.locate(p[0], p[1]).expect("probe validated")).collect();
        let mut state = self.startup(ic)?;
        let n = self.n_steps();
        let mut times = Vec::with_capacity(n + 1);
        let mut probes: Vec<ProbeSeries> =
            self.cfg.probes.iter().map(|p| ProbeSeries { x: p[0], y: p[1], w: Vec::with_capacity(n + 1), v: Vec::with_capacity(n + 1) }).collect();
        let mut snapshots = Vec::new();
        let record = |st: &StepperState, times: &mut Vec<f64>, probes: &mut Vec<ProbeSeries>| {
            times.push(st.t);
            for (ps, &(a, b)) in probes.iter_mut().zip(&locs) {
                ps.w.push(st.w.interpolate(&m, a, b));
                ps.v.push(st.v.interpolate(&m, a, b));
            }
        };
        record(&state, &mut times, &mut probes);
        let every = self.cfg.snapshot_every;
        if every > 0 {
            snapshots.push(Snapshot { step: 0, t: 0.0, w: state.w.clone() });
        }
        for i in 1..=n {
            self.step(&mut state)?;
            if i == n {
                // land exactly on t_end
                state.t = self.cfg.t_end;
                state.w.time = state.t;
                state.v.time = state.t;
            }
            record(&state, &mut times, &mut probes);
            if every > 0 && i % every == 0 && i != n {
                snapshots.push(Snapshot { step: i, t: state.t, w: state.w.clone() });
            }
        }
        snapshots.push(Snapshot { step: state.step, t: state.t, w: state.w.clone() });
        let b = self.bounds;
        Ok(RunOutput {
            times,
            probes,
            snapshots,
            diagnostics: Diagnostics {
                scheme: self.cfg.scheme,
                dt: self.dt,
                steps: state.step,
                k_hat_max: b.k_hat_max,
                b_hat_max: b.b_hat_max,
                lambda_max: [b.lambda_max.re, b.lambda_max.im],
                regime: b.regime,
                wall_time_s: start.elapsed().as_secs_f64(),
            },
            final_state: state,
        })
    }
}

/// Configure, start and run in one call.
pub fn run(cfg: SimulationConfig, ic: &InitialConditions) -> Result<RunOutput> {
    Simulation::new(cfg)?.run(ic)
}

/// PC22 applied to the scalar test equation `y' = lambda y`, `z = lambda dt`.
pub fn pc22_dahlquist_step(z: Complex64, y_n: Complex64, y_nm1: Complex64) -> Complex64 {
    let yp = y_n + (1.5 * z * y_n - 0.5 * z * y_nm1);
    y_n + 0.5 * (z * y_n + z * yp)
}

/// NB2 applied to the oscillator `w'' = -omega^2 w`; returns `(w, v, a)`.
pub fn newmark_oscillator_step(omega: f64, dt: f64, np: NewmarkParams, w: f64, v: f64, a: f64) -> (f64, f64, f64) {
    let wp = w + dt * v + 0.5 * dt * dt * (1.0 - 2.0 * np.beta) * a;
    let vp = v + dt * (1.0 - np.gamma) * a;
    let k = omega * omega;
    let an = -k * wp / (1.0 + np.beta * dt * dt * k);
    (wp + np.beta * dt * dt * an, vp + np.gamma * dt * an, an)
}
