//! Experiment configuration: a JSON document, validated strictly (unknown
//! keys are rejected) and resolved into meshes, boundary specifications,
//! forcing and initial conditions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{mms_boundary, mms_forcing_spec, mms_w, mms_wt, standing_wave};
use crate::error::{PlateError, Result};
use crate::fdops::{BcKind, BoundarySpec, DataFn, ForcingSpec, PlateParams, SideSpec, Waveform};
use crate::mesh::{build_annulus, build_rectangle, Mesh, MeshKind, Side};
use crate::spectra::Window;
use crate::stepper::{InitialConditions, LinearSolverKind, NewmarkParams, Scheme, SimulationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Run,
    Mms,
    Eigs,
    Dt,
    Spectrum,
    Resonance,
    Beat,
    Chladni,
    Forced,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::Mms => "mms",
            Experiment::Eigs => "eigs",
            Experiment::Dt => "dt",
            Experiment::Spectrum => "spectrum",
            Experiment::Resonance => "resonance",
            Experiment::Beat => "beat",
            Experiment::Chladni => "chladni",
            Experiment::Forced => "forced",
        }
    }
}

/// Mesh description. `grid: N` selects the grid family member G_N:
/// N intervals along the longest rectangle side (uniform spacing), or
/// `N + 1` radial and `angular_factor * N` angular points on an annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshConfig {
    Rectangle {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n1: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n2: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<usize>,
    },
    Annulus {
        r_in: f64,
        r_out: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n1: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n2: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<usize>,
        #[serde(default = "one")]
        angular_factor: usize,
    },
}

fn one() -> usize {
    1
}

impl MeshConfig {
    pub fn set_grid(&mut self, n: usize) {
        match self {
            MeshConfig::Rectangle { grid, n1, n2, .. } | MeshConfig::Annulus { grid, n1, n2, .. } => {
                *grid = Some(n);
                *n1 = None;
                *n2 = None;
            }
        }
    }

    pub fn build(&self) -> Result<Mesh> {
        match *self {
            MeshConfig::Rectangle { x0, x1, y0, y1, n1, n2, grid } => {
                let (n1, n2) = match (n1, n2, grid) {
                    (Some(a), Some(b), None) => (a, b),
                    (None, None, Some(g)) => {
                        if g == 0 {
                            return Err(PlateError::Config("grid must be positive".into()));
                        }
                        let (lx, ly) = (x1 - x0, y1 - y0);
                        let h = lx.max(ly) / g as f64;
                        ((lx / h).round() as usize + 1, (ly / h).round() as usize + 1)
                    }
                    _ => return Err(PlateError::Config("rectangle needs either n1 and n2, or grid".into())),
                };
                build_rectangle(x0, x1, y0, y1, n1, n2)
            }
            MeshConfig::Annulus { r_in, r_out, n1, n2, grid, angular_factor } => {
                let (n1, n2) = match (n1, n2, grid) {
                    (Some(a), Some(b), None) => (a, b),
                    (None, None, Some(g)) => (g + 1, angular_factor.max(1) * g),
                    _ => return Err(PlateError::Config("annulus needs either n1 and n2, or grid".into())),
                };
                build_annulus(r_in, r_out, n1, n2)
            }
        }
    }
}

/// Material data from which rho_h and D are derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub youngs: f64,
    pub thickness: f64,
    pub density: f64,
    pub nu: f64,
}

/// Time-dependent boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataConfig {
    /// `amplitude * cos(2 pi frequency_hz t)`
    Harmonic {
        amplitude: f64,
        frequency_hz: f64,
    },
    Constant {
        value: f64,
    },
}

impl DataConfig {
    fn to_data(&self) -> DataFn {
        match *self {
            DataConfig::Harmonic { amplitude, frequency_hz } => {
                let xi = 2.0 * PI * frequency_hz;
                DataFn::with_rate(move |_, _, t| amplitude * (xi * t).cos(), move |_, _, t| -amplitude * xi * (xi * t).sin())
            }
            DataConfig::Constant { value } => DataFn::with_rate(move |_, _, _| value, |_, _, _| 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideConfig {
    pub kind: BcKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<DataConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1: Option<DataConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    /// Kind applied to every side not listed in `sides`.
    #[serde(default = "default_kind")]
    pub default: BcKind,
    /// Keyed by side name: left, right, bottom, top, inner, outer.
    #[serde(default)]
    pub sides: BTreeMap<String, SideConfig>,
    /// Points pinned to zero displacement (nearest grid point).
    #[serde(default)]
    pub pins: Vec<[f64; 2]>,
    /// Use the manufactured solution's boundary data on every side.
    #[serde(default)]
    pub manufactured: bool,
}

fn default_kind() -> BcKind {
    BcKind::Clamped
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig { default: BcKind::Clamped, sides: BTreeMap::new(), pins: Vec::new(), manufactured: false }
    }
}

fn parse_side(name: &str) -> Result<Side> {
    Ok(match name {
        "left" => Side::Left,
        "right" => Side::Right,
        "bottom" => Side::Bottom,
        "top" => Side::Top,
        "inner" => Side::Inner,
        "outer" => Side::Outer,
        _ => return Err(PlateError::Config(format!("unknown side '{name}'"))),
    })
}

impl BoundaryConfig {
    pub fn build(&self, m: &Mesh, nu: f64) -> Result<BoundarySpec> {
        let mut spec = if self.manufactured {
            if !self.sides.is_empty() {
                return Err(PlateError::Config("manufactured boundary data cannot be combined with per-side settings".into()));
            }
            mms_boundary(m, self.default, nu)
        } else {
            BoundarySpec::uniform(m, self.default)
        };
        for (name, sc) in &self.sides {
            let side = parse_side(name)?;
            if !m.sides().contains(&side) {
                return Err(PlateError::Config(format!("side '{name}' does not exist on this mesh")));
            }
            spec = spec.with_side(side, SideSpec::with_data(sc.kind, sc.g0.as_ref().map(DataConfig::to_data), sc.g1.as_ref().map(DataConfig::to_data)));
        }
        for p in &self.pins {
            if m.locate(p[0], p[1]).is_none() {
                return Err(PlateError::Config(format!("pin ({}, {}) lies outside the domain", p[0], p[1])));
            }
            spec = spec.with_pin_nearest(m, p[0], p[1]);
        }
        Ok(spec)
    }

    /// Retune every harmonic boundary datum to `hz`.
    pub fn set_drive_hz(&mut self, hz: f64) -> usize {
        let mut n = 0;
        for sc in self.sides.values_mut() {
            for d in [&mut sc.g0, &mut sc.g1].into_iter().flatten() {
                if let DataConfig::Harmonic { frequency_hz, .. } = d {
                    *frequency_hz = hz;
                    n += 1;
                }
            }
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ForcingConfig {
    #[default]
    Zero,
    Manufactured,
    /// `f0 * wave(2 pi frequency_hz t)` on the whole plate, or on `region`
    /// `[x0, x1, y0, y1]` when given.
    Sinusoid {
        f0: f64,
        frequency_hz: f64,
        #[serde(default = "default_wave")]
        waveform: Waveform,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        region: Option<[f64; 4]>,
    },
}

fn default_wave() -> Waveform {
    Waveform::Sin
}

impl ForcingConfig {
    pub fn build(&self, p: &PlateParams) -> ForcingSpec {
        match *self {
            ForcingConfig::Zero => ForcingSpec::Zero,
            ForcingConfig::Manufactured => mms_forcing_spec(p),
            ForcingConfig::Sinusoid { f0, frequency_hz, waveform, region } => {
                ForcingSpec::LocalizedSinusoid { f0, xi: 2.0 * PI * frequency_hz, waveform, region }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    #[default]
    Zero,
    Manufactured,
    /// `sin(m pi (x - x0) / L) sin(n pi (y - y0) / H)` at rest.
    StandingWave {
        m: usize,
        n: usize,
    },
    /// Eigenmode number `index` (1-based) of the undamped operator, at rest.
    Mode {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write a VTK snapshot every this many steps (0: final state only).
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "yes")]
    pub vtk: bool,
    #[serde(default = "yes")]
    pub nodal_lines: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { snapshot_every: 0, vtk: true, nodal_lines: true }
    }
}

/// Experiment-specific settings; each experiment reads only its own keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Grid family members for convergence studies.
    #[serde(default = "default_grids")]
    pub grids: Vec<usize>,
    /// NB2 step cap as a multiple of the grid spacing in convergence studies.
    #[serde(default = "default_dt_per_h")]
    pub nb2_dt_per_h: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
    /// Relative eigenvalue gap below which neighbours count as a pair.
    #[serde(default = "default_pair_tol")]
    pub pair_tol: f64,
    /// Peak threshold relative to the largest spectral power.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub window: WindowConfig,
    /// Driving frequency of the search run used to locate natural frequencies.
    #[serde(default = "default_search_hz")]
    pub search_hz: f64,
    /// Band searched for the natural frequency of interest.
    #[serde(default = "default_band")]
    pub band_hz: [f64; 2],
    /// Driving frequency; for resonance, the located natural frequency when None.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_hz: Option<f64>,
    /// Known natural frequency; skips the search run when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub natural_hz: Option<f64>,
    /// Mode number (1-based, elastic modes only) for chladni.
    #[serde(default = "one")]
    pub mode: usize,
    /// For chladni: take the mode nearest this frequency instead of `mode`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_hz: Option<f64>,
    /// Series truncation for forced.
    #[serde(default = "default_series")]
    pub series: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowConfig {
    #[default]
    Hann,
    Rectangular,
}

impl From<WindowConfig> for Window {
    fn from(w: WindowConfig) -> Self {
        match w {
            WindowConfig::Hann => Window::Hann,
            WindowConfig::Rectangular => Window::Rectangular,
        }
    }
}

fn default_grids() -> Vec<usize> {
    vec![10, 20, 40, 80]
}
fn default_dt_per_h() -> f64 {
    0.25
}
fn default_modes() -> usize {
    25
}
fn default_eig_tol() -> f64 {
    1e-8
}
fn default_pair_tol() -> f64 {
    0.005
}
fn default_threshold() -> f64 {
    1e-3
}
fn default_search_hz() -> f64 {
    1.0
}
fn default_band() -> [f64; 2] {
    [1.5, 3.0]
}
fn default_series() -> [usize; 2] {
    [7, 7]
}

impl Default for StudyConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

fn default_scheme() -> Scheme {
    Scheme::Nb2
}

/// The full experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub mesh: MeshConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PlateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<Material>,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(default)]
    pub t_end: f64,
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub newmark: NewmarkParams,
    #[serde(default)]
    pub linear_solver: LinearSolverKind,
    #[serde(default)]
    pub study: StudyConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| PlateError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            PlateError::Config(m) => PlateError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Command-line overrides. `grid` replaces the mesh size, and for
    /// convergence studies the grid list.
    pub fn apply_overrides(&mut self, scheme: Option<Scheme>, csf: Option<f64>, grid: Option<usize>) -> Result<()> {
        if let Some(s) = scheme {
            self.scheme = s;
        }
        if let Some(c) = csf {
            self.csf = Some(c);
        }
        if let Some(g) = grid {
            self.mesh.set_grid(g);
            if self.experiment == Experiment::Mms {
                self.study.grids = vec![g];
            }
        }
        self.validate()
    }

    /// Retune every harmonic source (boundary data and sinusoidal forcing).
    pub fn set_drive_hz(&mut self, hz: f64) -> Result<()> {
        let mut n = self.boundary.set_drive_hz(hz);
        if let ForcingConfig::Sinusoid { frequency_hz, .. } = &mut self.forcing {
            *frequency_hz = hz;
            n += 1;
        }
        if n == 0 {
            return Err(PlateError::Config("no harmonic boundary data or sinusoidal forcing to drive".into()));
        }
        Ok(())
    }

    /// Frequency of the first harmonic source, if any.
    pub fn drive_hz(&self) -> Option<f64> {
        if let ForcingConfig::Sinusoid { frequency_hz, .. } = self.forcing {
            return Some(frequency_hz);
        }
        self.boundary.sides.values().flat_map(|s| [&s.g0, &s.g1]).flatten().find_map(|d| match d {
            DataConfig::Harmonic { frequency_hz, .. } => Some(*frequency_hz),
            DataConfig::Constant { .. } => None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact resolved document.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(compact.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.plate_params()?;
        p.validate()?;
        let m = self.mesh.build()?;
        self.boundary.build(&m, p.nu)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(PlateError::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if let Some(c) = self.csf {
            if !(c > 0.0) {
                return Err(PlateError::Config(format!("csf must be positive, got {c}")));
            }
        }
        for p in &self.probes {
            if m.locate(p[0], p[1]).is_none() {
                return Err(PlateError::Config(format!("probe ({}, {}) lies outside the domain", p[0], p[1])));
            }
        }
        if let InitialConfig::StandingWave { m: a, n: b } = self.initial {
            if a == 0 || b == 0 {
                return Err(PlateError::Config("standing-wave mode numbers must be positive".into()));
            }
            if !matches!(m.kind, MeshKind::Rectangle { .. }) {
                return Err(PlateError::Config("standing-wave initial data needs a rectangle".into()));
            }
        }
        if let ForcingConfig::Sinusoid { frequency_hz, .. } = self.forcing {
            if !frequency_hz.is_finite() || frequency_hz < 0.0 {
                return Err(PlateError::Config(format!("forcing frequency must be non-negative, got {frequency_hz}")));
            }
        }
        let s = &self.study;
        if s.grids.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PlateError::Config("study.grids must be strictly increasing".into()));
        }
        if !(s.threshold > 0.0 && s.threshold < 1.0) {
            return Err(PlateError::Config("study.threshold must lie in (0, 1)".into()));
        }
        if s.mode == 0 {
            return Err(PlateError::Config("study.mode is 1-based".into()));
        }
        Ok(())
    }

    /// Plate coefficients: `params`, with rho_h and D replaced from
    /// `material` when given.
    pub fn plate_params(&self) -> Result<PlateParams> {
        match (self.params, self.material) {
            (Some(p), None) => Ok(p),
            (None, Some(mt)) => Ok(PlateParams::from_material(mt.youngs, mt.thickness, mt.density, mt.nu)),
            (Some(p), Some(mt)) => {
                let q = PlateParams::from_material(mt.youngs, mt.thickness, mt.density, mt.nu);
                Ok(PlateParams { rho_h: q.rho_h, d: q.d, nu: q.nu, ..p })
            }
            (None, None) => Err(PlateError::Config("either params or material is required".into())),
        }
    }

    /// Everything but the initial conditions.
    pub fn simulation(&self) -> Result<SimulationConfig> {
        let p = self.plate_params()?;
        let m = self.mesh.build()?;
        let b = self.boundary.build(&m, p.nu)?;
        let mut sim = SimulationConfig::new(p, m, b, self.scheme, self.t_end);
        sim.forcing = self.forcing.build(&p);
        sim.csf = self.csf;
        sim.dt = self.dt;
        sim.dt_max = self.dt_max;
        sim.probes = self.probes.clone();
        sim.snapshot_every = self.output.snapshot_every;
        sim.newmark = self.newmark;
        sim.linear_solver = self.linear_solver;
        Ok(sim)
    }

    /// Initial conditions that need no eigen solve.
    pub fn simple_initial(&self, m: &Mesh) -> Option<InitialConditions> {
        match self.initial {
            InitialConfig::Zero => Some(InitialConditions::Zero),
            InitialConfig::Manufactured => Some(InitialConditions::Functions { w0: Arc::new(|x, y| mms_w(x, y, 0.0)), v0: Arc::new(|x, y| mms_wt(x, y, 0.0)) }),
            InitialConfig::StandingWave { m: a, n: b } => {
                let MeshKind::Rectangle { x0, x1, y0, y1 } = m.kind else {
                    return None;
                };
                let p = self.plate_params().ok()?;
                Some(InitialConditions::Functions {
                    w0: Arc::new(move |x, y| standing_wave(a, b, x - x0, y - y0, 0.0, x1 - x0, y1 - y0, &p)),
                    v0: Arc::new(|_, _| 0.0),
                })
            }
            InitialConfig::Mode { .. } => None,
        }
    }
}
