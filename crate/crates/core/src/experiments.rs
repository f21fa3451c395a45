//! Experiment drivers. Each `*_study` function computes a report from a
//! configuration without touching the filesystem; the matching `cmd_*`
//! function runs it and writes the output files.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{error_norms, mms_w, ForcedSeries, SeriesTruncation};
use crate::config::{Experiment, ExperimentConfig, ForcingConfig, InitialConfig};
use crate::error::{PlateError, Result};
use crate::fdops::{BcKind, Field, Waveform};
use crate::mesh::{min_physical_spacing, Mesh, MeshKind};
use crate::modal::{count_degenerate_pairs, nodal_lines, operator_scale, solve_modes, solve_modes_with, ModalOptions, Mode};
use crate::output::OutputDir;
use crate::spectra::{band_envelope, find_peaks, modulation_period, power_spectrum_with, window_amplitude, Peak, Spectrum};
use crate::stability::Regime;
use crate::stepper::{choose_dt, run, Diagnostics, InitialConditions, RunOutput, Scheme, SimulationConfig};

/// Initial conditions, solving for an eigenmode when asked to.
pub fn initial_conditions(cfg: &ExperimentConfig, sim: &SimulationConfig) -> Result<InitialConditions> {
    if let Some(ic) = cfg.simple_initial(&sim.mesh) {
        return Ok(ic);
    }
    let InitialConfig::Mode { index } = cfg.initial else {
        return Err(PlateError::Config("initial conditions do not fit this mesh".into()));
    };
    if index == 0 {
        return Err(PlateError::Config("initial mode index is 1-based".into()));
    }
    let modes = solve_modes(&sim.params.undamped(), &sim.mesh, &sim.bspec, index, cfg.study.eig_tol)?;
    let w0 = modes[index - 1].phi.clone();
    Ok(InitialConditions::Fields { v0: Field::zeros(&sim.mesh), w0 })
}

fn simulate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sim = cfg.simulation()?;
    let ic = initial_conditions(cfg, &sim)?;
    run(sim, &ic)
}

fn need_probe(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.probes.is_empty() {
        return Err(PlateError::Config(format!("experiment '{}' needs at least one probe", cfg.experiment.name())));
    }
    Ok(())
}

fn write_probes(out: &OutputDir, r: &RunOutput) -> Result<()> {
    let mut cols = vec!["t".to_string()];
    for k in 1..=r.probes.len() {
        cols.push(format!("w_p{k}"));
        cols.push(format!("v_p{k}"));
    }
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let rows = r.times.iter().enumerate().map(|(i, &t)| {
        let mut row = vec![t];
        for p in &r.probes {
            row.push(p.w[i]);
            row.push(p.v[i]);
        }
        row
    });
    out.write_csv("probes.csv", &cols, rows)?;
    Ok(())
}

fn write_run(cfg: &ExperimentConfig, out: &OutputDir, r: &RunOutput) -> Result<()> {
    write_probes(out, r)?;
    if cfg.output.vtk {
        let m = cfg.mesh.build()?;
        let last = r.snapshots.len().saturating_sub(1);
        for (k, s) in r.snapshots.iter().enumerate() {
            let name = if k == last { "final.vtk".to_string() } else { format!("w_{:06}.vtk", s.step) };
            out.write_vtk(&name, &m, &s.w, s.t)?;
        }
    }
    out.write_json("diagnostics.json", "diagnostics", &r.diagnostics)?;
    Ok(())
}

fn write_spectrum(out: &OutputDir, name: &str, s: &Spectrum) -> Result<()> {
    out.write_csv(name, &["freq", "power"], s.freqs.iter().zip(&s.power).map(|(f, p)| [*f, *p]))?;
    Ok(())
}

/// Plain run: probe CSV, VTK snapshots and diagnostics.
pub fn cmd_run(cfg: &ExperimentConfig, out: &OutputDir) -> Result<Diagnostics> {
    let r = simulate(cfg)?;
    write_run(cfg, out, &r)?;
    Ok(r.diagnostics)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub label: String,
    pub h: f64,
    pub max_error: f64,
    pub l2_error: f64,
    pub dt: f64,
    pub steps: usize,
}

/// Errors per grid and least-squares orders (None with fewer than two grids).
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub order_max: Option<f64>,
    pub order_l2: Option<f64>,
}

impl ConvergenceTable {
    pub fn from_rows(rows: Vec<ConvergenceRow>) -> Result<Self> {
        if rows.windows(2).any(|w| w[1].h >= w[0].h) {
            return Err(PlateError::Invalid("convergence grids must be strictly refined".into()));
        }
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let fit = |e: Vec<f64>| if rows.len() < 2 { None } else { crate::spectra::estimate_order(&e, &h).ok() };
        let order_max = fit(rows.iter().map(|r| r.max_error).collect());
        let order_l2 = fit(rows.iter().map(|r| r.l2_error).collect());
        Ok(ConvergenceTable { rows, order_max, order_l2 })
    }
}

fn fmt_order(o: Option<f64>) -> String {
    o.map_or("n/a".to_string(), |v| format!("{v:.3}"))
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>8} {:>11} {:>11} {:>11} {:>8}", "grid", "h", "max-err", "l2-err", "steps")?;
        for r in &self.rows {
            writeln!(f, "{:>8} {:>11.4e} {:>11.4e} {:>11.4e} {:>8}", r.label, r.h, r.max_error, r.l2_error, r.steps)?;
        }
        write!(f, "order (max) {}  order (l2) {}", fmt_order(self.order_max), fmt_order(self.order_l2))
    }
}

/// Manufactured-solution refinement study over `study.grids`, levels run in
/// parallel. The boundary data are always the manufactured ones.
pub fn mms_study(cfg: &ExperimentConfig) -> Result<ConvergenceTable> {
    if cfg.study.grids.is_empty() {
        return Err(PlateError::Config("study.grids is empty".into()));
    }
    let rows: Vec<Result<ConvergenceRow>> = cfg
        .study
        .grids
        .par_iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.mesh.set_grid(n);
            c.boundary.manufactured = true;
            c.forcing = ForcingConfig::Manufactured;
            c.initial = InitialConfig::Manufactured;
            if c.t_end <= 0.0 {
                c.t_end = 1.0;
            }
            let m = c.mesh.build()?;
            let h = min_physical_spacing(&m);
            if c.scheme == Scheme::Nb2 && c.dt.is_none() {
                let cap = c.study.nb2_dt_per_h * h;
                c.dt_max = Some(c.dt_max.map_or(cap, |d| d.min(cap)));
            }
            let r = simulate(&c)?;
            let label = format!("G_{n}");
            let e = error_norms(&m, &r.final_state.w, mms_w, c.t_end, &label);
            Ok(ConvergenceRow { label, h: mesh_h(&m), max_error: e.max_norm, l2_error: e.l2_norm, dt: r.diagnostics.dt, steps: r.diagnostics.steps })
        })
        .collect();
    ConvergenceTable::from_rows(rows.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Representative spacing for order fits: the radial (first-index) spacing.
fn mesh_h(m: &Mesh) -> f64 {
    m.h1
}

pub fn cmd_mms(cfg: &ExperimentConfig, out: &OutputDir) -> Result<ConvergenceTable> {
    let t = mms_study(cfg)?;
    let rows: Vec<(String, Vec<f64>)> = t.rows.iter().map(|r| (r.label.clone(), vec![r.h, r.max_error, r.l2_error, r.dt, r.steps as f64])).collect();
    out.write_labeled_csv("convergence.csv", &["grid", "h", "max_error", "l2_error", "dt", "steps"], &rows)?;
    out.write_json("convergence.json", "table", &t)?;
    Ok(t)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSummary {
    pub index: usize,
    pub lambda: f64,
    pub frequency: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModalReport {
    pub modes: Vec<ModeSummary>,
    /// Neighbouring eigenvalues within `study.pair_tol` of each other.
    pub pairs: usize,
    pub distinct: usize,
}

/// Lowest `study.modes` modes of the undamped operator.
pub fn modal_study(cfg: &ExperimentConfig) -> Result<(ModalReport, Vec<Mode>)> {
    let sim = cfg.simulation()?;
    let modes = solve_modes(&sim.params.undamped(), &sim.mesh, &sim.bspec, cfg.study.modes, cfg.study.eig_tol)?;
    let lambdas: Vec<f64> = modes.iter().map(|m| m.lambda).collect();
    let pairs = count_degenerate_pairs(&lambdas, cfg.study.pair_tol);
    let summary = modes.iter().enumerate().map(|(i, m)| ModeSummary { index: i + 1, lambda: m.lambda, frequency: m.frequency, residual: m.residual }).collect();
    Ok((ModalReport { modes: summary, pairs, distinct: modes.len() - pairs }, modes))
}

pub fn cmd_eigs(cfg: &ExperimentConfig, out: &OutputDir) -> Result<ModalReport> {
    let (rep, modes) = modal_study(cfg)?;
    let m = cfg.mesh.build()?;
    out.write_csv("modes.csv", &["index", "lambda", "frequency", "residual"], rep.modes.iter().map(|s| [s.index as f64, s.lambda, s.frequency, s.residual]))?;
    for (i, mode) in modes.iter().enumerate() {
        if cfg.output.vtk {
            out.write_vtk(&format!("mode_{:03}.vtk", i + 1), &m, &mode.phi, 0.0)?;
        }
        if cfg.output.nodal_lines {
            out.write_nodal_lines(&format!("nodal_{:03}.csv", i + 1), &nodal_lines(&m, &mode.phi))?;
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct DtReport {
    pub scheme: Scheme,
    pub csf: f64,
    pub dt: f64,
    pub steps: usize,
    pub k_hat_max: f64,
    pub b_hat_max: f64,
    pub lambda_max: [f64; 2],
    pub regime: Regime,
}

impl fmt::Display for DtReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scheme {}  C_sf {}", self.scheme.name(), self.csf)?;
        writeln!(f, "dt {:.6e}  steps {}", self.dt, self.steps)?;
        writeln!(f, "K_hat_max {:.6e}  B_hat_max {:.6e}", self.k_hat_max, self.b_hat_max)?;
        write!(f, "lambda_max {:.6e} {:+.6e}i  regime {:?}", self.lambda_max[0], self.lambda_max[1], self.regime)
    }
}

/// Time step selection without running.
pub fn dt_study(cfg: &ExperimentConfig) -> Result<DtReport> {
    let sim = cfg.simulation()?;
    let b = crate::stability::mesh_symbol_max(&sim.params, &sim.mesh);
    let dt = choose_dt(&sim)?;
    let steps = if sim.t_end > 0.0 { (sim.t_end / dt).round() as usize } else { 0 };
    Ok(DtReport {
        scheme: sim.scheme,
        csf: sim.csf.unwrap_or(sim.scheme.default_csf()),
        dt,
        steps,
        k_hat_max: b.k_hat_max,
        b_hat_max: b.b_hat_max,
        lambda_max: [b.lambda_max.re, b.lambda_max.im],
        regime: b.regime,
    })
}

pub fn cmd_dt(cfg: &ExperimentConfig, out: &OutputDir) -> Result<DtReport> {
    let r = dt_study(cfg)?;
    out.write_json("dt.json", "dt", &r)?;
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub bin_width: f64,
    pub peaks: Vec<Peak>,
    pub diagnostics: Diagnostics,
}

fn spectrum_of(cfg: &ExperimentConfig, r: &RunOutput) -> Result<Spectrum> {
    power_spectrum_with(&r.probes[0].w, r.diagnostics.dt, cfg.study.window.into())
}

/// Run, then the power spectrum of the first probe's displacement.
pub fn spectrum_study(cfg: &ExperimentConfig) -> Result<(SpectrumReport, Spectrum, RunOutput)> {
    need_probe(cfg)?;
    let r = simulate(cfg)?;
    let s = spectrum_of(cfg, &r)?;
    let peaks = find_peaks(&s, cfg.study.threshold);
    Ok((SpectrumReport { bin_width: s.bin_width(), peaks, diagnostics: r.diagnostics.clone() }, s, r))
}

pub fn cmd_spectrum(cfg: &ExperimentConfig, out: &OutputDir) -> Result<SpectrumReport> {
    let (rep, s, r) = spectrum_study(cfg)?;
    write_probes(out, &r)?;
    write_spectrum(out, "spectrum.csv", &s)?;
    write_peaks(out, &rep.peaks)?;
    Ok(rep)
}

fn write_peaks(out: &OutputDir, peaks: &[Peak]) -> Result<()> {
    out.write_csv("peaks.csv", &["freq", "power", "bin"], peaks.iter().map(|p| [p.frequency, p.power, p.bin as f64]))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct NaturalSearch {
    pub search_hz: f64,
    pub natural_hz: f64,
    pub peaks: Vec<Peak>,
    pub bin_width: f64,
}

/// Locate a natural frequency in `study.band_hz`: drive at
/// `study.search_hz` and take the strongest spectral peak in the band that
/// is more than two bins from the drive.
pub fn find_natural(cfg: &ExperimentConfig) -> Result<(NaturalSearch, Spectrum)> {
    need_probe(cfg)?;
    let mut c = cfg.clone();
    c.set_drive_hz(cfg.study.search_hz)?;
    let r = simulate(&c)?;
    let s = spectrum_of(cfg, &r)?;
    let peaks = find_peaks(&s, cfg.study.threshold);
    let bw = s.bin_width();
    let [lo, hi] = cfg.study.band_hz;
    let best = peaks
        .iter()
        .filter(|p| p.frequency >= lo && p.frequency <= hi && (p.frequency - cfg.study.search_hz).abs() > 2.0 * bw)
        .max_by(|a, b| a.power.total_cmp(&b.power))
        .ok_or_else(|| PlateError::Invalid(format!("no spectral peak between {lo} and {hi} Hz")))?;
    Ok((NaturalSearch { search_hz: cfg.study.search_hz, natural_hz: best.frequency, peaks, bin_width: bw }, s))
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceReport {
    pub natural_hz: f64,
    pub drive_hz: f64,
    /// Largest |w| at the first probe over the first and last 5 s.
    pub early_amplitude: f64,
    pub late_amplitude: f64,
    pub growth: f64,
}

fn natural_or_search(cfg: &ExperimentConfig) -> Result<(f64, Option<(NaturalSearch, Spectrum)>)> {
    match cfg.study.natural_hz {
        Some(f) => Ok((f, None)),
        None => {
            let (ns, s) = find_natural(cfg)?;
            Ok((ns.natural_hz, Some((ns, s))))
        }
    }
}

/// The frequency search behind a study, when one was run.
pub type SearchOutcome = Option<(NaturalSearch, Spectrum)>;

/// Drive at the located natural frequency (or `study.drive_hz`) and compare
/// early and late amplitudes.
pub fn resonance_study(cfg: &ExperimentConfig) -> Result<(ResonanceReport, RunOutput, SearchOutcome)> {
    need_probe(cfg)?;
    let (natural, search) = natural_or_search(cfg)?;
    let drive = cfg.study.drive_hz.unwrap_or(natural);
    let mut c = cfg.clone();
    c.set_drive_hz(drive)?;
    let r = simulate(&c)?;
    let t_end = c.t_end;
    let w = &r.probes[0].w;
    let early = window_amplitude(&r.times, w, 0.0, 5.0_f64.min(t_end));
    let late = window_amplitude(&r.times, w, (t_end - 5.0).max(0.0), t_end);
    let growth = if early > 0.0 { late / early } else { f64::INFINITY };
    Ok((ResonanceReport { natural_hz: natural, drive_hz: drive, early_amplitude: early, late_amplitude: late, growth }, r, search))
}

fn write_search(out: &OutputDir, search: &Option<(NaturalSearch, Spectrum)>) -> Result<()> {
    if let Some((ns, s)) = search {
        write_spectrum(out, "search_spectrum.csv", s)?;
        out.write_json("search.json", "search", ns)?;
    }
    Ok(())
}

pub fn cmd_resonance(cfg: &ExperimentConfig, out: &OutputDir) -> Result<ResonanceReport> {
    let (rep, r, search) = resonance_study(cfg)?;
    write_search(out, &search)?;
    write_run(cfg, out, &r)?;
    out.write_json("resonance.json", "resonance", &rep)?;
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct BeatReport {
    pub natural_hz: f64,
    pub drive_hz: f64,
    pub bin_width: f64,
    pub peaks: Vec<Peak>,
    pub envelope_period: Option<f64>,
    /// `1 / |drive - natural|`.
    pub expected_period: f64,
}

/// Drive near (not at) the natural frequency; spectrum and envelope of the
/// first probe.
pub fn beat_study(cfg: &ExperimentConfig) -> Result<(BeatReport, RunOutput, Vec<f64>, Spectrum, SearchOutcome)> {
    need_probe(cfg)?;
    let drive = cfg.study.drive_hz.ok_or_else(|| PlateError::Config("beat needs study.drive_hz".into()))?;
    let (natural, search) = natural_or_search(cfg)?;
    let mut c = cfg.clone();
    c.set_drive_hz(drive)?;
    let r = simulate(&c)?;
    let dt = r.diagnostics.dt;
    let w = &r.probes[0].w;
    let s = spectrum_of(cfg, &r)?;
    let peaks = find_peaks(&s, cfg.study.threshold);
    let lo = drive.min(natural) - 0.5;
    let hi = drive.max(natural) + 0.5;
    let env = band_envelope(w, dt, lo.max(0.0), hi)?;
    let period = modulation_period(&env, dt, 1.0);
    let rep = BeatReport {
        natural_hz: natural,
        drive_hz: drive,
        bin_width: s.bin_width(),
        peaks,
        envelope_period: period,
        expected_period: 1.0 / (drive - natural).abs(),
    };
    Ok((rep, r, env, s, search))
}

pub fn cmd_beat(cfg: &ExperimentConfig, out: &OutputDir) -> Result<BeatReport> {
    let (rep, r, env, s, search) = beat_study(cfg)?;
    write_search(out, &search)?;
    write_run(cfg, out, &r)?;
    write_spectrum(out, "spectrum.csv", &s)?;
    write_peaks(out, &rep.peaks)?;
    out.write_csv("envelope.csv", &["t", "w", "envelope"], r.times.iter().zip(&r.probes[0].w).zip(&env).map(|((t, w), e)| [*t, *w, *e]))?;
    out.write_json("beat.json", "beat", &rep)?;
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChladniReport {
    /// 1-based among the excited elastic modes; 0 when chosen by target
    /// frequency.
    pub mode: usize,
    pub mode_frequency: f64,
    pub drive_hz: f64,
    /// |<w, phi>| / (|w| |phi|) for the final displacement.
    pub shape_correlation: f64,
    pub nodal_polylines: usize,
    pub diagnostics: Diagnostics,
}

/// Projection of `phi` onto the forcing footprint, relative to the norms of
/// both; zero for modes the load cannot excite.
fn load_coupling(cfg: &ExperimentConfig, m: &Mesh, phi: &Field) -> f64 {
    let region = match cfg.forcing {
        ForcingConfig::Sinusoid { region, .. } => region,
        _ => None,
    };
    let (mut proj, mut pp, mut area) = (0.0, 0.0, 0.0);
    for j in 0..m.n2 as isize {
        for i in 0..m.n1 as isize {
            let (x, y) = m.coords(i, j);
            let w = m.cell_weight(i);
            let v = phi.get(i, j);
            pp += w * v * v;
            if region.is_none_or(|b| x >= b[0] && x <= b[1] && y >= b[2] && y <= b[3]) {
                proj += w * v;
                area += w;
            }
        }
    }
    if pp > 0.0 && area > 0.0 {
        proj.abs() / (pp * area).sqrt()
    } else {
        0.0
    }
}

/// Solve for the modes, drive the localized forcing at the chosen mode's
/// frequency, and compare the final displacement with the mode shape.
/// Only elastic modes the load excites are candidates: the
/// `study.mode`-th of them, or with `study.target_hz` the one nearest that
/// frequency (shift-invert about it).
pub fn chladni_study(cfg: &ExperimentConfig) -> Result<(ChladniReport, Mode, RunOutput)> {
    let sim = cfg.simulation()?;
    let p = sim.params.undamped();
    let floor = 1e-6 * operator_scale(&p, &sim.mesh);
    let excited = |m: &Mode| m.lambda > floor && load_coupling(cfg, &sim.mesh, &m.phi) > 1e-6;
    let (index, mode) = match cfg.study.target_hz {
        Some(f) => {
            if !(f > 0.0) {
                return Err(PlateError::NoDynamics);
            }
            let omega = 2.0 * std::f64::consts::PI * f;
            let opts = ModalOptions { shift: Some(p.rho_h * omega * omega), ..ModalOptions::default() };
            let modes = solve_modes_with(&p, &sim.mesh, &sim.bspec, cfg.study.modes.max(1), cfg.study.eig_tol, &opts)?;
            let best = modes
                .into_iter()
                .filter(|m| excited(m))
                .min_by(|a, b| (a.frequency - f).abs().total_cmp(&(b.frequency - f).abs()))
                .ok_or_else(|| PlateError::Config(format!("no mode excited by the load near {f} Hz; raise study.modes")))?;
            (0, best)
        }
        None => {
            let want = cfg.study.mode;
            let k = cfg.study.modes.max(want + 3);
            let modes = solve_modes(&p, &sim.mesh, &sim.bspec, k, cfg.study.eig_tol)?;
            let chosen: Vec<Mode> = modes.into_iter().filter(|m| excited(m)).collect();
            let n = chosen.len();
            let m = chosen
                .into_iter()
                .nth(want - 1)
                .ok_or_else(|| PlateError::Config(format!("only {n} excited elastic modes among the {k} computed; raise study.modes")))?;
            (want, m)
        }
    };
    let drive = cfg.study.drive_hz.unwrap_or(mode.frequency);
    if !(drive > 0.0) {
        return Err(PlateError::NoDynamics);
    }
    let mut c = cfg.clone();
    c.set_drive_hz(drive)?;
    let r = simulate(&c)?;
    let w = &r.final_state.w;
    let m = sim.mesh;
    let (mut ww, mut pp, mut wp) = (0.0, 0.0, 0.0);
    for j in 0..m.n2 as isize {
        for i in 0..m.n1 as isize {
            let (a, b) = (w.get(i, j), mode.phi.get(i, j));
            ww += a * a;
            pp += b * b;
            wp += a * b;
        }
    }
    let corr = if ww > 0.0 && pp > 0.0 { wp.abs() / (ww * pp).sqrt() } else { 0.0 };
    let rep = ChladniReport {
        mode: index,
        mode_frequency: mode.frequency,
        drive_hz: drive,
        shape_correlation: corr,
        nodal_polylines: nodal_lines(&m, w).polylines.len(),
        diagnostics: r.diagnostics.clone(),
    };
    Ok((rep, mode, r))
}

pub fn cmd_chladni(cfg: &ExperimentConfig, out: &OutputDir) -> Result<ChladniReport> {
    let (rep, mode, r) = chladni_study(cfg)?;
    let m = cfg.mesh.build()?;
    write_run(cfg, out, &r)?;
    out.write_vtk("mode.vtk", &m, &mode.phi, 0.0)?;
    out.write_nodal_lines("mode_nodal.csv", &nodal_lines(&m, &mode.phi))?;
    out.write_nodal_lines("final_nodal.csv", &nodal_lines(&m, &r.final_state.w))?;
    out.write_json("chladni.json", "chladni", &rep)?;
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct ForcedReport {
    pub probe: [f64; 2],
    /// max_t |w_h - w_series| / max_t |w_series| at the probe.
    pub relative_error: f64,
    /// max_t |S(M, N) - S(2M, 2N)| at the probe.
    pub truncation_change: f64,
    pub diagnostics: Diagnostics,
}

/// Sinusoidally forced simply supported rectangle against the modal series.
pub fn forced_study(cfg: &ExperimentConfig) -> Result<(ForcedReport, RunOutput, Vec<f64>)> {
    need_probe(cfg)?;
    let sim = cfg.simulation()?;
    let MeshKind::Rectangle { x0, x1, y0, y1 } = sim.mesh.kind else {
        return Err(PlateError::Config("forced needs a rectangle".into()));
    };
    if sim.mesh.sides().iter().any(|&s| sim.bspec.kind(s) != Some(BcKind::Supported)) || cfg.boundary.manufactured {
        return Err(PlateError::Config("forced needs homogeneous supported edges".into()));
    }
    let ForcingConfig::Sinusoid { f0, frequency_hz, waveform: Waveform::Sin, region: None } = cfg.forcing else {
        return Err(PlateError::Config("forced needs whole-plate sin forcing".into()));
    };
    if !matches!(cfg.initial, InitialConfig::Zero) {
        return Err(PlateError::Config("forced starts from rest".into()));
    }
    let xi = 2.0 * std::f64::consts::PI * frequency_hz;
    let [mm, nn] = cfg.study.series;
    let (l, h) = (x1 - x0, y1 - y0);
    let series = ForcedSeries::new(f0, xi, SeriesTruncation::new(mm, nn)?, l, h, &sim.params)?;
    let doubled = ForcedSeries::new(f0, xi, SeriesTruncation::new(2 * mm, 2 * nn)?, l, h, &sim.params)?;
    let r = simulate(cfg)?;
    let probe = cfg.probes[0];
    let (px, py) = (probe[0] - x0, probe[1] - y0);
    let exact: Vec<f64> = r.times.iter().map(|&t| series.eval(px, py, t)).collect();
    let scale = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = r.probes[0].w.iter().zip(&exact).fold(0.0f64, |a, (n, e)| a.max((n - e).abs()));
    let trunc = r.times.iter().zip(&exact).fold(0.0f64, |a, (&t, e)| a.max((doubled.eval(px, py, t) - e).abs()));
    let rep = ForcedReport { probe, relative_error: if scale > 0.0 { err / scale } else { err }, truncation_change: trunc, diagnostics: r.diagnostics.clone() };
    Ok((rep, r, exact))
}

pub fn cmd_forced(cfg: &ExperimentConfig, out: &OutputDir) -> Result<ForcedReport> {
    let (rep, r, exact) = forced_study(cfg)?;
    write_run(cfg, out, &r)?;
    out.write_csv("comparison.csv", &["t", "w_numeric", "w_series"], r.times.iter().zip(&r.probes[0].w).zip(&exact).map(|((t, n), e)| [*t, *n, *e]))?;
    out.write_json("forced.json", "forced", &rep)?;
    Ok(rep)
}

/// Any report, for printing and JSON.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Run(Diagnostics),
    Mms(ConvergenceTable),
    Eigs(ModalReport),
    Dt(DtReport),
    Spectrum(SpectrumReport),
    Resonance(ResonanceReport),
    Beat(BeatReport),
    Chladni(ChladniReport),
    Forced(ForcedReport),
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Report::Run(d) => write!(f, "{} dt {:.6e}, {} steps, regime {:?}, {:.2} s", d.scheme.name(), d.dt, d.steps, d.regime, d.wall_time_s),
            Report::Mms(t) => write!(f, "{t}"),
            Report::Eigs(r) => {
                for m in &r.modes {
                    writeln!(f, "{:>4} lambda {:.10e}  f {:.6} Hz  residual {:.2e}", m.index, m.lambda, m.frequency, m.residual)?;
                }
                write!(f, "{} near-degenerate pairs, {} distinct", r.pairs, r.distinct)
            }
            Report::Dt(r) => write!(f, "{r}"),
            Report::Spectrum(r) => {
                write!(f, "bin width {:.4e} Hz; peaks:", r.bin_width)?;
                for p in &r.peaks {
                    write!(f, " {:.5}", p.frequency)?;
                }
                Ok(())
            }
            Report::Resonance(r) => write!(
                f,
                "natural {:.5} Hz, drive {:.5} Hz, amplitude {:.4e} -> {:.4e} (x{:.2})",
                r.natural_hz, r.drive_hz, r.early_amplitude, r.late_amplitude, r.growth
            ),
            Report::Beat(r) => {
                write!(f, "natural {:.5} Hz, drive {:.5} Hz, bin {:.4e}; peaks:", r.natural_hz, r.drive_hz, r.bin_width)?;
                for p in &r.peaks {
                    write!(f, " {:.5}", p.frequency)?;
                }
                match r.envelope_period {
                    Some(p) => write!(f, "\nenvelope period {p:.4} s (expected {:.4} s)", r.expected_period),
                    None => write!(f, "\nenvelope period n/a (expected {:.4} s)", r.expected_period),
                }
            }
            Report::Chladni(r) => write!(
                f,
                "mode at {:.4} Hz, driven at {:.4} Hz; shape correlation {:.4}, {} nodal polylines",
                r.mode_frequency, r.drive_hz, r.shape_correlation, r.nodal_polylines
            ),
            Report::Forced(r) => {
                write!(f, "relative error {:.4e} at ({}, {}); series truncation change {:.3e}", r.relative_error, r.probe[0], r.probe[1], r.truncation_change)
            }
        }
    }
}

/// Run the configured experiment and write its files into `out`.
pub fn execute(cfg: &ExperimentConfig, out: &OutputDir) -> Result<Report> {
    Ok(match cfg.experiment {
        Experiment::Run => Report::Run(cmd_run(cfg, out)?),
        Experiment::Mms => Report::Mms(cmd_mms(cfg, out)?),
        Experiment::Eigs => Report::Eigs(cmd_eigs(cfg, out)?),
        Experiment::Dt => Report::Dt(cmd_dt(cfg, out)?),
        Experiment::Spectrum => Report::Spectrum(cmd_spectrum(cfg, out)?),
        Experiment::Resonance => Report::Resonance(cmd_resonance(cfg, out)?),
        Experiment::Beat => Report::Beat(cmd_beat(cfg, out)?),
        Experiment::Chladni => Report::Chladni(cmd_chladni(cfg, out)?),
        Experiment::Forced => Report::Forced(cmd_forced(cfg, out)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(h: f64, e: f64) -> ConvergenceRow {
        ConvergenceRow { label: format!("h{h}"), h, max_error: e, l2_error: e, dt: 0.1, steps: 1 }
    }

    #[test]
    fn one_grid_has_no_order() {
        let t = ConvergenceTable::from_rows(vec![row(0.1, 1e-3)]).unwrap();
        assert!(t.order_max.is_none());
        assert!(t.to_string().contains("n/a"));
    }

    #[test]
    fn second_order_table() {
        let t = ConvergenceTable::from_rows(vec![row(0.2, 4e-2), row(0.1, 1e-2), row(0.05, 2.5e-3)]).unwrap();
        assert!((t.order_max.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unrefined_grids_rejected() {
        assert!(ConvergenceTable::from_rows(vec![row(0.1, 1.0), row(0.1, 0.5)]).is_err());
    }
}
