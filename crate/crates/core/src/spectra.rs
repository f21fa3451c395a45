//! Power spectra of probe series, peak picking, envelopes and
//! convergence-order fits.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{PlateError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            // periodic Hann
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

/// One-sided power spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub dt: f64,
    /// Number of samples transformed.
    pub len: usize,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        1.0 / (self.len as f64 * self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub frequency: f64,
    pub power: f64,
    pub bin: usize,
}

fn check_series(series: &[f64], dt: f64) -> Result<()> {
    if series.len() < 8 {
        return Err(PlateError::Invalid(format!("spectrum needs at least 8 samples, got {}", series.len())));
    }
    if !(dt > 0.0) {
        return Err(PlateError::Invalid(format!("sampling interval must be positive, got {dt}")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(PlateError::Invalid("series contains non-finite samples".into()));
    }
    Ok(())
}

/// DFT of the mean-removed, windowed series (all N bins).
pub fn transform(series: &[f64], window: Window) -> Vec<Complex64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let w = window.weights(n);
    let mut buf: Vec<Complex64> = series.iter().zip(&w).map(|(x, w)| Complex64::new((x - mean) * w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// `|X_k|^2` over both halves of the spectrum.
pub fn two_sided_power(series: &[f64], window: Window) -> Vec<f64> {
    transform(series, window).iter().map(|c| c.norm_sqr()).collect()
}

pub fn power_spectrum(series: &[f64], dt: f64) -> Result<Spectrum> {
    power_spectrum_with(series, dt, Window::Hann)
}

pub fn power_spectrum_with(series: &[f64], dt: f64, window: Window) -> Result<Spectrum> {
    check_series(series, dt)?;
    let n = series.len();
    let x = transform(series, window);
    let half = n / 2 + 1;
    let df = 1.0 / (n as f64 * dt);
    Ok(Spectrum { freqs: (0..half).map(|k| k as f64 * df).collect(), power: x[..half].iter().map(|c| c.norm_sqr()).collect(), dt, len: n })
}

/// Local maxima with `power >= rel_threshold * max`, located to sub-bin
/// accuracy by a parabola through the log powers of three bins.
pub fn find_peaks(s: &Spectrum, rel_threshold: f64) -> Vec<Peak> {
    let p = &s.power;
    let pmax = p.iter().copied().fold(0.0, f64::max);
    if !(pmax > 0.0) {
        return Vec::new();
    }
    let df = s.bin_width();
    let mut peaks = Vec::new();
    for k in 1..p.len().saturating_sub(1) {
        if !(p[k] > p[k - 1] && p[k] > p[k + 1] && p[k] >= rel_threshold * pmax) {
            continue;
        }
        let (a, b, c) = if p[k - 1] > 0.0 && p[k + 1] > 0.0 { (p[k - 1].ln(), p[k].ln(), p[k + 1].ln()) } else { (p[k - 1], p[k], p[k + 1]) };
        let den = a - 2.0 * b + c;
        let delta = if den != 0.0 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
        peaks.push(Peak { frequency: (k as f64 + delta) * df, power: p[k], bin: k });
    }
    peaks
}

/// Least-squares slope of `ln(error)` against `ln(h)`.
pub fn estimate_order(errors: &[f64], spacings: &[f64]) -> Result<f64> {
    if errors.len() != spacings.len() {
        return Err(PlateError::Invalid("errors and spacings differ in length".into()));
    }
    if errors.len() < 2 {
        return Err(PlateError::Invalid("order estimate needs at least two grids".into()));
    }
    if errors.iter().chain(spacings).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(PlateError::Invalid("errors and spacings must be positive".into()));
    }
    let x: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(PlateError::Invalid("spacings must differ".into()));
    }
    Ok(sxy / sxx)
}

/// Largest |x| over samples with `t` in `[t0, t1]`.
pub fn window_amplitude(times: &[f64], series: &[f64], t0: f64, t1: f64) -> f64 {
    times.iter().zip(series).filter(|(t, _)| **t >= t0 && **t <= t1).map(|(_, x)| x.abs()).fold(0.0, f64::max)
}

/// Amplitude envelope of the part of the series between `f_lo` and
/// `f_hi` Hz (FFT band-pass, analytic-signal magnitude).
pub fn band_envelope(series: &[f64], dt: f64, f_lo: f64, f_hi: f64) -> Result<Vec<f64>> {
    check_series(series, dt)?;
    let n = series.len();
    let mut x = transform(series, Window::Rectangular);
    let df = 1.0 / (n as f64 * dt);
    for (k, c) in x.iter_mut().enumerate() {
        let f = k as f64 * df;
        let keep = k > 0 && k < n.div_ceil(2) && f >= f_lo && f <= f_hi;
        *c = if keep { *c * 2.0 } else { Complex64::new(0.0, 0.0) };
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut x);
    Ok(x.iter().map(|c| c.norm() / n as f64).collect())
}

/// Mean spacing of the interior local minima of an envelope sampled every
/// `dt` (the modulation period). Minima within `edge` seconds of either
/// end are ignored; None when fewer than two remain.
pub fn modulation_period(envelope: &[f64], dt: f64, edge: f64) -> Option<f64> {
    let n = envelope.len();
    let skip = (edge / dt).ceil() as usize;
    let mut mins = Vec::new();
    let w = (0.5 / dt).max(1.0) as usize;
    for k in skip.max(1)..n.saturating_sub(skip.max(1)) {
        let lo = k.saturating_sub(w);
        let hi = (k + w).min(n - 1);
        let v = envelope[k];
        if envelope[lo..=hi].iter().all(|&u| v <= u) && envelope[k - 1] > v {
            // parabolic refinement on the three samples
            let (a, b, c) = (envelope[k - 1], v, envelope[k + 1]);
            let den = a - 2.0 * b + c;
            let d = if den != 0.0 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
            mins.push((k as f64 + d) * dt);
        }
    }
    if mins.len() < 2 {
        return None;
    }
    Some((mins[mins.len() - 1] - mins[0]) / (mins.len() - 1) as f64)
}
