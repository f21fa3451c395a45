use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Sin,
    Cos,
}

/// Right-hand side `F(x, y, t)` of the plate equation.
#[derive(Clone)]
pub enum ForcingSpec {
    Zero,
    Analytic(SpaceTimeFn),
    /// Sum of `space_k(x, y) * time_k(t)`; spatial factors are sampled once.
    Separable(Vec<(SpaceFn, TimeFn)>),
    /// `f0 * wave(xi t)` on an axis-aligned box `[x0, x1, y0, y1]`
    /// (whole domain when `region` is None).
    LocalizedSinusoid {
        f0: f64,
        xi: f64,
        waveform: Waveform,
        region: Option<[f64; 4]>,
    },
}

impl std::fmt::Debug for ForcingSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ForcingSpec::Zero => write!(f, "Zero"),
            ForcingSpec::Analytic(_) => write!(f, "Analytic(..)"),
            ForcingSpec::Separable(t) => write!(f, "Separable({} terms)", t.len()),
            ForcingSpec::LocalizedSinusoid { f0, xi, waveform, region } => {
                write!(f, "LocalizedSinusoid {{ f0: {f0}, xi: {xi}, waveform: {waveform:?}, region: {region:?} }}")
            }
        }
    }
}

impl ForcingSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, ForcingSpec::Zero)
    }

    /// True when the box overlaps the domain's bounding region.
    pub fn region_hits(&self, m: &Mesh) -> bool {
        let ForcingSpec::LocalizedSinusoid { region: Some(b), .. } = self else {
            return true;
        };
        let (n1, n2) = (m.n1 as isize, m.n2 as isize);
        (0..n2).any(|j| {
            (0..n1).any(|i| {
                let (x, y) = m.coords(i, j);
                x >= b[0] && x <= b[1] && y >= b[2] && y <= b[3]
            })
        })
    }
}

/// Pre-sampled evaluator writing `F(., t)` at physical points.
pub(crate) struct ForcingEval {
    spec: ForcingSpec,
    spatial: Vec<Vec<f64>>,
    coords: Vec<(usize, f64, f64)>,
}

impl ForcingEval {
    pub fn new(spec: &ForcingSpec, m: &Mesh) -> Self {
        let mut coords = Vec::with_capacity(m.n1 * m.n2);
        for i2 in 0..m.n2 as isize {
            for i1 in 0..m.n1 as isize {
                let (x, y) = m.coords(i1, i2);
                coords.push((m.index(i1, i2), x, y));
            }
        }
        let spatial = match spec {
            ForcingSpec::Separable(terms) => terms.iter().map(|(s, _)| coords.iter().map(|&(_, x, y)| s(x, y)).collect()).collect(),
            ForcingSpec::LocalizedSinusoid { region, .. } => {
                let mask = coords
                    .iter()
                    .map(|&(_, x, y)| match region {
                        Some(b) if !(x >= b[0] && x <= b[1] && y >= b[2] && y <= b[3]) => 0.0,
                        _ => 1.0,
                    })
                    .collect();
                vec![mask]
            }
            _ => Vec::new(),
        };
        ForcingEval { spec: spec.clone(), spatial, coords }
    }

    pub fn is_zero(&self) -> bool {
        self.spec.is_zero()
    }

    /// Overwrite `out` at physical points with `F(., t)`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        match &self.spec {
            ForcingSpec::Zero => {
                for &(k, _, _) in &self.coords {
                    out[k] = 0.0;
                }
            }
            ForcingSpec::Analytic(f) => {
                for &(k, x, y) in &self.coords {
                    out[k] = f(x, y, t);
                }
            }
            ForcingSpec::Separable(terms) => {
                let amps: Vec<f64> = terms.iter().map(|(_, g)| g(t)).collect();
                for (n, &(k, _, _)) in self.coords.iter().enumerate() {
                    let mut s = 0.0;
                    for (a, sp) in amps.iter().zip(&self.spatial) {
                        s += a * sp[n];
                    }
                    out[k] = s;
                }
            }
            ForcingSpec::LocalizedSinusoid { f0, xi, waveform, .. } => {
                let a = f0
                    * match waveform {
                        Waveform::Sin => (xi * t).sin(),
                        Waveform::Cos => (xi * t).cos(),
                    };
                for (n, &(k, _, _)) in self.coords.iter().enumerate() {
                    out[k] = a * self.spatial[0][n];
                }
            }
        }
    }
}
