//! Finite-difference solver for the generalized Kirchhoff-Love plate
//!
//! `rho_h w_tt = -k0 w + T lap w - D bih w - k1 w_t + t1 lap w_t + F`
//!
//! on rectangles and annuli, with clamped, simply supported and free edges.
//! Time stepping by an Adams predictor-corrector (PC22) or the implicit
//! average-acceleration Newmark scheme (NB2); modal analysis by shifted
//! inverse subspace iteration.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fdops;
pub mod linalg;
pub mod mesh;
pub mod modal;
pub mod output;
pub mod spectra;
pub mod stability;
pub mod stepper;

pub use error::{PlateError, Result};
