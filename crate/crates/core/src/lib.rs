//! Numerical laboratory for linear cocycles over explicit dynamical systems.
//!
//! The crate estimates Lyapunov spectra, detects dominated splittings from
//! singular-value gaps, identifies observable (physical-like) measures from
//! empirical measures, runs ergodic optimization of the top exponent, and
//! searches for non-uniform expansion witnesses `(λ, K)` along a tracked
//! center-unstable bundle.
//!
//! Every verdict is finite-horizon evidence computed on finite samples; none
//! of it is a proof.

// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod base;
pub mod catalog;
pub mod check;
pub mod cocycle;
pub mod domination;
pub mod ergopt;
pub mod error;
pub mod expansion;
pub mod measures;
pub mod numeric;
pub mod spectrum;

pub use base::{BaseSystem, OrbitSegment, Point};
pub use check::CheckStatus;
pub use cocycle::{BundleFrame, Cocycle, FrameField, LogProduct, MatrixD};
pub use error::{LabError, Result};
