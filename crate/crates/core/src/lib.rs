//! Solvers for the pathway-based diffusion model (PBDM) of engineered
//! bacterial populations and its anisotropic diffusion limit (ADM).
//!
//! The crate is organized bottom-up:
//!
//! * [`grid`], [`field`] and [`params`] hold the shared domain types,
//! * [`model`] provides the scalar closures `L(h)`, `D(z)`, `k_V` and the
//!   discrete intracellular drift,
//! * [`linalg`] holds the banded direct solvers,
//! * [`pbdm`] advances the kinetic model with the asymptotic-preserving
//!   splitting scheme and [`adm`] advances its limit scheme,
//! * [`stability`] evaluates the closed-form eigenvalue families,
//! * [`diagnostics`] computes the error and deviation probes.
//!
//! Data-parallel loops go through [`Exec`]; with the `parallel` feature
//! disabled every loop runs sequentially.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::approx_constant)]

pub mod adi;
pub mod adm;
pub mod diagnostics;
mod error;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod model;
mod par;
pub mod params;
pub mod pbdm;
pub mod stability;

pub use error::{PbdmError, Result};
pub use field::{InternalField3D, ScalarField2D, SimState};
pub use grid::{Axis, GridSpec, YBoundary};
pub use par::Exec;
pub use params::{DiffusionProfile, KvMode, ModelParams};
