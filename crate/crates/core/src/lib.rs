//! Discrete-time analysis, synthesis and simulation of disturbance-observer
//! (DOb) based motion control loops.
//!
//! The crate is layered bottom-up:
//!
//! - [`zalg`]: real polynomials and rational transfer functions in `z` (and `s`).
//! - [`loops`]: inner (DOb) and outer (PD) loop transfer functions for the
//!   acceleration, velocity and position measurement kinds.
//! - [`robustness`]: Bode sensitivity integrals, frequency sweeps and
//!   waterbed reports.
//! - [`stability`]: closed-form constraint checks, pole classification and
//!   root-locus sweeps.
//! - [`sim`]: time-domain simulation of the full position control system and
//!   an independent transfer-function oracle.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod loops;
pub mod robustness;
pub mod sim;
pub mod stability;
pub mod zalg;

pub use error::{Error, Result};
pub use loops::{CompensatorPhase, DobConfig, LoopSet, MeasurementKind, OuterGains, PlantParams};
pub use zalg::{Domain, Polynomial, RationalTf, RootSet};
