//! Polynomial and rational transfer-function algebra.
//!
//! Polynomials store real coefficients in ascending powers. Transfer functions
//! carry a [`Domain`] tag so that discrete (`z`) and continuous (`s`) objects
//! never mix. No pole-zero cancellation is ever performed implicitly.

mod poly;
mod roots;
mod tf;

pub use poly::Polynomial;
pub use roots::RootSet;
pub use tf::{Connection, Domain, RationalTf};

/// Relative coefficient tolerance used by approximate equality checks.
pub const COEFF_TOL: f64 = 1e-10;
