//! CMV matrices with skew-shift Verblunsky coefficients.
//!
//! The crate builds finite restrictions of extended CMV operators, their
//! characteristic polynomials, transfer matrices and Green's functions, and
//! the eigenvalue statistics and ergodic sums used to study them.

pub mod cmv;
pub mod coeffs;
pub mod ergodic;
pub mod error;
pub mod green;
pub mod linalg;
pub mod num;
pub mod stats;
pub mod szego;
pub mod transfer;

pub use error::{Error, Result};
pub use num::C64;
