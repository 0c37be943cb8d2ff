//! Truncated loop-series arithmetic and the (sl_n, t)-hierarchies.
//!
//! The crate is layered bottom-up: [`scalar`] backends, dense [`matrix`]
//! coefficients, window-truncated [`series`], the [`hierarchy`] engine
//! (frames, dressings, cut-offs, residuals, the AKNS reduction), the
//! [`linearization`] by oscillating matrices, and the numeric [`solver`]
//! based on Birkhoff factorization of loops on the unit circle.

pub mod config;
pub mod error;
pub mod hierarchy;
pub mod linearization;
pub mod matrix;
pub mod scalar;
pub mod series;
pub mod solver;

pub use config::{SolverConfig, SolverParams, Tolerances};
pub use error::{Error, Result};
pub use linearization::{Connection, ExponentVector, FlowRecord, OscillatingMatrix, Side};
pub use matrix::Matrix;
pub use scalar::{Complex64, DerivationSymbol, DiffPoly, GaussianRational, Indeterminate, Monomial, Scalar};
pub use series::{Grading, LoopSeries, Region, Tail, Window};
