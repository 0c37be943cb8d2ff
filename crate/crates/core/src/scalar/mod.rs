//! Scalar backends for loop-series coefficients.
//!
//! Three backends implement [`Scalar`]: exact Gaussian rationals
//! ([`GaussianRational`]), double precision complex numbers
//! ([`Complex64`]) and differential polynomials ([`DiffPoly`]) over the
//! Gaussian rationals. Every backend embeds Q(i), so frame matrices written
//! over Q(i) can be used with any of them.

mod diffpoly;
mod gaussian;

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

pub use num_complex::Complex64;

pub use diffpoly::{set_term_cap, term_cap, DerivationSymbol, DiffPoly, Indeterminate, Monomial, DEFAULT_TERM_CAP};
pub use gaussian::GaussianRational;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Commutative ring with unit that embeds Q(i).
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;

    /// Image of a Gaussian rational under the structure map Q(i) -> R.
    fn from_gaussian(q: &GaussianRational) -> Self;

    /// Multiplicative inverse, when the element is a unit.
    fn try_inv(&self) -> Option<Self>;

    /// Size estimate used for pivoting and tolerance checks.
    ///
    /// Exact backends that cannot measure an element return `0.0` for zero
    /// and `f64::INFINITY` otherwise.
    fn magnitude(&self) -> f64;

    /// Multiplication that may refuse to run when the result would be too large.
    fn mul_checked(&self, other: &Self) -> Result<Self> {
        Ok(self.clone() * other.clone())
    }

    /// Matrix exponential where the backend can evaluate it; nilpotent
    /// arguments are handled by callers with a finite sum.
    fn matrix_exp(_m: &Matrix<Self>) -> Result<Matrix<Self>> {
        Err(Error::Unsupported("matrix exponential".into()))
    }

    fn from_i64(v: i64) -> Self {
        Self::from_gaussian(&GaussianRational::from_integer(v))
    }

    /// Ranks candidate pivots during elimination; larger is better, zero means unusable.
    fn pivot_score(&self) -> f64 {
        if self.try_inv().is_some() {
            let m = self.magnitude();
            if m.is_finite() {
                m
            } else {
                1.0
            }
        } else {
            0.0
        }
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn from_gaussian(q: &GaussianRational) -> Self {
        q.to_complex()
    }

    fn try_inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.inv())
        }
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn matrix_exp(m: &Matrix<Self>) -> Result<Matrix<Self>> {
        let n = m.n();
        let dm = nalgebra::DMatrix::from_row_slice(n, n, m.entries());
        let e = dm.exp();
        Ok(Matrix::from_fn(n, |i, j| e[(i, j)]))
    }
}
