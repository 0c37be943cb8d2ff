//! Dense square matrices over a [`Scalar`] backend.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{GaussianRational, Scalar};

/// Row-major `n × n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Matrix unit `e_{ij}` (zero based).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Matrix::zeros(n);
        m[(i, j)] = S::one();
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!("expected {n} columns in every row")));
        }
        Ok(Matrix { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn from_gaussian(m: &Matrix<GaussianRational>) -> Self {
        m.map(S::from_gaussian)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { n: self.n, data: self.data.iter().map(f).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(S::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        *self == Matrix::identity(self.n)
    }

    pub fn trace(&self) -> S {
        (0..self.n).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.n, |i, j| self[(j, i)].clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|x| x.clone() * c.clone())
    }

    /// Product that honours the backend's size guard.
    pub fn try_mul(&self, o: &Matrix<S>) -> Result<Matrix<S>> {
        if self.n != o.n {
            return Err(Error::DimensionMismatch(format!("{}x{} times {}x{}", self.n, self.n, o.n, o.n)));
        }
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &o.data[k * n + j];
                    if b.is_zero() {
                        continue;
                    }
                    let p = a.mul_checked(b)?;
                    let slot = &mut out.data[i * n + j];
                    *slot = std::mem::replace(slot, S::zero()) + p;
                }
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, o: &Matrix<S>) -> Result<Matrix<S>> {
        Ok(self.try_mul(o)? - o.try_mul(self)?)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(S::magnitude).fold(0.0, f64::max)
    }

    /// Inverse by Gauss-Jordan elimination, choosing pivots by [`Scalar::pivot_score`].
    pub fn inverse(&self) -> Result<Matrix<S>> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Matrix::<S>::identity(n);
        for col in 0..n {
            let (piv, score) = (col..n).map(|r| (r, a[(r, col)].pivot_score())).fold((col, 0.0), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if score == 0.0 {
                return Err(Error::SingularLeading(format!("no invertible pivot in column {}", col + 1)));
            }
            if piv != col {
                a.swap_rows(piv, col);
                inv.swap_rows(piv, col);
            }
            let p_inv =
                a[(col, col)].try_inv().ok_or_else(|| Error::SingularLeading("pivot lost invertibility".into()))?;
            for j in 0..n {
                a[(col, j)] = a[(col, j)].clone() * p_inv.clone();
                inv[(col, j)] = inv[(col, j)].clone() * p_inv.clone();
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                for j in 0..n {
                    a[(r, j)] = a[(r, j)].clone() - f.clone() * a[(col, j)].clone();
                    inv[(r, j)] = inv[(r, j)].clone() - f.clone() * inv[(col, j)].clone();
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.n {
            self.data.swap(a * self.n + j, b * self.n + j);
        }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

impl<S: Scalar> Add for Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, o: Matrix<S>) -> Matrix<S> {
        assert_eq!(self.n, o.n, "matrix size mismatch");
        Matrix { n: self.n, data: self.data.into_iter().zip(o.data).map(|(a, b)| a + b).collect() }
    }
}

impl<S: Scalar> Sub for Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, o: Matrix<S>) -> Matrix<S> {
        assert_eq!(self.n, o.n, "matrix size mismatch");
        Matrix { n: self.n, data: self.data.into_iter().zip(o.data).map(|(a, b)| a - b).collect() }
    }
}

impl<S: Scalar> Neg for Matrix<S> {
    type Output = Matrix<S>;
    fn neg(self) -> Matrix<S> {
        Matrix { n: self.n, data: self.data.into_iter().map(|a| -a).collect() }
    }
}

impl<S: Scalar + fmt::Display> fmt::Display for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> =
            self.rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")).collect();
        write!(f, "[[{}]]", rows.join("], ["))
    }
}

impl<S: Scalar + Serialize> Serialize for Matrix<S> {
    fn serialize<Se: Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        self.rows().serialize(s)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for Matrix<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<S>>::deserialize(d)?;
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}
