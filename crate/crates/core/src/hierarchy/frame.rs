use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{GaussianRational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Diagonal,
    Unipotent,
    Custom,
}

/// Basis `E_1, ..., E_r` of a commutative algebra of traceless matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutativeFrame {
    n: usize,
    kind: FrameKind,
    basis: Vec<Matrix<GaussianRational>>,
}

impl CommutativeFrame {
    /// `E_alpha = i (e_{alpha+1,alpha+1} - e_{alpha,alpha})`; for `n = 2` this is `diag(-i, i)`.
    pub fn diagonal(n: usize) -> Result<Self> {
        CommutativeFrame::diagonal_scaled(n, GaussianRational::i())
    }

    pub fn diagonal_scaled(n: usize, scale: GaussianRational) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("frames need n >= 2".into()));
        }
        if scale.is_zero() {
            return Err(Error::DependentBasis);
        }
        let basis = (0..n - 1)
            .map(|a| {
                let mut e = Matrix::zeros(n);
                e[(a, a)] = -scale.clone();
                e[(a + 1, a + 1)] = scale.clone();
                e
            })
            .collect();
        CommutativeFrame::validated(n, FrameKind::Diagonal, basis)
    }

    /// Powers `B, B^2, ..., B^{n-1}` of the upper shift `B`.
    pub fn unipotent(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("frames need n >= 2".into()));
        }
        let shift =
            Matrix::from_fn(n, |i, j| if j == i + 1 { GaussianRational::one() } else { GaussianRational::zero() });
        let mut basis = vec![shift.clone()];
        for _ in 2..n {
            let next = basis.last().unwrap().try_mul(&shift)?;
            basis.push(next);
        }
        CommutativeFrame::validated(n, FrameKind::Unipotent, basis)
    }

    pub fn custom(basis: Vec<Matrix<GaussianRational>>) -> Result<Self> {
        let n = basis.first().map(Matrix::n).ok_or_else(|| Error::InvalidInput("empty frame basis".into()))?;
        CommutativeFrame::validated(n, FrameKind::Custom, basis)
    }

    pub fn make(kind: FrameKind, n: usize, basis: Option<Vec<Matrix<GaussianRational>>>) -> Result<Self> {
        match (kind, basis) {
            (FrameKind::Custom, Some(b)) => {
                let f = CommutativeFrame::custom(b)?;
                if f.n != n {
                    return Err(Error::DimensionMismatch(format!("basis is {0}x{0}, expected n = {n}", f.n)));
                }
                Ok(f)
            }
            (FrameKind::Custom, None) => Err(Error::InvalidInput("custom frame needs a basis".into())),
            (_, Some(_)) => Err(Error::InvalidInput("a basis is only accepted for custom frames".into())),
            (FrameKind::Diagonal, None) => CommutativeFrame::diagonal(n),
            (FrameKind::Unipotent, None) => CommutativeFrame::unipotent(n),
        }
    }

    fn validated(n: usize, kind: FrameKind, basis: Vec<Matrix<GaussianRational>>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidInput("empty frame basis".into()));
        }
        for (a, e) in basis.iter().enumerate() {
            if e.n() != n {
                return Err(Error::DimensionMismatch(format!("basis element {} is {1}x{1}", a + 1, e.n())));
            }
            if !e.trace().is_zero() {
                return Err(Error::NotTraceless(a + 1));
            }
        }
        for a in 0..basis.len() {
            for b in a + 1..basis.len() {
                if !basis[a].commutator(&basis[b])?.is_zero() {
                    return Err(Error::NotCommuting(a + 1, b + 1));
                }
            }
        }
        if rank(&basis) < basis.len() {
            return Err(Error::DependentBasis);
        }
        Ok(CommutativeFrame { n, kind, basis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Matrix<GaussianRational>] {
        &self.basis
    }

    /// `E_alpha` for `alpha` in `1..=r`.
    pub fn element(&self, alpha: usize) -> Result<&Matrix<GaussianRational>> {
        if alpha == 0 || alpha > self.basis.len() {
            return Err(Error::IndexOutOfRange(format!("frame index {alpha} not in 1..={}", self.basis.len())));
        }
        Ok(&self.basis[alpha - 1])
    }

    pub fn element_as<S: Scalar>(&self, alpha: usize) -> Result<Matrix<S>> {
        Ok(Matrix::from_gaussian(self.element(alpha)?))
    }

    /// The frame `g0 E_alpha g0^-1`.
    pub fn conjugated(&self, g0: &Matrix<GaussianRational>) -> Result<Self> {
        let inv = g0.inverse()?;
        let basis = self.basis.iter().map(|e| g0.try_mul(e)?.try_mul(&inv)).collect::<Result<Vec<_>>>()?;
        let kind = if g0.is_identity() { self.kind } else { FrameKind::Custom };
        CommutativeFrame::validated(self.n, kind, basis)
    }

    /// Whether `delta(l) = diag(z^{l_1}, ..., z^{l_n})` commutes with the frame.
    pub fn admits_exponent(&self, l: &[i32]) -> bool {
        l.len() == self.n
            && self.basis.iter().all(|e| (0..self.n).all(|i| (0..self.n).all(|j| e[(i, j)].is_zero() || l[i] == l[j])))
    }
}

/// Rank over Q(i) of a list of matrices viewed as vectors.
fn rank(ms: &[Matrix<GaussianRational>]) -> usize {
    let mut rows: Vec<Vec<GaussianRational>> = ms.iter().map(|m| m.entries().to_vec()).collect();
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].inv().unwrap();
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = &row[c] * &inv;
                for (x, p) in row[c..cols].iter_mut().zip(&pivot[c..cols]) {
                    *x = x.clone() - &f * p;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}
