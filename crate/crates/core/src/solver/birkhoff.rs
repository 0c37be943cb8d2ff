use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::annulus::{max_abs, AnnulusLoop, CMat};
use crate::config::Tolerances;
use crate::error::{Error, Result};

/// `loop = u_minus^-1 p_plus` with `u_minus = Id + sum_{k=1..M} a_k z^-k`.
#[derive(Clone, Debug, Serialize)]
pub struct Factorization {
    pub u_minus: AnnulusLoop,
    pub p_plus: AnnulusLoop,
    /// Largest coefficient of `u_minus loop` at the powers `-M..=-1` fixed by the linear system.
    pub residual: f64,
    /// Largest coefficient of `u_minus loop` below `z^-M`, left by truncating `u_minus`.
    pub truncation: f64,
    /// Condition number of the Toeplitz system.
    pub condition: f64,
}

fn condition(m: &CMat) -> f64 {
    let sv = m.singular_values();
    let (hi, lo) = sv.iter().fold((0.0f64, f64::INFINITY), |(h, l), s| (h.max(*s), l.min(*s)));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Solves `sum_{k=1..M} a_k l_{j+k} = -l_j` for `j` in `-M..=-1` and sets `p_plus = pi_{>=0}(u_minus loop)`.
pub fn birkhoff_factorize(lp: &AnnulusLoop, depth: usize, tol: &Tolerances) -> Result<Factorization> {
    if depth == 0 {
        return Err(Error::InvalidInput("factorization depth must be positive".into()));
    }
    let n = lp.n();
    let mm = depth as i32;
    let size = n * depth;
    // Transposed system: block (j', k') = l_{j+k}^T with j = -1 - j', k = k' + 1.
    let mut a = DMatrix::<Complex64>::zeros(size, size);
    let mut b = DMatrix::<Complex64>::zeros(size, n);
    for jp in 0..depth {
        let j = -1 - jp as i32;
        for kp in 0..depth {
            let k = kp as i32 + 1;
            if let Some(c) = lp.coeff(j + k) {
                a.view_mut((jp * n, kp * n), (n, n)).copy_from(&c.transpose());
            }
        }
        if let Some(c) = lp.coeff(j) {
            b.view_mut((jp * n, 0), (n, n)).copy_from(&(-c.transpose()));
        }
    }
    let cond = condition(&a);
    if cond.is_nan() || cond > tol.cond_max {
        return Err(Error::BigCellViolation(format!(
            "Toeplitz system condition number {cond:.3e} exceeds {:.3e}",
            tol.cond_max
        )));
    }
    let y = a.lu().solve(&b).ok_or_else(|| Error::BigCellViolation("Toeplitz system is singular".into()))?;
    let mut coeffs = vec![(0, CMat::identity(n, n))];
    for kp in 0..depth {
        coeffs.push((-(kp as i32) - 1, y.view((kp * n, 0), (n, n)).transpose()));
    }
    let u_minus = AnnulusLoop::from_coeffs(n, depth, coeffs)?;

    let bound = lp.bound() as i32;
    let mut p = Vec::new();
    let mut residual: f64 = 0.0;
    let mut truncation: f64 = 0.0;
    for q in -bound - mm..=bound {
        let mut acc = CMat::zeros(n, n);
        for k in 0..=mm {
            if let (Some(ak), Some(lq)) = (u_minus.coeff(-k), lp.coeff(q + k)) {
                acc += ak * lq;
            }
        }
        if q < -mm {
            truncation = truncation.max(max_abs(&acc));
        } else if q < 0 {
            residual = residual.max(max_abs(&acc));
        } else {
            p.push((q, acc));
        }
    }
    if residual > tol.fact {
        return Err(Error::BigCellViolation(format!("Toeplitz solve leaves residual {residual:.3e}")));
    }
    let p_plus = AnnulusLoop::from_coeffs(n, lp.bound(), p)?;
    let p0 = p_plus.coeff(0).unwrap();
    let c0 = condition(p0);
    if c0.is_nan() || c0 > tol.cond_max {
        return Err(Error::BigCellViolation(format!("constant term of p_plus has condition number {c0:.3e}")));
    }
    Ok(Factorization { u_minus, p_plus, residual, truncation, condition: cond })
}

/// `max_j |u_minus(z_j)^-1 p_plus(z_j) - loop(z_j)|`.
pub fn reconstruction_error(f: &Factorization, lp: &AnnulusLoop, grid: usize) -> Result<f64> {
    let u = f.u_minus.sample(grid);
    let p = f.p_plus.sample(grid);
    let l = lp.sample(grid);
    let mut err: f64 = 0.0;
    for ((u, p), l) in u.into_iter().zip(p).zip(l) {
        let x = u.lu().solve(&p).ok_or_else(|| Error::BigCellViolation("u_minus is singular on the circle".into()))?;
        err = err.max(max_abs(&(x - l)));
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_factors_trivially() {
        let f = birkhoff_factorize(&AnnulusLoop::identity(2, 4), 3, &Tolerances::default()).unwrap();
        assert!(f.u_minus.is_identity());
        assert!(f.p_plus.is_identity());
        assert_eq!(f.residual, 0.0);
        assert_eq!(f.truncation, 0.0);
    }

    #[test]
    fn nilpotent_tail() {
        let e12 = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let lp = AnnulusLoop::from_coeffs(2, 4, [(0, CMat::identity(2, 2)), (-1, &e12 * c(0.5))]).unwrap();
        let f = birkhoff_factorize(&lp, 4, &Tolerances::default()).unwrap();
        assert!(max_abs(&(f.u_minus.coeff(-1).unwrap() + &e12 * c(0.5))) < 1e-15);
        assert!(f.u_minus.terms().filter(|(k, _)| *k < -1).all(|(_, m)| max_abs(m) < 1e-15));
        assert!(f.p_plus.grid_distance(&AnnulusLoop::identity(2, 4), 32) < 1e-15);
    }

    #[test]
    fn diagonal_winding_is_outside_the_big_cell() {
        let lp = AnnulusLoop::from_coeffs(
            2,
            4,
            [
                (1, CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)])),
                (-1, CMat::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)])),
            ],
        )
        .unwrap();
        assert!(matches!(birkhoff_factorize(&lp, 12, &Tolerances::default()), Err(Error::BigCellViolation(_))));
    }
}
