//! Symbolic reduction of the first nontrivial zero-curvature relation for
//! `n = 2`, `E_1 = diag(-i, i)` to the AKNS system.

use std::collections::BTreeMap;

use serde::Serialize;

use super::deformation::{exp_witness, Deformation, HierarchyKind, Target, Witness};
use super::frame::CommutativeFrame;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{DerivationSymbol, DiffPoly, GaussianRational, Indeterminate};
use crate::series::{Grading, LoopSeries, Window};

pub const X: DerivationSymbol = DerivationSymbol::new(1, 1);
pub const T: DerivationSymbol = DerivationSymbol::new(2, 1);

/// One scalar evolution equation `lhs = rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pde {
    pub lhs: DiffPoly,
    pub rhs: DiffPoly,
}

impl Pde {
    pub fn render(&self) -> String {
        format!("{} = {}", self.lhs.render_with(&xt_label), self.rhs.render_with(&xt_label))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AknsReport {
    pub q: DiffPoly,
    pub r: DiffPoly,
    pub u11: DiffPoly,
    pub u22: DiffPoly,
    pub u12: DiffPoly,
    pub u21: DiffPoly,
    pub pde_q: Pde,
    pub pde_r: Pde,
}

impl AknsReport {
    pub fn render_text(&self) -> String {
        let l = &xt_label;
        format!(
            "q = {}\nr = {}\nu11 = {}\nu22 = {}\nu12 = {}\nu21 = {}\n{}\n{}\n",
            self.q.render_with(l),
            self.r.render_with(l),
            self.u11.render_with(l),
            self.u22.render_with(l),
            self.u12.render_with(l),
            self.u21.render_with(l),
            self.pde_q.render(),
            self.pde_r.render()
        )
    }
}

/// Names the first two flows `x` and `t`.
pub fn xt_label(d: DerivationSymbol) -> String {
    match d {
        X => "x".into(),
        T => "t".into(),
        other => format!("({other})"),
    }
}

fn var(name: &str) -> DiffPoly {
    DiffPoly::var(name)
}

fn c(re: (i64, i64), im: (i64, i64)) -> DiffPoly {
    DiffPoly::constant(GaussianRational::from_parts(re, im))
}

fn sl2(a: &str, b: &str, g: &str) -> Matrix<DiffPoly> {
    Matrix::from_rows(vec![vec![-var(a), var(b)], vec![var(g), var(a)]]).unwrap()
}

fn entry(s: &LoopSeries<DiffPoly>, k: i32, i: usize, j: usize) -> DiffPoly {
    s.coeff(k).map(|m| m[(i, j)].clone()).unwrap_or_default()
}

/// Solves `a x + b = 0` for an indeterminate occurring linearly with constant coefficient.
fn solve_linear(p: &DiffPoly, x: &Indeterminate) -> Result<DiffPoly> {
    let (a, b) = p.split_linear(x).ok_or_else(|| Error::InvalidInput(format!("{} occurs nonlinearly", x.name())))?;
    let inv = a
        .as_constant()
        .and_then(|a| a.inv())
        .ok_or_else(|| Error::InvalidInput(format!("coefficient of {} is not an invertible constant", x.name())))?;
    Ok(b.scale(&-inv))
}

pub fn akns_reduce() -> Result<AknsReport> {
    let frame = CommutativeFrame::diagonal(2)?;
    let e = frame.element_as::<DiffPoly>(1)?;

    // Dressing by exp(X1 z^-1 + X2 z^-2) with symbolic sl_2 entries.
    let g = exp_witness(&[sl2("alpha1", "beta1", "gamma1"), sl2("alpha2", "beta2", "gamma2")], 2)?;
    let dressed = Deformation::deform(HierarchyKind::Standard, &frame, Witness::Standard(g))?;
    let u = dressed.generator(Target::U(1))?;

    // q = 2i beta1 and r = -2i gamma1, so beta1 = -i q / 2 and gamma1 = i r / 2.
    let q = entry(u, -1, 0, 1);
    let r = entry(u, -1, 1, 0);
    let mut to_qr = BTreeMap::new();
    to_qr.insert(Indeterminate::new("beta1"), var("q") * c((0, 1), (-1, 2)));
    to_qr.insert(Indeterminate::new("gamma1"), var("r") * c((0, 1), (1, 2)));
    let u11 = entry(u, -2, 0, 0).substitute(&to_qr)?;
    let u22 = entry(u, -2, 1, 1).substitute(&to_qr)?;

    // U_1 = E + U_{1,1} z^-1 + U_{1,2} z^-2 with unknown off-diagonal entries of U_{1,2}.
    let u12_x = Indeterminate::new("u12");
    let u21_x = Indeterminate::new("u21");
    let zero = DiffPoly::zero();
    let u_11 = Matrix::from_rows(vec![vec![zero.clone(), var("q")], vec![var("r"), zero]])?;
    let u_12 = Matrix::from_rows(vec![
        vec![u11.clone(), DiffPoly::indet(u12_x.clone())],
        vec![DiffPoly::indet(u21_x.clone()), u22.clone()],
    ])?;
    let u1 = LoopSeries::new(2, Window { lo: -2, hi: 0 }, Grading::Down, [(0, e), (-1, u_11), (-2, u_12)])?;
    let d = Deformation::from_series(HierarchyKind::Standard, &frame, vec![u1], vec![], vec![])?;

    let b11 = d.cutoff(X)?;
    let b21 = d.cutoff(T)?;
    let res = d.zc_residual(T, X, &b11.derive(T), &b21.derive(X))?;

    // z^1: d_x U_{1,1} = [E, U_{1,2}] fixes the off-diagonal entries, (1,2) first.
    let u12 = solve_linear(&entry(&res, 1, 0, 1), &u12_x)?;
    let mut elim = BTreeMap::new();
    elim.insert(u12_x.clone(), u12.clone());
    let u21 = solve_linear(&entry(&res, 1, 1, 0).substitute(&elim)?, &u21_x)?;
    elim.insert(u21_x, u21.clone());

    let res = res.substitute(&elim)?;
    if !entry(&res, 1, 0, 0).is_empty() || !entry(&res, 1, 1, 1).is_empty() || !entry(&res, 2, 0, 0).is_empty() {
        return Err(Error::InvalidInput("residual has unexpected diagonal terms".into()));
    }
    if !entry(&res, 0, 0, 0).is_empty() || !entry(&res, 0, 1, 1).is_empty() {
        return Err(Error::InvalidInput("diagonal of the z^0 relation does not vanish".into()));
    }

    let i = DiffPoly::constant(GaussianRational::i());
    let evolution = |p: &DiffPoly, f: &str| -> Result<Pde> {
        let ft = Indeterminate::new(f).derived(T);
        let rhs = solve_linear(p, &ft)?;
        Ok(Pde { lhs: i.clone() * DiffPoly::indet(ft), rhs: i.clone() * rhs })
    };
    let pde_q = evolution(&entry(&res, 0, 0, 1), "q")?;
    let pde_r = evolution(&entry(&res, 0, 1, 0), "r")?;
    Ok(AknsReport { q, r, u11, u22, u12, u21, pde_q, pde_r })
}
