use serde::{Deserialize, Serialize};

use super::frame::CommutativeFrame;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{DerivationSymbol, GaussianRational, Scalar};
use crate::series::{Grading, LoopSeries, Region, Tail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyKind {
    Standard,
    Strict,
    Combined,
}

impl HierarchyKind {
    pub fn admits_flow(self, m: i32) -> bool {
        match self {
            HierarchyKind::Standard => m >= 0,
            HierarchyKind::Strict => m >= 1,
            HierarchyKind::Combined => true,
        }
    }
}

/// One member of a deformed family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    U(usize),
    V(usize),
    W(usize),
}

/// Group element that produced a deformation by conjugation.
#[derive(Clone, Debug)]
pub enum Witness<S> {
    /// `g` in `G_{<0}`: `U_alpha = g E_alpha g^-1`.
    Standard(LoopSeries<S>),
    /// `K g` in `G_{<=0}`: `V_alpha = Kg E_alpha z (Kg)^-1`.
    Strict(LoopSeries<S>),
    /// `g` in `G_{<0}` and `X` in `G_{>=0}`: `U_alpha = g E_alpha g^-1`, `W_alpha = X E_alpha z^-1 X^-1`.
    Combined { g: LoopSeries<S>, x: LoopSeries<S> },
}

/// Deformed generators of one of the three hierarchies.
#[derive(Clone, Debug)]
pub struct Deformation<S> {
    kind: HierarchyKind,
    frame: CommutativeFrame,
    u: Vec<LoopSeries<S>>,
    v: Vec<LoopSeries<S>>,
    w: Vec<LoopSeries<S>>,
    witness: Option<Witness<S>>,
}

fn seed<S: Scalar>(frame: &CommutativeFrame, alpha: usize, power: i32) -> Result<LoopSeries<S>> {
    Ok(LoopSeries::monomial(frame.element_as::<S>(alpha)?, power))
}

fn highest_nonzero<S: Scalar>(s: &LoopSeries<S>) -> Option<i32> {
    s.terms().last().map(|(k, _)| k)
}

fn lowest_nonzero<S: Scalar>(s: &LoopSeries<S>) -> Option<i32> {
    s.terms().next().map(|(k, _)| k)
}

fn check_bounded_above<S: Scalar>(s: &LoopSeries<S>, top: i32, what: &str) -> Result<()> {
    if s.above() != Tail::Zero || highest_nonzero(s).is_some_and(|k| k > top) {
        return Err(Error::ShapeViolation(format!("{what} has powers above z^{top}")));
    }
    Ok(())
}

fn check_bounded_below<S: Scalar>(s: &LoopSeries<S>, bottom: i32, what: &str) -> Result<()> {
    if s.below() != Tail::Zero || lowest_nonzero(s).is_some_and(|k| k < bottom) {
        return Err(Error::ShapeViolation(format!("{what} has powers below z^{bottom}")));
    }
    Ok(())
}

impl<S: Scalar> Deformation<S> {
    /// The undeformed generators `E_alpha`, `E_alpha z` or `E_alpha z^-1`.
    pub fn trivial(kind: HierarchyKind, frame: &CommutativeFrame) -> Result<Self> {
        let r = frame.rank();
        let fam = |p: i32| (1..=r).map(|a| seed::<S>(frame, a, p)).collect::<Result<Vec<_>>>();
        let (u, v, w) = match kind {
            HierarchyKind::Standard => (fam(0)?, vec![], vec![]),
            HierarchyKind::Strict => (vec![], fam(1)?, vec![]),
            HierarchyKind::Combined => (fam(0)?, vec![], fam(-1)?),
        };
        Ok(Deformation { kind, frame: frame.clone(), u, v, w, witness: None })
    }

    /// Conjugates the seed generators by the witness.
    pub fn deform(kind: HierarchyKind, frame: &CommutativeFrame, witness: Witness<S>) -> Result<Self> {
        let r = frame.rank();
        let n = frame.n();
        let conj = |g: &LoopSeries<S>, p: i32| -> Result<Vec<LoopSeries<S>>> {
            if g.n() != n {
                return Err(Error::DimensionMismatch(format!("witness is {0}x{0}, frame is {n}x{n}", g.n())));
            }
            let inv = g.invert()?;
            (1..=r).map(|a| g.try_mul(&seed(frame, a, p)?)?.try_mul(&inv)).collect()
        };
        let (u, v, w) = match (&witness, kind) {
            (Witness::Standard(g), HierarchyKind::Standard) => {
                check_unipotent_negative(g)?;
                (conj(g, 0)?, vec![], vec![])
            }
            (Witness::Strict(kg), HierarchyKind::Strict) => {
                check_bounded_above(kg, 0, "witness")?;
                (vec![], conj(kg, 1)?, vec![])
            }
            (Witness::Combined { g, x }, HierarchyKind::Combined) => {
                check_unipotent_negative(g)?;
                check_bounded_below(x, 0, "witness X")?;
                (conj(g, 0)?, vec![], conj(x, -1)?)
            }
            _ => return Err(Error::InvalidInput(format!("witness does not match the {kind:?} hierarchy"))),
        };
        let d = Deformation { kind, frame: frame.clone(), u, v, w, witness: Some(witness) };
        d.check_shapes()?;
        Ok(d)
    }

    /// Wraps user supplied series after checking their shapes.
    pub fn from_series(
        kind: HierarchyKind,
        frame: &CommutativeFrame,
        u: Vec<LoopSeries<S>>,
        v: Vec<LoopSeries<S>>,
        w: Vec<LoopSeries<S>>,
    ) -> Result<Self> {
        let r = frame.rank();
        let expect = |len: usize, want: bool, name: &str| -> Result<()> {
            let ok = if want { len == r } else { len == 0 };
            if ok {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "{name}: {len} series for a frame of rank {r} in the {kind:?} hierarchy"
                )))
            }
        };
        expect(u.len(), kind != HierarchyKind::Strict, "U")?;
        expect(v.len(), kind == HierarchyKind::Strict, "V")?;
        expect(w.len(), kind == HierarchyKind::Combined, "W")?;
        let d = Deformation { kind, frame: frame.clone(), u, v, w, witness: None };
        d.check_shapes()?;
        Ok(d)
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.frame.n();
        for s in self.u.iter().chain(&self.v).chain(&self.w) {
            if s.n() != n {
                return Err(Error::DimensionMismatch(format!("series of size {} for a frame of size {n}", s.n())));
            }
        }
        for (a, u) in self.u.iter().enumerate() {
            check_bounded_above(u, 0, &format!("U_{}", a + 1))?;
            let e = self.frame.element_as::<S>(a + 1)?;
            if u.coeff(0).as_ref() != Some(&e) {
                return Err(Error::ShapeViolation(format!("U_{} does not start with E_{}", a + 1, a + 1)));
            }
        }
        for (a, v) in self.v.iter().enumerate() {
            check_bounded_above(v, 1, &format!("V_{}", a + 1))?;
        }
        for (a, w) in self.w.iter().enumerate() {
            check_bounded_below(w, -1, &format!("W_{}", a + 1))?;
        }
        Ok(())
    }

    pub fn kind(&self) -> HierarchyKind {
        self.kind
    }

    pub fn frame(&self) -> &CommutativeFrame {
        &self.frame
    }

    pub fn witness(&self) -> Option<&Witness<S>> {
        self.witness.as_ref()
    }

    pub fn u(&self) -> &[LoopSeries<S>] {
        &self.u
    }

    pub fn v(&self) -> &[LoopSeries<S>] {
        &self.v
    }

    pub fn w(&self) -> &[LoopSeries<S>] {
        &self.w
    }

    pub fn generator(&self, t: Target) -> Result<&LoopSeries<S>> {
        let (family, a, name) = match t {
            Target::U(a) => (&self.u, a, "U"),
            Target::V(a) => (&self.v, a, "V"),
            Target::W(a) => (&self.w, a, "W"),
        };
        if family.is_empty() {
            return Err(Error::InvalidInput(format!("the {:?} hierarchy has no {name} family", self.kind)));
        }
        if a == 0 || a > family.len() {
            return Err(Error::IndexOutOfRange(format!("{name}_{a} with frame rank {}", family.len())));
        }
        Ok(&family[a - 1])
    }

    /// Every target of the deformation.
    pub fn targets(&self) -> Vec<Target> {
        let r = self.frame.rank();
        let mut out = Vec::new();
        if !self.u.is_empty() {
            out.extend((1..=r).map(Target::U));
        }
        if !self.v.is_empty() {
            out.extend((1..=r).map(Target::V));
        }
        if !self.w.is_empty() {
            out.extend((1..=r).map(Target::W));
        }
        out
    }

    /// Generator, power of `z` and region that define the cut-off of a flow.
    pub fn cutoff_rule(&self, f: DerivationSymbol) -> Result<(Target, i32, Region)> {
        let DerivationSymbol { m, alpha } = f;
        if !self.kind.admits_flow(m) {
            return Err(Error::IndexOutOfRange(format!("flow degree {m} in the {:?} hierarchy", self.kind)));
        }
        if alpha == 0 || alpha > self.frame.rank() {
            return Err(Error::IndexOutOfRange(format!("frame index {alpha} with rank {}", self.frame.rank())));
        }
        Ok(match self.kind {
            HierarchyKind::Standard => (Target::U(alpha), m, Region::Geq0),
            HierarchyKind::Strict => (Target::V(alpha), m - 1, Region::Gt0),
            HierarchyKind::Combined if m >= 0 => (Target::U(alpha), m, Region::Geq0),
            HierarchyKind::Combined => (Target::W(alpha), m + 1, Region::Lt0),
        })
    }

    /// `B_{m alpha}` or `C_{m beta}`, depending on the hierarchy and the sign of `m`.
    pub fn cutoff(&self, f: DerivationSymbol) -> Result<LoopSeries<S>> {
        let (t, shift, region) = self.cutoff_rule(f)?;
        self.generator(t)?.shift(shift).project(region)
    }

    /// `A_{m alpha} = B_{m alpha} - U_alpha z^m` or `D_{m beta} = C_{m beta} - V_beta z^{m-1}`.
    pub fn part(&self, f: DerivationSymbol) -> Result<LoopSeries<S>> {
        let (t, shift, region) = self.cutoff_rule(f)?;
        Ok(self.generator(t)?.shift(shift).project(region.complement())?.neg())
    }

    /// The deformation `g0 X g0^-1` for the frame `g0 t g0^-1`.
    pub fn frame_conjugate(&self, g0: &Matrix<GaussianRational>) -> Result<Self> {
        let frame = self.frame.conjugated(g0)?;
        let g: LoopSeries<S> = LoopSeries::constant(Matrix::from_gaussian(g0));
        let gi: LoopSeries<S> = LoopSeries::constant(Matrix::from_gaussian(&g0.inverse()?));
        let c = |s: &LoopSeries<S>| g.try_mul(s)?.try_mul(&gi);
        let all = |v: &[LoopSeries<S>]| v.iter().map(c).collect::<Result<Vec<_>>>();
        let witness = match &self.witness {
            None => None,
            Some(Witness::Standard(x)) => Some(Witness::Standard(c(x)?)),
            Some(Witness::Strict(x)) => Some(Witness::Strict(c(x)?)),
            Some(Witness::Combined { g: a, x }) => Some(Witness::Combined { g: c(a)?, x: c(x)? }),
        };
        Ok(Deformation { kind: self.kind, frame, u: all(&self.u)?, v: all(&self.v)?, w: all(&self.w)?, witness })
    }

    /// `exp(-H) U_alpha exp(H)` with `H = sum_alpha t0_alpha E_alpha`.
    pub fn zero_time_normalize(&self, t0: &[S]) -> Result<Self> {
        if self.kind != HierarchyKind::Standard {
            return Err(Error::InvalidInput("zero-time normalization applies to the standard hierarchy".into()));
        }
        if t0.len() != self.frame.rank() {
            return Err(Error::DimensionMismatch(format!(
                "{} times for a frame of rank {}",
                t0.len(),
                self.frame.rank()
            )));
        }
        let n = self.frame.n();
        let mut h = Matrix::<S>::zeros(n);
        for (a, t) in t0.iter().enumerate() {
            h = h + self.frame.element_as::<S>(a + 1)?.scale(t);
        }
        let e_plus = commuting_exp(&h)?;
        let e_minus = commuting_exp(&(-h))?;
        let (l, r) = (LoopSeries::constant(e_minus), LoopSeries::constant(e_plus));
        let u = self.u.iter().map(|s| l.try_mul(s)?.try_mul(&r)).collect::<Result<Vec<_>>>()?;
        Ok(Deformation { kind: self.kind, frame: self.frame.clone(), u, v: vec![], w: vec![], witness: None })
    }

    /// Reindexes `W_beta(z)` to `V_beta(z) = W_beta(1/z)`.
    pub fn strict_from_combined_w(&self) -> Result<Vec<LoopSeries<S>>> {
        if self.kind != HierarchyKind::Combined {
            return Err(Error::InvalidInput("only combined deformations carry W".into()));
        }
        Ok(self.w.iter().map(LoopSeries::reindex_inverse).collect())
    }
}

fn check_unipotent_negative<S: Scalar>(g: &LoopSeries<S>) -> Result<()> {
    check_bounded_above(g, 0, "witness g")?;
    if g.coeff(0).map(|c| c.is_identity()) != Some(true) {
        return Err(Error::ShapeViolation("witness g must have constant term Id".into()));
    }
    Ok(())
}

/// `exp(H)`, as a finite sum when `H` is nilpotent.
pub fn commuting_exp<S: Scalar>(h: &Matrix<S>) -> Result<Matrix<S>> {
    let n = h.n();
    let mut powers = vec![Matrix::identity(n)];
    for _ in 0..n {
        let next = powers.last().unwrap().try_mul(h)?;
        powers.push(next);
    }
    if powers[n].is_zero() {
        let mut acc = Matrix::zeros(n);
        let mut fact = 1i64;
        for (k, p) in powers.iter().take(n).enumerate() {
            if k > 0 {
                fact *= k as i64;
            }
            acc = acc + p.scale(&S::from_gaussian(&GaussianRational::ratio(1, fact)));
        }
        return Ok(acc);
    }
    S::matrix_exp(h)
}

/// `G_{<0}`-witness `exp(X_1 z^-1 + ... + X_d z^-d)` truncated at depth `d_window`.
pub fn exp_witness<S: Scalar>(xs: &[Matrix<S>], depth: i32) -> Result<LoopSeries<S>> {
    let n = xs.first().map(Matrix::n).ok_or_else(|| Error::InvalidInput("no dressing coefficients".into()))?;
    let lo = -depth.max(1);
    let terms = xs.iter().enumerate().map(|(j, x)| (-(j as i32) - 1, x.clone())).filter(|(k, _)| *k >= lo);
    LoopSeries::new(n, crate::series::Window { lo, hi: 0 }, Grading::Exact, terms)?.exp_neg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Complex64;

    type Q = GaussianRational;

    #[test]
    fn trivial_cutoffs() {
        let f = CommutativeFrame::diagonal(2).unwrap();
        let d = Deformation::<Q>::trivial(HierarchyKind::Standard, &f).unwrap();
        let b = d.cutoff(DerivationSymbol::new(3, 1)).unwrap();
        assert_eq!(b, LoopSeries::monomial(f.element_as(1).unwrap(), 3));
        assert!(d.cutoff(DerivationSymbol::new(-1, 1)).is_err());
        assert!(d.part(DerivationSymbol::new(2, 1)).unwrap().vanishes());
        let c = Deformation::<Q>::trivial(HierarchyKind::Combined, &f).unwrap();
        assert_eq!(c.cutoff(DerivationSymbol::new(-1, 1)).unwrap(), LoopSeries::monomial(f.element_as(1).unwrap(), -1));
    }

    #[test]
    fn identity_witness_is_trivial() {
        let f = CommutativeFrame::unipotent(3).unwrap();
        let d =
            Deformation::<Q>::deform(HierarchyKind::Standard, &f, Witness::Standard(LoopSeries::identity(3))).unwrap();
        for a in 1..=2 {
            assert_eq!(d.generator(Target::U(a)).unwrap(), &LoopSeries::constant(f.element_as(a).unwrap()));
        }
    }

    #[test]
    fn constant_combined_witness() {
        let f = CommutativeFrame::diagonal(2).unwrap();
        let k = Matrix::from_fn(2, |i, j| Q::from_integer([[2, 1], [1, 1]][i][j]));
        let w = Witness::Combined { g: LoopSeries::identity(2), x: LoopSeries::constant(k.clone()) };
        let d = Deformation::deform(HierarchyKind::Combined, &f, w).unwrap();
        let e = f.element_as::<Q>(1).unwrap();
        let expect = k.try_mul(&e).unwrap().try_mul(&k.inverse().unwrap()).unwrap();
        assert_eq!(d.generator(Target::W(1)).unwrap(), &LoopSeries::monomial(expect, -1));
    }

    #[test]
    fn user_series_shape_checked() {
        let f = CommutativeFrame::diagonal(2).unwrap();
        let bad = LoopSeries::monomial(f.element_as::<Q>(1).unwrap(), 1);
        let err = Deformation::from_series(HierarchyKind::Standard, &f, vec![bad], vec![], vec![]);
        assert!(matches!(err, Err(Error::ShapeViolation(_))));
    }

    #[test]
    fn zero_time_normalization_of_trivial() {
        let f = CommutativeFrame::diagonal(3).unwrap();
        let d = Deformation::<Complex64>::trivial(HierarchyKind::Standard, &f).unwrap();
        let t = [Complex64::new(0.3, 0.0), Complex64::new(-0.2, 0.1)];
        let z = d.zero_time_normalize(&t).unwrap();
        for (a, b) in z.u().iter().zip(d.u()) {
            assert!(a.distance(b).unwrap() < 1e-14);
        }
        let g = Deformation::<Q>::trivial(HierarchyKind::Standard, &f).unwrap();
        assert!(matches!(g.zero_time_normalize(&[Q::one(), Q::zero()]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn nilpotent_exponential_is_exact() {
        let b = Matrix::<Q>::unit(2, 0, 1);
        let e = commuting_exp(&b).unwrap();
        assert_eq!(e, Matrix::identity(2) + b);
    }
}
