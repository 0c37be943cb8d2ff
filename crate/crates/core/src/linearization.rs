//! Oscillating matrices: formal products `factor · psi0` with
//! `psi0 = exp(sum t_{m alpha} E_alpha z^m)` kept unevaluated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::CommutativeFrame;
use crate::matrix::Matrix;
use crate::scalar::{DerivationSymbol, DiffPoly, Scalar};
use crate::series::{LoopSeries, Region, Tail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Factors in `gl_n[z, z^-1)`.
    Infinity,
    /// Factors in `gl_n[z^-1, z)`.
    Zero,
}

/// Flow parameters `t_{m alpha}` with finite support.
pub type FlowRecord<S> = BTreeMap<DerivationSymbol, S>;

/// Exponents of `delta(l) = diag(z^{l_1}, ..., z^{l_n})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentVector(pub Vec<i32>);

impl ExponentVector {
    pub fn zero(n: usize) -> Self {
        ExponentVector(vec![0; n])
    }

    /// Accepts `l` when `delta(l)` commutes with every frame element.
    pub fn validated(l: Vec<i32>, frame: &CommutativeFrame) -> Result<Self> {
        if l.len() != frame.n() {
            return Err(Error::DimensionMismatch(format!(
                "exponent vector of length {} for n = {}",
                l.len(),
                frame.n()
            )));
        }
        if !frame.admits_exponent(&l) {
            return Err(Error::InvalidInput(format!("delta({l:?}) does not commute with the frame")));
        }
        Ok(ExponentVector(l))
    }

    pub fn negated(&self) -> Self {
        ExponentVector(self.0.iter().map(|x| -x).collect())
    }

    pub fn shifted(&self, k: i32) -> Self {
        ExponentVector(self.0.iter().map(|x| x + k).collect())
    }

    pub fn delta<S: Scalar>(&self) -> LoopSeries<S> {
        let n = self.0.len();
        let terms: BTreeMap<i32, Matrix<S>> = self.0.iter().enumerate().fold(BTreeMap::new(), |mut acc, (i, &p)| {
            let e = Matrix::unit(n, i, i);
            let slot = acc.remove(&p).map_or(e.clone(), |m: Matrix<S>| m + e);
            acc.insert(p, slot);
            acc
        });
        LoopSeries::from_terms(n, terms).expect("diagonal monomials")
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Scalar + Serialize"))]
pub struct OscillatingMatrix<S> {
    side: Side,
    factor: LoopSeries<S>,
    flows: FlowRecord<S>,
    l: Option<ExponentVector>,
}

fn check_side<S: Scalar>(side: Side, s: &LoopSeries<S>, what: &str) -> Result<()> {
    let ok = match side {
        Side::Infinity => s.above() == Tail::Zero,
        Side::Zero => s.below() == Tail::Zero,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::SideMismatch(format!(
            "{what} is not a series {}",
            match side {
                Side::Infinity => "bounded above",
                Side::Zero => "bounded below",
            }
        )))
    }
}

/// Membership of `k` in `G_{<0}` (Infinity) or `G_{>=0}` (Zero).
fn in_side_group<S: Scalar>(side: Side, k: &LoopSeries<S>) -> bool {
    match side {
        Side::Infinity => {
            k.above() == Tail::Zero
                && k.terms().last().is_none_or(|(p, _)| p <= 0)
                && k.coeff(0).is_some_and(|c| c.is_identity())
        }
        Side::Zero => {
            k.below() == Tail::Zero
                && k.terms().next().is_none_or(|(p, _)| p >= 0)
                && k.coeff(0).is_some_and(|c| c.inverse().is_ok())
        }
    }
}

impl<S: Scalar> OscillatingMatrix<S> {
    pub fn new(side: Side, factor: LoopSeries<S>, flows: FlowRecord<S>) -> Result<Self> {
        check_side(side, &factor, "factor")?;
        Ok(OscillatingMatrix { side, factor, flows, l: None })
    }

    /// `k · delta(l) · psi0` with `k` in the side's group.
    pub fn typed(
        side: Side,
        k: LoopSeries<S>,
        l: ExponentVector,
        flows: FlowRecord<S>,
        frame: &CommutativeFrame,
    ) -> Result<Self> {
        let l = ExponentVector::validated(l.0, frame)?;
        if !in_side_group(side, &k) {
            return Err(Error::SideMismatch(format!("witness is not in the group of the {side:?} side")));
        }
        let factor = k.try_mul(&l.delta())?;
        Ok(OscillatingMatrix { side, factor, flows, l: Some(l) })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn factor(&self) -> &LoopSeries<S> {
        &self.factor
    }

    pub fn flows(&self) -> &FlowRecord<S> {
        &self.flows
    }

    pub fn exponent(&self) -> Option<&ExponentVector> {
        self.l.as_ref()
    }

    /// The group element `k` of a typed matrix, `factor · delta(-l)`.
    pub fn witness(&self) -> Result<LoopSeries<S>> {
        let l = self.l.as_ref().ok_or_else(|| Error::InvalidInput("oscillating matrix is not typed".into()))?;
        self.factor.try_mul(&l.negated().delta())
    }

    /// Left module action `k · psi`.
    pub fn act(&self, k: &LoopSeries<S>) -> Result<Self> {
        check_side(self.side, k, "multiplier")?;
        let factor = k.try_mul(&self.factor)?;
        let l = if in_side_group(self.side, k) { self.l.clone() } else { None };
        Ok(OscillatingMatrix { side: self.side, factor, flows: self.flows.clone(), l })
    }

    /// Right action of `E_alpha` (Infinity) or `E_alpha z^-1` (Zero).
    pub fn right_frame(&self, alpha: usize, frame: &CommutativeFrame) -> Result<Self> {
        let p = match self.side {
            Side::Infinity => 0,
            Side::Zero => -1,
        };
        let e = LoopSeries::monomial(frame.element_as::<S>(alpha)?, p);
        Ok(OscillatingMatrix { side: self.side, factor: self.factor.try_mul(&e)?, flows: self.flows.clone(), l: None })
    }

    /// `d(g psi0) = (d g + g E_alpha z^m) psi0`, with `d g` supplied by the caller.
    pub fn derive_with(&self, d: DerivationSymbol, dg: &LoopSeries<S>, frame: &CommutativeFrame) -> Result<Self> {
        let e = LoopSeries::monomial(frame.element_as::<S>(d.alpha)?, d.m);
        let factor = dg.try_add(&self.factor.try_mul(&e)?)?;
        check_side(self.side, &factor, "derivative")?;
        Ok(OscillatingMatrix { side: self.side, factor, flows: self.flows.clone(), l: None })
    }

    /// `M = d(k) k^-1 + k E_alpha z^m k^-1` for a typed matrix, with `d(k)` supplied.
    ///
    /// The verdict holds when `M` has no part in the region forbidden for the flow:
    /// negative powers for `m >= 0`, nonnegative powers for `m < 0`.
    pub fn extract_connection_with(
        &self,
        d: DerivationSymbol,
        dk: &LoopSeries<S>,
        frame: &CommutativeFrame,
        tol: f64,
    ) -> Result<Connection<S>> {
        let k = self.witness()?;
        let kinv = k.invert()?;
        let e = LoopSeries::monomial(frame.element_as::<S>(d.alpha)?, d.m);
        let m = dk.try_mul(&kinv)?.try_add(&k.try_mul(&e)?.try_mul(&kinv)?)?;
        let forbidden = if d.m >= 0 { Region::Lt0 } else { Region::Geq0 };
        let leak = m.project(forbidden)?.max_norm();
        let allowed = m.project(forbidden.complement())?;
        Ok(Connection { series: m, allowed, leak, ok: leak <= tol })
    }
}

impl<S: Scalar> PartialEq for OscillatingMatrix<S> {
    fn eq(&self, o: &Self) -> bool {
        self.side == o.side && self.flows == o.flows && self.factor == o.factor
    }
}

/// Output of [`OscillatingMatrix::extract_connection_with`].
#[derive(Clone, Debug)]
pub struct Connection<S> {
    /// The full series `M`.
    pub series: LoopSeries<S>,
    /// `M` projected onto the permitted region.
    pub allowed: LoopSeries<S>,
    /// Largest coefficient in the forbidden region.
    pub leak: f64,
    pub ok: bool,
}

impl OscillatingMatrix<DiffPoly> {
    pub fn derive(&self, d: DerivationSymbol, frame: &CommutativeFrame) -> Result<Self> {
        self.derive_with(d, &self.factor.derive(d), frame)
    }

    pub fn extract_connection(&self, d: DerivationSymbol, frame: &CommutativeFrame) -> Result<Connection<DiffPoly>> {
        let dk = self.witness()?.derive(d);
        self.extract_connection_with(d, &dk, frame, 0.0)
    }
}
