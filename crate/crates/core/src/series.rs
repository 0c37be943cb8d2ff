//! Window-truncated matrix Laurent series.
//!
//! A [`LoopSeries`] stores the coefficients of the powers `z^k` for `k` in a
//! [`Window`] `[lo, hi]`. What lies outside the window is described by a
//! [`Tail`] on each side: either the coefficients are known to vanish, or
//! they are unknown. An unknown lower tail with a vanishing upper tail is an
//! element of `gl_n[z, z^-1)` (grading [`Grading::Down`]); the mirror image is
//! an element of `gl_n[z^-1, z)` ([`Grading::Up`]).
//!
//! Every operation returns the largest window on which its output is exact,
//! and fails with [`Error::WindowUnderflow`] when nothing can be said.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{DerivationSymbol, DiffPoly, GaussianRational, Indeterminate, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Zero,
    Unknown,
}

/// Closed range of retained powers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub lo: i32,
    pub hi: i32,
}

impl Window {
    pub fn new(lo: i32, hi: i32) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInput(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    pub fn contains(&self, k: i32) -> bool {
        self.lo <= k && k <= self.hi
    }
}

impl Serialize for Window {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[i32; 2]>::deserialize(d)?;
        Window::new(lo, hi).map_err(D::Error::custom)
    }
}

/// The four half-lines of powers used by the splittings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "GEQ0")]
    Geq0,
    #[serde(rename = "LT0")]
    Lt0,
    #[serde(rename = "GT0")]
    Gt0,
    #[serde(rename = "LEQ0")]
    Leq0,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Geq0, Region::Lt0, Region::Gt0, Region::Leq0];

    pub fn contains(self, k: i32) -> bool {
        match self {
            Region::Geq0 => k >= 0,
            Region::Lt0 => k < 0,
            Region::Gt0 => k > 0,
            Region::Leq0 => k <= 0,
        }
    }

    pub fn complement(self) -> Region {
        match self {
            Region::Geq0 => Region::Lt0,
            Region::Lt0 => Region::Geq0,
            Region::Gt0 => Region::Leq0,
            Region::Leq0 => Region::Gt0,
        }
    }

    /// `Ok(c)` for a region `k >= c`, `Err(c)` for `k <= c`.
    fn bound(self) -> std::result::Result<i32, i32> {
        match self {
            Region::Geq0 => Ok(0),
            Region::Gt0 => Ok(1),
            Region::Lt0 => Err(-1),
            Region::Leq0 => Err(0),
        }
    }
}

/// Which tails are known to vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    /// Both tails vanish: a Laurent polynomial.
    Exact,
    /// Unknown below, zero above: `gl_n[z, z^-1)`.
    Down,
    /// Zero below, unknown above: `gl_n[z^-1, z)`.
    Up,
    /// Unknown on both sides.
    Truncated,
}

impl Grading {
    fn tails(self) -> (Tail, Tail) {
        match self {
            Grading::Exact => (Tail::Zero, Tail::Zero),
            Grading::Down => (Tail::Unknown, Tail::Zero),
            Grading::Up => (Tail::Zero, Tail::Unknown),
            Grading::Truncated => (Tail::Unknown, Tail::Unknown),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoopSeries<S> {
    n: usize,
    window: Window,
    below: Tail,
    above: Tail,
    coeffs: BTreeMap<i32, Matrix<S>>,
}

impl<S: Scalar> LoopSeries<S> {
    pub fn new(
        n: usize,
        window: Window,
        grading: Grading,
        coeffs: impl IntoIterator<Item = (i32, Matrix<S>)>,
    ) -> Result<Self> {
        let (below, above) = grading.tails();
        let mut map = BTreeMap::new();
        for (k, m) in coeffs {
            if m.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient of z^{k} is {0}x{0}, expected {n}x{n}",
                    m.n()
                )));
            }
            if !window.contains(k) {
                return Err(Error::InvalidInput(format!("power {k} outside window [{}, {}]", window.lo, window.hi)));
            }
            if !m.is_zero() {
                map.insert(k, m);
            }
        }
        Ok(LoopSeries { n, window, below, above, coeffs: map })
    }

    /// Laurent polynomial whose window is the span of the given powers.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (i32, Matrix<S>)>) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().collect();
        let lo = terms.iter().map(|(k, _)| *k).min().unwrap_or(0);
        let hi = terms.iter().map(|(k, _)| *k).max().unwrap_or(0);
        LoopSeries::new(n, Window { lo, hi }, Grading::Exact, terms)
    }

    pub fn zero(n: usize) -> Self {
        LoopSeries { n, window: Window { lo: 0, hi: 0 }, below: Tail::Zero, above: Tail::Zero, coeffs: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        LoopSeries::constant(Matrix::identity(n))
    }

    pub fn constant(m: Matrix<S>) -> Self {
        LoopSeries::monomial(m, 0)
    }

    /// `m z^k`.
    pub fn monomial(m: Matrix<S>, k: i32) -> Self {
        let n = m.n();
        let mut coeffs = BTreeMap::new();
        if !m.is_zero() {
            coeffs.insert(k, m);
        }
        LoopSeries { n, window: Window { lo: k, hi: k }, below: Tail::Zero, above: Tail::Zero, coeffs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn below(&self) -> Tail {
        self.below
    }

    pub fn above(&self) -> Tail {
        self.above
    }

    pub fn grading(&self) -> Grading {
        match (self.below, self.above) {
            (Tail::Zero, Tail::Zero) => Grading::Exact,
            (Tail::Unknown, Tail::Zero) => Grading::Down,
            (Tail::Zero, Tail::Unknown) => Grading::Up,
            (Tail::Unknown, Tail::Unknown) => Grading::Truncated,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.grading() == Grading::Exact
    }

    pub fn is_known(&self, k: i32) -> bool {
        self.window.contains(k)
            || (k < self.window.lo && self.below == Tail::Zero)
            || (k > self.window.hi && self.above == Tail::Zero)
    }

    /// Coefficient of `z^k`, or `None` when it is not determined.
    pub fn coeff(&self, k: i32) -> Option<Matrix<S>> {
        if !self.is_known(k) {
            return None;
        }
        Some(self.coeffs.get(&k).cloned().unwrap_or_else(|| Matrix::zeros(self.n)))
    }

    /// Nonzero coefficients inside the window, by increasing power.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &Matrix<S>)> {
        self.coeffs.iter().map(|(k, m)| (*k, m))
    }

    /// True when every known coefficient vanishes.
    pub fn vanishes(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.values().map(Matrix::max_abs).fold(0.0, f64::max)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LoopSeries<T> {
        LoopSeries {
            n: self.n,
            window: self.window,
            below: self.below,
            above: self.above,
            coeffs: self.coeffs.iter().map(|(k, m)| (*k, m.map(&f))).filter(|(_, m)| !m.is_zero()).collect(),
        }
    }

    pub fn map_coeffs(&self, f: impl Fn(&Matrix<S>) -> Result<Matrix<S>>) -> Result<LoopSeries<S>> {
        let mut out = self.clone();
        out.coeffs = BTreeMap::new();
        for (k, m) in &self.coeffs {
            let v = f(m)?;
            if !v.is_zero() {
                out.coeffs.insert(*k, v);
            }
        }
        Ok(out)
    }

    /// Forgets every coefficient below `lo`.
    pub fn truncate_below(&self, lo: i32) -> Result<LoopSeries<S>> {
        if lo > self.window.hi {
            return Err(Error::WindowUnderflow(format!(
                "truncation at {lo} leaves nothing of [{}, {}]",
                self.window.lo, self.window.hi
            )));
        }
        let mut out = self.clone();
        if lo < self.window.lo {
            if self.below == Tail::Unknown {
                return Err(Error::WindowUnderflow(format!("power {lo} is below the known window")));
            }
        } else {
            out.coeffs.retain(|k, _| *k >= lo);
        }
        out.window.lo = lo;
        out.below = Tail::Unknown;
        Ok(out)
    }

    /// Forgets every coefficient above `hi`.
    pub fn truncate_above(&self, hi: i32) -> Result<LoopSeries<S>> {
        Ok(self.reindex_inverse().truncate_below(-hi)?.reindex_inverse())
    }

    /// Narrows the window onto the nonzero coefficients on sides where the tail vanishes.
    fn trimmed(&self) -> LoopSeries<S> {
        let mut out = self.clone();
        let first = self.coeffs.keys().next().copied();
        let last = self.coeffs.keys().next_back().copied();
        if self.above == Tail::Zero {
            out.window.hi = last.unwrap_or(out.window.lo).max(out.window.lo);
        }
        if self.below == Tail::Zero {
            out.window.lo = first.unwrap_or(out.window.hi).min(out.window.hi);
        }
        out
    }

    fn check_n(&self, o: &LoopSeries<S>) -> Result<()> {
        if self.n != o.n {
            return Err(Error::DimensionMismatch(format!("series of size {} and {}", self.n, o.n)));
        }
        Ok(())
    }

    pub fn try_add(&self, o: &LoopSeries<S>) -> Result<LoopSeries<S>> {
        self.check_n(o)?;
        let side =
            |ta: Tail, tb: Tail, a: i32, b: i32, pick_unknown: fn(i32, i32) -> i32, pick_zero: fn(i32, i32) -> i32| {
                match (ta, tb) {
                    (Tail::Zero, Tail::Zero) => (pick_zero(a, b), Tail::Zero),
                    (Tail::Unknown, Tail::Unknown) => (pick_unknown(a, b), Tail::Unknown),
                    (Tail::Unknown, Tail::Zero) => (a, Tail::Unknown),
                    (Tail::Zero, Tail::Unknown) => (b, Tail::Unknown),
                }
            };
        let (lo, below) = side(self.below, o.below, self.window.lo, o.window.lo, i32::max, i32::min);
        let (hi, above) = side(self.above, o.above, self.window.hi, o.window.hi, i32::min, i32::max);
        if lo > hi {
            return Err(Error::WindowUnderflow(format!("sum has no common known powers ([{lo}, {hi}])")));
        }
        let mut coeffs: BTreeMap<i32, Matrix<S>> = BTreeMap::new();
        for (k, m) in self.coeffs.iter().chain(o.coeffs.iter()) {
            if lo <= *k && *k <= hi {
                let v = match coeffs.remove(k) {
                    Some(acc) => acc + m.clone(),
                    None => m.clone(),
                };
                coeffs.insert(*k, v);
            }
        }
        coeffs.retain(|_, m| !m.is_zero());
        Ok(LoopSeries { n: self.n, window: Window { lo, hi }, below, above, coeffs })
    }

    pub fn try_sub(&self, o: &LoopSeries<S>) -> Result<LoopSeries<S>> {
        self.try_add(&o.neg())
    }

    pub fn neg(&self) -> LoopSeries<S> {
        let mut out = self.clone();
        for m in out.coeffs.values_mut() {
            *m = -std::mem::replace(m, Matrix::zeros(self.n));
        }
        out
    }

    pub fn scale(&self, c: &S) -> LoopSeries<S> {
        let mut out = self.clone();
        out.coeffs = self.coeffs.iter().map(|(k, m)| (*k, m.scale(c))).filter(|(_, m)| !m.is_zero()).collect();
        out
    }

    /// Cauchy product on the largest determined window.
    pub fn try_mul(&self, o: &LoopSeries<S>) -> Result<LoopSeries<S>> {
        self.check_n(o)?;
        if (self.is_exact() && self.vanishes()) || (o.is_exact() && o.vanishes()) {
            return Ok(LoopSeries::zero(self.n));
        }
        let a = self.trimmed();
        let b = o.trimmed();
        let underflow = |what: &str| {
            Error::WindowUnderflow(format!(
                "product of {:?} [{}, {}] and {:?} [{}, {}]: {what}",
                self.grading(),
                a.window.lo,
                a.window.hi,
                o.grading(),
                b.window.lo,
                b.window.hi
            ))
        };
        let (lo, below) = if a.below == Tail::Zero && b.below == Tail::Zero {
            (a.window.lo + b.window.lo, Tail::Zero)
        } else {
            let mut lo = i32::MIN;
            if a.below == Tail::Unknown {
                if b.above != Tail::Zero {
                    return Err(underflow("infinite sums in both directions"));
                }
                lo = lo.max(a.window.lo + b.window.hi);
            }
            if b.below == Tail::Unknown {
                if a.above != Tail::Zero {
                    return Err(underflow("infinite sums in both directions"));
                }
                lo = lo.max(b.window.lo + a.window.hi);
            }
            (lo, Tail::Unknown)
        };
        let (hi, above) = if a.above == Tail::Zero && b.above == Tail::Zero {
            (a.window.hi + b.window.hi, Tail::Zero)
        } else {
            let mut hi = i32::MAX;
            if a.above == Tail::Unknown {
                hi = hi.min(a.window.hi + b.window.lo);
            }
            if b.above == Tail::Unknown {
                hi = hi.min(b.window.hi + a.window.lo);
            }
            (hi, Tail::Unknown)
        };
        if lo > hi {
            return Err(underflow("no determined powers"));
        }
        let mut coeffs: BTreeMap<i32, Matrix<S>> = BTreeMap::new();
        for (i, x) in &a.coeffs {
            for (j, y) in &b.coeffs {
                let k = i + j;
                if k < lo || k > hi {
                    continue;
                }
                let p = x.try_mul(y)?;
                let v = match coeffs.remove(&k) {
                    Some(acc) => acc + p,
                    None => p,
                };
                coeffs.insert(k, v);
            }
        }
        coeffs.retain(|_, m| !m.is_zero());
        Ok(LoopSeries { n: self.n, window: Window { lo, hi }, below, above, coeffs })
    }

    /// `[X, Y] = XY - YX`.
    pub fn bracket(&self, o: &LoopSeries<S>) -> Result<LoopSeries<S>> {
        self.try_mul(o)?.try_sub(&o.try_mul(self)?)
    }

    /// Multiplication by `z^m`.
    pub fn shift(&self, m: i32) -> LoopSeries<S> {
        LoopSeries {
            n: self.n,
            window: Window { lo: self.window.lo + m, hi: self.window.hi + m },
            below: self.below,
            above: self.above,
            coeffs: self.coeffs.iter().map(|(k, c)| (k + m, c.clone())).collect(),
        }
    }

    /// The substitution `z -> 1/z`, i.e. the reindexing `k -> -k`.
    pub fn reindex_inverse(&self) -> LoopSeries<S> {
        LoopSeries {
            n: self.n,
            window: Window { lo: -self.window.hi, hi: -self.window.lo },
            below: self.above,
            above: self.below,
            coeffs: self.coeffs.iter().map(|(k, c)| (-k, c.clone())).collect(),
        }
    }

    /// Keeps exactly the powers in `region`.
    pub fn project(&self, region: Region) -> Result<LoopSeries<S>> {
        match region.bound() {
            Ok(c) => self.keep_from(c),
            Err(c) => Ok(self.reindex_inverse().keep_from(-c)?.reindex_inverse()),
        }
    }

    /// Keeps the powers `k >= c`.
    fn keep_from(&self, c: i32) -> Result<LoopSeries<S>> {
        if self.below == Tail::Unknown && self.window.lo > c {
            return Err(Error::WindowUnderflow(format!("powers {c}..{} are not determined", self.window.lo - 1)));
        }
        let lo = self.window.lo.max(c);
        if self.window.hi < lo {
            return if self.above == Tail::Zero {
                Ok(LoopSeries {
                    n: self.n,
                    window: Window { lo: c, hi: c },
                    below: Tail::Zero,
                    above: Tail::Zero,
                    coeffs: BTreeMap::new(),
                })
            } else {
                Err(Error::WindowUnderflow(format!("no determined powers at or above {c}")))
            };
        }
        Ok(LoopSeries {
            n: self.n,
            window: Window { lo, hi: self.window.hi },
            below: Tail::Zero,
            above: self.above,
            coeffs: self.coeffs.range(lo..).map(|(k, m)| (*k, m.clone())).collect(),
        })
    }

    /// Depth used by the finite expansions: the declared lower end, made unknown below.
    fn negative_part_for_expansion(&self, what: fn(String) -> Error) -> Result<(LoopSeries<S>, i32)> {
        if self.above != Tail::Zero {
            return Err(what("upper tail is not known to vanish".into()));
        }
        if let Some((k, _)) = self.coeffs.range(0..).next() {
            return Err(what(format!("nonzero coefficient at z^{k}")));
        }
        let lo = self.window.lo;
        Ok((self.clone(), lo))
    }

    /// `exp(X)` for `X` with only negative powers.
    ///
    /// `X^k` has no powers above `-k`, so the sum stops once `-k` drops below
    /// the window. An exact input is expanded down to its declared lower end.
    pub fn exp_neg(&self) -> Result<LoopSeries<S>> {
        let (x, lo) = self.negative_part_for_expansion(Error::NotStrictlyNegative)?;
        if x.vanishes() && x.is_exact() {
            return Ok(LoopSeries::identity(self.n));
        }
        let x = x.truncate_below(lo.min(-1))?;
        let mut acc = LoopSeries::identity(self.n);
        let mut term = LoopSeries::identity(self.n);
        let mut k = 1i64;
        while -k >= x.window.lo as i64 {
            term = term.try_mul(&x)?.scale(&S::from_gaussian(&GaussianRational::ratio(1, k)));
            acc = acc.try_add(&term)?;
            k += 1;
        }
        Ok(acc)
    }

    /// `log(g)` for `g = Id + Y` with `Y` strictly negative.
    pub fn log_unip(&self) -> Result<LoopSeries<S>> {
        if !self.is_known(0) || self.coeff(0).map(|c| !c.is_identity()).unwrap_or(true) {
            return Err(Error::NotUnipotent("constant coefficient is not the identity".into()));
        }
        let y = self.try_sub(&LoopSeries::identity(self.n))?;
        let (y, lo) = y.negative_part_for_expansion(Error::NotUnipotent)?;
        if y.vanishes() && y.is_exact() {
            return Ok(LoopSeries::zero(self.n));
        }
        let y = y.truncate_below(lo.min(-1))?;
        let mut acc: Option<LoopSeries<S>> = None;
        let mut power = LoopSeries::identity(self.n);
        let mut k = 1i64;
        while -k >= y.window.lo as i64 {
            power = power.try_mul(&y)?;
            let sign = if k % 2 == 1 { 1 } else { -1 };
            let term = power.scale(&S::from_gaussian(&GaussianRational::ratio(sign, k)));
            acc = Some(match acc {
                Some(a) => a.try_add(&term)?,
                None => term,
            });
            k += 1;
        }
        Ok(acc.unwrap_or_else(|| LoopSeries::zero(self.n)))
    }

    /// Multiplicative inverse by back-substitution on the grading.
    ///
    /// A series bounded above needs an invertible top coefficient and yields
    /// an inverse bounded above; a series bounded below is handled by the
    /// mirror image. Exact inputs are expanded to their declared window.
    pub fn invert(&self) -> Result<LoopSeries<S>> {
        let t = self.trimmed();
        if t.is_exact() && t.coeffs.len() == 1 {
            let (k, m) = t.coeffs.iter().next().unwrap();
            return Ok(LoopSeries::monomial(m.inverse()?, -k));
        }
        if t.is_exact() && t.coeffs.is_empty() {
            return Err(Error::SingularLeading("zero series".into()));
        }
        match (self.below, self.above) {
            (_, Tail::Zero) => match self.invert_down() {
                Err(Error::SingularLeading(_)) if self.below == Tail::Zero => {
                    Ok(self.reindex_inverse().invert_down()?.reindex_inverse())
                }
                r => r,
            },
            (Tail::Zero, Tail::Unknown) => Ok(self.reindex_inverse().invert_down()?.reindex_inverse()),
            _ => Err(Error::WindowUnderflow("cannot invert with unknown tails on both sides".into())),
        }
    }

    fn invert_down(&self) -> Result<LoopSeries<S>> {
        let lo = self.window.lo;
        let h = self.coeffs.keys().next_back().copied().unwrap_or(self.window.lo);
        let top = self.coeff(h).unwrap();
        let top_inv =
            top.inverse().map_err(|_| Error::SingularLeading(format!("coefficient of z^{h} is not invertible")))?;
        let depth = (h - lo) as usize;
        let g: Vec<Matrix<S>> = (0..=depth).map(|s| self.coeff(h - s as i32).unwrap()).collect();
        let mut y: Vec<Matrix<S>> = vec![top_inv.clone()];
        for s in 1..=depth {
            let mut acc = Matrix::zeros(self.n);
            for i in 1..=s {
                if g[i].is_zero() || y[s - i].is_zero() {
                    continue;
                }
                acc = acc + g[i].try_mul(&y[s - i])?;
            }
            y.push(-top_inv.try_mul(&acc)?);
        }
        LoopSeries::new(
            self.n,
            Window { lo: -h - depth as i32, hi: -h },
            Grading::Down,
            y.into_iter().enumerate().map(|(s, m)| (-h - s as i32, m)),
        )
    }

    /// `g Y g^-1`.
    pub fn conjugate(g: &LoopSeries<S>, y: &LoopSeries<S>) -> Result<LoopSeries<S>> {
        g.try_mul(y)?.try_mul(&g.invert()?)
    }

    /// Maximum coefficient distance on the common known powers.
    pub fn distance(&self, o: &LoopSeries<S>) -> Result<f64> {
        Ok(self.try_sub(o)?.max_norm())
    }

    /// Every coefficient has zero trace.
    pub fn is_traceless(&self) -> bool {
        self.coeffs.values().all(|m| m.trace().is_zero())
    }

    /// Equal known coefficients, and the same window shape.
    pub fn same_as(&self, o: &LoopSeries<S>) -> bool {
        self.n == o.n
            && self.below == o.below
            && self.above == o.above
            && self.window == o.window
            && self.coeffs == o.coeffs
    }
}

impl<S: Scalar> PartialEq for LoopSeries<S> {
    /// Coefficient-wise equality wherever both sides are determined.
    fn eq(&self, o: &Self) -> bool {
        if self.n != o.n {
            return false;
        }
        let lo = self.window.lo.min(o.window.lo);
        let hi = self.window.hi.max(o.window.hi);
        (lo..=hi).all(|k| match (self.is_known(k), o.is_known(k)) {
            (true, true) => self.coeffs.get(&k) == o.coeffs.get(&k),
            _ => true,
        })
    }
}

impl LoopSeries<DiffPoly> {
    /// Applies a derivation coefficient-wise.
    pub fn derive(&self, d: DerivationSymbol) -> LoopSeries<DiffPoly> {
        self.map(|p| p.derive(d))
    }

    pub fn substitute(&self, bindings: &BTreeMap<Indeterminate, DiffPoly>) -> Result<LoopSeries<DiffPoly>> {
        self.map_coeffs(|m| {
            let mut out = m.clone();
            for i in 0..m.n() {
                for j in 0..m.n() {
                    out[(i, j)] = m[(i, j)].substitute(bindings)?;
                }
            }
            Ok(out)
        })
    }
}

impl<S: Scalar + fmt::Display> fmt::Display for LoopSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:?} series on [{}, {}]", self.grading(), self.window.lo, self.window.hi)?;
        for (k, m) in &self.coeffs {
            writeln!(f, "  z^{k:<4} {m}")?;
        }
        Ok(())
    }
}

impl<S: Scalar + Serialize> Serialize for LoopSeries<S> {
    fn serialize<Se: Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        struct Coeffs<'a, S>(&'a BTreeMap<i32, Matrix<S>>);
        impl<S: Scalar + Serialize> Serialize for Coeffs<'_, S> {
            fn serialize<Se: Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
                let mut map = s.serialize_map(Some(self.0.len()))?;
                for (k, m) in self.0 {
                    map.serialize_entry(&k.to_string(), m)?;
                }
                map.end()
            }
        }
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("n", &self.n)?;
        map.serialize_entry("window", &self.window)?;
        map.serialize_entry("coeffs", &Coeffs(&self.coeffs))?;
        map.serialize_entry("grading", &self.grading())?;
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
struct SeriesRepr<S> {
    n: usize,
    window: Window,
    coeffs: BTreeMap<String, Matrix<S>>,
    #[serde(default = "exact_grading")]
    grading: Grading,
}

fn exact_grading() -> Grading {
    Grading::Exact
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for LoopSeries<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SeriesRepr::<S>::deserialize(d)?;
        let coeffs = r
            .coeffs
            .into_iter()
            .map(|(k, m)| {
                k.trim().parse::<i32>().map(|k| (k, m)).map_err(|e| D::Error::custom(format!("bad power {k:?}: {e}")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        LoopSeries::new(r.n, r.window, r.grading, coeffs).map_err(D::Error::custom)
    }
}
