//! Differential polynomial ring over Q(i).
//!
//! Indeterminates are named functions carrying a derivative multi-index over
//! [`DerivationSymbol`]s, so `∂₁₁∂₁₁q` is an indeterminate of its own. The
//! derivations act on indeterminates by incrementing the multi-index and
//! extend to polynomials through the Leibniz rule. Multi-indices are sorted
//! multisets, so any two derivations commute by construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GaussianRational, Scalar};
use crate::error::{Error, Result};

/// Default bound on the number of terms an expansion may produce.
pub const DEFAULT_TERM_CAP: usize = 1_000_000;

static TERM_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_TERM_CAP);

/// Sets the process-wide term cap checked by [`DiffPoly::try_mul`].
pub fn set_term_cap(cap: usize) {
    TERM_CAP.store(cap, Ordering::Relaxed);
}

pub fn term_cap() -> usize {
    TERM_CAP.load(Ordering::Relaxed)
}

/// Label of the derivation attached to the flow generated by `E_alpha z^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivationSymbol {
    pub m: i32,
    pub alpha: usize,
}

impl DerivationSymbol {
    pub const fn new(m: i32, alpha: usize) -> Self {
        DerivationSymbol { m, alpha }
    }
}

impl fmt::Display for DerivationSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.m, self.alpha)
    }
}

impl FromStr for DerivationSymbol {
    type Err = String;

    /// Parses `"m,alpha"`, e.g. `"-1,1"`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (m, a) = s.split_once(',').ok_or_else(|| format!("expected \"m,alpha\", got {s:?}"))?;
        let m = m.trim().parse::<i32>().map_err(|e| format!("bad flow degree in {s:?}: {e}"))?;
        let alpha = a.trim().parse::<usize>().map_err(|e| format!("bad frame index in {s:?}: {e}"))?;
        if alpha == 0 {
            return Err(format!("frame indices start at 1, got {s:?}"));
        }
        Ok(DerivationSymbol { m, alpha })
    }
}

impl Serialize for DerivationSymbol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DerivationSymbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// A named function together with the derivatives applied to it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Indeterminate {
    name: Arc<str>,
    derivs: Vec<(DerivationSymbol, u32)>,
}

impl Indeterminate {
    pub fn new(name: &str) -> Self {
        Indeterminate { name: Arc::from(name), derivs: Vec::new() }
    }

    /// Builds `name` differentiated by every symbol in `derivs` (repeats allowed).
    pub fn with_derivatives(name: &str, derivs: &[DerivationSymbol]) -> Self {
        derivs.iter().fold(Indeterminate::new(name), |acc, d| acc.derived(*d))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn derivatives(&self) -> &[(DerivationSymbol, u32)] {
        &self.derivs
    }

    pub fn order(&self) -> u32 {
        self.derivs.iter().map(|(_, c)| c).sum()
    }

    pub fn derived(&self, d: DerivationSymbol) -> Self {
        let mut derivs = self.derivs.clone();
        match derivs.binary_search_by(|(s, _)| s.cmp(&d)) {
            Ok(pos) => derivs[pos].1 += 1,
            Err(pos) => derivs.insert(pos, (d, 1)),
        }
        Indeterminate { name: self.name.clone(), derivs }
    }

    fn count(&self, d: DerivationSymbol) -> u32 {
        self.derivs.binary_search_by(|(s, _)| s.cmp(&d)).map(|p| self.derivs[p].1).unwrap_or(0)
    }

    /// Derivations to apply to `self` to reach `target`, if `target` is a derivative of `self`.
    fn path_to(&self, target: &Indeterminate) -> Option<Vec<DerivationSymbol>> {
        if self.name != target.name {
            return None;
        }
        if self.derivs.iter().any(|(d, c)| target.count(*d) < *c) {
            return None;
        }
        let mut path = Vec::new();
        for (d, c) in &target.derivs {
            for _ in self.count(*d)..*c {
                path.push(*d);
            }
        }
        Some(path)
    }

    fn render(&self, label: &dyn Fn(DerivationSymbol) -> String) -> String {
        if self.derivs.is_empty() {
            return self.name.to_string();
        }
        let mut s = format!("{}_", self.name);
        for (d, c) in &self.derivs {
            for _ in 0..*c {
                s.push_str(&label(*d));
            }
        }
        s
    }
}

/// Product of indeterminates with positive exponents, sorted by indeterminate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(Indeterminate, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(x: Indeterminate) -> Self {
        Monomial(vec![(x, 1)])
    }

    pub fn factors(&self) -> &[(Indeterminate, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Removes one power of the factor at `pos`.
    fn lowered(&self, pos: usize) -> Monomial {
        let mut v = self.0.clone();
        if v[pos].1 == 1 {
            v.remove(pos);
        } else {
            v[pos].1 -= 1;
        }
        Monomial(v)
    }

    fn exponent_of(&self, x: &Indeterminate) -> u32 {
        self.0.iter().find(|(y, _)| y == x).map(|(_, e)| *e).unwrap_or(0)
    }
}

/// Element of Q(i){indeterminates}: a canonical finite sum of monomials.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DiffPoly {
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl DiffPoly {
    pub fn zero() -> Self {
        DiffPoly::default()
    }

    pub fn constant(c: GaussianRational) -> Self {
        let mut p = DiffPoly::zero();
        p.accumulate(Monomial::one(), c);
        p
    }

    pub fn var(name: &str) -> Self {
        DiffPoly::indet(Indeterminate::new(name))
    }

    pub fn indet(x: Indeterminate) -> Self {
        DiffPoly::monomial(GaussianRational::one(), Monomial::var(x))
    }

    pub fn monomial(c: GaussianRational, m: Monomial) -> Self {
        let mut p = DiffPoly::zero();
        p.accumulate(m, c);
        p
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    /// The value of a constant polynomial.
    pub fn as_constant(&self) -> Option<GaussianRational> {
        match self.terms.len() {
            0 => Some(GaussianRational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn indeterminates(&self) -> BTreeSet<Indeterminate> {
        self.terms.keys().flat_map(|m| m.0.iter().map(|(x, _)| x.clone())).collect()
    }

    fn accumulate(&mut self, m: Monomial, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + &c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: &GaussianRational) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero();
        }
        DiffPoly { terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect() }
    }

    /// Product, refusing when the naive expansion exceeds `cap` terms.
    pub fn try_mul(&self, other: &DiffPoly, cap: usize) -> Result<DiffPoly> {
        let terms = self.len().saturating_mul(other.len());
        if terms > cap {
            return Err(Error::ResourceExceeded { terms, cap });
        }
        let mut out = DiffPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.accumulate(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> DiffPoly {
        (0..e).fold(DiffPoly::constant(GaussianRational::one()), |acc, _| acc * self.clone())
    }

    /// Applies the derivation `d` through the Leibniz rule.
    pub fn derive(&self, d: DerivationSymbol) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            for (pos, (x, e)) in m.0.iter().enumerate() {
                let rest = m.lowered(pos);
                let coef = c * &GaussianRational::from_integer(i64::from(*e));
                out.accumulate(rest.mul(&Monomial::var(x.derived(d))), coef);
            }
        }
        out
    }

    pub fn derive_path(&self, path: &[DerivationSymbol]) -> DiffPoly {
        path.iter().fold(self.clone(), |p, d| p.derive(*d))
    }

    /// Simultaneous substitution of indeterminates.
    ///
    /// An indeterminate without an exact binding is resolved by
    /// differentiating the binding of the closest lower derivative of the
    /// same name. Names that have no binding at all are left untouched.
    pub fn substitute(&self, bindings: &BTreeMap<Indeterminate, DiffPoly>) -> Result<DiffPoly> {
        if bindings.is_empty() {
            return Ok(self.clone());
        }
        let mut by_name: BTreeMap<&str, Vec<(&Indeterminate, &DiffPoly)>> = BTreeMap::new();
        for (x, p) in bindings {
            by_name.entry(x.name()).or_default().push((x, p));
        }
        let mut cache: BTreeMap<Indeterminate, Option<DiffPoly>> = BTreeMap::new();
        let cap = term_cap();
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            let mut acc = DiffPoly::constant(c.clone());
            let mut kept = Monomial::one();
            for (x, e) in &m.0 {
                if !cache.contains_key(x) {
                    let resolved = resolve(x, &by_name)?;
                    cache.insert(x.clone(), resolved);
                }
                match &cache[x] {
                    Some(p) => {
                        for _ in 0..*e {
                            acc = acc.try_mul(p, cap)?;
                        }
                    }
                    None => kept = kept.mul(&Monomial(vec![(x.clone(), *e)])),
                }
            }
            for (mm, cc) in acc.terms {
                out.accumulate(mm.mul(&kept), cc);
            }
        }
        Ok(out)
    }

    /// Splits `self = a·x + b` for an indeterminate `x` occurring at most linearly.
    ///
    /// Returns `None` when `x` occurs with exponent above one.
    pub fn split_linear(&self, x: &Indeterminate) -> Option<(DiffPoly, DiffPoly)> {
        let mut a = DiffPoly::zero();
        let mut b = DiffPoly::zero();
        for (m, c) in &self.terms {
            match m.exponent_of(x) {
                0 => b.accumulate(m.clone(), c.clone()),
                1 => {
                    let pos = m.0.iter().position(|(y, _)| y == x).unwrap();
                    a.accumulate(m.lowered(pos), c.clone());
                }
                _ => return None,
            }
        }
        Some((a, b))
    }

    /// Human readable form; `label` names each derivation in subscripts.
    pub fn render_with(&self, label: &dyn Fn(DerivationSymbol) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by_key(|(m, _)| m.degree());
        let mut out = String::new();
        for (k, (m, c)) in ordered.into_iter().enumerate() {
            let negative = leads_negative(c);
            let c_abs = if negative { -c.clone() } else { c.clone() };
            if k == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let mono =
                m.0.iter()
                    .map(|(x, e)| {
                        let r = x.render(label);
                        if *e == 1 {
                            r
                        } else {
                            format!("{r}^{e}")
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
            let one = c_abs == GaussianRational::one();
            match (one, mono.is_empty()) {
                (true, true) => out.push('1'),
                (true, false) => out.push_str(&mono),
                (false, true) => out.push_str(&c_abs.to_string()),
                (false, false) => {
                    out.push_str(&c_abs.to_string());
                    out.push(' ');
                    out.push_str(&mono);
                }
            }
        }
        out
    }
}

/// Sign of the leading nonzero part, real part first.
fn leads_negative(c: &GaussianRational) -> bool {
    use num_traits::{Signed, Zero};
    if c.re().is_zero() {
        c.im().is_negative()
    } else {
        c.re().is_negative()
    }
}

fn resolve(x: &Indeterminate, by_name: &BTreeMap<&str, Vec<(&Indeterminate, &DiffPoly)>>) -> Result<Option<DiffPoly>> {
    let Some(cands) = by_name.get(x.name()) else {
        return Ok(None);
    };
    let best = cands.iter().filter_map(|(b, p)| b.path_to(x).map(|path| (path, *p))).min_by_key(|(path, _)| path.len());
    match best {
        Some((path, p)) => Ok(Some(p.derive_path(&path))),
        None => Err(Error::UnboundDerivative(x.render(&default_label))),
    }
}

fn default_label(d: DerivationSymbol) -> String {
    format!("({d})")
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&default_label))
    }
}

impl Add for DiffPoly {
    type Output = DiffPoly;
    fn add(mut self, o: DiffPoly) -> DiffPoly {
        for (m, c) in o.terms {
            self.accumulate(m, c);
        }
        self
    }
}

impl Sub for DiffPoly {
    type Output = DiffPoly;
    fn sub(self, o: DiffPoly) -> DiffPoly {
        self + (-o)
    }
}

impl Neg for DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        DiffPoly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Mul for DiffPoly {
    type Output = DiffPoly;
    fn mul(self, o: DiffPoly) -> DiffPoly {
        self.try_mul(&o, usize::MAX).expect("uncapped multiplication")
    }
}

impl Scalar for DiffPoly {
    fn zero() -> Self {
        DiffPoly::zero()
    }

    fn one() -> Self {
        DiffPoly::constant(GaussianRational::one())
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn from_gaussian(q: &GaussianRational) -> Self {
        DiffPoly::constant(q.clone())
    }

    fn try_inv(&self) -> Option<Self> {
        self.as_constant().and_then(|c| c.inv()).map(DiffPoly::constant)
    }

    fn magnitude(&self) -> f64 {
        if self.terms.is_empty() {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn mul_checked(&self, other: &Self) -> Result<Self> {
        self.try_mul(other, term_cap())
    }
}

// JSON expression tree:
// {"sum":[{"coef":["re","im"],"mono":[["q",[["1,1",2]]], ...]}, ...]}
// Each entry of "mono" is one indeterminate; powers repeat the entry.

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coef: GaussianRational,
    mono: Vec<(String, Vec<(DerivationSymbol, u32)>)>,
}

#[derive(Serialize, Deserialize)]
struct SumRepr {
    sum: Vec<TermRepr>,
}

impl Serialize for DiffPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let sum = self
            .terms
            .iter()
            .map(|(m, c)| TermRepr {
                coef: c.clone(),
                mono: m
                    .0
                    .iter()
                    .flat_map(|(x, e)| std::iter::repeat_n((x.name().to_string(), x.derivs.clone()), *e as usize))
                    .collect(),
            })
            .collect();
        SumRepr { sum }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiffPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SumRepr::deserialize(d)?;
        let mut out = DiffPoly::zero();
        for t in repr.sum {
            let mut m = Monomial::one();
            for (name, derivs) in t.mono {
                let mut x = Indeterminate::new(&name);
                for (sym, count) in derivs {
                    for _ in 0..count {
                        x = x.derived(sym);
                    }
                }
                m = m.mul(&Monomial::var(x));
            }
            out.accumulate(m, t.coef);
        }
        Ok(out)
    }
}
