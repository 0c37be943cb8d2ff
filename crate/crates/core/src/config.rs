//! JSON input schema shared by the solver and the command line.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hierarchy::{CommutativeFrame, FrameKind};
use crate::matrix::Matrix;
use crate::scalar::{DerivationSymbol, GaussianRational};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on the factorization residual and reconstruction error.
    pub fact: f64,
    /// Relative Fourier mass allowed outside the truncation bound.
    pub tail: f64,
    /// Largest accepted condition number of the Toeplitz system.
    pub cond_max: f64,
    /// Pass threshold for verification residuals.
    pub residual: f64,
    /// Finite-difference step.
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { fact: 1e-10, tail: 1e-8, cond_max: 1e10, residual: 1e-6, fd_step: 1e-4 }
    }
}

/// Truncation depths and tolerances of one solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    /// Fourier bound of input loops and depth of `p_plus`.
    pub n_bound: usize,
    /// Depth of `u_minus`.
    pub m_depth: usize,
    pub grid: usize,
    pub tol: Tolerances,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { n_bound: 16, m_depth: 12, grid: 128, tol: Tolerances::default() }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_bound == 0 || self.m_depth == 0 {
            return Err(Error::InvalidInput("truncation depths must be positive".into()));
        }
        if !self.grid.is_power_of_two() || self.grid < 4 * (self.n_bound + self.m_depth) {
            return Err(Error::InvalidInput(format!(
                "grid {} must be a power of two and at least 4(N + M) = {}",
                self.grid,
                4 * (self.n_bound + self.m_depth)
            )));
        }
        let t = &self.tol;
        if [t.fact, t.tail, t.cond_max, t.residual, t.fd_step].iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput("tolerances must be positive and finite".into()));
        }
        Ok(())
    }
}

/// A complex number written as `[re, im]` or as a bare real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexValue(pub Complex64);

impl Serialize for ComplexValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(ComplexValue(match Repr::deserialize(d)? {
            Repr::Real(x) => Complex64::new(x, 0.0),
            Repr::Pair([re, im]) => Complex64::new(re, im),
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub kind: FrameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Matrix<GaussianRational>>>,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec { kind: FrameKind::Diagonal, basis: None }
    }
}

/// How the source loop `g` is given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum LoopSpec {
    #[default]
    Identity,
    /// Fourier coefficients keyed by power.
    Coeffs(BTreeMap<i32, Vec<Vec<ComplexValue>>>),
    /// `exp(epsilon X)` for a seeded random traceless Laurent polynomial `X`.
    Random {
        epsilon: f64,
        #[serde(default = "default_modes")]
        modes: usize,
    },
}

fn default_modes() -> usize {
    2
}

fn default_n() -> usize {
    2
}
fn default_n_bound() -> usize {
    16
}
fn default_m_depth() -> usize {
    12
}
fn default_grid() -> usize {
    128
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub frame: FrameSpec,
    #[serde(rename = "N", default = "default_n_bound")]
    pub n_bound: usize,
    #[serde(rename = "M", default = "default_m_depth")]
    pub m_depth: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub g: LoopSpec,
    #[serde(default)]
    pub l: Option<Vec<i32>>,
    #[serde(default)]
    pub flows: BTreeMap<DerivationSymbol, ComplexValue>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: default_n(),
            frame: FrameSpec::default(),
            n_bound: default_n_bound(),
            m_depth: default_m_depth(),
            grid: default_grid(),
            g: LoopSpec::Identity,
            l: None,
            flows: BTreeMap::new(),
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

impl SolverConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: SolverConfig = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        c.params().validate()?;
        c.frame()?;
        c.exponent()?;
        Ok(c)
    }

    pub fn params(&self) -> SolverParams {
        SolverParams { n_bound: self.n_bound, m_depth: self.m_depth, grid: self.grid, tol: self.tolerances }
    }

    pub fn frame(&self) -> Result<CommutativeFrame> {
        CommutativeFrame::make(self.frame.kind, self.n, self.frame.basis.clone())
    }

    pub fn exponent(&self) -> Result<crate::linearization::ExponentVector> {
        let l = self.l.clone().unwrap_or_else(|| vec![0; self.n]);
        crate::linearization::ExponentVector::validated(l, &self.frame()?)
    }

    pub fn flow_record(&self) -> crate::linearization::FlowRecord<Complex64> {
        self.flows.iter().map(|(k, v)| (*k, v.0)).collect()
    }

    /// Canonical JSON: object keys sorted, no whitespace.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// Hex SHA-256 of [`SolverConfig::canonical_json`].
    pub fn provenance(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_shape() {
        let c = SolverConfig::from_json(
            r#"{"n":2,"frame":{"kind":"diagonal"},"N":16,"M":12,"grid":128,"g":"identity","l":[0,0],
                "flows":{"1,1":0.3,"-1,1":[0.1,0]},"tolerances":{"fact":1e-10}}"#,
        )
        .unwrap();
        assert_eq!(c.flows.len(), 2);
        assert_eq!(c.flows[&DerivationSymbol::new(-1, 1)].0, Complex64::new(0.1, 0.0));
        assert_eq!(c.tolerances.tail, 1e-8);
    }

    #[test]
    fn provenance_is_stable_under_key_order() {
        let a = SolverConfig::from_json(r#"{"n":2,"g":{"random":{"epsilon":0.1}},"seed":3}"#).unwrap();
        let b = SolverConfig::from_json(r#"{"seed":3,"g":{"random":{"modes":2,"epsilon":0.1}},"n":2}"#).unwrap();
        assert_eq!(a.provenance(), b.provenance());
        assert_eq!(a.provenance().len(), 64);
    }

    #[test]
    fn rejects_bad_grid_and_unknown_fields() {
        assert!(SolverConfig::from_json(r#"{"grid":100}"#).is_err());
        assert!(SolverConfig::from_json(r#"{"bogus":1}"#).is_err());
        assert!(SolverConfig::from_json(r#"{"frame":{"kind":"unipotent"},"l":[1,0]}"#).is_err());
    }
}
