use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use super::annulus::AnnulusLoop;
use super::wave::{build_wave_pair, extract_solution, reduce_subhierarchy, HierarchySolution};
use crate::config::SolverParams;
use crate::error::{Error, Result};
use crate::hierarchy::{CommutativeFrame, Deformation, HierarchyKind};
use crate::linearization::{ExponentVector, FlowRecord};
use crate::scalar::DerivationSymbol;
use crate::series::LoopSeries;

/// A relation to verify numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    /// Lax equations of every generator along one flow.
    Lax(DerivationSymbol),
    /// Zero curvature of the cut-offs of two flows.
    Zc(DerivationSymbol, DerivationSymbol),
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Lax(d) => write!(f, "lax:{d}"),
            Check::Zc(a, b) => write!(f, "zc:{a}:{b}"),
        }
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("check {s:?} is not lax:m,a or zc:m1,a1:m2,a2"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["lax", d] => Ok(Check::Lax(d.parse().map_err(|_| bad())?)),
            ["zc", a, b] => Ok(Check::Zc(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Check {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    /// Largest coefficient of the residual.
    Residual(f64),
    /// Some perturbed point left the big cell.
    Inconclusive,
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Outcome::Residual(x) => s.serialize_f64(*x),
            Outcome::Inconclusive => s.serialize_str("inconclusive"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ResidualReport {
    pub checks: BTreeMap<Check, Outcome>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.checks
            .values()
            .filter_map(|o| match o {
                Outcome::Residual(x) => Some(*x),
                Outcome::Inconclusive => None,
            })
            .fold(0.0, f64::max)
    }

    pub fn inconclusive(&self) -> usize {
        self.checks.values().filter(|o| **o == Outcome::Inconclusive).count()
    }

    /// Every check is conclusive and at most `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.checks.values().all(|o| matches!(o, Outcome::Residual(x) if *x <= tol))
    }
}

/// One source loop and flow point, re-solved at perturbed flow parameters.
#[derive(Clone, Debug)]
pub struct FdProblem<'a> {
    pub g: &'a AnnulusLoop,
    pub l: &'a ExponentVector,
    pub frame: &'a CommutativeFrame,
    pub flows: &'a FlowRecord<Complex64>,
    pub kind: HierarchyKind,
    pub params: SolverParams,
}

impl FdProblem<'_> {
    /// The flow parameter moved by a derivation; strict flows `m` act through `t_{-m}`.
    fn parameter(&self, d: DerivationSymbol) -> DerivationSymbol {
        match self.kind {
            HierarchyKind::Strict => DerivationSymbol::new(-d.m, d.alpha),
            _ => d,
        }
    }

    pub fn solve_at(&self, flows: &FlowRecord<Complex64>) -> Result<HierarchySolution> {
        let w = build_wave_pair(self.g, self.l, flows, self.frame, &self.params)?;
        match self.kind {
            HierarchyKind::Combined => extract_solution(&w, self.frame),
            k => reduce_subhierarchy(&w, k, self.frame),
        }
    }

    pub fn deformation_at(&self, flows: &FlowRecord<Complex64>) -> Result<Deformation<Complex64>> {
        self.solve_at(flows)?.deformation(self.frame)
    }

    /// Central difference along `d` with one Richardson step, `(4 D(h/2) - D(h)) / 3`.
    ///
    /// `None` when a perturbed point is outside the big cell.
    pub fn derivative<F>(&self, d: DerivationSymbol, f: F) -> Result<Option<LoopSeries<Complex64>>>
    where
        F: Fn(&Deformation<Complex64>) -> Result<LoopSeries<Complex64>>,
    {
        let key = self.parameter(d);
        let h = self.params.tol.fd_step;
        let at = |s: f64| -> Result<Option<LoopSeries<Complex64>>> {
            let mut t = self.flows.clone();
            *t.entry(key).or_insert(Complex64::new(0.0, 0.0)) += Complex64::new(s, 0.0);
            match self.deformation_at(&t) {
                Ok(def) => f(&def).map(Some),
                Err(Error::BigCellViolation(_)) => Ok(None),
                Err(e) => Err(e),
            }
        };
        let central = |step: f64| -> Result<Option<LoopSeries<Complex64>>> {
            let (Some(p), Some(m)) = (at(step)?, at(-step)?) else {
                return Ok(None);
            };
            Ok(Some(p.try_sub(&m)?.scale(&Complex64::new(0.5 / step, 0.0))))
        };
        let (Some(dh), Some(dh2)) = (central(h)?, central(h / 2.0)?) else {
            return Ok(None);
        };
        let third = Complex64::new(1.0 / 3.0, 0.0);
        Ok(Some(dh2.scale(&Complex64::new(4.0, 0.0)).try_sub(&dh)?.scale(&third)))
    }

    pub fn run_check(&self, base: &Deformation<Complex64>, check: Check) -> Result<Outcome> {
        match check {
            Check::Lax(f) => {
                let mut worst: f64 = 0.0;
                for t in base.targets() {
                    let Some(d) = self.derivative(f, |def| def.generator(t).cloned())? else {
                        return Ok(Outcome::Inconclusive);
                    };
                    worst = worst.max(base.lax_residual(f, t, &d)?.max_norm());
                }
                Ok(Outcome::Residual(worst))
            }
            Check::Zc(f1, f2) => {
                let (Some(d1_c2), Some(d2_c1)) =
                    (self.derivative(f1, |d| d.cutoff(f2))?, self.derivative(f2, |d| d.cutoff(f1))?)
                else {
                    return Ok(Outcome::Inconclusive);
                };
                Ok(Outcome::Residual(base.zc_residual(f1, f2, &d1_c2, &d2_c1)?.max_norm()))
            }
        }
    }
}

/// Evaluates each check at the flow point, one worker thread per check.
pub fn fd_verify(problem: &FdProblem<'_>, checks: &[Check]) -> Result<ResidualReport> {
    let base = problem.deformation_at(problem.flows)?;
    let results: Vec<Result<Outcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = checks
            .iter()
            .map(|&c| {
                let base = &base;
                s.spawn(move || problem.run_check(base, c))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("verification worker panicked")).collect()
    });
    let mut report = ResidualReport::default();
    for (c, r) in checks.iter().zip(results) {
        report.checks.insert(*c, r?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn check_syntax() {
        let c: Check = "zc:-1,1:1,1".parse().unwrap();
        assert_eq!(c, Check::Zc(DerivationSymbol::new(-1, 1), DerivationSymbol::new(1, 1)));
        assert_eq!(c.to_string(), "zc:-1,1:1,1");
        assert_eq!("lax:2,1".parse::<Check>().unwrap(), Check::Lax(DerivationSymbol::new(2, 1)));
        assert!("lax:2".parse::<Check>().is_err());
        assert!("curl:1,1".parse::<Check>().is_err());
    }

    fn checks() -> Vec<Check> {
        ["lax:0,1", "lax:1,1", "lax:2,1", "lax:-1,1", "zc:-1,1:1,1"].iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn trivial_residuals_are_exactly_zero() {
        let f = CommutativeFrame::diagonal(2).unwrap();
        let g = AnnulusLoop::identity(2, 16);
        let flows: FlowRecord<Complex64> =
            [(DerivationSymbol::new(1, 1), Complex64::new(0.3, 0.0))].into_iter().collect();
        let l = ExponentVector(vec![0, 0]);
        let p = FdProblem {
            g: &g,
            l: &l,
            frame: &f,
            flows: &flows,
            kind: HierarchyKind::Combined,
            params: SolverParams::default(),
        };
        let r = fd_verify(&p, &checks()).unwrap();
        assert!(r.checks.values().all(|o| *o == Outcome::Residual(0.0)), "{r:?}");
    }

    #[test]
    fn random_loop_residuals_are_small() {
        let f = CommutativeFrame::diagonal(2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let g = AnnulusLoop::random_exp(&mut rng, 2, 0.1, 2, 16, 128, 1e-8).unwrap();
        let flows: FlowRecord<Complex64> =
            [(1, 0.3), (-1, 0.1)].iter().map(|&(m, t)| (DerivationSymbol::new(m, 1), Complex64::new(t, 0.0))).collect();
        let l = ExponentVector(vec![0, 0]);
        let p = FdProblem {
            g: &g,
            l: &l,
            frame: &f,
            flows: &flows,
            kind: HierarchyKind::Combined,
            params: SolverParams::default(),
        };
        let r = fd_verify(&p, &checks()).unwrap();
        assert!(r.passes(1e-6), "{r:?}");
    }
}
