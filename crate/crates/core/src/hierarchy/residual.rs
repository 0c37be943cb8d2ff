//! Lax, zero-curvature and complementary-part residuals.
//!
//! Derivatives are always inputs. The `*_lax` helpers build them from the
//! Lax right-hand sides, which is how the compatibility of a Lax system is
//! checked symbolically.

use super::deformation::{Deformation, HierarchyKind, Target};
use crate::error::{Error, Result};
use crate::scalar::{DerivationSymbol, Scalar};
use crate::series::LoopSeries;

/// `derivative - [cutoff, target]`.
pub fn lax_residual_with<S: Scalar>(
    cutoff: &LoopSeries<S>,
    target: &LoopSeries<S>,
    derivative: &LoopSeries<S>,
) -> Result<LoopSeries<S>> {
    derivative.try_sub(&cutoff.bracket(target)?)
}

/// `d1(C2) - d2(C1) - [C1, C2]`.
pub fn zc_residual_with<S: Scalar>(
    c1: &LoopSeries<S>,
    c2: &LoopSeries<S>,
    d1_c2: &LoopSeries<S>,
    d2_c1: &LoopSeries<S>,
) -> Result<LoopSeries<S>> {
    d1_c2.try_sub(d2_c1)?.try_sub(&c1.bracket(c2)?)
}

impl<S: Scalar> Deformation<S> {
    fn check_target(&self, t: Target) -> Result<()> {
        let ok = matches!(
            (self.kind(), t),
            (HierarchyKind::Standard, Target::U(_))
                | (HierarchyKind::Strict, Target::V(_))
                | (HierarchyKind::Combined, Target::U(_) | Target::W(_))
        );
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{t:?} is not part of the {:?} hierarchy", self.kind())))
        }
    }

    /// Right-hand side `[cutoff(f), target]` of the Lax equation for the flow `f`.
    pub fn lax_rhs(&self, f: DerivationSymbol, target: Target) -> Result<LoopSeries<S>> {
        self.check_target(target)?;
        self.cutoff(f)?.bracket(self.generator(target)?)
    }

    /// `derivative - [cutoff(f), target]`, where `derivative` is the flow `f` applied to `target`.
    pub fn lax_residual(
        &self,
        f: DerivationSymbol,
        target: Target,
        derivative: &LoopSeries<S>,
    ) -> Result<LoopSeries<S>> {
        self.check_target(target)?;
        lax_residual_with(&self.cutoff(f)?, self.generator(target)?, derivative)
    }

    /// Derivative of `cutoff(of)` along `by` when every generator obeys its Lax equation.
    pub fn cutoff_derivative_lax(&self, by: DerivationSymbol, of: DerivationSymbol) -> Result<LoopSeries<S>> {
        let (t, shift, region) = self.cutoff_rule(of)?;
        self.lax_rhs(by, t)?.shift(shift).project(region)
    }

    /// Derivative of `part(of)` along `by` under the Lax equations.
    pub fn part_derivative_lax(&self, by: DerivationSymbol, of: DerivationSymbol) -> Result<LoopSeries<S>> {
        let (t, shift, region) = self.cutoff_rule(of)?;
        Ok(self.lax_rhs(by, t)?.shift(shift).project(region.complement())?.neg())
    }

    /// `d_{f1}(C_{f2}) - d_{f2}(C_{f1}) - [C_{f1}, C_{f2}]` with caller supplied derivatives.
    pub fn zc_residual(
        &self,
        f1: DerivationSymbol,
        f2: DerivationSymbol,
        d1_c2: &LoopSeries<S>,
        d2_c1: &LoopSeries<S>,
    ) -> Result<LoopSeries<S>> {
        zc_residual_with(&self.cutoff(f1)?, &self.cutoff(f2)?, d1_c2, d2_c1)
    }

    pub fn zc_residual_lax(&self, f1: DerivationSymbol, f2: DerivationSymbol) -> Result<LoopSeries<S>> {
        self.zc_residual(f1, f2, &self.cutoff_derivative_lax(f1, f2)?, &self.cutoff_derivative_lax(f2, f1)?)
    }

    /// The zero-curvature combination for the complementary parts `A` or `D`.
    ///
    /// Only defined when both flows use the same family of generators.
    pub fn corollary_residual(
        &self,
        f1: DerivationSymbol,
        f2: DerivationSymbol,
        d1_p2: &LoopSeries<S>,
        d2_p1: &LoopSeries<S>,
    ) -> Result<LoopSeries<S>> {
        let (t1, ..) = self.cutoff_rule(f1)?;
        let (t2, ..) = self.cutoff_rule(f2)?;
        if std::mem::discriminant(&t1) != std::mem::discriminant(&t2) {
            return Err(Error::InvalidInput("no part relation between flows of opposite sign".into()));
        }
        zc_residual_with(&self.part(f1)?, &self.part(f2)?, d1_p2, d2_p1)
    }

    pub fn corollary_residual_lax(&self, f1: DerivationSymbol, f2: DerivationSymbol) -> Result<LoopSeries<S>> {
        self.corollary_residual(f1, f2, &self.part_derivative_lax(f1, f2)?, &self.part_derivative_lax(f2, f1)?)
    }
}
