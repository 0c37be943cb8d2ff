use num_complex::Complex64;
use serde::Serialize;

use super::annulus::{
    check_flow_support, check_grid, flow_exponent, from_matrix, grid_point, max_abs, AnnulusLoop, CMat,
};
use super::birkhoff::{birkhoff_factorize, reconstruction_error};
use crate::config::SolverParams;
use crate::error::{Error, Result};
use crate::hierarchy::{CommutativeFrame, Deformation, HierarchyKind};
use crate::linearization::{ExponentVector, FlowRecord, OscillatingMatrix, Side};
use crate::series::{Grading, LoopSeries, Window};

/// Factors `u_minus`, `p_plus` of `delta(l) gamma(t) g gamma(t)^-1 delta(-l)` with their provenance.
#[derive(Clone, Debug, Serialize)]
pub struct WaveMatrixPair {
    pub u_minus: AnnulusLoop,
    pub p_plus: AnnulusLoop,
    pub l: ExponentVector,
    pub flows: FlowRecord<Complex64>,
    pub g: AnnulusLoop,
    /// Residual of the Toeplitz solve.
    pub residual: f64,
    /// Negative powers of `u_minus loop` left by truncating `u_minus` at depth `M`.
    pub truncation: f64,
    /// Grid distance between `u_minus^-1 p_plus` and the factored loop.
    pub reconstruction: f64,
    /// Set when the truncation error exceeds the tail tolerance, so `M` is too small for this loop.
    pub truncation_flagged: bool,
    #[serde(skip)]
    params: SolverParams,
}

/// `Id + delta gamma (g - Id) gamma^-1 delta^-1`, evaluated pointwise on the grid.
pub fn dressed_loop(
    g: &AnnulusLoop,
    l: &ExponentVector,
    flows: &FlowRecord<Complex64>,
    frame: &CommutativeFrame,
    params: &SolverParams,
) -> Result<AnnulusLoop> {
    let n = frame.n();
    if g.n() != n || l.0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "loop of size {}, exponents of length {}, frame of size {n}",
            g.n(),
            l.0.len()
        )));
    }
    let grid = params.grid;
    check_grid(grid, params.n_bound + params.m_depth)?;
    check_flow_support(flows, frame, params.n_bound)?;
    let gs = g.sample(grid);
    let id = CMat::identity(n, n);
    let samples = gs
        .into_iter()
        .enumerate()
        .map(|(j, gj)| {
            let z = grid_point(j, grid);
            let h = flow_exponent(flows, frame, z)?;
            let mut x = h.clone().exp() * (gj - &id) * (-h).exp();
            for a in 0..n {
                for b in 0..n {
                    x[(a, b)] *= z.powi(l.0[a] - l.0[b]);
                }
            }
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    AnnulusLoop::identity_plus_samples(&samples, params.n_bound + params.m_depth, params.tol.tail)
}

pub fn build_wave_pair(
    g: &AnnulusLoop,
    l: &ExponentVector,
    flows: &FlowRecord<Complex64>,
    frame: &CommutativeFrame,
    params: &SolverParams,
) -> Result<WaveMatrixPair> {
    params.validate()?;
    let l = ExponentVector::validated(l.0.clone(), frame)?;
    let lp = dressed_loop(g, &l, flows, frame, params)?;
    let f = birkhoff_factorize(&lp, params.m_depth, &params.tol)?;
    let reconstruction = reconstruction_error(&f, &lp, params.grid)?;
    Ok(WaveMatrixPair {
        u_minus: f.u_minus,
        p_plus: f.p_plus,
        l,
        flows: flows.clone(),
        g: g.clone(),
        residual: f.residual,
        truncation: f.truncation,
        reconstruction,
        truncation_flagged: f.truncation.max(reconstruction) > params.tol.tail,
        params: *params,
    })
}

impl WaveMatrixPair {
    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// `u_minus` on the window `[-M, 0]`, bounded above.
    pub fn u_series(&self) -> Result<LoopSeries<Complex64>> {
        self.u_minus.to_series(Window::new(-(self.params.m_depth as i32), 0)?, Grading::Down)
    }

    /// `p_plus` on the window `[0, N]`, bounded below.
    pub fn p_series(&self) -> Result<LoopSeries<Complex64>> {
        self.p_plus.to_series(Window::new(0, self.params.n_bound as i32)?, Grading::Up)
    }

    /// `Psi = u_minus delta(l) psi0` and `Phi = p_plus delta(l) psi0`.
    pub fn oscillating(
        &self,
        frame: &CommutativeFrame,
    ) -> Result<(OscillatingMatrix<Complex64>, OscillatingMatrix<Complex64>)> {
        let psi =
            OscillatingMatrix::typed(Side::Infinity, self.u_series()?, self.l.clone(), self.flows.clone(), frame)?;
        let phi = OscillatingMatrix::typed(Side::Zero, self.p_series()?, self.l.clone(), self.flows.clone(), frame)?;
        Ok((psi, phi))
    }

    /// `max_j |Psi(z_j) - Phi(z_j) g(z_j)^-1|` with `psi0` evaluated pointwise.
    pub fn relation_error(&self, frame: &CommutativeFrame) -> Result<f64> {
        let grid = self.params.grid;
        let n = frame.n();
        let (u, p, g) = (self.u_minus.sample(grid), self.p_plus.sample(grid), self.g.sample(grid));
        let mut err: f64 = 0.0;
        for j in 0..grid {
            let z = grid_point(j, grid);
            let delta = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, self.l.0.iter().map(|&p| z.powi(p))));
            let dg = delta * flow_exponent(&self.flows, frame, z)?.exp();
            let psi = &u[j] * &dg;
            let ginv = g[j]
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::SingularLeading("g is singular on the circle".into()))?;
            let phi = &p[j] * &dg * ginv;
            err = err.max(max_abs(&(psi - phi)));
        }
        Ok(err)
    }
}

/// Generators extracted from a wave pair, with their provenance.
#[derive(Clone, Debug, Serialize)]
pub struct HierarchySolution {
    pub kind: HierarchyKind,
    #[serde(rename = "U", skip_serializing_if = "Vec::is_empty")]
    pub u: Vec<LoopSeries<Complex64>>,
    #[serde(rename = "V", skip_serializing_if = "Vec::is_empty")]
    pub v: Vec<LoopSeries<Complex64>>,
    #[serde(rename = "W", skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<LoopSeries<Complex64>>,
    pub l: ExponentVector,
    pub flows: FlowRecord<Complex64>,
    pub window: Window,
}

impl HierarchySolution {
    pub fn deformation(&self, frame: &CommutativeFrame) -> Result<Deformation<Complex64>> {
        Deformation::from_series(self.kind, frame, self.u.clone(), self.v.clone(), self.w.clone())
    }

    /// Largest coefficient distance between the generators of two solutions of the same kind.
    pub fn distance(&self, o: &HierarchySolution) -> Result<f64> {
        if self.kind != o.kind {
            return Err(Error::InvalidInput("solutions of different kinds".into()));
        }
        let mut d: f64 = 0.0;
        for (a, b) in self.u.iter().zip(&o.u).chain(self.v.iter().zip(&o.v)).chain(self.w.iter().zip(&o.w)) {
            d = d.max(a.distance(b)?);
        }
        Ok(d)
    }
}

/// `U_alpha = u_minus E_alpha u_minus^-1` and `W_beta = p_plus E_beta z^-1 p_plus^-1`.
pub fn extract_solution(w: &WaveMatrixPair, frame: &CommutativeFrame) -> Result<HierarchySolution> {
    let u = w.u_series()?;
    let p = w.p_series()?;
    let (ui, pi) = (u.invert()?, p.invert()?);
    let mut us = Vec::new();
    let mut ws = Vec::new();
    for a in 1..=frame.rank() {
        let e = frame.element_as::<Complex64>(a)?;
        us.push(u.try_mul(&LoopSeries::constant(e.clone()))?.try_mul(&ui)?);
        ws.push(p.try_mul(&LoopSeries::monomial(e, -1))?.try_mul(&pi)?);
    }
    let window = Window::new(-(w.params.m_depth as i32), w.params.n_bound as i32)?;
    Ok(HierarchySolution {
        kind: HierarchyKind::Combined,
        u: us,
        v: vec![],
        w: ws,
        l: w.l.clone(),
        flows: w.flows.clone(),
        window,
    })
}

/// Restricts to the standard hierarchy (`U` only) or the strict one (`V_beta(z) = W_beta(1/z)`).
pub fn reduce_subhierarchy(
    w: &WaveMatrixPair,
    target: HierarchyKind,
    frame: &CommutativeFrame,
) -> Result<HierarchySolution> {
    let bad = |keep: fn(i32) -> bool| w.flows.iter().find(|(d, t)| !keep(d.m) && t.norm() != 0.0).map(|(d, _)| *d);
    let mut s = extract_solution(w, frame)?;
    match target {
        HierarchyKind::Standard => {
            if let Some(d) = bad(|m| m >= 0) {
                return Err(Error::FlowSupportViolation(format!("standard reduction with nonzero flow {d}")));
            }
            s.w.clear();
        }
        HierarchyKind::Strict => {
            if let Some(d) = bad(|m| m < 0) {
                return Err(Error::FlowSupportViolation(format!("strict reduction with nonzero flow {d}")));
            }
            s.v = s.w.iter().map(LoopSeries::reindex_inverse).collect();
            s.u.clear();
            s.w.clear();
        }
        HierarchyKind::Combined => {
            return Err(Error::InvalidInput("reduction targets the standard or strict hierarchy".into()))
        }
    }
    s.kind = target;
    Ok(s)
}

/// `p_plus(0) E_beta p_plus(0)^-1`, the leading coefficient of `V_beta`.
pub fn strict_leading(w: &WaveMatrixPair, frame: &CommutativeFrame, beta: usize) -> Result<CMat> {
    let p0 = w.p_plus.coeff_or_zero(0);
    let inv = p0.clone().try_inverse().ok_or_else(|| Error::SingularLeading("p_plus(0)".into()))?;
    Ok(p0 * from_matrix(&frame.element_as::<Complex64>(beta)?) * inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::DerivationSymbol;
    use crate::series::Region;
    use rand::SeedableRng;

    fn flows(pairs: &[(i32, f64)]) -> FlowRecord<Complex64> {
        pairs.iter().map(|&(m, t)| (DerivationSymbol::new(m, 1), Complex64::new(t, 0.0))).collect()
    }

    #[test]
    fn identity_gives_trivial_solution() {
        let f = CommutativeFrame::diagonal(2).unwrap();
        let p = SolverParams::default();
        let w = build_wave_pair(
            &AnnulusLoop::identity(2, 16),
            &ExponentVector(vec![1, 1]),
            &flows(&[(1, 0.3), (-1, 0.1)]),
            &f,
            &p,
        )
        .unwrap();
        assert!(w.u_minus.is_identity() && w.p_plus.is_identity());
        let s = extract_solution(&w, &f).unwrap();
        let e = f.element_as::<Complex64>(1).unwrap();
        assert_eq!(s.u[0].terms().collect::<Vec<_>>(), vec![(0, &e)]);
        assert_eq!(s.w[0].terms().collect::<Vec<_>>(), vec![(-1, &e)]);
    }

    #[test]
    fn random_loop_pair() {
        let f = CommutativeFrame::diagonal(2).unwrap();
        let p = SolverParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let g = AnnulusLoop::random_exp(&mut rng, 2, 0.1, 2, 16, 128, 1e-8).unwrap();
        let t = flows(&[(1, 0.3), (-1, 0.1), (2, 0.2)]);
        let w = build_wave_pair(&g, &ExponentVector(vec![0, 0]), &t, &f, &p).unwrap();
        assert!(w.relation_error(&f).unwrap() < 1e-8);
        let s = extract_solution(&w, &f).unwrap();
        assert_eq!(s.u[0].coeff(0).unwrap(), f.element_as(1).unwrap());
        assert!(s.u[0].terms().all(|(_, m)| m.trace().norm() < 1e-10));
        assert!(s.w[0].terms().all(|(_, m)| m.trace().norm() < 1e-10));
        let shifted = build_wave_pair(&g, &ExponentVector(vec![2, 2]), &t, &f, &p).unwrap();
        assert!(extract_solution(&shifted, &f).unwrap().distance(&s).unwrap() < 1e-9);
        let d = s.deformation(&f).unwrap();
        assert!(d.cutoff(DerivationSymbol::new(2, 1)).unwrap().project(Region::Lt0).unwrap().vanishes());
    }

    #[test]
    fn strict_reduction_leading_term() {
        let f = CommutativeFrame::diagonal(2).unwrap();
        let p = SolverParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = AnnulusLoop::random_exp(&mut rng, 2, 0.1, 2, 16, 128, 1e-8).unwrap();
        let w = build_wave_pair(&g, &ExponentVector(vec![0, 0]), &flows(&[(-1, 0.2)]), &f, &p).unwrap();
        let s = reduce_subhierarchy(&w, HierarchyKind::Strict, &f).unwrap();
        let lead = from_matrix(&s.v[0].coeff(1).unwrap());
        assert!(max_abs(&(lead - strict_leading(&w, &f, 1).unwrap())) < 1e-14);
        assert!(matches!(reduce_subhierarchy(&w, HierarchyKind::Standard, &f), Err(Error::FlowSupportViolation(_))));
    }
}
