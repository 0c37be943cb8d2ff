use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hierarchy::CommutativeFrame;
use crate::linearization::{ExponentVector, FlowRecord};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::series::{Grading, LoopSeries, Window};

pub type CMat = DMatrix<Complex64>;

pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn to_matrix(m: &CMat) -> Matrix<Complex64> {
    Matrix::from_fn(m.nrows(), |i, j| m[(i, j)])
}

pub(crate) fn from_matrix(m: &Matrix<Complex64>) -> CMat {
    DMatrix::from_row_slice(m.n(), m.n(), m.entries())
}

pub(crate) fn grid_point(j: usize, grid: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * j as f64 / grid as f64)
}

/// A matrix loop given by Fourier coefficients `l_k`, `|k| <= N`, on an annulus around the unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusLoop {
    n: usize,
    bound: usize,
    coeffs: Vec<CMat>,
    r: f64,
}

const DEFAULT_RADIUS: f64 = 0.9;

impl AnnulusLoop {
    pub fn zeros(n: usize, bound: usize) -> Self {
        AnnulusLoop { n, bound, coeffs: vec![CMat::zeros(n, n); 2 * bound + 1], r: DEFAULT_RADIUS }
    }

    pub fn identity(n: usize, bound: usize) -> Self {
        let mut l = AnnulusLoop::zeros(n, bound);
        l.coeffs[bound] = CMat::identity(n, n);
        l
    }

    pub fn from_coeffs(n: usize, bound: usize, coeffs: impl IntoIterator<Item = (i32, CMat)>) -> Result<Self> {
        let mut l = AnnulusLoop::zeros(n, bound);
        for (k, m) in coeffs {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!("coefficient of z^{k} is {}x{}", m.nrows(), m.ncols())));
            }
            if k.unsigned_abs() as usize > bound {
                return Err(Error::IndexOutOfRange(format!("power {k} beyond the bound {bound}")));
            }
            l.coeffs[(k + bound as i32) as usize] += m;
        }
        Ok(l)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn with_radius(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidInput(format!("annulus radius {r} not in (0, 1)")));
        }
        self.r = r;
        Ok(self)
    }

    pub fn coeff(&self, k: i32) -> Option<&CMat> {
        let i = k + self.bound as i32;
        (i >= 0).then(|| self.coeffs.get(i as usize)).flatten()
    }

    pub fn coeff_or_zero(&self, k: i32) -> CMat {
        self.coeff(k).cloned().unwrap_or_else(|| CMat::zeros(self.n, self.n))
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &CMat)> {
        let b = self.bound as i32;
        self.coeffs.iter().enumerate().map(move |(i, m)| (i as i32 - b, m))
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(max_abs).fold(0.0, f64::max)
    }

    pub fn is_identity(&self) -> bool {
        self.terms().all(|(k, m)| {
            if k == 0 {
                m == &CMat::identity(self.n, self.n)
            } else {
                m.iter().all(|z| *z == Complex64::new(0.0, 0.0))
            }
        })
    }

    /// `max(|l_N|, |l_-N|) / max_k |l_k|`.
    pub fn tail_ratio(&self) -> f64 {
        let top = self.max_norm();
        if top == 0.0 {
            return 0.0;
        }
        max_abs(&self.coeffs[0]).max(max_abs(&self.coeffs[2 * self.bound])) / top
    }

    pub fn check_tail(&self, tail_tol: f64) -> Result<()> {
        let mass = self.tail_ratio();
        if mass > tail_tol {
            return Err(Error::AliasingDetected { mass, limit: tail_tol });
        }
        Ok(())
    }

    /// Values at `z_j = exp(2 pi i j / grid)`.
    pub fn sample(&self, grid: usize) -> Vec<CMat> {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_inverse(grid);
        let mut out = vec![CMat::zeros(self.n, self.n); grid];
        let mut buf = vec![Complex64::new(0.0, 0.0); grid];
        for a in 0..self.n {
            for b in 0..self.n {
                buf.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                for (k, m) in self.terms() {
                    buf[k.rem_euclid(grid as i32) as usize] += m[(a, b)];
                }
                fft.process(&mut buf);
                for (o, x) in out.iter_mut().zip(&buf) {
                    o[(a, b)] = *x;
                }
            }
        }
        out
    }

    /// Fourier coefficients of grid values, truncated to `|k| <= bound`.
    ///
    /// Also returns the largest coefficient norm beyond the bound.
    pub fn from_samples(samples: &[CMat], bound: usize) -> Result<(Self, f64)> {
        let grid = samples.len();
        if grid < 2 * bound + 2 {
            return Err(Error::InvalidInput(format!("grid of {grid} points cannot resolve |k| <= {bound}")));
        }
        let n = samples[0].nrows();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid);
        let mut full = vec![CMat::zeros(n, n); grid];
        let mut buf = vec![Complex64::new(0.0, 0.0); grid];
        let scale = 1.0 / grid as f64;
        for a in 0..n {
            for b in 0..n {
                for (x, s) in buf.iter_mut().zip(samples) {
                    *x = s[(a, b)];
                }
                fft.process(&mut buf);
                for (f, x) in full.iter_mut().zip(&buf) {
                    f[(a, b)] = *x * scale;
                }
            }
        }
        let mut out = AnnulusLoop::zeros(n, bound);
        let mut discarded: f64 = 0.0;
        for (i, m) in full.into_iter().enumerate() {
            let k = if i <= grid / 2 { i as i64 } else { i as i64 - grid as i64 };
            if k.unsigned_abs() as usize <= bound {
                out.coeffs[(k + bound as i64) as usize] = m;
            } else {
                discarded = discarded.max(max_abs(&m));
            }
        }
        Ok((out, discarded))
    }

    /// `Id + (Fourier transform of samples)`, failing when too much mass falls outside the bound.
    pub(crate) fn identity_plus_samples(samples: &[CMat], bound: usize, tail_tol: f64) -> Result<Self> {
        let (mut l, discarded) = AnnulusLoop::from_samples(samples, bound)?;
        l.coeffs[bound] += CMat::identity(l.n, l.n);
        let scale = l.max_norm().max(1.0);
        if discarded > tail_tol * scale {
            return Err(Error::AliasingDetected { mass: discarded / scale, limit: tail_tol });
        }
        Ok(l)
    }

    /// `exp(epsilon X(z))` for a random traceless `X(z) = sum_{|k| <= modes} X_k z^k`
    /// with entries uniform in the unit square.
    pub fn random_exp<R: Rng>(
        rng: &mut R,
        n: usize,
        epsilon: f64,
        modes: usize,
        bound: usize,
        grid: usize,
        tail_tol: f64,
    ) -> Result<Self> {
        let mut x = BTreeMap::new();
        for k in -(modes as i32)..=modes as i32 {
            let mut m = CMat::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let tr = m.trace() / n as f64;
            for i in 0..n {
                m[(i, i)] -= tr;
            }
            x.insert(k, m * Complex64::new(epsilon, 0.0));
        }
        let x = AnnulusLoop::from_coeffs(n, modes, x)?;
        let samples: Vec<CMat> = x.sample(grid).into_iter().map(|h| h.exp() - CMat::identity(n, n)).collect();
        AnnulusLoop::identity_plus_samples(&samples, bound, tail_tol)
    }

    /// Entry `(i, j)` of frequency `k` moves to `k + l_i - l_j`.
    pub fn twisted(&self, l: &ExponentVector) -> Result<Self> {
        if l.0.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "exponent vector of length {} for n = {}",
                l.0.len(),
                self.n
            )));
        }
        let spread = l.0.iter().max().copied().unwrap_or(0) - l.0.iter().min().copied().unwrap_or(0);
        let bound = self.bound + spread as usize;
        let mut out = AnnulusLoop::zeros(self.n, bound);
        out.r = self.r;
        for (k, m) in self.terms() {
            for i in 0..self.n {
                for j in 0..self.n {
                    let kk = k + l.0[i] - l.0[j];
                    out.coeffs[(kk + bound as i32) as usize][(i, j)] += m[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// The coefficients on `window` as a loop series of the given grading.
    pub fn to_series(&self, window: Window, grading: Grading) -> Result<LoopSeries<Complex64>> {
        let terms = (window.lo..=window.hi).filter_map(|k| self.coeff(k).map(|m| (k, to_matrix(m))));
        LoopSeries::new(self.n, window, grading, terms)
    }

    pub fn from_series(s: &LoopSeries<Complex64>, bound: usize) -> Result<Self> {
        AnnulusLoop::from_coeffs(s.n(), bound, s.terms().map(|(k, m)| (k, from_matrix(m))))
    }

    /// Maximum entry distance of the grid values.
    pub fn grid_distance(&self, o: &AnnulusLoop, grid: usize) -> f64 {
        self.sample(grid).iter().zip(o.sample(grid)).map(|(a, b)| max_abs(&(a - b))).fold(0.0, f64::max)
    }
}

/// `h(z) = sum t_{m alpha} E_alpha z^m` at one point.
pub(crate) fn flow_exponent(flows: &FlowRecord<Complex64>, frame: &CommutativeFrame, z: Complex64) -> Result<CMat> {
    let n = frame.n();
    let mut h = CMat::zeros(n, n);
    for (d, t) in flows {
        if t.is_zero() {
            continue;
        }
        let e = from_matrix(&frame.element_as::<Complex64>(d.alpha)?);
        h += e * (*t * z.powi(d.m));
    }
    Ok(h)
}

pub(crate) fn check_flow_support(flows: &FlowRecord<Complex64>, frame: &CommutativeFrame, bound: usize) -> Result<()> {
    for (d, t) in flows {
        if t.is_zero() {
            continue;
        }
        frame.element(d.alpha)?;
        if 2 * d.m.unsigned_abs() as usize > bound {
            return Err(Error::FlowSupportViolation(format!("flow {d} exceeds |m| <= N/2 = {}", bound / 2)));
        }
    }
    Ok(())
}

pub(crate) fn check_grid(grid: usize, bound: usize) -> Result<()> {
    if !grid.is_power_of_two() || grid < 4 * bound {
        return Err(Error::InvalidInput(format!("grid {grid} must be a power of two and at least 4N = {}", 4 * bound)));
    }
    Ok(())
}

/// The loop `gamma(t) = exp(sum t_{m alpha} E_alpha z^m)` truncated to `|k| <= bound`.
pub fn gamma_eval(
    flows: &FlowRecord<Complex64>,
    frame: &CommutativeFrame,
    bound: usize,
    grid: usize,
    tail_tol: f64,
) -> Result<AnnulusLoop> {
    check_grid(grid, bound)?;
    check_flow_support(flows, frame, bound)?;
    let n = frame.n();
    let samples = (0..grid)
        .map(|j| Ok(flow_exponent(flows, frame, grid_point(j, grid))?.exp() - CMat::identity(n, n)))
        .collect::<Result<Vec<_>>>()?;
    AnnulusLoop::identity_plus_samples(&samples, bound, tail_tol)
}

/// `delta(l) loop delta(-l)`.
pub fn delta_twist(l: &ExponentVector, lp: &AnnulusLoop) -> Result<AnnulusLoop> {
    lp.twisted(l)
}

#[derive(Serialize, Deserialize)]
struct LoopRepr {
    n: usize,
    #[serde(rename = "N")]
    bound: usize,
    r: f64,
    coeffs: BTreeMap<i32, Matrix<Complex64>>,
}

impl Serialize for AnnulusLoop {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self.terms().filter(|(_, m)| max_abs(m) > 0.0).map(|(k, m)| (k, to_matrix(m))).collect();
        LoopRepr { n: self.n, bound: self.bound, r: self.r, coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnnulusLoop {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = LoopRepr::deserialize(d)?;
        AnnulusLoop::from_coeffs(r.n, r.bound, r.coeffs.iter().map(|(k, m)| (*k, from_matrix(m))))
            .and_then(|l| l.with_radius(r.r))
            .map_err(D::Error::custom)
    }
}
