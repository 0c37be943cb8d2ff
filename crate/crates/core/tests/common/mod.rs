#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slnt_core::hierarchy::{exp_witness, CommutativeFrame, Deformation, HierarchyKind, Witness};
use slnt_core::solver::AnnulusLoop;
use slnt_core::{
    DerivationSymbol, DiffPoly, FlowRecord, GaussianRational, Grading, LoopSeries, Matrix, Result, Window,
};

pub type Q = GaussianRational;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_q(rng: &mut impl Rng) -> Q {
    let den = rng.gen_range(1..=2);
    Q::from_parts((rng.gen_range(-3..=3), den), (rng.gen_range(-3..=3), den))
}

pub fn rand_matrix(rng: &mut impl Rng, n: usize) -> Matrix<Q> {
    Matrix::from_fn(n, |_, _| rand_q(rng))
}

pub fn rand_sl(rng: &mut impl Rng, n: usize) -> Matrix<Q> {
    let mut m = rand_matrix(rng, n);
    let t = m.trace();
    let last = m[(n - 1, n - 1)].clone();
    m[(n - 1, n - 1)] = last - t;
    m
}

/// Unit lower-triangular, hence invertible.
pub fn rand_unitriangular(rng: &mut impl Rng, n: usize) -> Matrix<Q> {
    Matrix::from_fn(n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Q::from_integer(1),
        std::cmp::Ordering::Greater => rand_q(rng),
        std::cmp::Ordering::Less => Q::from_integer(0),
    })
}

pub fn rand_series(rng: &mut impl Rng, n: usize, window: Window, grading: Grading) -> LoopSeries<Q> {
    let mut terms = Vec::new();
    for k in window.lo..=window.hi {
        if rng.gen_bool(0.7) {
            terms.push((k, rand_matrix(rng, n)));
        }
    }
    LoopSeries::new(n, window, grading, terms).unwrap()
}

pub fn lift(m: &Matrix<Q>) -> Matrix<DiffPoly> {
    m.map(|q| DiffPoly::constant(q.clone()))
}

/// A traceless matrix of constants with one off-diagonal entry replaced by `name`.
pub fn symbolic_sl(rng: &mut impl Rng, n: usize, name: &str) -> Matrix<DiffPoly> {
    let mut m = lift(&rand_sl(rng, n));
    let i = rng.gen_range(0..n);
    let j = (i + rng.gen_range(1..n)) % n;
    m[(i, j)] = DiffPoly::var(name);
    m
}

fn negative_witness(rng: &mut impl Rng, n: usize, depth: i32, var: &str) -> Result<LoopSeries<DiffPoly>> {
    let mut xs = vec![symbolic_sl(rng, n, var)];
    for _ in 1..depth {
        xs.push(lift(&rand_sl(rng, n)));
    }
    exp_witness(&xs, depth)
}

/// A dressing with two indeterminates, kept to window depth `depth`.
pub fn symbolic_dressing(
    rng: &mut impl Rng,
    kind: HierarchyKind,
    frame: &CommutativeFrame,
    depth: i32,
) -> Result<Deformation<DiffPoly>> {
    let n = frame.n();
    let witness = match kind {
        HierarchyKind::Standard => Witness::Standard(negative_witness(rng, n, depth, "a")?),
        HierarchyKind::Strict => {
            let k = LoopSeries::constant(lift(&rand_unitriangular(rng, n)));
            Witness::Strict(k.try_mul(&negative_witness(rng, n, depth, "a")?)?)
        }
        HierarchyKind::Combined => {
            let g = negative_witness(rng, n, depth, "a")?;
            let k = LoopSeries::constant(lift(&rand_unitriangular(rng, n)));
            let x = k.try_mul(&negative_witness(rng, n, depth, "b")?.reindex_inverse())?;
            Witness::Combined { g, x }
        }
    };
    Deformation::deform(kind, frame, witness)
}

pub fn flows(pairs: &[(i32, usize, f64)]) -> FlowRecord<Complex64> {
    pairs.iter().map(|&(m, a, t)| (DerivationSymbol::new(m, a), Complex64::new(t, 0.0))).collect()
}

pub fn default_flows() -> FlowRecord<Complex64> {
    flows(&[(1, 1, 0.3), (-1, 1, 0.1)])
}

pub fn random_loop(seed: u64, n: usize, epsilon: f64) -> AnnulusLoop {
    AnnulusLoop::random_exp(&mut rng(seed), n, epsilon, 2, 16, 128, 1e-8).unwrap()
}

pub fn sym(m: i32, a: usize) -> DerivationSymbol {
    DerivationSymbol::new(m, a)
}
