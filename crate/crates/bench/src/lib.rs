//! Seeded fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slnt_core::solver::AnnulusLoop;
use slnt_core::{
    Complex64, DerivationSymbol, FlowRecord, GaussianRational, Grading, LoopSeries, Matrix, SolverParams, Window,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact series with small Gaussian-rational coefficients at every power of `[lo, hi]`.
pub fn exact_series(seed: u64, n: usize, lo: i32, hi: i32) -> LoopSeries<GaussianRational> {
    let mut r = rng(seed);
    let terms: Vec<_> = (lo..=hi)
        .map(|k| {
            (
                k,
                Matrix::from_fn(n, |_, _| {
                    GaussianRational::from_parts((r.gen_range(-5..=5), r.gen_range(1..=4)), (r.gen_range(-5..=5), 1))
                }),
            )
        })
        .collect();
    LoopSeries::new(n, Window::new(lo, hi).expect("window"), Grading::Exact, terms).expect("series")
}

/// Complex series with coefficients in the unit box.
pub fn complex_series(seed: u64, n: usize, lo: i32, hi: i32) -> LoopSeries<Complex64> {
    let mut r = rng(seed);
    let terms: Vec<_> = (lo..=hi)
        .map(|k| (k, Matrix::from_fn(n, |_, _| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))))
        .collect();
    LoopSeries::new(n, Window::new(lo, hi).expect("window"), Grading::Exact, terms).expect("series")
}

/// `exp(epsilon X)` with the default truncation.
pub fn small_loop(seed: u64, n: usize, epsilon: f64) -> AnnulusLoop {
    let p = SolverParams::default();
    AnnulusLoop::random_exp(&mut rng(seed), n, epsilon, 2, p.n_bound, p.grid, p.tol.tail).expect("loop")
}

pub fn flows() -> FlowRecord<Complex64> {
    [(DerivationSymbol::new(1, 1), Complex64::new(0.3, 0.0)), (DerivationSymbol::new(-1, 1), Complex64::new(0.1, 0.0))]
        .into_iter()
        .collect()
}
