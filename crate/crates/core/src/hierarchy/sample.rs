//! Seeded symbolic dressings for residual checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::deformation::{exp_witness, Deformation, HierarchyKind, Witness};
use super::frame::CommutativeFrame;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{DiffPoly, GaussianRational, Scalar};
use crate::series::LoopSeries;

fn rand_q(rng: &mut impl Rng) -> DiffPoly {
    let den = rng.gen_range(1..=2);
    DiffPoly::constant(GaussianRational::from_parts((rng.gen_range(-3..=3), den), (rng.gen_range(-3..=3), den)))
}

/// Traceless constants, with one off-diagonal entry when `name` is given replaced by that indeterminate.
fn rand_sl(rng: &mut impl Rng, n: usize, name: Option<&str>) -> Matrix<DiffPoly> {
    let mut m = Matrix::from_fn(n, |_, _| rand_q(rng));
    let t = m.trace();
    m[(n - 1, n - 1)] = m[(n - 1, n - 1)].clone() - t;
    if let Some(name) = name {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        m[(i, j)] = DiffPoly::var(name);
    }
    m
}

fn unitriangular(rng: &mut impl Rng, n: usize) -> LoopSeries<DiffPoly> {
    LoopSeries::constant(Matrix::from_fn(n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => DiffPoly::one(),
        std::cmp::Ordering::Greater => rand_q(rng),
        std::cmp::Ordering::Less => DiffPoly::zero(),
    }))
}

fn witness(rng: &mut impl Rng, n: usize, depth: i32, name: &str) -> Result<LoopSeries<DiffPoly>> {
    let xs: Vec<_> = (0..depth).map(|k| rand_sl(rng, n, (k == 0).then_some(name))).collect();
    exp_witness(&xs, depth)
}

/// A dressing of `kind` whose witness has random constant coefficients and
/// one indeterminate per group factor (`a`, and `b` for the positive factor).
pub fn symbolic_dressing(
    seed: u64,
    kind: HierarchyKind,
    frame: &CommutativeFrame,
    depth: i32,
) -> Result<Deformation<DiffPoly>> {
    let n = frame.n();
    if depth < 1 {
        return Err(Error::InvalidInput(format!("dressing depth must be positive, got {depth}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = match kind {
        HierarchyKind::Standard => Witness::Standard(witness(&mut rng, n, depth, "a")?),
        HierarchyKind::Strict => {
            Witness::Strict(unitriangular(&mut rng, n).try_mul(&witness(&mut rng, n, depth, "a")?)?)
        }
        HierarchyKind::Combined => {
            let g = witness(&mut rng, n, depth, "a")?;
            let x = unitriangular(&mut rng, n).try_mul(&witness(&mut rng, n, depth, "b")?.reindex_inverse())?;
            Witness::Combined { g, x }
        }
    };
    Deformation::deform(kind, frame, w)
}
