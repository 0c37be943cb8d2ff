mod common;

use common::*;
use proptest::prelude::*;
use slnt_core::hierarchy::{exp_witness, CommutativeFrame};
use slnt_core::{DiffPoly, Error, Grading, LoopSeries, Matrix, Region, Window};

fn w(lo: i32, hi: i32) -> Window {
    Window::new(lo, hi).unwrap()
}

fn commutator_by_products(a: &LoopSeries<Q>, b: &LoopSeries<Q>) -> LoopSeries<Q> {
    a.try_mul(b).unwrap().try_sub(&b.try_mul(a).unwrap()).unwrap()
}

/// `G_{<=0}` element: invertible constant term, random coefficients down to `lo`.
fn rand_nonpositive(rng: &mut impl rand::Rng, n: usize, lo: i32) -> LoopSeries<Q> {
    let mut terms = vec![(0, rand_unitriangular(rng, n))];
    for k in lo..0 {
        terms.push((k, rand_matrix(rng, n)));
    }
    LoopSeries::new(n, w(lo, 0), Grading::Down, terms).unwrap()
}

fn strictly_negative(rng: &mut impl rand::Rng, n: usize, lo: i32, hi: i32, window_lo: i32) -> LoopSeries<Q> {
    let terms: Vec<_> = (lo..=hi).map(|k| (k, rand_sl(rng, n))).collect();
    LoopSeries::new(n, w(window_lo, -1), Grading::Down, terms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projections_partition_and_are_idempotent(seed in any::<u64>(), n in 1usize..=3) {
        let x = rand_series(&mut rng(seed), n, w(-4, 4), Grading::Exact);
        for r in Region::ALL {
            let p = x.project(r).unwrap();
            prop_assert!(p.project(r).unwrap() == p);
            prop_assert!(p.terms().all(|(k, _)| r.contains(k)));
            prop_assert!(p.try_add(&x.project(r.complement()).unwrap()).unwrap() == x);
        }
    }

    #[test]
    fn jacobi_identity(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (x, y, z) = (
            rand_series(&mut g, 2, w(-4, 4), Grading::Exact),
            rand_series(&mut g, 2, w(-4, 4), Grading::Exact),
            rand_series(&mut g, 2, w(-4, 4), Grading::Exact),
        );
        let jac = x.bracket(&y.bracket(&z).unwrap()).unwrap()
            .try_add(&y.bracket(&z.bracket(&x).unwrap()).unwrap()).unwrap()
            .try_add(&z.bracket(&x.bracket(&y).unwrap()).unwrap()).unwrap();
        prop_assert!(jac.vanishes());
        prop_assert!(x.bracket(&y).unwrap() == commutator_by_products(&x, &y));
    }

    #[test]
    fn brackets_stay_in_each_half(seed in any::<u64>()) {
        let mut g = rng(seed);
        for r in Region::ALL {
            let a = rand_series(&mut g, 2, w(-3, 3), Grading::Exact).project(r).unwrap();
            let b = rand_series(&mut g, 2, w(-3, 3), Grading::Exact).project(r).unwrap();
            prop_assert!(a.bracket(&b).unwrap().terms().all(|(k, _)| r.contains(k)));
        }
    }

    #[test]
    fn log_inverts_exp(seed in any::<u64>(), n in 2usize..=3) {
        let x = strictly_negative(&mut rng(seed), n, -3, -1, -6);
        let back = x.exp_neg().unwrap().log_unip().unwrap();
        prop_assert!(back.try_sub(&x).unwrap().vanishes());
    }

    #[test]
    fn inverse_multiplies_back_to_identity(seed in any::<u64>(), n in 1usize..=3) {
        let g = rand_nonpositive(&mut rng(seed), n, -5);
        let gi = g.invert().unwrap();
        for prod in [g.try_mul(&gi).unwrap(), gi.try_mul(&g).unwrap()] {
            for k in -5..=0 {
                let want = if k == 0 { Matrix::identity(n) } else { Matrix::zeros(n) };
                prop_assert_eq!(prod.coeff(k), Some(want));
            }
        }
    }

    #[test]
    fn conjugation_keeps_traces_zero(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = rng(seed);
        let g = rand_nonpositive(&mut r, n, -4);
        let y = LoopSeries::from_terms(n, [(0, rand_sl(&mut r, n)), (-2, rand_sl(&mut r, n))]).unwrap();
        prop_assert!(LoopSeries::conjugate(&g, &y).unwrap().is_traceless());
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), down in any::<bool>()) {
        let grading = if down { Grading::Down } else { Grading::Exact };
        let x = rand_series(&mut rng(seed), 2, w(-3, 2), grading);
        let text = serde_json::to_string(&x).unwrap();
        prop_assert!(serde_json::from_str::<LoopSeries<Q>>(&text).unwrap().same_as(&x));
    }
}

#[test]
fn projection_examples() {
    let f = CommutativeFrame::diagonal(2).unwrap();
    let e = f.element_as::<Q>(1).unwrap();
    let x = rand_matrix(&mut rng(5), 2);
    let s = LoopSeries::from_terms(2, [(1, e.clone()), (-1, x)]).unwrap();
    assert!(s.project(Region::Geq0).unwrap() == LoopSeries::monomial(e.clone(), 1));
    let c = LoopSeries::from_terms(2, [(0, rand_matrix(&mut rng(6), 2)), (1, e.clone())]).unwrap();
    assert!(c.project(Region::Gt0).unwrap() == LoopSeries::monomial(e, 1));
}

#[test]
fn powers_of_z_are_central() {
    let mut g = rng(9);
    let (x, y) = (rand_matrix(&mut g, 3), rand_matrix(&mut g, 3));
    let lhs = LoopSeries::monomial(x.clone(), -1).bracket(&LoopSeries::monomial(y.clone(), 2)).unwrap();
    assert!(lhs == LoopSeries::monomial(x.commutator(&y).unwrap(), 1));
    let f = CommutativeFrame::diagonal(3).unwrap();
    let (e1, e2) = (f.element_as::<Q>(1).unwrap(), f.element_as::<Q>(2).unwrap());
    assert!(LoopSeries::monomial(e1, 3).bracket(&LoopSeries::monomial(e2, -2)).unwrap().vanishes());
}

#[test]
fn exponential_examples() {
    assert!(LoopSeries::<Q>::zero(2).exp_neg().unwrap() == LoopSeries::identity(2));
    let x = rand_sl(&mut rng(2), 2);
    let s = LoopSeries::new(2, w(-2, 0), Grading::Exact, [(-1, x.clone())]).unwrap();
    let want = LoopSeries::from_terms(
        2,
        [(0, Matrix::identity(2)), (-1, x.clone()), (-2, x.try_mul(&x).unwrap().scale(&Q::ratio(1, 2)))],
    )
    .unwrap();
    assert!(s.exp_neg().unwrap().try_sub(&want).unwrap().vanishes());
    assert!(matches!(LoopSeries::monomial(x.clone(), 1).exp_neg(), Err(Error::NotStrictlyNegative(_))));
    assert!(matches!(LoopSeries::monomial(x, -1).log_unip(), Err(Error::NotUnipotent(_))));
}

#[test]
fn geometric_inverse() {
    let x = rand_matrix(&mut rng(4), 2);
    let g = LoopSeries::new(2, w(-4, 0), Grading::Down, [(0, Matrix::identity(2)), (-1, x.clone())]).unwrap();
    let gi = g.invert().unwrap();
    let mut power = Matrix::identity(2);
    for k in 0..=4 {
        let sign = if k % 2 == 0 { Q::from_integer(1) } else { Q::from_integer(-1) };
        assert_eq!(gi.coeff(-k), Some(power.scale(&sign)));
        power = power.try_mul(&x).unwrap();
    }
    let k = rand_unitriangular(&mut rng(8), 3);
    assert!(LoopSeries::constant(k.clone()).invert().unwrap() == LoopSeries::constant(k.inverse().unwrap()));
    let singular = LoopSeries::new(2, w(-2, 0), Grading::Down, [(0, Matrix::<Q>::unit(2, 0, 1))]).unwrap();
    assert!(matches!(singular.invert(), Err(Error::SingularLeading(_))));
}

#[test]
fn conjugating_the_first_generator() {
    let v = |s: &str| DiffPoly::var(s);
    let c = |re: i64, im: i64| DiffPoly::constant(Q::from_parts((re, 1), (im, 1)));
    let x1 = Matrix::from_rows(vec![vec![-v("a1"), v("b1")], vec![v("g1"), v("a1")]]).unwrap();
    let x2 = Matrix::from_rows(vec![vec![-v("a2"), v("b2")], vec![v("g2"), v("a2")]]).unwrap();
    let e = CommutativeFrame::diagonal(2).unwrap().element_as::<DiffPoly>(1).unwrap();
    let g = exp_witness(&[x1, x2], 2).unwrap();
    let u = LoopSeries::conjugate(&g, &LoopSeries::constant(e.clone())).unwrap();
    assert_eq!(u.coeff(0), Some(e));
    let z1 =
        Matrix::from_rows(vec![vec![DiffPoly::zero(), c(0, 2) * v("b1")], vec![c(0, -2) * v("g1"), DiffPoly::zero()]])
            .unwrap();
    assert_eq!(u.coeff(-1), Some(z1));
    let b1g1 = v("b1") * v("g1");
    let z2 = Matrix::from_rows(vec![
        vec![c(0, -2) * b1g1.clone(), c(0, 2) * (v("b2") - v("a1") * v("b1"))],
        vec![c(0, -2) * (v("g2") + v("a1") * v("g1")), c(0, 2) * b1g1],
    ])
    .unwrap();
    assert_eq!(u.coeff(-2), Some(z2));
    assert!(u.is_traceless());
}

#[test]
fn conjugating_by_identity() {
    let y = rand_series(&mut rng(12), 3, w(-2, 2), Grading::Exact);
    assert!(LoopSeries::conjugate(&LoopSeries::identity(3), &y).unwrap() == y);
}

#[test]
fn products_refuse_unknown_powers() {
    let down = LoopSeries::new(2, w(-2, 0), Grading::Down, [(0, Matrix::<Q>::identity(2))]).unwrap();
    let up = down.reindex_inverse();
    assert!(matches!(down.try_mul(&up), Err(Error::WindowUnderflow(_))));
}
