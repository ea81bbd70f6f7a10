mod common;

use brunovsky_riccati::staircase::DEFAULT_RANK_TOL;
use brunovsky_riccati::{
    brunovsky_pair, brunovsky_transform, canonical_to_brunovsky, controllability_indices, structured_quadratics,
    to_controllable_canonical,
};
use common::{check_feedback, dense_products, random_indices, random_pair, random_symmetric, rng};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn example_pair() -> (DMatrix<f64>, DMatrix<f64>) {
    (
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, -1.0]),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
    )
}

/// Largest deviation from the companion pattern: shifted identity rows and
/// zero input rows inside each chain, unit upper triangular chain-last rows
/// of `B`.
fn pattern_defect(a: &DMatrix<f64>, b: &DMatrix<f64>, mu: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    let mut o = 0;
    for (i, &m) in mu.iter().enumerate() {
        for r in 0..m - 1 {
            for c in 0..a.ncols() {
                let want = if c == o + r + 1 { 1.0 } else { 0.0 };
                worst = worst.max((a[(o + r, c)] - want).abs());
            }
            worst = worst.max(b.row(o + r).amax());
        }
        let last = o + m - 1;
        worst = worst.max((b[(last, i)] - 1.0).abs());
        for j in 0..i {
            worst = worst.max(b[(last, j)].abs());
        }
        o += m;
    }
    worst
}

#[test]
fn example_canonical_form_by_hand() {
    let (a, b) = example_pair();
    // M = [b, Ab] = I, so q is the last row of I and T = [q; qA]
    let m = DMatrix::from_columns(&[b.column(0).into_owned(), (&a * &b).column(0).into_owned()]);
    let q = m.try_inverse().unwrap().row(1).into_owned();
    let t = DMatrix::from_rows(&[q.clone(), &q * &a]);
    let c = to_controllable_canonical(&a, &b, &[2]).unwrap();
    assert!((&c.t - &t).amax() <= 1e-14);
    assert!((&c.a - DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.0])).amax() <= 1e-14);
    assert_eq!(c.b, DMatrix::from_row_slice(2, 1, &[0.0, 1.0]));
    assert!((&c.t * &a - &c.a * &c.t).amax() <= 1e-14);
}

#[test]
fn example_deadbeat_gain() {
    let (a, b) = example_pair();
    let bt = brunovsky_transform(&a, &b, DEFAULT_RANK_TOL).unwrap();
    assert!((&bt.f - DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).amax() <= 1e-14);
    let acl = &a + &b * &bt.f;
    assert!((&acl - DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, -1.0])).amax() <= 1e-14);
    assert!((&acl * &acl).amax() <= 1e-14);
    assert!(acl.amax() > 0.5);
}

#[test]
fn random_canonical_forms_have_the_pattern() {
    for seed in 0..20 {
        let (a, b) = random_pair(&mut rng(seed), 5, 2);
        let mu = controllability_indices(&a, &b, DEFAULT_RANK_TOL).unwrap();
        let c = to_controllable_canonical(&a, &b, &mu).unwrap();
        assert_eq!(pattern_defect(&c.a, &c.b, &mu), 0.0, "seed {seed}");
        let scale = 1.0 + a.norm() + b.norm();
        assert!((&c.t * &a - &c.a * &c.t).norm() <= 1e-8 * scale * c.t.norm());
        assert!((&c.t * &b - &c.b).norm() <= 1e-8 * scale * c.t.norm());
        assert!((&c.t * &c.t_inv - DMatrix::identity(5, 5)).norm() <= 1e-10 * 5.0);
    }
}

#[test]
fn elimination_reaches_the_brunovsky_pair() {
    for seed in 0..20 {
        let (a, b) = random_pair(&mut rng(100 + seed), 5, 2);
        let mu = controllability_indices(&a, &b, DEFAULT_RANK_TOL).unwrap();
        let c = to_controllable_canonical(&a, &b, &mu).unwrap();
        let (f, g) = canonical_to_brunovsky(&c.a, &c.b, &mu).unwrap();
        let (ab, bb) = brunovsky_pair(&mu).unwrap();
        assert!((&c.a + &c.b * &f - &ab).amax() <= 1e-9, "seed {seed}");
        assert!((&c.b * &g - &bb).amax() <= 1e-9, "seed {seed}");
    }
}

#[test]
fn feedback_equivalence_of_random_pairs() {
    for seed in 0..20 {
        let (a, b) = random_pair(&mut rng(200 + seed), 8, 3);
        let bt = brunovsky_transform(&a, &b, DEFAULT_RANK_TOL).unwrap();
        let check = check_feedback(&a, &b, &bt);
        assert!(check.ok(), "seed {seed}: {check:?}");
        assert!((&bt.t * &bt.t_inv - DMatrix::identity(8, 8)).norm() <= 1e-10 * 8.0);
        assert!((&bt.g * &bt.g_inv - DMatrix::identity(3, 3)).norm() <= 1e-10 * 3.0);
        assert_eq!(bt.mu.iter().sum::<usize>(), 8);
    }
}

#[test]
fn transform_is_deterministic() {
    let (a, b) = random_pair(&mut rng(9), 12, 3);
    let first = brunovsky_transform(&a, &b, DEFAULT_RANK_TOL).unwrap();
    let second = brunovsky_transform(&a, &b, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(first, second);
}

#[test]
fn copy_kernels_on_two_chains() {
    let p = random_symmetric(&mut rng(1), 5);
    let s = structured_quadratics(&p, &[2, 3]).unwrap();
    let (apa, bpa, bpb) = dense_products(&p, &[2, 3]);
    assert_eq!((s.at_p_a, s.bt_p_a, s.bt_p_b), (apa, bpa, bpb));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn copy_kernels_equal_dense_products(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mu = random_indices(&mut r, 64);
        let n = mu.iter().sum();
        let p = random_symmetric(&mut r, n);
        let s = structured_quadratics(&p, &mu).unwrap();
        let (apa, bpa, bpb) = dense_products(&p, &mu);
        prop_assert!(s.at_p_a == apa && s.bt_p_a == bpa && s.bt_p_b == bpb);
        prop_assert!(s.at_p_a == s.at_p_a.transpose() && s.bt_p_b == s.bt_p_b.transpose());
    }

    #[test]
    fn small_pairs_are_feedback_equivalent(nx in 1usize..10, nu in 1usize..4, seed in any::<u64>()) {
        let nu = nu.min(nx);
        let (a, b) = random_pair(&mut rng(seed), nx, nu);
        let Ok(bt) = brunovsky_transform(&a, &b, DEFAULT_RANK_TOL) else {
            return Ok(());
        };
        let check = check_feedback(&a, &b, &bt);
        // both residuals are first order in cond(T); the forward one also in ‖F‖
        let unit = 16.0 * f64::EPSILON * bt.condition.max(1.0);
        prop_assert!(check.backward_error <= unit, "cond {:e}: {:?}", bt.condition, check);
        let forward = unit * (a.norm() + b.norm() * bt.f.norm());
        prop_assert!(check.raw_similarity <= forward, "cond {:e}: {:?}", bt.condition, check);
    }
}
