use barankin::psd::{
    is_snnd, k_identity_dominates, lambda_max, loewner_compare, rayleigh_reduction, weighted_cauchy_schwarz,
};
use barankin::{LoewnerOrder, SymMatrix, Tolerance};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn gram(d: usize, entries: &[f64]) -> SymMatrix {
    let r = DMatrix::from_row_slice(d, d, &entries[..d * d]);
    SymMatrix::new(&r * r.transpose()).unwrap()
}

fn dim_and_entries(n: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=5).prop_flat_map(move |d| (Just(d), prop::collection::vec(-2.0f64..2.0, n * d * d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn loewner_chain_transitive((d, e) in dim_and_entries(3)) {
        let tol = Tolerance::default();
        let k = d * d;
        let c = gram(d, &e[..k]);
        let b = c.add(&gram(d, &e[k..2 * k])).unwrap();
        let a = b.add(&gram(d, &e[2 * k..])).unwrap();
        let ab = loewner_compare(&a, &b, &tol).unwrap().order;
        let bc = loewner_compare(&b, &c, &tol).unwrap().order;
        prop_assert!(ab.is_ge() && bc.is_ge());
        prop_assert!(loewner_compare(&a, &c, &tol).unwrap().order.is_ge());
        prop_assert!(loewner_compare(&c, &a, &tol).unwrap().order.is_le());
    }

    #[test]
    fn loewner_antisymmetric((d, e) in dim_and_entries(2)) {
        let tol = Tolerance::default();
        let k = d * d;
        let x = gram(d, &e[..k]);
        let y = gram(d, &e[k..]);
        let xy = loewner_compare(&x, &y, &tol).unwrap().order;
        let yx = loewner_compare(&y, &x, &tol).unwrap().order;
        if xy.is_ge() && yx.is_ge() {
            prop_assert_eq!(xy, LoewnerOrder::Equal);
        }
        let expected = match xy {
            LoewnerOrder::GreaterEqual => LoewnerOrder::LessEqual,
            LoewnerOrder::LessEqual => LoewnerOrder::GreaterEqual,
            o => o,
        };
        if xy != LoewnerOrder::Equal {
            prop_assert_eq!(yx, expected);
        }
        prop_assert_eq!(loewner_compare(&x, &x, &tol).unwrap().order, LoewnerOrder::Equal);
    }

    #[test]
    fn k_identity_matches_eigenvalues((d, e) in dim_and_entries(1), k in 0.0f64..40.0) {
        let tol = Tolerance::default();
        let x = gram(d, &e);
        let by_eig = lambda_max(&x) <= k + tol.psd_eps;
        prop_assert_eq!(k_identity_dominates(k, &x, &tol).unwrap(), by_eig);
        let ki = SymMatrix::identity(d).scaled(k).unwrap();
        let lo = ki.sub(&x).unwrap().min_eigenvalue();
        // away from the boundary the Loewner test agrees
        if lo.abs() > 1e-6 {
            prop_assert_eq!(by_eig, lo > 0.0);
        }
    }

    #[test]
    fn cauchy_schwarz_gap_is_snnd(
        (m, e) in (2usize..=6).prop_flat_map(|m| (Just(m), prop::collection::vec(-2.0f64..2.0, 4 * m * m))),
        rows_x in 1usize..=3,
        rows_y in 1usize..=2,
    ) {
        let tol = Tolerance::default();
        let r = DMatrix::from_row_slice(m, m, &e[..m * m]);
        let h = SymMatrix::new(&r * r.transpose() + DMatrix::identity(m, m) * 0.1).unwrap();
        let x = DMatrix::from_row_slice(rows_x, m, &e[m * m..m * m + rows_x * m]);
        let y = DMatrix::from_row_slice(rows_y, m, &e[2 * m * m..2 * m * m + rows_y * m]);
        let Ok(cs) = weighted_cauchy_schwarz(&x, &y, &h, &tol) else { return Ok(()) };
        let gap = cs.lhs.sub(&cs.rhs).unwrap();
        prop_assert!(cs.gap_is_snnd);
        prop_assert!(gap.min_eigenvalue() >= -1e-9 * (1.0 + gap.frobenius_norm()));
        prop_assert!(!cs.equality || rows_x == 0 || gap.frobenius_norm() <= 1e-8 * (1.0 + cs.lhs.frobenius_norm()));
    }

    #[test]
    fn cauchy_schwarz_equality_on_row_space(
        (m, e) in (2usize..=6).prop_flat_map(|m| (Just(m), prop::collection::vec(-2.0f64..2.0, 3 * m * m))),
    ) {
        let tol = Tolerance::default();
        let r = DMatrix::from_row_slice(m, m, &e[..m * m]);
        let h = SymMatrix::new(&r * r.transpose() + DMatrix::identity(m, m)).unwrap();
        let y = DMatrix::from_row_slice(2, m, &e[m * m..m * m + 2 * m]);
        let lambda = DMatrix::from_row_slice(2, 2, &e[2 * m * m..2 * m * m + 4]);
        let Ok(cs) = weighted_cauchy_schwarz(&(&lambda * &y), &y, &h, &tol) else { return Ok(()) };
        prop_assert!(cs.equality);
        prop_assert!(cs.gap_is_snnd);
    }

    #[test]
    fn rayleigh_reduction_dominates(
        (m, e) in (1usize..=6).prop_flat_map(|m| (Just(m), prop::collection::vec(-2.0f64..2.0, 2 * m * m + 2 * m))),
        rows_a in 1usize..=6,
    ) {
        let tol = Tolerance::default();
        let rows_a = rows_a.min(m);
        let r = DMatrix::from_row_slice(m, m, &e[..m * m]);
        let b = SymMatrix::new(&r * r.transpose() + DMatrix::identity(m, m) * 0.2).unwrap();
        let a = DMatrix::from_row_slice(rows_a, m, &e[m * m..m * m + rows_a * m]);
        let g = DMatrix::from_row_slice(2, m, &e[2 * m * m..2 * m * m + 2 * m]);
        let Ok(rr) = rayleigh_reduction(&g, &b, &a, &tol) else { return Ok(()) };
        let gap = rr.v.sub(&rr.w).unwrap();
        prop_assert!(is_snnd(&gap, &tol));
        prop_assert!(gap.min_eigenvalue() >= -1e-9 * (1.0 + gap.frobenius_norm()));
        prop_assert!(rr.dominance.order.is_ge());
    }
}

#[test]
fn snnd_examples() {
    let tol = Tolerance::default();
    assert!(is_snnd(
        &SymMatrix::from_row_slice(2, &[1.0, 1.0, 1.0, 1.0]).unwrap(),
        &tol
    ));
    assert!(!is_snnd(&SymMatrix::from_diagonal(&[1.0, -1e-3]).unwrap(), &tol));
}
