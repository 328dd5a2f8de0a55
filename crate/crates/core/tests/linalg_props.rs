mod common;

use common::{gaussian, random_spd, rng};
use crnn_core::linalg::{induced_norm, null_basis, weighted_norm, Matrix};
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..5, 1usize..5, 1usize..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), (m, k, n) in dims(), (p, l, q) in dims()) {
        let mut r = rng(seed);
        let a = gaussian(&mut r, m, k, 1.0);
        let b = gaussian(&mut r, k, n, 1.0);
        let c = gaussian(&mut r, p, l, 1.0);
        let d = gaussian(&mut r, l, q, 1.0);
        let lhs = a.matmul(&b).kron(&c.matmul(&d));
        let rhs = a.kron(&c).matmul(&b.kron(&d));
        let scale = 1.0f64.max(lhs.max_abs());
        prop_assert!(lhs.approx_eq(&rhs, 1e-10 * scale));
    }

    #[test]
    fn identity_has_unit_induced_norm(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let p = random_spd(&mut r, n);
        let v = induced_norm(&Matrix::identity(n), &p, &p).unwrap();
        prop_assert!((v - 1.0).abs() <= 1e-9, "got {v}");
    }

    #[test]
    fn weighted_norm_is_a_norm(
        seed in any::<u64>(),
        x in prop::collection::vec(-10.0f64..10.0, 4),
        y in prop::collection::vec(-10.0f64..10.0, 4),
        t in -5.0f64..5.0,
    ) {
        let p = random_spd(&mut rng(seed), 4);
        let nx = weighted_norm(&x, &p);
        let ny = weighted_norm(&y, &p);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(weighted_norm(&sum, &p) <= nx + ny + 1e-9 * (1.0 + nx + ny));
        let tx: Vec<f64> = x.iter().map(|a| t * a).collect();
        prop_assert!((weighted_norm(&tx, &p) - t.abs() * nx).abs() <= 1e-9 * (1.0 + nx));
    }

    #[test]
    fn null_basis_annihilates(seed in any::<u64>(), rows in 2usize..6, cols in 2usize..7, rank in 1usize..4) {
        let rank = rank.min(rows).min(cols);
        let mut r = rng(seed);
        let a = gaussian(&mut r, rows, rank, 1.0).matmul(&gaussian(&mut r, rank, cols, 1.0));
        let z = null_basis(&a).unwrap();
        prop_assert_eq!(z.cols(), cols - rank);
        if z.cols() > 0 {
            let fro = a.frobenius_norm();
            prop_assert!(a.matmul(&z).max_abs() <= 1e-9 * fro);
            prop_assert!(z.tr_matmul(&z).approx_eq(&Matrix::identity(z.cols()), 1e-9));
        }
    }
}
