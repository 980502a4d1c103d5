use paradmm_core::block::{BlockOperator, BlockVector, Iterate};
use paradmm_core::linalg::{self, Matrix};
use paradmm_core::metric::MetricSpec;
use paradmm_core::problems::partition_sizes;
use paradmm_core::prox::shrink;
use paradmm_core::solvers::z_update;
use paradmm_core::sum::exact_sum;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    -1e3..1e3f64
}

proptest! {
    #[test]
    fn exact_sum_ignores_order(mut v in prop::collection::vec(finite(), 0..40), seed in any::<u64>()) {
        let a = exact_sum(&v);
        let n = v.len();
        if n > 1 {
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                v.swap(i, (s >> 33) as usize % (i + 1));
            }
        }
        prop_assert_eq!(a.to_bits(), exact_sum(&v).to_bits());
    }

    #[test]
    fn shrink_is_nonexpansive(a in prop::collection::vec(finite(), 1..10), b in prop::collection::vec(finite(), 1..10), k in 0.0..10.0f64) {
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        let d = linalg::norm(&linalg::sub(&shrink(a, k).unwrap(), &shrink(b, k).unwrap()));
        prop_assert!(d <= linalg::norm(&linalg::sub(a, b)) * (1.0 + 1e-12));
    }

    #[test]
    fn partition_sizes_are_balanced(n in 1usize..500, k in 1usize..50) {
        prop_assume!(k <= n);
        let s = partition_sizes(n, k).unwrap();
        prop_assert_eq!(s.iter().sum::<usize>(), n);
        prop_assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1);
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn z_update_sums_to_zero(
        ax in prop::collection::vec(prop::collection::vec(-4.0..4.0f64, 3), 1..6),
        rho in 0.1..10.0f64,
    ) {
        let n = ax.len();
        let lambdas: Vec<Vec<f64>> = ax.iter().map(|v| v.iter().map(|x| 0.5 * x).collect()).collect();
        let rhs = vec![1.0, -2.0, 0.25];
        let z = z_update(&ax, &lambdas, &rhs, rho);
        prop_assert_eq!(z.len(), n);
        for j in 0..3 {
            let col: Vec<f64> = z.iter().map(|zi| zi[j]).collect();
            prop_assert!(exact_sum(&col).abs() <= 1e-12 * (1.0 + col.iter().map(|v| v.abs()).sum::<f64>()));
        }
    }

    #[test]
    fn identity_metric_obeys_parallelogram_law(
        x in prop::collection::vec(finite(), 4),
        y in prop::collection::vec(finite(), 4),
    ) {
        let op = BlockOperator::new(vec![Matrix::identity(2), Matrix::identity(2)], vec![0.0; 2]).unwrap();
        let g = MetricSpec::jacobi(&op, 0.7);
        let mk = |v: &[f64]| Iterate::new(BlockVector::split(&v[..4], &[2, 2]).unwrap(), vec![v[0], v[3]]);
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let lhs = g.norm_sq(&mk(&s)).unwrap() + g.norm_sq(&mk(&d)).unwrap();
        let rhs = 2.0 * (g.norm_sq(&mk(&x)).unwrap() + g.norm_sq(&mk(&y)).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
        prop_assert!(g.norm_sq(&mk(&x)).unwrap() >= 0.0);
    }

    #[test]
    fn apply_is_linear(
        x in prop::collection::vec(finite(), 5),
        y in prop::collection::vec(finite(), 5),
        a in -3.0..3.0f64,
    ) {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 0.0], &[0.5, -1.0, 3.0]]).unwrap();
        let op = BlockOperator::new(vec![m, Matrix::diag(&[2.0, -1.0])], vec![0.0; 2]).unwrap();
        let s = |v: &[f64]| BlockVector::split(v, &[3, 2]).unwrap();
        let comb: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
        let lhs = op.apply(&s(&comb)).unwrap();
        let ax = op.apply(&s(&x)).unwrap();
        let ay = op.apply(&s(&y)).unwrap();
        for i in 0..2 {
            let want = a * ax[i] + ay[i];
            prop_assert!((lhs[i] - want).abs() <= 1e-9 * (1.0 + want.abs() + ax[i].abs() * a.abs()));
        }
    }
}
