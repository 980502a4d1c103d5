use paradmm_core::linalg::{self, Matrix};
use paradmm_core::problems::{gen_basis_pursuit, gen_exchange, partition, partition_sizes, split_vector};
use paradmm_core::rng::Rng;
use paradmm_core::sum::exact_sum;
use paradmm_core::Error;
use paradmm_testkit as tk;
use paradmm_testkit::nalgebra::DVector;

#[test]
fn exchange_planted_solution_is_optimal() {
    for seed in 0..5 {
        let inst = gen_exchange(12, 6, 9, seed).unwrap();
        for j in 0..12 {
            let col: Vec<f64> = inst.x_star.blocks().iter().map(|b| b[j]).collect();
            assert_eq!(exact_sum(&col), 0.0);
        }
        let p = inst.problem();
        assert_eq!(p.objective.value(&inst.x_star), 0.0);
        let kkt = tk::quadratic_kkt(&p);
        let scale: f64 = inst.d.iter().map(|d| linalg::norm_sq(d)).sum();
        assert!(p.objective.value(&kkt.x) <= 1e-16 * scale.max(1.0) * 1e3);
        assert!(linalg::norm(&p.operator.residual(&kkt.x).unwrap()) < 1e-10);
    }
}

#[test]
fn exchange_degenerate_and_deterministic() {
    let one = gen_exchange(4, 1, 3, 5).unwrap();
    assert!(one.x_star.block(0).iter().all(|v| *v == 0.0));
    assert!(one.d[0].iter().all(|v| *v == 0.0));
    assert_eq!(gen_exchange(7, 3, 5, 9).unwrap(), gen_exchange(7, 3, 5, 9).unwrap());
    assert_ne!(gen_exchange(7, 3, 5, 9).unwrap(), gen_exchange(7, 3, 5, 10).unwrap());
    assert!(matches!(gen_exchange(0, 3, 5, 9), Err(Error::Domain(_))));
}

#[test]
fn basis_pursuit_shape_and_noise() {
    let inst = gen_basis_pursuit(300, 1000, 100, 60, 0.0, 1).unwrap();
    assert!(inst.operator().block_sizes().iter().all(|&s| s == 10));
    assert_eq!(inst.x_star.iter().filter(|v| **v != 0.0).count(), 60);
    let r = linalg::sub(&inst.a.mul_vec(&inst.x_star), &inst.c);
    assert_eq!(linalg::norm(&r), 0.0);
    assert_eq!(inst, gen_basis_pursuit(300, 1000, 100, 60, 0.0, 1).unwrap());
    assert!(matches!(gen_basis_pursuit(5, 10, 2, 11, 0.0, 0), Err(Error::Domain(_))));
    assert!(matches!(gen_basis_pursuit(5, 10, 11, 2, 0.0, 0), Err(Error::Domain(_))));
}

#[test]
fn basis_pursuit_noise_level_over_seeds() {
    let sigma = 1e-3;
    let mut inside = 0;
    for seed in 0..100 {
        let inst = gen_basis_pursuit(30, 60, 6, 5, sigma, seed).unwrap();
        let r = linalg::sub(&inst.a.mul_vec(&inst.x_star), &inst.c);
        let level = linalg::norm(&r) / (30f64).sqrt();
        if (0.5e-3..=2e-3).contains(&level) {
            inside += 1;
        }
    }
    assert!(inside >= 99, "{inside}/100 inside the chi band");
}

#[test]
fn partition_examples() {
    assert_eq!(partition_sizes(10, 3).unwrap(), vec![4, 3, 3]);
    assert!(matches!(partition_sizes(3, 4), Err(Error::Domain(_))));
    let mut rng = Rng::new(1);
    let a = tk::gaussian_matrix(&mut rng, 5, 10);
    let one = partition(&a, 1, vec![0.0; 5]).unwrap();
    assert_eq!(one.block(0), &a);
    let op = partition(&a, 3, vec![0.0; 5]).unwrap();
    assert_eq!(Matrix::hcat(op.blocks()).unwrap(), a);
    let x = tk::gaussian_vec(&mut rng, 10);
    let ours = op.apply(&split_vector(&x, 3).unwrap()).unwrap();
    let want = tk::to_na(&a) * DVector::from_column_slice(&x);
    assert!(tk::max_abs_diff(&ours, want.as_slice()) < 1e-12);
}
