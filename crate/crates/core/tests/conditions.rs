use paradmm_testkit::nalgebra::DMatrix;
use paradmm_core::block::BlockOperator;
use paradmm_core::conditions::{
    check_near_orthogonal_proximal, check_near_orthogonality, check_proximal_contraction, suggest_tau, TauKind,
    STRICT_MARGIN,
};
use paradmm_core::linalg::Matrix;
use paradmm_core::prox::ProxSpec;
use paradmm_core::rng::Rng;
use paradmm_testkit as tk;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn contraction_check_agrees_with_dense_eigenvalues() {
    let mut rng = Rng::new(41);
    for _ in 0..50 {
        let op = tk::random_operator(&mut rng);
        let rho = 0.1 + 2.0 * rng.uniform();
        let gamma = 0.1 + 1.8 * rng.uniform();
        let prox = tk::random_prox(&mut rng, &op, rho);
        let rep = check_proximal_contraction(&op, rho, gamma, &prox).unwrap();
        let n = op.num_blocks() as f64;
        let kappa = rho * (n / (2.0 - gamma) - 1.0);
        let mut all = true;
        for (i, (p, a)) in prox.blocks.iter().zip(op.blocks()).enumerate() {
            let ev = tk::min_eig(&(tk::prox_matrix(p, a, rho) - tk::gram(a) * kappa));
            assert!(close(rep.margins[i].margin, ev), "block {i}: {} vs {ev}", rep.margins[i].margin);
            all &= ev > STRICT_MARGIN;
        }
        assert_eq!(rep.satisfied, all);
    }
}

#[test]
fn near_orthogonality_agrees_with_dense_oracle() {
    let mut rng = Rng::new(42);
    for _ in 0..50 {
        let op = tk::random_operator(&mut rng);
        let rep = check_near_orthogonality(&op).unwrap();
        let delta = tk::dense_delta(&op);
        assert!(close(rep.delta.unwrap(), delta));
        let n = op.num_blocks() as f64;
        let mut all = true;
        for (i, a) in op.blocks().iter().enumerate() {
            let lm = tk::min_eig(&tk::gram(a));
            assert!(close(rep.lambda_min[i], lm));
            assert!(close(rep.margins[i].margin, lm - 3.0 * (n - 1.0) * delta));
            all &= lm - 3.0 * (n - 1.0) * delta > STRICT_MARGIN;
        }
        assert_eq!(rep.satisfied, all);
    }
}

#[test]
fn near_orthogonal_proximal_agrees_over_a_grid() {
    let mut rng = Rng::new(43);
    for trial in 0..50 {
        let sizes = [2, 3, 2];
        let eps = if trial % 2 == 0 { 1e-3 } else { 0.05 };
        let blocks = tk::near_orthogonal_blocks(trial, &sizes, 9, eps);
        let op = BlockOperator::new(blocks, vec![0.0; 9]).unwrap();
        let rho = 0.5 + rng.uniform();
        let gamma = 0.2 + rng.uniform();
        let prox = tk::random_prox(&mut rng, &op, rho);
        let delta = tk::dense_delta(&op);
        let n = 3.0;
        let mut alpha = 0.1;
        while alpha < 2.0 - gamma {
            for beta in [0.1, 0.5, 1.0, 2.0] {
                let rep = check_near_orthogonal_proximal(&op, rho, gamma, &prox, alpha, beta).unwrap();
                let mut all = true;
                for (i, (p, a)) in prox.blocks.iter().zip(op.blocks()).enumerate() {
                    let g = tk::gram(a);
                    let k = g.nrows();
                    let m1 = tk::prox_matrix(p, a, rho)
                        - &g * (rho * (1.0 / alpha - 1.0))
                        - DMatrix::identity(k, k) * (rho / beta * delta * (n - 1.0));
                    let e1 = tk::min_eig(&m1);
                    let e2 = tk::min_eig(&g) - (2.0 - gamma + beta) / (2.0 - gamma - alpha) * delta * (n - 1.0);
                    assert!(close(rep.margins[2 * i].margin, e1));
                    assert!(close(rep.margins[2 * i + 1].margin, e2));
                    all &= e1 > STRICT_MARGIN && e2 > STRICT_MARGIN;
                }
                assert_eq!(rep.satisfied, all);
            }
            alpha += 0.1;
        }
        assert!(check_near_orthogonal_proximal(&op, rho, gamma, &prox, 2.0 - gamma, 1.0).is_err());
    }
}

#[test]
fn orthonormal_disjoint_blocks_pass_and_repeated_blocks_fail() {
    let blocks = tk::near_orthogonal_blocks(1, &[2, 2, 2], 6, 0.0);
    let op = BlockOperator::new(blocks, vec![0.0; 6]).unwrap();
    let rep = check_near_orthogonality(&op).unwrap();
    assert!(rep.satisfied);
    assert!(rep.delta.unwrap() < 1e-12);
    assert!(rep.lambda_min.iter().all(|l| (l - 1.0).abs() < 1e-10));

    let q = tk::near_orthogonal_blocks(2, &[3], 3, 0.0).remove(0);
    let op = BlockOperator::new(vec![q.clone(), q], vec![0.0; 3]).unwrap();
    let rep = check_near_orthogonality(&op).unwrap();
    assert!(!rep.satisfied);
    assert!((rep.delta.unwrap() - 1.0).abs() < 1e-8);

    let single = BlockOperator::new(vec![Matrix::identity(2)], vec![0.0; 2]).unwrap();
    let rep = check_near_orthogonality(&single).unwrap();
    assert!(rep.satisfied && rep.delta == Some(0.0));
}

#[test]
fn exact_orthogonality_with_rank_deficiency_fails_the_proximal_variant() {
    // second block is rank deficient: two equal columns
    let q = tk::near_orthogonal_blocks(3, &[2, 1], 4, 0.0);
    let c = q[1].col(0).to_vec();
    let b2 = Matrix::from_col_major(4, 2, [c.clone(), c].concat()).unwrap();
    let op = BlockOperator::new(vec![q[0].clone(), b2], vec![0.0; 4]).unwrap();
    let prox = ProxSpec::uniform_standard(2, 100.0);
    let rep = check_near_orthogonal_proximal(&op, 1.0, 1.0, &prox, 0.5, 1.0).unwrap();
    assert!(!rep.satisfied);
    let full = BlockOperator::new(tk::near_orthogonal_blocks(3, &[2, 2], 4, 0.0), vec![0.0; 4]).unwrap();
    assert!(check_near_orthogonal_proximal(&full, 1.0, 1.0, &prox, 0.5, 1.0).unwrap().satisfied);
}

#[test]
fn suggested_taus_recheck_as_satisfied() {
    let mut rng = Rng::new(44);
    for _ in 0..20 {
        let op = tk::random_operator(&mut rng);
        let rho = 0.1 + rng.uniform();
        let gamma = 0.1 + 1.8 * rng.uniform();
        for (kind, mk) in [
            (TauKind::Standard, ProxSpec::standard as fn(&[f64]) -> ProxSpec),
            (TauKind::ProxLinear, ProxSpec::prox_linear),
        ] {
            let t = suggest_tau(&op, rho, gamma, kind, 1.05).unwrap();
            assert!(check_proximal_contraction(&op, rho, gamma, &mk(&t)).unwrap().satisfied);
        }
    }
}

#[test]
fn scaling_the_operator_scales_delta_and_thresholds() {
    let mut rng = Rng::new(45);
    let op = tk::random_operator(&mut rng);
    let s = 3.0;
    let scaled = op.scaled(s);
    let d0 = check_near_orthogonality(&op).unwrap().delta.unwrap();
    let d1 = check_near_orthogonality(&scaled).unwrap().delta.unwrap();
    assert!(close(d1, s * s * d0));
    let n = op.num_blocks();
    let r0 = check_proximal_contraction(&op, 1.0, 1.0, &ProxSpec::uniform_standard(n, 1.0)).unwrap();
    let r1 = check_proximal_contraction(&scaled, 1.0, 1.0, &ProxSpec::uniform_standard(n, s * s)).unwrap();
    for (a, b) in r0.tau_thresholds.iter().zip(&r1.tau_thresholds) {
        assert!(close(b.unwrap(), s * s * a.unwrap()));
    }
    assert_eq!(r0.satisfied, r1.satisfied);
}
