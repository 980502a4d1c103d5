//! Independent reference implementations used as test oracles.
//!
//! Everything here goes through nalgebra's dense routines or straight-line
//! textbook loops, never through the solver code paths it is compared with.

pub use nalgebra;
use nalgebra::{DMatrix, DVector};
use paradmm_core::block::{BlockOperator, BlockVector};
use paradmm_core::linalg::Matrix;
use paradmm_core::objective::{BlockFunction, Problem, SeparableObjective};
use paradmm_core::prox::BlockProx;
use paradmm_core::rng::Rng;

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_col_major())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_col_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).unwrap()
}

pub fn dense_operator(op: &BlockOperator) -> DMatrix<f64> {
    let n: usize = op.block_sizes().iter().sum();
    let mut out = DMatrix::zeros(op.rows(), n);
    let mut col = 0;
    for a in op.blocks() {
        out.view_mut((0, col), (a.rows(), a.cols())).copy_from(&to_na(a));
        col += a.cols();
    }
    out
}

pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let mut data = vec![0.0; rows * cols];
    rng.fill_gaussian(&mut data);
    Matrix::from_col_major(rows, cols, data).unwrap()
}

pub fn gaussian_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    rng.fill_gaussian(&mut v);
    v
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Largest singular value squared.
pub fn spectral_norm_sq(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let s = m.clone().svd(false, false).singular_values.max();
    s * s
}

/// Dense `P_i`.
pub fn prox_matrix(p: &BlockProx, a: &Matrix, rho: f64) -> DMatrix<f64> {
    let n = a.cols();
    let an = to_na(a);
    match p {
        BlockProx::None => DMatrix::zeros(n, n),
        BlockProx::Standard(t) => DMatrix::identity(n, n) * *t,
        BlockProx::ProxLinear(t) => DMatrix::identity(n, n) * *t - an.transpose() * &an * rho,
        BlockProx::Explicit(m) => to_na(m),
    }
}

/// Dense `G_x = blkdiag(P_i + ρA_iᵀA_i)`.
pub fn dense_gx(op: &BlockOperator, rho: f64, prox: &[BlockProx]) -> DMatrix<f64> {
    let n: usize = op.block_sizes().iter().sum();
    let mut g = DMatrix::zeros(n, n);
    let mut off = 0;
    for (a, p) in op.blocks().iter().zip(prox) {
        let an = to_na(a);
        let blk = prox_matrix(p, a, rho) + an.transpose() * &an * rho;
        g.view_mut((off, off), (a.cols(), a.cols())).copy_from(&blk);
        off += a.cols();
    }
    g
}

/// `h` evaluated with dense matrices.
pub fn dense_h(
    op: &BlockOperator,
    rho: f64,
    gamma: f64,
    prox: &[BlockProx],
    dx: &[f64],
    dl: &[f64],
) -> f64 {
    let g = dense_gx(op, rho, prox);
    let a = dense_operator(op);
    let dx = DVector::from_column_slice(dx);
    let dl = DVector::from_column_slice(dl);
    dx.dot(&(&g * &dx)) + (2.0 - gamma) / (rho * gamma * gamma) * dl.dot(&dl) + (2.0 / gamma) * dl.dot(&(&a * &dx))
}

/// Primal-dual solution of a problem whose blocks are all quadratic or zero.
#[derive(Debug, Clone)]
pub struct Kkt {
    pub x: BlockVector,
    pub lambda: Vec<f64>,
}

/// Solves `CᵀCx − Aᵀλ = Cᵀd, Ax = c` by a dense SVD least-squares solve.
pub fn quadratic_kkt(problem: &Problem) -> Kkt {
    let op = &problem.operator;
    let sizes = op.block_sizes();
    let n: usize = sizes.iter().sum();
    let m = op.rows();
    let mut k = DMatrix::zeros(n + m, n + m);
    let mut rhs = DVector::zeros(n + m);
    let a = dense_operator(op);
    let mut off = 0;
    for (i, f) in problem.objective.terms.iter().enumerate() {
        let ni = sizes[i];
        match f {
            BlockFunction::Quadratic { c, d } => {
                let cn = to_na(c);
                k.view_mut((off, off), (ni, ni)).copy_from(&(cn.transpose() * &cn));
                let ctd = cn.transpose() * DVector::from_column_slice(d);
                rhs.rows_mut(off, ni).copy_from(&ctd);
            }
            BlockFunction::Zero => {}
            other => panic!("KKT oracle needs quadratic blocks, got {:?}", other.kind()),
        }
        off += ni;
    }
    k.view_mut((0, n), (n, m)).copy_from(&(-a.transpose()));
    k.view_mut((n, 0), (m, n)).copy_from(&a);
    rhs.rows_mut(n, m).copy_from(&DVector::from_column_slice(op.rhs()));
    let sol = k.svd(true, true).solve(&rhs, 1e-12).expect("svd solve");
    let flat: Vec<f64> = sol.rows(0, n).iter().copied().collect();
    Kkt {
        x: BlockVector::split(&flat, &sizes).unwrap(),
        lambda: sol.rows(n, m).iter().copied().collect(),
    }
}

/// Random strongly convex quadratic problem: `C_i` is `(n_i + 2) × n_i`,
/// `A_i` is `m × n_i`, all Gaussian.
pub fn random_quadratic_problem(seed: u64, sizes: &[usize], m: usize) -> Problem {
    let mut rng = Rng::new(seed);
    let mut blocks = Vec::new();
    let mut terms = Vec::new();
    for &ni in sizes {
        blocks.push(gaussian_matrix(&mut rng, m, ni));
        let c = gaussian_matrix(&mut rng, ni + 2, ni);
        let d = gaussian_vec(&mut rng, ni + 2);
        terms.push(BlockFunction::quadratic(c, d).unwrap());
    }
    let rhs = gaussian_vec(&mut rng, m);
    Problem::new(BlockOperator::new(blocks, rhs).unwrap(), SeparableObjective::new(terms)).unwrap()
}

/// Blocks `Q_i + eps·E_i`: `Q` has orthonormal columns (so distinct blocks
/// span orthogonal spaces) and each `E_i` is Gaussian with unit spectral
/// norm. Needs `Σ n_i ≤ m`.
pub fn near_orthogonal_blocks(seed: u64, sizes: &[usize], m: usize, eps: f64) -> Vec<Matrix> {
    let n: usize = sizes.iter().sum();
    assert!(n <= m, "near-orthogonal blocks need Σn_i ≤ m");
    let mut rng = Rng::new(seed);
    let g = to_na(&gaussian_matrix(&mut rng, m, n));
    let q = g.qr().q();
    let mut out = Vec::new();
    let mut off = 0;
    for &ni in sizes {
        let qi = q.columns(off, ni).into_owned();
        let mut e = to_na(&gaussian_matrix(&mut rng, m, ni));
        let s = spectral_norm_sq(&e).sqrt();
        e /= s;
        out.push(from_na(&(qi + e * eps)));
        off += ni;
    }
    out
}

/// Iterates `(x_1, x_2, λ)` of the textbook two-block ADMM
///
///   x_1 ← argmin f_1 − λᵀA_1x_1 + ρ/2‖A_1x_1 + A_2x_2 − c‖²
///   x_2 ← argmin f_2 − λᵀA_2x_2 + ρ/2‖A_1x_1 + A_2x_2 − c‖²
///   λ   ← λ − ρ(A_1x_1 + A_2x_2 − c)
///
/// for quadratic `f_i`, starting from zero.
pub fn classic_admm(problem: &Problem, rho: f64, iters: usize) -> Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    assert_eq!(problem.num_blocks(), 2);
    let op = &problem.operator;
    let a1 = to_na(op.block(0));
    let a2 = to_na(op.block(1));
    let c = DVector::from_column_slice(op.rhs());
    let quad = |i: usize| match &problem.objective.terms[i] {
        BlockFunction::Quadratic { c, d } => {
            let cn = to_na(c);
            (cn.transpose() * &cn, cn.transpose() * DVector::from_column_slice(d))
        }
        _ => panic!("classic ADMM oracle needs quadratic blocks"),
    };
    let (h1, g1) = quad(0);
    let (h2, g2) = quad(1);
    let m1 = (h1 + a1.transpose() * &a1 * rho).lu();
    let m2 = (h2 + a2.transpose() * &a2 * rho).lu();
    let mut x2 = DVector::zeros(a2.ncols());
    let mut lam = DVector::zeros(c.len());
    let mut out = Vec::new();
    for _ in 0..iters {
        let r1 = &g1 + a1.transpose() * &lam - a1.transpose() * (&a2 * &x2 - &c) * rho;
        let x1 = m1.solve(&r1).unwrap();
        let r2 = &g2 + a2.transpose() * &lam - a2.transpose() * (&a1 * &x1 - &c) * rho;
        x2 = m2.solve(&r2).unwrap();
        lam -= (&a1 * &x1 + &a2 * &x2 - &c) * rho;
        out.push((x1.as_slice().to_vec(), x2.as_slice().to_vec(), lam.as_slice().to_vec()));
    }
    out
}

/// Iterates `(x, λ)` of the augmented Lagrangian method on a single
/// quadratic block, starting from zero.
pub fn augmented_lagrangian(problem: &Problem, rho: f64, iters: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    assert_eq!(problem.num_blocks(), 1);
    let a = to_na(problem.operator.block(0));
    let c = DVector::from_column_slice(problem.operator.rhs());
    let (h, g) = match &problem.objective.terms[0] {
        BlockFunction::Quadratic { c, d } => {
            let cn = to_na(c);
            (cn.transpose() * &cn, cn.transpose() * DVector::from_column_slice(d))
        }
        _ => panic!("augmented Lagrangian oracle needs a quadratic block"),
    };
    let lu = (h + a.transpose() * &a * rho).lu();
    let mut lam = DVector::zeros(c.len());
    let mut out = Vec::new();
    for _ in 0..iters {
        let x = lu.solve(&(&g + a.transpose() * &lam + a.transpose() * &c * rho)).unwrap();
        lam -= (&a * &x - &c) * rho;
        out.push((x.as_slice().to_vec(), lam.as_slice().to_vec()));
    }
    out
}

/// `min costᵀx s.t. Mx = b, x ≥ 0` by the two-phase tableau simplex with
/// Bland's rule. Returns `None` when infeasible or unbounded.
pub fn simplex(cost: &[f64], m: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let (rows, n) = m.shape();
    let tol = 1e-9;
    // columns: x (n), artificials (rows), rhs
    let width = n + rows + 1;
    let mut t = DMatrix::<f64>::zeros(rows, width);
    for r in 0..rows {
        let s = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(r, j)] = s * m[(r, j)];
        }
        t[(r, n + r)] = 1.0;
        t[(r, width - 1)] = s * b[r];
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();

    let pivot = |t: &mut DMatrix<f64>, basis: &mut Vec<usize>, r: usize, j: usize| {
        let p = t[(r, j)];
        for k in 0..width {
            t[(r, k)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = t[(i, j)];
                if f != 0.0 {
                    for k in 0..width {
                        t[(i, k)] -= f * t[(r, k)];
                    }
                }
            }
        }
        basis[r] = j;
    };

    let run = |t: &mut DMatrix<f64>, basis: &mut Vec<usize>, c: &[f64], allowed: usize| -> bool {
        loop {
            // reduced costs
            let mut enter = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let mut rc = c[j];
                for (r, &bj) in basis.iter().enumerate() {
                    rc -= c[bj] * t[(r, j)];
                }
                if rc < -tol {
                    enter = Some(j);
                    break;
                }
            }
            let Some(j) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..rows {
                if t[(r, j)] > tol {
                    let ratio = t[(r, width - 1)] / t[(r, j)];
                    let better = match leave {
                        None => true,
                        Some((lr, lv)) => ratio < lv - tol || (ratio <= lv + tol && basis[r] < basis[lr]),
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            pivot(t, basis, r, j);
        }
    };

    let mut c1 = vec![0.0; n + rows];
    c1[n..].iter_mut().for_each(|v| *v = 1.0);
    run(&mut t, &mut basis, &c1, n + rows);
    let infeas: f64 = (0..rows).filter(|&r| basis[r] >= n).map(|r| t[(r, width - 1)]).sum();
    if infeas > 1e-7 {
        return None;
    }
    // drive remaining artificials out of the basis
    for r in 0..rows {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| !basis.contains(&j) && t[(r, j)].abs() > tol) {
                pivot(&mut t, &mut basis, r, j);
            }
        }
    }
    let mut c2 = cost.to_vec();
    c2.extend(std::iter::repeat(0.0).take(rows));
    if !run(&mut t, &mut basis, &c2, n) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (r, &bj) in basis.iter().enumerate() {
        if bj < n {
            x[bj] = t[(r, width - 1)];
        }
    }
    Some(x)
}

/// `min ‖x‖₁ s.t. Ax = c` via the split `x = u − v`, `u, v ≥ 0`.
pub fn basis_pursuit_lp(a: &Matrix, c: &[f64]) -> Option<Vec<f64>> {
    let an = to_na(a);
    let n = an.ncols();
    let mut m = DMatrix::zeros(an.nrows(), 2 * n);
    m.columns_mut(0, n).copy_from(&an);
    m.columns_mut(n, n).copy_from(&(-&an));
    let uv = simplex(&vec![1.0; 2 * n], &m, c)?;
    Some((0..n).map(|j| uv[j] - uv[n + j]).collect())
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Three Gaussian `40 × 30` coupling blocks with Gaussian quadratic
/// objectives. Seed 0 makes plain Jacobian ADMM diverge at `ρ = 1`.
pub fn gaussian_instance(seed: u64) -> Problem {
    let mut rng = Rng::new(seed);
    let blocks: Vec<Matrix> = (0..3).map(|_| gaussian_matrix(&mut rng, 40, 30)).collect();
    let terms = (0..3)
        .map(|_| BlockFunction::quadratic(gaussian_matrix(&mut rng, 30, 30), gaussian_vec(&mut rng, 30)).unwrap())
        .collect();
    let c = gaussian_vec(&mut rng, 40);
    Problem::new(BlockOperator::new(blocks, c).unwrap(), SeparableObjective::new(terms)).unwrap()
}

/// 2 to 4 Gaussian blocks of 1 to 4 columns over 3 to 7 rows.
pub fn random_operator(rng: &mut Rng) -> BlockOperator {
    let n_blocks = 2 + rng.below(3) as usize;
    let m = 3 + rng.below(5) as usize;
    let blocks = (0..n_blocks)
        .map(|_| {
            let ni = 1 + rng.below(4) as usize;
            gaussian_matrix(rng, m, ni)
        })
        .collect();
    BlockOperator::new(blocks, vec![0.0; m]).unwrap()
}

/// A random mix of every proximal kind, scaled around `ρ‖A_i‖²`.
pub fn random_prox(rng: &mut Rng, op: &BlockOperator, rho: f64) -> paradmm_core::prox::ProxSpec {
    paradmm_core::prox::ProxSpec::new(
        op.blocks()
            .iter()
            .map(|a| {
                let scale = rho * spectral_norm_sq(&to_na(a));
                match rng.below(4) {
                    0 => BlockProx::None,
                    1 => BlockProx::Standard(scale * 4.0 * rng.uniform()),
                    2 => BlockProx::ProxLinear(scale * 6.0 * rng.uniform()),
                    _ => {
                        let b = gaussian_matrix(rng, a.cols(), a.cols());
                        let mut p = b.tr_mul(&b);
                        p.scale(scale * rng.uniform());
                        BlockProx::Explicit(p)
                    }
                }
            })
            .collect(),
    )
}

/// `max_{i≠j} ‖A_iᵀA_j‖` by SVD.
pub fn dense_delta(op: &BlockOperator) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..op.num_blocks() {
        for j in 0..op.num_blocks() {
            if i != j {
                let c = to_na(op.block(i)).transpose() * to_na(op.block(j));
                d = d.max(spectral_norm_sq(&c).sqrt());
            }
        }
    }
    d
}

pub fn gram(a: &Matrix) -> DMatrix<f64> {
    let an = to_na(a);
    an.transpose() * an
}
