//! Proximal oracles and the per-block proximal-matrix menu.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::block::BlockOperator;
use crate::error::Error;
use crate::linalg::{self, Cholesky, Matrix};

/// Proximal matrix `P_i` for one block.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BlockProx {
    /// `P_i = 0`
    None,
    /// `P_i = τ I`
    Standard(f64),
    /// `P_i = τ I − ρ A_iᵀ A_i`
    ProxLinear(f64),
    /// A dense symmetric positive semidefinite `P_i`.
    Explicit(Matrix),
}

impl BlockProx {
    pub fn tau(&self) -> Option<f64> {
        match self {
            BlockProx::Standard(t) | BlockProx::ProxLinear(t) => Some(*t),
            _ => None,
        }
    }

    /// `vᵀ P_i v`. `a` is `A_i`; it is only read for the prox-linear kind.
    pub fn quad_form(&self, a: &Matrix, rho: f64, v: &[f64]) -> f64 {
        match self {
            BlockProx::None => 0.0,
            BlockProx::Standard(t) => t * linalg::norm_sq(v),
            BlockProx::ProxLinear(t) => t * linalg::norm_sq(v) - rho * linalg::norm_sq(&a.mul_vec(v)),
            BlockProx::Explicit(p) => p.quad_form(v),
        }
    }

    /// `P_i v`
    pub fn apply(&self, a: &Matrix, rho: f64, v: &[f64]) -> Vec<f64> {
        match self {
            BlockProx::None => vec![0.0; v.len()],
            BlockProx::Standard(t) => v.iter().map(|x| t * x).collect(),
            BlockProx::ProxLinear(t) => {
                let mut out: Vec<f64> = v.iter().map(|x| t * x).collect();
                let atav = a.tr_mul_vec(&a.mul_vec(v));
                linalg::axpy(-rho, &atav, &mut out);
                out
            }
            BlockProx::Explicit(p) => p.mul_vec(v),
        }
    }

    /// Materialized `P_i`.
    pub fn to_dense(&self, a: &Matrix, rho: f64) -> Matrix {
        let n = a.cols();
        match self {
            BlockProx::None => Matrix::zeros(n, n),
            BlockProx::Standard(t) => Matrix::identity(n).scaled(*t),
            BlockProx::ProxLinear(t) => {
                let mut p = a.gram().scaled(-rho);
                p.add_diag(*t);
                p
            }
            BlockProx::Explicit(p) => p.clone(),
        }
    }

    /// `α P_i + β q I`, keeping the structural kind. For the prox-linear kind
    /// the update applies to `τ` so the matrix stays of the form `τ I − ρ AᵀA`.
    pub fn grown(&self, alpha: f64, beta_q: f64) -> BlockProx {
        match self {
            BlockProx::None => {
                if beta_q > 0.0 {
                    BlockProx::Standard(beta_q)
                } else {
                    BlockProx::None
                }
            }
            BlockProx::Standard(t) => BlockProx::Standard(alpha * t + beta_q),
            BlockProx::ProxLinear(t) => BlockProx::ProxLinear(alpha * t + beta_q),
            BlockProx::Explicit(p) => {
                let mut q = p.scaled(alpha);
                q.add_diag(beta_q);
                BlockProx::Explicit(q)
            }
        }
    }
}

/// Per-block proximal matrices for the whole problem.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProxSpec {
    pub blocks: Vec<BlockProx>,
}

impl ProxSpec {
    pub fn new(blocks: Vec<BlockProx>) -> Self {
        ProxSpec { blocks }
    }

    pub fn none(n_blocks: usize) -> Self {
        ProxSpec {
            blocks: vec![BlockProx::None; n_blocks],
        }
    }

    pub fn standard(taus: &[f64]) -> Self {
        ProxSpec {
            blocks: taus.iter().map(|&t| BlockProx::Standard(t)).collect(),
        }
    }

    pub fn prox_linear(taus: &[f64]) -> Self {
        ProxSpec {
            blocks: taus.iter().map(|&t| BlockProx::ProxLinear(t)).collect(),
        }
    }

    pub fn uniform_standard(n_blocks: usize, tau: f64) -> Self {
        ProxSpec::standard(&vec![tau; n_blocks])
    }

    pub fn uniform_prox_linear(n_blocks: usize, tau: f64) -> Self {
        ProxSpec::prox_linear(&vec![tau; n_blocks])
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| matches!(b, BlockProx::None))
    }

    /// τ values of the Standard and ProxLinear blocks.
    pub fn taus(&self) -> Vec<f64> {
        self.blocks.iter().filter_map(|b| b.tau()).collect()
    }

    /// Checks the invariants of every block against `op`.
    ///
    /// A prox-linear τ below `ρ‖A_i‖²` makes `P_i` indefinite; that is
    /// allowed (the adaptive tuner starts there) and only logged.
    pub fn validate(&self, op: &BlockOperator, rho: f64) -> Result<(), Error> {
        if self.blocks.len() != op.num_blocks() {
            return Err(Error::shape(format!(
                "prox spec has {} blocks, operator has {}",
                self.blocks.len(),
                op.num_blocks()
            )));
        }
        for (i, (b, a)) in self.blocks.iter().zip(op.blocks()).enumerate() {
            match b {
                BlockProx::None => {}
                BlockProx::Standard(t) | BlockProx::ProxLinear(t) => {
                    if !(*t > 0.0) || !t.is_finite() {
                        return Err(Error::structure(i, format!("τ must be positive, got {t}")));
                    }
                    if let BlockProx::ProxLinear(t) = b {
                        let norm_sq = spectral_norm_sq(a)?;
                        if *t < rho * norm_sq {
                            log::warn!(
                                "block {i}: prox-linear τ = {t:e} is below ρ‖A_i‖² = {:e}; P_i is indefinite",
                                rho * norm_sq
                            );
                        }
                    }
                }
                BlockProx::Explicit(p) => {
                    if p.rows() != a.cols() || p.cols() != a.cols() {
                        return Err(Error::structure(
                            i,
                            format!("P_i is {}x{}, block has {} columns", p.rows(), p.cols(), a.cols()),
                        ));
                    }
                    if p.asymmetry() > 1e-10 {
                        return Err(Error::structure(i, "P_i is not symmetric"));
                    }
                    let scale = p.frobenius();
                    let min_ev = linalg::sym_min_eigenvalue(p)?;
                    if min_ev < -1e-10 * scale {
                        return Err(Error::structure(
                            i,
                            format!("P_i is not positive semidefinite (λ_min = {min_ev:e})"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Every block grown by `α P_i + β q I`.
    pub fn grown(&self, alpha: &[f64], beta_q: &[f64]) -> ProxSpec {
        ProxSpec {
            blocks: self
                .blocks
                .iter()
                .enumerate()
                .map(|(i, b)| b.grown(alpha[i], beta_q[i]))
                .collect(),
        }
    }
}

/// Soft thresholding `sign(v)·max(|v| − t, 0)`.
pub fn shrink(v: &[f64], t: f64) -> Result<Vec<f64>, Error> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("shrink threshold must be nonnegative, got {t}")));
    }
    Ok(v.iter().map(|&x| shrink_scalar(x, t)).collect())
}

#[inline]
pub(crate) fn shrink_scalar(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `argmin ‖x‖₁ + 1/(2t)‖x − b‖²`
pub fn prox_l1_scaled(b: &[f64], t: f64) -> Result<Vec<f64>, Error> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("prox step must be positive, got {t}")));
    }
    shrink(b, t)
}

/// `argmin ½‖C x − d‖² + ρ/2‖x − b‖²`
pub fn prox_quadratic(c: &Matrix, d: &[f64], rho: f64, b: &[f64]) -> Result<Vec<f64>, Error> {
    QuadraticProx::new(c, d, rho)?.solve(b)
}

/// Cached factorization of `CᵀC + ρI` for repeated quadratic prox steps.
#[derive(Debug, Clone)]
pub struct QuadraticProx {
    chol: Cholesky,
    ctd: Vec<f64>,
    rho: f64,
}

impl QuadraticProx {
    pub fn new(c: &Matrix, d: &[f64], rho: f64) -> Result<Self, Error> {
        if c.rows() != d.len() {
            return Err(Error::shape(format!("C has {} rows, d has length {}", c.rows(), d.len())));
        }
        if !(rho > 0.0) {
            return Err(Error::domain(format!("ρ must be positive, got {rho}")));
        }
        let mut m = c.gram();
        m.add_diag(rho);
        Ok(QuadraticProx {
            chol: Cholesky::factor(&m)?,
            ctd: c.tr_mul_vec(d),
            rho,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, Error> {
        if b.len() != self.ctd.len() {
            return Err(Error::shape(format!("b has length {}, expected {}", b.len(), self.ctd.len())));
        }
        let mut rhs = self.ctd.clone();
        linalg::axpy(self.rho, b, &mut rhs);
        self.chol.solve_in_place(&mut rhs);
        Ok(rhs)
    }
}

const POWER_MAX_ITERS: usize = 5000;
const POWER_TOL: f64 = 1e-10;
/// Up to this size the smaller Gram matrix is diagonalized directly.
const DENSE_GRAM_LIMIT: usize = 96;

/// Largest singular value of `m`, squared.
///
/// Small matrices go through a dense symmetric eigensolve of the smaller
/// Gram matrix, which is exact to round-off even when the top singular
/// values cluster. Larger ones use power iteration on `MᵀM`.
pub fn spectral_norm_sq(m: &Matrix) -> Result<f64, Error> {
    let n = m.cols();
    if n == 0 || m.rows() == 0 {
        return Err(Error::shape("spectral norm of an empty matrix"));
    }
    if n.min(m.rows()) <= DENSE_GRAM_LIMIT {
        let g = if n <= m.rows() { m.gram() } else { m.transpose().gram() };
        let ev = linalg::sym_eigenvalues(&g)?;
        return Ok(ev.last().copied().unwrap_or(0.0).max(0.0));
    }
    power_norm_sq(m)
}

fn power_norm_sq(m: &Matrix) -> Result<f64, Error> {
    let n = m.cols();
    // deterministic start with no special alignment
    let mut v: Vec<f64> = (0..n)
        .map(|j| 1.0 + 0.5 * libm::fmod((j as f64 + 1.0) * 0.618_033_988_749_894_9, 1.0))
        .collect();
    let mut mv = vec![0.0; m.rows()];
    let mut w = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let nv = linalg::norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        m.mul_vec_into(&v, &mut mv);
        m.tr_mul_vec_into(&mv, &mut w);
        estimate = linalg::dot(&v, &w);
        if estimate == 0.0 {
            // v landed in the null space; for a nonzero matrix restart along the largest column
            if m.max_abs() == 0.0 {
                return Ok(0.0);
            }
            let j = (0..n)
                .max_by(|&a, &b| linalg::norm_sq(m.col(a)).total_cmp(&linalg::norm_sq(m.col(b))))
                .unwrap_or(0);
            v.iter_mut().for_each(|x| *x = 0.0);
            v[j] = 1.0;
            continue;
        }
        let mut res = 0.0;
        for (wi, vi) in w.iter().zip(&v) {
            let r = wi - estimate * vi;
            res += r * r;
        }
        if crate::math::sqrt(res) <= POWER_TOL * estimate {
            return Ok(estimate);
        }
        core::mem::swap(&mut v, &mut w);
    }
    Err(Error::NoConvergence {
        msg: format!("power iteration did not converge in {POWER_MAX_ITERS} iterations"),
        estimate,
    })
}

/// `‖[A_1, ..., A_N]‖²` for the whole operator.
pub fn operator_norm_sq(op: &BlockOperator) -> Result<f64, Error> {
    spectral_norm_sq(&op.to_dense())
}

/// `‖A_i‖²` for every block.
pub fn block_norms_sq(op: &BlockOperator) -> Result<Vec<f64>, Error> {
    op.blocks().iter().map(spectral_norm_sq).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrink_examples() {
        assert_eq!(shrink(&[0.0, 0.0], 1.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(shrink(&[3.0, -0.5], 1.0).unwrap(), vec![2.0, 0.0]);
        assert_eq!(shrink(&[3.0, -0.5], 0.0).unwrap(), vec![3.0, -0.5]);
        assert_eq!(shrink(&[1.0, -1.0], 1.0).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(shrink(&[1.0], -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn prox_l1_examples() {
        let t = 0.25;
        assert_eq!(prox_l1_scaled(&[0.0, 0.0], t).unwrap(), vec![0.0, 0.0]);
        assert_eq!(prox_l1_scaled(&[2.0 * t, -2.0 * t], t).unwrap(), vec![t, -t]);
        assert!(prox_l1_scaled(&[1.0], 0.0).is_err());
    }

    #[test]
    fn quadratic_prox_trivial_cases() {
        let c = Matrix::zeros(4, 3);
        let b = [1.0, -2.0, 0.5];
        let x = prox_quadratic(&c, &[0.0; 4], 0.7, &b).unwrap();
        assert!(linalg::norm(&linalg::sub(&x, &b)) < 1e-15);
        let c = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0], &[3.0, -1.0]]).unwrap();
        let b = [0.3, -0.8];
        let d = c.mul_vec(&b);
        let x = prox_quadratic(&c, &d, 2.0, &b).unwrap();
        assert!(linalg::norm(&linalg::sub(&x, &b)) < 1e-14);
    }

    #[test]
    fn power_iteration_agrees_with_dense_path() {
        let mut rng = crate::rng::Rng::new(4);
        let mut data = vec![0.0; 30 * 20];
        rng.fill_gaussian(&mut data);
        let m = Matrix::from_col_major(30, 20, data).unwrap();
        let dense = spectral_norm_sq(&m).unwrap();
        let power = power_norm_sq(&m).unwrap();
        assert!((dense - power).abs() <= 1e-8 * dense);
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm_sq(&Matrix::identity(3)).unwrap() - 1.0).abs() < 1e-15);
        assert!((spectral_norm_sq(&Matrix::diag(&[2.0, 1.0])).unwrap() - 4.0).abs() < 1e-12);
        let m = Matrix::from_rows(&[&[1.0, -1.0]]).unwrap();
        assert!((spectral_norm_sq(&m).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(spectral_norm_sq(&Matrix::zeros(2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn prox_linear_quad_form_matches_dense() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[0.5, -1.0]]).unwrap();
        let p = BlockProx::ProxLinear(3.0);
        let v = [0.4, -1.3];
        let dense = p.to_dense(&a, 0.5);
        assert!((dense.quad_form(&v) - p.quad_form(&a, 0.5, &v)).abs() < 1e-13);
        assert_eq!(p.grown(2.0, 0.0), BlockProx::ProxLinear(6.0));
    }
}
