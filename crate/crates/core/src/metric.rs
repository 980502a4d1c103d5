//! Structured quadratic metrics on `u = (x, λ)`.
//!
//! A [`MetricSpec`] never materializes `G`. Each x-block contributes
//! `s‖v‖² + g‖A_i v‖² + vᵀ E v` (scalar part, Gram part, optional explicit
//! part); an optional coupling term adds `c‖Σ A_i v_i‖²`; the λ-block is a
//! scalar weight.

use alloc::format;
use alloc::vec::Vec;

use crate::block::{BlockOperator, BlockVector, Iterate};
use crate::error::Error;
use crate::linalg::{self, Matrix};
use crate::prox::{BlockProx, ProxSpec};

/// x-part of one block: `s I + g A_iᵀA_i + E`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMetric {
    pub scalar: f64,
    pub gram: f64,
    pub explicit: Option<Matrix>,
}

impl BlockMetric {
    pub const ZERO: BlockMetric = BlockMetric {
        scalar: 0.0,
        gram: 0.0,
        explicit: None,
    };

    pub fn scalar(s: f64) -> Self {
        BlockMetric {
            scalar: s,
            gram: 0.0,
            explicit: None,
        }
    }

    /// `P_i + ρ A_iᵀA_i`. For the prox-linear kind the Gram parts cancel
    /// and the result is exactly `τ I`.
    pub fn proximal(p: &BlockProx, rho: f64) -> Self {
        match p {
            BlockProx::None => BlockMetric {
                scalar: 0.0,
                gram: rho,
                explicit: None,
            },
            BlockProx::Standard(t) => BlockMetric {
                scalar: *t,
                gram: rho,
                explicit: None,
            },
            BlockProx::ProxLinear(t) => BlockMetric::scalar(*t),
            BlockProx::Explicit(m) => BlockMetric {
                scalar: 0.0,
                gram: rho,
                explicit: Some(m.clone()),
            },
        }
    }

    /// `vᵀ G_i v` for block matrix `a = A_i`.
    pub fn quad_form(&self, a: &Matrix, v: &[f64]) -> f64 {
        let mut q = 0.0;
        if self.scalar != 0.0 {
            q += self.scalar * linalg::norm_sq(v);
        }
        if self.gram != 0.0 {
            q += self.gram * linalg::norm_sq(&a.mul_vec(v));
        }
        if let Some(e) = &self.explicit {
            q += e.quad_form(v);
        }
        q
    }

    /// Same as [`quad_form`](Self::quad_form) when `A_i v` is already known.
    pub fn quad_form_with(&self, v: &[f64], av: &[f64]) -> f64 {
        let mut q = 0.0;
        if self.scalar != 0.0 {
            q += self.scalar * linalg::norm_sq(v);
        }
        if self.gram != 0.0 {
            q += self.gram * linalg::norm_sq(av);
        }
        if let Some(e) = &self.explicit {
            q += e.quad_form(v);
        }
        q
    }

    pub fn to_dense(&self, a: &Matrix) -> Matrix {
        let mut g = a.gram().scaled(self.gram);
        g.add_diag(self.scalar);
        if let Some(e) = &self.explicit {
            g.add_scaled(1.0, e);
        }
        g
    }
}

/// A block-structured metric on `(x, λ)` tied to an operator.
#[derive(Debug, Clone)]
pub struct MetricSpec<'a> {
    op: &'a BlockOperator,
    blocks: Vec<BlockMetric>,
    coupling: f64,
    lambda_weight: f64,
}

impl<'a> MetricSpec<'a> {
    pub fn new(
        op: &'a BlockOperator,
        blocks: Vec<BlockMetric>,
        coupling: f64,
        lambda_weight: f64,
    ) -> Result<Self, Error> {
        if blocks.len() != op.num_blocks() {
            return Err(Error::shape(format!(
                "metric has {} blocks, operator has {}",
                blocks.len(),
                op.num_blocks()
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            if let Some(e) = &b.explicit {
                let n = op.block(i).cols();
                if e.rows() != n || e.cols() != n {
                    return Err(Error::structure(i, "explicit metric block has the wrong size"));
                }
            }
        }
        Ok(MetricSpec {
            op,
            blocks,
            coupling,
            lambda_weight,
        })
    }

    /// Euclidean norm on `(x, λ)`.
    pub fn identity(op: &'a BlockOperator) -> Self {
        let blocks = (0..op.num_blocks()).map(|_| BlockMetric::scalar(1.0)).collect();
        MetricSpec {
            op,
            blocks,
            coupling: 0.0,
            lambda_weight: 1.0,
        }
    }

    /// `G = diag(P_i + ρA_iᵀA_i, I/(γρ))`
    pub fn proximal(op: &'a BlockOperator, rho: f64, gamma: f64, prox: &ProxSpec) -> Result<Self, Error> {
        if prox.num_blocks() != op.num_blocks() {
            return Err(Error::shape("prox spec and operator block counts differ"));
        }
        let blocks = prox.blocks.iter().map(|p| BlockMetric::proximal(p, rho)).collect();
        MetricSpec::new(op, blocks, 0.0, 1.0 / (gamma * rho))
    }

    /// `G′ = diag(G_x − ρAᵀA, I/(γρ))`, the rate metric. `AᵀA` is the full
    /// (coupled) Gram matrix, so `G′` is not block diagonal in `x`.
    pub fn rate(op: &'a BlockOperator, rho: f64, gamma: f64, prox: &ProxSpec) -> Result<Self, Error> {
        let mut g = MetricSpec::proximal(op, rho, gamma, prox)?;
        g.coupling = -rho;
        Ok(g)
    }

    /// `G₀ = diag(ρA_iᵀA_i, I/ρ)`, the plain Jacobian metric.
    pub fn jacobi(op: &'a BlockOperator, rho: f64) -> Self {
        let blocks = (0..op.num_blocks())
            .map(|_| BlockMetric {
                scalar: 0.0,
                gram: rho,
                explicit: None,
            })
            .collect();
        MetricSpec {
            op,
            blocks,
            coupling: 0.0,
            lambda_weight: 1.0 / rho,
        }
    }

    /// Two-block metric `H` on `w = (x_2, λ)`: `ρA_2ᵀA_2` and `I/ρ`; `x_1`
    /// carries zero weight.
    pub fn two_block(op: &'a BlockOperator, rho: f64) -> Result<Self, Error> {
        if op.num_blocks() != 2 {
            return Err(Error::domain(format!(
                "two-block metric needs N = 2, got {}",
                op.num_blocks()
            )));
        }
        let blocks = alloc::vec![
            BlockMetric::ZERO,
            BlockMetric {
                scalar: 0.0,
                gram: rho,
                explicit: None,
            },
        ];
        Ok(MetricSpec {
            op,
            blocks,
            coupling: 0.0,
            lambda_weight: 1.0 / rho,
        })
    }

    pub fn operator(&self) -> &BlockOperator {
        self.op
    }

    pub fn block(&self, i: usize) -> &BlockMetric {
        &self.blocks[i]
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn lambda_weight(&self) -> f64 {
        self.lambda_weight
    }

    /// `vᵀ G_x v` for the x-part.
    pub fn x_norm_sq(&self, v: &BlockVector) -> Result<f64, Error> {
        self.op.check_conforms(v)?;
        Ok(clamp(self.x_form(v), v.norm_sq()))
    }

    fn x_form(&self, v: &BlockVector) -> f64 {
        let mut q = 0.0;
        let mut av_sum = alloc::vec![0.0; self.op.rows()];
        for (i, (b, vi)) in self.blocks.iter().zip(v.blocks()).enumerate() {
            let a = self.op.block(i);
            let need_av = b.gram != 0.0 || self.coupling != 0.0;
            if need_av {
                let av = a.mul_vec(vi);
                q += b.quad_form_with(vi, &av);
                if self.coupling != 0.0 {
                    linalg::axpy(1.0, &av, &mut av_sum);
                }
            } else {
                q += b.quad_form_with(vi, &[]);
            }
        }
        if self.coupling != 0.0 {
            q += self.coupling * linalg::norm_sq(&av_sum);
        }
        q
    }

    /// `uᵀ G u`, with round-off negatives above `−1e−12‖u‖²` clamped to 0.
    pub fn norm_sq(&self, u: &Iterate) -> Result<f64, Error> {
        u.check_conforms(self.op)?;
        let q = self.x_form(&u.x) + self.lambda_weight * linalg::norm_sq(&u.lambda);
        Ok(clamp(q, u.norm_sq()))
    }

    /// `‖u − v‖²_G`
    pub fn dist_sq(&self, u: &Iterate, v: &Iterate) -> Result<f64, Error> {
        self.norm_sq(&u.sub(v)?)
    }

    /// Dense `G` over `(x, λ)` in stacked order; for tests and small problems.
    pub fn to_dense(&self) -> Matrix {
        let n = self.op.total_cols();
        let m = self.op.rows();
        let mut g = Matrix::zeros(n + m, n + m);
        let mut off = 0;
        for (i, b) in self.blocks.iter().enumerate() {
            let a = self.op.block(i);
            let gi = b.to_dense(a);
            for c in 0..a.cols() {
                for r in 0..a.cols() {
                    g.set(off + r, off + c, gi.get(r, c));
                }
            }
            off += a.cols();
        }
        if self.coupling != 0.0 {
            let ata = self.op.to_dense().gram();
            for c in 0..n {
                for r in 0..n {
                    g.set(r, c, g.get(r, c) + self.coupling * ata.get(r, c));
                }
            }
        }
        for j in 0..m {
            g.set(n + j, n + j, self.lambda_weight);
        }
        g
    }
}

/// Clamps round-off negatives of a quadratic form to zero.
pub fn clamp(q: f64, plain_norm_sq: f64) -> f64 {
    if q < 0.0 && q >= -1e-12 * plain_norm_sq {
        0.0
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn euclidean_and_zero() {
        let op = BlockOperator::new(vec![Matrix::identity(1), Matrix::identity(1)], vec![0.0]).unwrap();
        let g = MetricSpec::identity(&op);
        let u = Iterate::new(BlockVector::new(vec![vec![3.0], vec![4.0]]).unwrap(), vec![0.0]);
        assert_eq!(g.norm_sq(&u).unwrap(), 25.0);
        assert_eq!(g.norm_sq(&Iterate::zeros(&op)).unwrap(), 0.0);
    }

    #[test]
    fn prox_linear_block_is_exactly_tau() {
        let a = Matrix::from_rows(&[&[1.3, -0.2], &[0.7, 2.0], &[0.1, 0.4]]).unwrap();
        let op = BlockOperator::new(vec![a], vec![0.0; 3]).unwrap();
        let prox = ProxSpec::uniform_prox_linear(1, 5.5);
        let g = MetricSpec::proximal(&op, 0.9, 1.0, &prox).unwrap();
        let x = BlockVector::new(vec![vec![0.3, -1.7]]).unwrap();
        assert_eq!(g.x_norm_sq(&x).unwrap(), 5.5 * x.norm_sq());
    }
}
