//! Block-partitioned vectors and operators.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::linalg::{self, Matrix};

/// The partitioned primal variable `x = (x_1, ..., x_N)`.
///
/// Block lengths are fixed at construction; only the entries can change.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockVector {
    blocks: Vec<Vec<f64>>,
}

impl BlockVector {
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self, Error> {
        if blocks.is_empty() {
            return Err(Error::shape("a block vector needs at least one block"));
        }
        if let Some(i) = blocks.iter().position(|b| b.is_empty()) {
            return Err(Error::structure(i, "empty block"));
        }
        Ok(BlockVector { blocks })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self, Error> {
        Self::new(sizes.iter().map(|&n| vec![0.0; n]).collect())
    }

    /// Splits a flat vector into consecutive blocks of the given sizes.
    pub fn split(flat: &[f64], sizes: &[usize]) -> Result<Self, Error> {
        let total: usize = sizes.iter().sum();
        if total != flat.len() {
            return Err(Error::shape(format!(
                "block sizes sum to {total} but vector has length {}",
                flat.len()
            )));
        }
        let mut out = Vec::with_capacity(sizes.len());
        let mut at = 0;
        for &n in sizes {
            out.push(flat[at..at + n].to_vec());
            at += n;
        }
        Self::new(out)
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.blocks[i]
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks.concat()
    }

    pub fn same_shape(&self, other: &BlockVector) -> bool {
        self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.len() == b.len())
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks.iter().map(|b| linalg::norm_sq(b)).sum()
    }

    pub fn norm(&self) -> f64 {
        crate::math::sqrt(self.norm_sq())
    }

    /// `self - other`, block by block.
    pub fn sub(&self, other: &BlockVector) -> Result<BlockVector, Error> {
        self.check_same(other)?;
        Ok(BlockVector {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| linalg::sub(a, b))
                .collect(),
        })
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &BlockVector, b: f64) -> Result<BlockVector, Error> {
        self.check_same(other)?;
        Ok(BlockVector {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| a * u + b * v).collect())
                .collect(),
        })
    }

    fn check_same(&self, other: &BlockVector) -> Result<(), Error> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::shape(format!(
                "{} blocks vs {} blocks",
                self.blocks.len(),
                other.blocks.len()
            )));
        }
        for (i, (a, b)) in self.blocks.iter().zip(&other.blocks).enumerate() {
            if a.len() != b.len() {
                return Err(Error::structure(i, format!("length {} vs {}", a.len(), b.len())));
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|v| v.is_finite())
    }
}

/// The partitioned constraint `A = [A_1, ..., A_N]` together with the
/// right-hand side `c`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockOperator {
    blocks: Vec<Matrix>,
    rhs: Vec<f64>,
}

impl BlockOperator {
    pub fn new(blocks: Vec<Matrix>, rhs: Vec<f64>) -> Result<Self, Error> {
        if blocks.is_empty() {
            return Err(Error::shape("an operator needs at least one block"));
        }
        let m = rhs.len();
        for (i, b) in blocks.iter().enumerate() {
            if b.rows() != m {
                return Err(Error::structure(
                    i,
                    format!("block has {} rows but c has length {m}", b.rows()),
                ));
            }
            if b.cols() == 0 {
                return Err(Error::structure(i, "block has no columns"));
            }
        }
        Ok(BlockOperator { blocks, rhs })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Row count `m`.
    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn block(&self, i: usize) -> &Matrix {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.cols()).collect()
    }

    pub fn total_cols(&self) -> usize {
        self.blocks.iter().map(|b| b.cols()).sum()
    }

    /// Checks that `x` has this operator's block structure.
    pub fn check_conforms(&self, x: &BlockVector) -> Result<(), Error> {
        if x.num_blocks() != self.blocks.len() {
            return Err(Error::shape(format!(
                "operator has {} blocks, vector has {}",
                self.blocks.len(),
                x.num_blocks()
            )));
        }
        for (i, (a, xi)) in self.blocks.iter().zip(x.blocks()).enumerate() {
            if a.cols() != xi.len() {
                return Err(Error::structure(
                    i,
                    format!("A_i has {} columns, x_i has length {}", a.cols(), xi.len()),
                ));
            }
        }
        Ok(())
    }

    /// `Σ A_i x_i`
    pub fn apply(&self, x: &BlockVector) -> Result<Vec<f64>, Error> {
        self.check_conforms(x)?;
        let mut out = vec![0.0; self.rows()];
        let mut tmp = vec![0.0; self.rows()];
        for (a, xi) in self.blocks.iter().zip(x.blocks()) {
            a.mul_vec_into(xi, &mut tmp);
            linalg::axpy(1.0, &tmp, &mut out);
        }
        Ok(out)
    }

    /// `Σ A_i x_i − c`
    pub fn residual(&self, x: &BlockVector) -> Result<Vec<f64>, Error> {
        let mut r = self.apply(x)?;
        linalg::axpy(-1.0, &self.rhs, &mut r);
        Ok(r)
    }

    /// `(A_1ᵀ y, ..., A_Nᵀ y)`
    pub fn apply_transpose(&self, y: &[f64]) -> Result<BlockVector, Error> {
        if y.len() != self.rows() {
            return Err(Error::shape(format!(
                "operator has {} rows, vector has length {}",
                self.rows(),
                y.len()
            )));
        }
        BlockVector::new(self.blocks.iter().map(|a| a.tr_mul_vec(y)).collect())
    }

    /// The concatenated dense matrix `[A_1, ..., A_N]`.
    pub fn to_dense(&self) -> Matrix {
        Matrix::hcat(&self.blocks).expect("blocks share a row count")
    }

    /// Same blocks, all scaled by `s` (and `c` kept).
    pub fn scaled(&self, s: f64) -> BlockOperator {
        BlockOperator {
            blocks: self.blocks.iter().map(|b| b.scaled(s)).collect(),
            rhs: self.rhs.clone(),
        }
    }
}

/// Joint solver state `u = (x, λ)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Iterate {
    pub x: BlockVector,
    pub lambda: Vec<f64>,
}

impl Iterate {
    pub fn new(x: BlockVector, lambda: Vec<f64>) -> Self {
        Iterate { x, lambda }
    }

    /// `x = 0, λ = 0` shaped for `op`.
    pub fn zeros(op: &BlockOperator) -> Self {
        Iterate {
            x: BlockVector::zeros(&op.block_sizes()).expect("operator blocks are nonempty"),
            lambda: vec![0.0; op.rows()],
        }
    }

    pub fn check_conforms(&self, op: &BlockOperator) -> Result<(), Error> {
        op.check_conforms(&self.x)?;
        if self.lambda.len() != op.rows() {
            return Err(Error::shape(format!(
                "λ has length {}, operator has {} rows",
                self.lambda.len(),
                op.rows()
            )));
        }
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        self.x.norm_sq() + linalg::norm_sq(&self.lambda)
    }

    pub fn norm(&self) -> f64 {
        crate::math::sqrt(self.norm_sq())
    }

    pub fn sub(&self, other: &Iterate) -> Result<Iterate, Error> {
        if self.lambda.len() != other.lambda.len() {
            return Err(Error::shape("λ lengths differ"));
        }
        Ok(Iterate {
            x: self.x.sub(&other.x)?,
            lambda: linalg::sub(&self.lambda, &other.lambda),
        })
    }

    pub fn all_finite(&self) -> bool {
        self.x.all_finite() && self.lambda.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_identity_blocks() {
        let op = BlockOperator::new(vec![Matrix::identity(2), Matrix::identity(2)], vec![0.0; 2]).unwrap();
        let x = BlockVector::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(op.apply(&x).unwrap(), vec![1.0, 1.0]);
        let z = BlockVector::zeros(&[2, 2]).unwrap();
        assert_eq!(op.apply(&z).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn apply_names_offending_block() {
        let op = BlockOperator::new(vec![Matrix::identity(2), Matrix::identity(2)], vec![0.0; 2]).unwrap();
        let x = BlockVector::new(vec![vec![1.0, 0.0], vec![0.0, 1.0, 2.0]]).unwrap();
        match op.apply(&x) {
            Err(Error::Structure { block: Some(1), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(BlockOperator::new(vec![Matrix::identity(2), Matrix::identity(3)], vec![0.0; 2]).is_err());
        assert!(BlockVector::new(vec![]).is_err());
    }
}
