//! Reproducible instance generators and block partitioning.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::block::{BlockOperator, BlockVector};
use crate::error::Error;
use crate::linalg::{self, Matrix};
use crate::objective::{BlockFunction, Problem, SeparableObjective};
use crate::rng::Rng;
use crate::sum::ExactSum;

/// `minimize Σ ½‖C_i x_i − d_i‖²  subject to  Σ x_i = 0` with a planted
/// solution of objective value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeInstance {
    /// Length of each block.
    pub n: usize,
    pub n_blocks: usize,
    /// Rows of each `C_i`.
    pub p: usize,
    pub c: Vec<Matrix>,
    pub d: Vec<Vec<f64>>,
    pub x_star: BlockVector,
    pub seed: u64,
}

/// `minimize ‖x‖₁  subject to  A x = c` with `c = A x* + σ η`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPursuitInstance {
    pub m: usize,
    pub n: usize,
    pub n_blocks: usize,
    pub k: usize,
    pub sigma: f64,
    pub seed: u64,
    pub a: Matrix,
    pub x_star: Vec<f64>,
    /// Nonzero positions of `x*`, in draw order.
    pub support: Vec<usize>,
    pub c: Vec<f64>,
}

const PLANT_GRID: f64 = (1u64 << 30) as f64;

/// Exchange instance.
///
/// Draw order: the entries of `C_1, …, C_N` (each column-major), then
/// `x*_1, …, x*_{N−1}`, each entry snapped to a multiple of 2⁻³⁰ so that
/// column sums are exact in any order. `x*_N` is the negated sum of the
/// others and `d_i = C_i x*_i`.
pub fn gen_exchange(n: usize, n_blocks: usize, p: usize, seed: u64) -> Result<ExchangeInstance, Error> {
    if n == 0 || n_blocks == 0 || p == 0 {
        return Err(Error::domain(format!(
            "exchange dimensions must be positive (n={n}, N={n_blocks}, p={p})"
        )));
    }
    let mut rng = Rng::new(seed);
    let mut c = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        let mut data = vec![0.0; p * n];
        rng.fill_gaussian(&mut data);
        c.push(Matrix::from_col_major(p, n, data)?);
    }
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks - 1 {
        let mut x = vec![0.0; n];
        rng.fill_gaussian(&mut x);
        x.iter_mut().for_each(|v| *v = libm::round(*v * PLANT_GRID) / PLANT_GRID);
        xs.push(x);
    }
    let mut last = vec![0.0; n];
    for (j, v) in last.iter_mut().enumerate() {
        let mut acc = ExactSum::new();
        xs.iter().for_each(|x| acc.add(x[j]));
        *v = -acc.value();
    }
    xs.push(last);
    let d = c.iter().zip(&xs).map(|(ci, xi)| ci.mul_vec(xi)).collect();
    Ok(ExchangeInstance {
        n,
        n_blocks,
        p,
        c,
        d,
        x_star: BlockVector::new(xs)?,
        seed,
    })
}

impl ExchangeInstance {
    /// Operator with identity blocks and `c = 0`; quadratic objectives.
    pub fn problem(&self) -> Problem {
        let op = BlockOperator::new(vec![Matrix::identity(self.n); self.n_blocks], vec![0.0; self.n])
            .expect("identity blocks conform");
        let terms = self
            .c
            .iter()
            .zip(&self.d)
            .map(|(c, d)| BlockFunction::Quadratic {
                c: c.clone(),
                d: d.clone(),
            })
            .collect();
        Problem::new(op, SeparableObjective::new(terms)).expect("generated instance conforms")
    }
}

/// Basis-pursuit instance.
///
/// Draw order: the entries of `A` (column-major), then the support by a
/// partial Fisher-Yates shuffle of `0..n`, then the `k` nonzero values in
/// support order, then `m` noise variates (drawn even when `σ = 0`).
pub fn gen_basis_pursuit(
    m: usize,
    n: usize,
    n_blocks: usize,
    k: usize,
    sigma: f64,
    seed: u64,
) -> Result<BasisPursuitInstance, Error> {
    if m == 0 || n == 0 || n_blocks == 0 {
        return Err(Error::domain(format!(
            "basis-pursuit dimensions must be positive (m={m}, n={n}, N={n_blocks})"
        )));
    }
    if k > n {
        return Err(Error::domain(format!("sparsity k = {k} exceeds n = {n}")));
    }
    if n_blocks > n {
        return Err(Error::domain(format!("N = {n_blocks} exceeds n = {n}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("σ must be finite and nonnegative, got {sigma}")));
    }
    let mut rng = Rng::new(seed);
    let mut data = vec![0.0; m * n];
    rng.fill_gaussian(&mut data);
    let a = Matrix::from_col_major(m, n, data)?;
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below((n - i) as u64) as usize;
        perm.swap(i, j);
    }
    let support = perm[..k].to_vec();
    let mut x_star = vec![0.0; n];
    for &j in &support {
        x_star[j] = rng.gaussian();
    }
    let mut noise = vec![0.0; m];
    rng.fill_gaussian(&mut noise);
    let mut c = a.mul_vec(&x_star);
    if sigma > 0.0 {
        linalg::axpy(sigma, &noise, &mut c);
    }
    Ok(BasisPursuitInstance {
        m,
        n,
        n_blocks,
        k,
        sigma,
        seed,
        a,
        x_star,
        support,
        c,
    })
}

impl BasisPursuitInstance {
    pub fn operator(&self) -> BlockOperator {
        partition(&self.a, self.n_blocks, self.c.clone()).expect("N ≤ n checked at generation")
    }

    /// ℓ1 objective on every block.
    pub fn problem(&self) -> Problem {
        let op = self.operator();
        let n_blocks = op.num_blocks();
        Problem::new(op, SeparableObjective::uniform(n_blocks, BlockFunction::L1)).expect("conforms")
    }

    /// Same data, repartitioned into `n_blocks` blocks.
    pub fn problem_with_blocks(&self, n_blocks: usize) -> Result<Problem, Error> {
        let op = partition(&self.a, n_blocks, self.c.clone())?;
        Problem::new(op, SeparableObjective::uniform(n_blocks, BlockFunction::L1))
    }

    pub fn x_star_blocks(&self) -> BlockVector {
        BlockVector::split(&self.x_star, &partition_sizes(self.n, self.n_blocks).expect("valid"))
            .expect("sizes sum to n")
    }
}

/// Ceiling-first contiguous block sizes: the first `n mod N` blocks get one
/// extra column.
pub fn partition_sizes(n: usize, n_blocks: usize) -> Result<Vec<usize>, Error> {
    if n_blocks == 0 || n_blocks > n {
        return Err(Error::domain(format!("cannot split {n} columns into {n_blocks} blocks")));
    }
    let base = n / n_blocks;
    let extra = n % n_blocks;
    Ok((0..n_blocks).map(|i| base + usize::from(i < extra)).collect())
}

/// Splits the columns of `a` into `n_blocks` contiguous blocks.
pub fn partition(a: &Matrix, n_blocks: usize, rhs: Vec<f64>) -> Result<BlockOperator, Error> {
    let sizes = partition_sizes(a.cols(), n_blocks)?;
    let mut blocks = Vec::with_capacity(n_blocks);
    let mut at = 0;
    for s in sizes {
        blocks.push(a.columns(at, at + s));
        at += s;
    }
    BlockOperator::new(blocks, rhs)
}

/// Splits a flat vector with the same convention as [`partition`].
pub fn split_vector(x: &[f64], n_blocks: usize) -> Result<BlockVector, Error> {
    BlockVector::split(x, &partition_sizes(x.len(), n_blocks)?)
}
