//! Block objectives `f_i` and the separable sum `f = Σ f_i`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::block::{BlockOperator, BlockVector};
use crate::error::Error;
use crate::linalg::{self, Cholesky, Matrix};
use crate::prox;

/// User-supplied block objective.
pub trait CustomFunction: Send + Sync {
    fn name(&self) -> &str {
        "custom"
    }
    fn value(&self, x: &[f64]) -> f64;
    /// `argmin f(x) + 1/(2t)‖x − v‖²`
    fn prox(&self, v: &[f64], t: f64) -> Vec<f64>;
    /// `argmin f(x) − ⟨s, x⟩`, if the problem is bounded below.
    fn shifted_minimizer(&self, _s: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Kind tag of a [`BlockFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    Zero,
    L1,
    Quadratic,
    Box,
    Custom,
}

/// One block objective `f_i`.
#[derive(Clone)]
pub enum BlockFunction {
    Zero,
    /// `‖x‖₁`
    L1,
    /// `½‖C x − d‖²`
    Quadratic { c: Matrix, d: Vec<f64> },
    /// Indicator of `{lower ≤ x ≤ upper}`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Custom(Arc<dyn CustomFunction>),
}

impl fmt::Debug for BlockFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockFunction::Zero => write!(f, "Zero"),
            BlockFunction::L1 => write!(f, "L1"),
            BlockFunction::Quadratic { c, d } => f
                .debug_struct("Quadratic")
                .field("c_shape", &(c.rows(), c.cols()))
                .field("d_len", &d.len())
                .finish(),
            BlockFunction::Box { lower, upper } => {
                f.debug_struct("Box").field("lower", lower).field("upper", upper).finish()
            }
            BlockFunction::Custom(c) => write!(f, "Custom({})", c.name()),
        }
    }
}

impl BlockFunction {
    pub fn quadratic(c: Matrix, d: Vec<f64>) -> Result<Self, Error> {
        if c.rows() != d.len() {
            return Err(Error::shape(format!("C has {} rows, d has length {}", c.rows(), d.len())));
        }
        Ok(BlockFunction::Quadratic { c, d })
    }

    pub fn kind(&self) -> FunctionKind {
        match self {
            BlockFunction::Zero => FunctionKind::Zero,
            BlockFunction::L1 => FunctionKind::L1,
            BlockFunction::Quadratic { .. } => FunctionKind::Quadratic,
            BlockFunction::Box { .. } => FunctionKind::Box,
            BlockFunction::Custom(_) => FunctionKind::Custom,
        }
    }

    /// Checks that the function accepts vectors of length `n`.
    pub fn check_dim(&self, n: usize) -> Result<(), String> {
        match self {
            BlockFunction::Quadratic { c, .. } if c.cols() != n => {
                Err(format!("C has {} columns, block has length {n}", c.cols()))
            }
            BlockFunction::Box { lower, upper } if lower.len() != n || upper.len() != n => {
                Err(format!("box bounds have lengths {}/{}, block has length {n}", lower.len(), upper.len()))
            }
            BlockFunction::Box { lower, upper } if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) => {
                Err(String::from("box has lower > upper"))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            BlockFunction::Zero => 0.0,
            BlockFunction::L1 => linalg::norm1(x),
            BlockFunction::Quadratic { c, d } => {
                let r = linalg::sub(&c.mul_vec(x), d);
                0.5 * linalg::norm_sq(&r)
            }
            BlockFunction::Box { lower, upper } => {
                let inside = x
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(v, (l, u))| *l <= *v && *v <= *u);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            BlockFunction::Custom(c) => c.value(x),
        }
    }

    /// `argmin f(x) + 1/(2t)‖x − v‖²`, `t > 0`.
    pub fn prox(&self, v: &[f64], t: f64) -> Result<Vec<f64>, Error> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("prox step must be positive, got {t}")));
        }
        Ok(match self {
            BlockFunction::Zero => v.to_vec(),
            BlockFunction::L1 => prox::shrink(v, t)?,
            BlockFunction::Quadratic { c, d } => prox::prox_quadratic(c, d, 1.0 / t, v)?,
            BlockFunction::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, u))| x.max(*l).min(*u))
                .collect(),
            BlockFunction::Custom(c) => c.prox(v, t),
        })
    }

    /// `argmin f(x) − ⟨s, x⟩`. Errors when the subproblem is unbounded below
    /// or has no unique minimizer this crate can compute.
    pub fn shifted_minimizer(&self, s: &[f64]) -> Result<Vec<f64>, Error> {
        match self {
            BlockFunction::Quadratic { c, d } => {
                let chol = Cholesky::factor(&c.gram())
                    .map_err(|_| Error::config("quadratic block has singular CᵀC; the dual subproblem is unbounded"))?;
                let mut rhs = c.tr_mul_vec(d);
                linalg::axpy(1.0, s, &mut rhs);
                chol.solve_in_place(&mut rhs);
                Ok(rhs)
            }
            BlockFunction::Box { lower, upper } => {
                if lower.iter().chain(upper).any(|v| !v.is_finite()) {
                    return Err(Error::config("box with infinite bounds has an unbounded dual subproblem"));
                }
                Ok(s.iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(si, (l, u))| {
                        if *si > 0.0 {
                            *u
                        } else if *si < 0.0 {
                            *l
                        } else {
                            0.0f64.max(*l).min(*u)
                        }
                    })
                    .collect())
            }
            BlockFunction::Custom(c) => c
                .shifted_minimizer(s)
                .ok_or_else(|| Error::config("custom block provides no shifted minimizer")),
            BlockFunction::Zero => Err(Error::config("zero block has an unbounded dual subproblem")),
            BlockFunction::L1 => Err(Error::config("ℓ1 block has an unbounded dual subproblem")),
        }
    }
}

/// `f(x) = Σ f_i(x_i)`
#[derive(Debug, Clone)]
pub struct SeparableObjective {
    pub terms: Vec<BlockFunction>,
}

impl SeparableObjective {
    pub fn new(terms: Vec<BlockFunction>) -> Self {
        SeparableObjective { terms }
    }

    pub fn uniform(n_blocks: usize, f: BlockFunction) -> Self {
        SeparableObjective {
            terms: alloc::vec![f; n_blocks],
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.terms.len()
    }

    pub fn value(&self, x: &BlockVector) -> f64 {
        self.terms.iter().zip(x.blocks()).map(|(f, xi)| f.value(xi)).sum()
    }
}

/// `minimize Σ f_i(x_i) subject to Σ A_i x_i = c`
#[derive(Debug, Clone)]
pub struct Problem {
    pub operator: BlockOperator,
    pub objective: SeparableObjective,
}

impl Problem {
    pub fn new(operator: BlockOperator, objective: SeparableObjective) -> Result<Self, Error> {
        if operator.num_blocks() != objective.num_blocks() {
            return Err(Error::shape(format!(
                "operator has {} blocks, objective has {}",
                operator.num_blocks(),
                objective.num_blocks()
            )));
        }
        for (i, f) in objective.terms.iter().enumerate() {
            f.check_dim(operator.block(i).cols())
                .map_err(|msg| Error::structure(i, msg))?;
        }
        Ok(Problem { operator, objective })
    }

    pub fn num_blocks(&self) -> usize {
        self.operator.num_blocks()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn values() {
        assert_eq!(BlockFunction::L1.value(&[1.0, -2.5]), 3.5);
        let q = BlockFunction::quadratic(Matrix::identity(2), vec![1.0, 1.0]).unwrap();
        assert_eq!(q.value(&[1.0, 3.0]), 2.0);
        let b = BlockFunction::Box { lower: vec![0.0], upper: vec![1.0] };
        assert_eq!(b.value(&[0.5]), 0.0);
        assert_eq!(b.value(&[2.0]), f64::INFINITY);
        assert_eq!(b.prox(&[2.0], 1.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn dual_oracle_rejects_unbounded() {
        assert!(matches!(BlockFunction::L1.shifted_minimizer(&[1.0]), Err(Error::Config(_))));
        let q = BlockFunction::quadratic(Matrix::zeros(1, 2), vec![0.0]).unwrap();
        assert!(matches!(q.shifted_minimizer(&[1.0, 0.0]), Err(Error::Config(_))));
        let q = BlockFunction::quadratic(Matrix::identity(2), vec![1.0, 2.0]).unwrap();
        assert_eq!(q.shifted_minimizer(&[1.0, 0.0]).unwrap(), vec![2.0, 2.0]);
    }
}
