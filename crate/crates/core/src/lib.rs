//! Parallel multi-block ADMM for separable convex programs
//!
//! ```text
//! minimize   f_1(x_1) + ... + f_N(x_N)
//! subject to A_1 x_1 + ... + A_N x_N = c
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! pieces: block-partitioned linear algebra, proximal oracles, the solver
//! family (proximal Jacobian, plain Jacobian, Gauss-Seidel, variable
//! splitting, correction-step Jacobian and dual decomposition), adaptive
//! proximal tuning, convergence-condition checkers, per-iteration
//! diagnostics and reproducible instance generators.
//!
//! File formats, the command-line front end and the message-passing runtime
//! live in the companion `paradmm` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod math;

pub mod block;
pub mod conditions;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod metric;
pub mod objective;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod solvers;
pub mod sum;
pub mod tuning;

pub use block::{BlockOperator, BlockVector, Iterate};
pub use error::Error;
pub use linalg::Matrix;
pub use metric::MetricSpec;
pub use objective::{BlockFunction, Problem, SeparableObjective};
pub use prox::{BlockProx, ProxSpec};
pub use solvers::{History, Scheme, SolveOptions, SolverConfig, Termination};
