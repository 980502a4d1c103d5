//! Gauss-Seidel (sequential sweep) multi-block ADMM.

use alloc::format;
use alloc::vec::Vec;

use crate::block::{BlockVector, Iterate};
use crate::diagnostics::IterationRecord;
use crate::error::Error;
use crate::linalg;
use crate::objective::Problem;
use crate::prox::BlockProx;
use crate::sum::ExactSum;

use super::monitor::Monitor;
use super::subproblem::SubproblemSolver;
use super::{check_reference, initial_iterate, History, Scheme, SolveOptions, SolverConfig};

/// Blocks are updated in the order `0..N`, each seeing the fresh values
/// of its predecessors; then `λ ← λ − ρ(Ax − c)`.
///
/// With `N = 2` every record also carries `‖w^{k−1} − w^k‖²_H` for
/// `w = (x_2, λ)` and the norms of the two-block residuals `r_p`, `r_d`.
pub fn solve_gauss_seidel(problem: &Problem, config: &SolverConfig, options: SolveOptions<'_>) -> Result<History, Error> {
    let order: Vec<usize> = (0..problem.num_blocks()).collect();
    solve_gauss_seidel_ordered(problem, config, &order, options)
}

/// Gauss-Seidel with an explicit sweep order (a permutation of `0..N`).
pub fn solve_gauss_seidel_ordered(
    problem: &Problem,
    config: &SolverConfig,
    order: &[usize],
    mut options: SolveOptions<'_>,
) -> Result<History, Error> {
    let mut cfg = config.clone();
    cfg.scheme = Scheme::GaussSeidel;
    cfg.validate(problem)?;
    let cfg = cfg.effective(problem.num_blocks());
    check_reference(problem, &options)?;
    let n = problem.num_blocks();
    let mut seen = alloc::vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || core::mem::replace(&mut seen[i], true)) {
        return Err(Error::config(format!("sweep order must be a permutation of 0..{n}")));
    }
    let op = &problem.operator;
    let rho = cfg.rho;
    let m = op.rows();
    let u0 = initial_iterate(problem, &options)?;
    let mut x: Vec<Vec<f64>> = u0.x.blocks().to_vec();
    let mut lambda = u0.lambda.clone();
    let mut ax: Vec<Vec<f64>> = (0..n).map(|i| op.block(i).mul_vec(&x[i])).collect();
    let mut solvers: Vec<SubproblemSolver> = (0..n)
        .map(|i| {
            let mut s = SubproblemSolver::new(i, &problem.objective.terms[i], op.block(i));
            s.prepare(&problem.objective.terms[i], op.block(i), &BlockProx::None, rho)
                .map(|_| s)
        })
        .collect::<Result<_, _>>()?;

    let mut monitor = Monitor::new(&cfg, op.rhs(), &u0, &mut options);
    let mut k = 0;
    let mut termination = monitor.initial();
    let inv_rho = 1.0 / rho;
    while termination.is_none() {
        k += 1;
        let x_prev = x.clone();
        let lambda_prev = lambda.clone();
        for &i in order {
            // b_i = c + λ/ρ − Σ_{j≠i} A_j x_j
            let b: Vec<f64> = (0..m)
                .map(|r| {
                    let mut s = ExactSum::new();
                    s.add(op.rhs()[r]);
                    s.add(lambda[r] * inv_rho);
                    for (j, a) in ax.iter().enumerate() {
                        if j != i {
                            s.add(-a[r]);
                        }
                    }
                    s.value()
                })
                .collect();
            let w = linalg::sub(&ax[i], &b);
            let f = &problem.objective.terms[i];
            x[i] = solvers[i].solve(f, op.block(i), &BlockProx::None, rho, &b, &w, &x[i])?;
            ax[i] = op.block(i).mul_vec(&x[i]);
        }
        let residual = sum_residual(&ax, op.rhs());
        for (l, r) in lambda.iter_mut().zip(&residual) {
            *l -= rho * r;
        }
        let mut record = IterationRecord::default();
        if n == 2 {
            let dx2 = linalg::sub(&x_prev[1], &x[1]);
            let a2dx2 = op.block(1).mul_vec(&dx2);
            let dl = linalg::sub(&lambda_prev, &lambda);
            record.dw_h_sq = Some(rho * linalg::norm_sq(&a2dx2) + linalg::norm_sq(&dl) * inv_rho);
            let mut r_d = op.block(0).tr_mul_vec(&a2dx2);
            r_d.iter_mut().for_each(|v| *v *= rho);
            record.r_p = Some(linalg::norm(&residual));
            record.r_d = Some(linalg::norm(&r_d));
        }
        let objective = problem.objective.terms.iter().zip(&x).map(|(f, xi)| f.value(xi)).sum();
        let u = Iterate::new(BlockVector::new(x.clone())?, lambda.clone());
        termination = monitor.observe(k, &u, &residual, objective, record);
    }
    Ok(History {
        scheme: Scheme::GaussSeidel,
        records: monitor.records,
        final_iterate: Iterate::new(BlockVector::new(x)?, lambda),
        termination: termination.expect("loop ends with a termination"),
        iterations: k,
        final_prox: cfg.prox,
        block_duals: None,
        comm: None,
    })
}

/// `round(Σ_i a_i − c)` entrywise.
pub(crate) fn sum_residual(parts: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    rhs.iter()
        .enumerate()
        .map(|(r, c)| {
            let mut s = ExactSum::new();
            for p in parts {
                s.add(p[r]);
            }
            s.add(-c);
            s.value()
        })
        .collect()
}
