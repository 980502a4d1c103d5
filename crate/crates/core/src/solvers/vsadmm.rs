//! Variable-splitting ADMM.
//!
//! The constraint is split as `A_i x_i − z_i = c/N` with `Σ z_i = 0`. Each
//! block keeps its own multiplier `λ_i`; the reported `λ` is their mean.

use alloc::vec::Vec;

use crate::block::{BlockVector, Iterate};
use crate::diagnostics::IterationRecord;
use crate::error::Error;
use crate::linalg;
use crate::objective::{BlockFunction, Problem};
use crate::prox::{spectral_norm_sq, BlockProx};
use crate::sum::ExactSum;

use super::gauss_seidel::sum_residual;
use super::monitor::Monitor;
use super::subproblem::SubproblemSolver;
use super::{check_reference, initial_iterate, History, Scheme, SolveOptions, SolverConfig};

/// Prox-linear factor on `ρ‖A_i‖²` for blocks without an exact solve.
pub const VSADMM_TAU_FACTOR: f64 = 1.01;

/// `z_i = v_i − (1/N)Σ_j v_j` with `v_i = A_i x_i − c/N − λ_i/ρ`.
pub fn z_update(ax: &[Vec<f64>], lambdas: &[Vec<f64>], rhs: &[f64], rho: f64) -> Vec<Vec<f64>> {
    let n = ax.len();
    let nf = n as f64;
    let v: Vec<Vec<f64>> = ax
        .iter()
        .zip(lambdas)
        .map(|(a, l)| {
            a.iter()
                .zip(l)
                .zip(rhs)
                .map(|((a, l), c)| a - c / nf - l / rho)
                .collect()
        })
        .collect();
    let mean: Vec<f64> = (0..rhs.len())
        .map(|r| {
            let mut s = ExactSum::new();
            for vi in &v {
                s.add(vi[r]);
            }
            s.value() / nf
        })
        .collect();
    v.into_iter()
        .map(|vi| vi.iter().zip(&mean).map(|(a, b)| a - b).collect())
        .collect()
}

pub fn solve_vsadmm(problem: &Problem, config: &SolverConfig, mut options: SolveOptions<'_>) -> Result<History, Error> {
    let mut cfg = config.clone();
    cfg.scheme = Scheme::Vsadmm;
    cfg.validate(problem)?;
    let cfg = cfg.effective(problem.num_blocks());
    check_reference(problem, &options)?;
    let op = &problem.operator;
    let n = op.num_blocks();
    let nf = n as f64;
    let rho = cfg.rho;
    let rhs = op.rhs();
    let u0 = initial_iterate(problem, &options)?;

    let mut proxes = Vec::with_capacity(n);
    let mut solvers = Vec::with_capacity(n);
    for i in 0..n {
        let f = &problem.objective.terms[i];
        let a = op.block(i);
        let p = match f {
            BlockFunction::Quadratic { .. } | BlockFunction::Zero => BlockProx::None,
            _ => BlockProx::ProxLinear(VSADMM_TAU_FACTOR * rho * spectral_norm_sq(a)?),
        };
        let mut s = SubproblemSolver::new(i, f, a);
        s.prepare(f, a, &p, rho)?;
        proxes.push(p);
        solvers.push(s);
    }

    let mut x: Vec<Vec<f64>> = u0.x.blocks().to_vec();
    let mut lambdas: Vec<Vec<f64>> = alloc::vec![u0.lambda.clone(); n];
    let mut ax: Vec<Vec<f64>> = (0..n).map(|i| op.block(i).mul_vec(&x[i])).collect();

    let mut monitor = Monitor::new(&cfg, rhs, &u0, &mut options);
    let mut k = 0;
    let mut termination = monitor.initial();
    let mut lambda = u0.lambda.clone();
    while termination.is_none() {
        k += 1;
        let z = z_update(&ax, &lambdas, rhs, rho);
        for i in 0..n {
            // A_i x_i ≈ t_i = z_i + c/N + λ_i/ρ
            let t: Vec<f64> = z[i]
                .iter()
                .zip(rhs)
                .zip(&lambdas[i])
                .map(|((z, c), l)| z + c / nf + l / rho)
                .collect();
            let w = linalg::sub(&ax[i], &t);
            let f = &problem.objective.terms[i];
            x[i] = solvers[i].solve(f, op.block(i), &proxes[i], rho, &t, &w, &x[i])?;
            ax[i] = op.block(i).mul_vec(&x[i]);
            for r in 0..rhs.len() {
                lambdas[i][r] -= rho * (ax[i][r] - z[i][r] - rhs[r] / nf);
            }
        }
        lambda = mean_dual(&lambdas);
        let residual = sum_residual(&ax, rhs);
        let objective = problem.objective.terms.iter().zip(&x).map(|(f, xi)| f.value(xi)).sum();
        let u = Iterate::new(BlockVector::new(x.clone())?, lambda.clone());
        termination = monitor.observe(k, &u, &residual, objective, IterationRecord::default());
    }
    Ok(History {
        scheme: Scheme::Vsadmm,
        records: monitor.records,
        final_iterate: Iterate::new(BlockVector::new(x)?, lambda),
        termination: termination.expect("loop ends with a termination"),
        iterations: k,
        final_prox: crate::prox::ProxSpec::new(proxes),
        block_duals: Some(lambdas),
        comm: None,
    })
}

fn mean_dual(lambdas: &[Vec<f64>]) -> Vec<f64> {
    let nf = lambdas.len() as f64;
    (0..lambdas[0].len())
        .map(|r| {
            let mut s = ExactSum::new();
            for l in lambdas {
                s.add(l[r]);
            }
            s.value() / nf
        })
        .collect()
}
