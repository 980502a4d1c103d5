//! Dual decomposition (dual ascent with separable minimization).

use alloc::format;
use alloc::vec::Vec;

use crate::block::{BlockVector, Iterate};
use crate::diagnostics::IterationRecord;
use crate::error::Error;
use crate::linalg::{self, Cholesky};
use crate::objective::{BlockFunction, Problem};
use crate::prox::operator_norm_sq;

use super::gauss_seidel::sum_residual;
use super::monitor::Monitor;
use super::{check_reference, initial_iterate, DualStep, History, Scheme, SolveOptions, SolverConfig};

enum Oracle<'p> {
    /// Cached `CᵀC` factor and `Cᵀd`.
    Quadratic(Cholesky, Vec<f64>),
    Generic(&'p BlockFunction),
}

fn name_block(i: usize, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("block {i}: {msg}")),
        other => other,
    }
}

impl Oracle<'_> {
    fn minimize(&self, i: usize, s: &[f64]) -> Result<Vec<f64>, Error> {
        match self {
            Oracle::Quadratic(chol, ctd) => {
                let mut rhs = ctd.clone();
                linalg::axpy(1.0, s, &mut rhs);
                chol.solve_in_place(&mut rhs);
                Ok(rhs)
            }
            Oracle::Generic(f) => f.shifted_minimizer(s).map_err(|e| name_block(i, e)),
        }
    }
}

/// `x_i = argmin f_i(x_i) − ⟨λ, A_i x_i⟩`, then `λ ← λ − α_k(Ax − c)`.
///
/// `config.scheme` selects the step rule; any other scheme uses
/// [`DualStep::Default`].
pub fn solve_dual_decomp(problem: &Problem, config: &SolverConfig, mut options: SolveOptions<'_>) -> Result<History, Error> {
    let step = match config.scheme {
        Scheme::DualDecomp(s) => s,
        _ => DualStep::Default,
    };
    let mut cfg = config.clone();
    cfg.scheme = Scheme::DualDecomp(step);
    cfg.validate(problem)?;
    let cfg = cfg.effective(problem.num_blocks());
    check_reference(problem, &options)?;
    let op = &problem.operator;
    let n = op.num_blocks();
    let oracles: Vec<Oracle<'_>> = problem
        .objective
        .terms
        .iter()
        .enumerate()
        .map(|(i, f)| match f {
            BlockFunction::Quadratic { c, d } => Cholesky::factor(&c.gram())
                .map(|ch| Oracle::Quadratic(ch, c.tr_mul_vec(d)))
                .map_err(|_| {
                    Error::config(format!(
                        "block {i}: quadratic block has singular CᵀC; the dual subproblem is unbounded"
                    ))
                }),
            BlockFunction::Zero | BlockFunction::L1 => f.shifted_minimizer(&[]).map(|_| Oracle::Generic(f)).map_err(|e| name_block(i, e)),
            other => Ok(Oracle::Generic(other)),
        })
        .collect::<Result<_, _>>()?;
    let norm_sq = match step {
        DualStep::Default => {
            let s = operator_norm_sq(op)?;
            if s == 0.0 {
                return Err(Error::config("default dual step needs a nonzero operator"));
            }
            s
        }
        _ => 1.0,
    };
    let step_at = |k: usize| -> f64 {
        let sk = crate::math::sqrt(k as f64);
        match step {
            DualStep::Constant(a) => a,
            DualStep::Diminishing(c0) => c0 / sk,
            DualStep::Default => 1.0 / (norm_sq * sk),
        }
    };

    let u0 = initial_iterate(problem, &options)?;
    let mut x: Vec<Vec<f64>> = u0.x.blocks().to_vec();
    let mut lambda = u0.lambda.clone();
    let mut monitor = Monitor::new(&cfg, op.rhs(), &u0, &mut options);
    let mut k = 0;
    let mut termination = monitor.initial();
    while termination.is_none() {
        k += 1;
        for i in 0..n {
            let s = op.block(i).tr_mul_vec(&lambda);
            x[i] = oracles[i].minimize(i, &s)?;
        }
        let ax: Vec<Vec<f64>> = (0..n).map(|i| op.block(i).mul_vec(&x[i])).collect();
        let residual = sum_residual(&ax, op.rhs());
        let a = step_at(k);
        for (l, r) in lambda.iter_mut().zip(&residual) {
            *l -= a * r;
        }
        let objective = problem.objective.terms.iter().zip(&x).map(|(f, xi)| f.value(xi)).sum();
        let u = Iterate::new(BlockVector::new(x.clone())?, lambda.clone());
        termination = monitor.observe(k, &u, &residual, objective, IterationRecord::default());
    }
    Ok(History {
        scheme: cfg.scheme,
        records: monitor.records,
        final_iterate: Iterate::new(BlockVector::new(x)?, lambda),
        termination: termination.expect("loop ends with a termination"),
        iterations: k,
        final_prox: cfg.prox,
        block_duals: None,
        comm: None,
    })
}
