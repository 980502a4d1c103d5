//! Serial driver of the Jacobi family.
//!
//! Blocks are updated through the [`BlockExecutor`] in `options` (one after
//! another by default); the result does not depend on the executor.

use alloc::vec::Vec;

use crate::block::{BlockVector, Iterate};
use crate::error::Error;
use crate::objective::Problem;

use super::engine::{BlockTask, Contribution, Coordinator, Reduction, Variant};
use super::{check_reference, initial_iterate, History, Scheme, SequentialExecutor, SolveOptions, SolverConfig};

/// Proximal Jacobian ADMM with the proximal spec, `γ` and tuner of
/// `config`.
pub fn solve_prox_jacobi(problem: &Problem, config: &SolverConfig, options: SolveOptions<'_>) -> Result<History, Error> {
    let mut c = config.clone();
    c.scheme = Scheme::ProxJacobi;
    run(problem, &c, options)
}

/// Plain Jacobian ADMM (`P = 0`, `γ = 1`); may diverge.
pub fn solve_jacobi(problem: &Problem, config: &SolverConfig, options: SolveOptions<'_>) -> Result<History, Error> {
    let mut c = config.clone();
    c.scheme = Scheme::Jacobi;
    run(problem, &c, options)
}

/// Jacobian predictor with a relaxation step `α`; `config.scheme` must be
/// [`Scheme::CorrJacobi`].
pub fn solve_corr_jacobi(problem: &Problem, config: &SolverConfig, options: SolveOptions<'_>) -> Result<History, Error> {
    if !matches!(config.scheme, Scheme::CorrJacobi { .. }) {
        return Err(Error::config("solve_corr_jacobi needs Scheme::CorrJacobi"));
    }
    run(problem, config, options)
}

/// Per-block tasks for a Jacobi-family run starting at `u0`.
pub fn build_tasks<'p>(
    problem: &'p Problem,
    config: &SolverConfig,
    u0: &Iterate,
    reference: Option<&'p BlockVector>,
) -> Result<Vec<BlockTask<'p>>, Error> {
    let variant = Variant::for_scheme(config.scheme)?;
    (0..problem.num_blocks())
        .map(|i| {
            BlockTask::new(
                i,
                problem,
                config.rho,
                variant,
                config.prox.blocks[i].clone(),
                u0.x.block(i).to_vec(),
                reference.map(|r| r.block(i)),
            )
        })
        .collect()
}

pub(crate) fn run(problem: &Problem, config: &SolverConfig, mut options: SolveOptions<'_>) -> Result<History, Error> {
    config.validate(problem)?;
    let cfg = config.effective(problem.num_blocks());
    check_reference(problem, &options)?;
    let u0 = initial_iterate(problem, &options)?;
    let reference = options.reference.take();
    let mut tasks = build_tasks(problem, &cfg, &u0, reference.as_ref().map(|r| &r.x))?;
    let has_pred = matches!(cfg.scheme, Scheme::CorrJacobi { .. });
    let m = problem.operator.rows();

    let mut red0 = Reduction::new(m, has_pred);
    for t in &tasks {
        red0.add(&t.initial());
    }
    let mut coord = Coordinator::new(
        &cfg,
        problem.operator.rhs().to_vec(),
        u0.lambda.clone(),
        reference.as_ref().and_then(|r| r.lambda.clone()),
        reference.is_some(),
        u0.norm(),
    )?;
    let clock = options.clock;
    let now = || clock.map_or(0, |c| c.now_ns());
    let executor = options.executor.unwrap_or(&SequentialExecutor);

    let mut step = coord.start(&red0, now());
    let termination = loop {
        for t in tasks.iter_mut() {
            t.apply_control(&step.control)?;
        }
        if let Some(term) = step.termination {
            break term;
        }
        let bc = step.broadcast.take().expect("running step has a broadcast");
        let mut outs: Vec<Option<Result<Contribution, Error>>> = (0..tasks.len()).map(|_| None).collect();
        {
            let bc = &bc;
            let mut jobs: Vec<_> = tasks
                .iter_mut()
                .zip(outs.iter_mut())
                .map(|(t, o)| move || *o = Some(t.step(bc)))
                .collect();
            let mut refs: Vec<&mut (dyn FnMut() + Send)> =
                jobs.iter_mut().map(|j| j as &mut (dyn FnMut() + Send)).collect();
            executor.run(&mut refs);
        }
        let mut red = Reduction::new(m, has_pred);
        for o in outs {
            red.add(&o.expect("executor ran every task")?);
        }
        step = coord.finish(&red, now())?;
        if step.recorded {
            if let Some(cb) = options.callback.as_mut() {
                // a pending rollback has not reached the blocks yet
                for t in tasks.iter_mut() {
                    t.apply_control(&step.control)?;
                }
                step.control = super::engine::Control::Keep;
                let u = current_iterate(&tasks, coord.lambda())?;
                let rec = coord.records().last().expect("recorded");
                cb(rec.k, &u, rec);
            }
        }
    };
    let u = current_iterate(&tasks, coord.lambda())?;
    let (records, _, final_prox, iterations) = coord.into_records();
    Ok(History {
        scheme: cfg.scheme,
        records,
        final_iterate: u,
        termination,
        iterations,
        final_prox,
        block_duals: None,
        comm: None,
    })
}

pub(crate) fn current_iterate(tasks: &[BlockTask<'_>], lambda: &[f64]) -> Result<Iterate, Error> {
    let x = BlockVector::new(tasks.iter().map(|t| t.x().to_vec()).collect())?;
    Ok(Iterate::new(x, lambda.to_vec()))
}
