// Recording, divergence guard and stopping for the schemes that do not run
// on the block engine.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::block::{BlockVector, Iterate};
use crate::diagnostics::IterationRecord;
use crate::linalg;

use super::{guard_bound_sq, Callback, Clock, SolveOptions, SolverConfig, Termination};

pub(crate) struct Monitor<'o, 'a> {
    max_iters: usize,
    stop_tol: f64,
    record_every: usize,
    c_scale: f64,
    guard_sq: f64,
    clock: Option<&'a dyn Clock>,
    t_last: u64,
    callback: Option<&'o mut Box<Callback<'a>>>,
    reference: Option<BlockVector>,
    pub(crate) records: Vec<IterationRecord>,
}

impl<'o, 'a> Monitor<'o, 'a> {
    pub(crate) fn new(config: &SolverConfig, rhs: &[f64], u0: &Iterate, options: &'o mut SolveOptions<'a>) -> Self {
        let clock = options.clock;
        let t_last = clock.map_or(0, |c| c.now_ns());
        Monitor {
            max_iters: config.max_iters,
            stop_tol: config.stop_tol,
            record_every: config.record_every,
            c_scale: linalg::norm(rhs).max(1.0),
            guard_sq: guard_bound_sq(u0.norm()),
            clock,
            t_last,
            reference: options.reference.as_ref().map(|r| r.x.clone()),
            callback: options.callback.as_mut(),
            records: Vec::new(),
        }
    }

    /// Termination before the first iteration.
    pub(crate) fn initial(&self) -> Option<Termination> {
        (self.max_iters == 0).then_some(Termination::MaxIters)
    }

    pub(crate) fn rel_error(&self, x: &BlockVector) -> Option<f64> {
        let r = self.reference.as_ref()?;
        let e = x.sub(r).ok()?.norm();
        let s = r.norm();
        Some(if s > 0.0 { e / s } else { e })
    }

    /// Completes `record` for iteration `k` at state `u`, stores it when
    /// due and reports whether the run is over.
    pub(crate) fn observe(
        &mut self,
        k: usize,
        u: &Iterate,
        residual: &[f64],
        objective: f64,
        mut record: IterationRecord,
    ) -> Option<Termination> {
        let now = self.clock.map_or(0, |c| c.now_ns());
        record.k = k;
        record.objective = objective;
        record.primal_residual = linalg::norm(residual);
        record.rel_error = self.rel_error(&u.x);
        record.duration_ns = now.saturating_sub(self.t_last);
        self.t_last = now;
        let at_record = k % self.record_every == 0;
        let u_sq = u.norm_sq();
        let termination = if !(u_sq <= self.guard_sq) || !u.all_finite() {
            Some(Termination::DivergenceGuard)
        } else if at_record && record.primal_residual / self.c_scale <= self.stop_tol {
            Some(Termination::Tolerance)
        } else if k >= self.max_iters {
            Some(Termination::MaxIters)
        } else {
            None
        };
        if at_record || termination.is_some() {
            if let Some(cb) = self.callback.as_mut() {
                cb(k, u, &record);
            }
            self.records.push(record);
        }
        termination
    }
}
