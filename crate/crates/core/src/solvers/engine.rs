//! Building blocks of the Jacobi-family iteration.
//!
//! One iteration is: the [`Coordinator`] emits a [`Broadcast`] of
//! `(λ^k, Ax^k − c)`; every [`BlockTask`] updates its block from that
//! snapshot and returns a [`Contribution`]; contributions are summed into a
//! [`Reduction`]; the coordinator turns the reduction into `λ^{k+1}`, the
//! iteration record and the next [`Control`] decision.
//!
//! All sums go through [`ExactSum`], so a reduction's value does not depend
//! on how blocks are grouped or in which order partial sums are merged.

use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::{h_from_parts, IterationRecord, TunerEvent, TunerEventKind};
use crate::error::Error;
use crate::linalg::{self, Matrix};
use crate::metric::{clamp, BlockMetric};
use crate::objective::{BlockFunction, Problem};
use crate::prox::{BlockProx, ProxSpec};
use crate::sum::ExactSum;
use crate::tuning::{TuneDecision, Tuner};

use super::subproblem::SubproblemSolver;
use super::{guard_bound_sq, Scheme, SolverConfig, Termination};

/// How a block turns its subproblem solution into the new iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Proximal or plain Jacobian: the subproblem solution is the iterate.
    Proximal,
    /// Exact Jacobian predictor `x̃`, then `x ← x − α(x − x̃)`.
    Corrected { alpha: f64 },
}

impl Variant {
    pub fn for_scheme(scheme: Scheme) -> Result<Variant, Error> {
        match scheme {
            Scheme::ProxJacobi | Scheme::Jacobi => Ok(Variant::Proximal),
            Scheme::CorrJacobi { alpha } => Ok(Variant::Corrected { alpha }),
            other => Err(Error::config(alloc::format!(
                "{} does not have Jacobi semantics",
                other.name()
            ))),
        }
    }

    fn has_predictor(&self) -> bool {
        matches!(self, Variant::Corrected { .. })
    }
}

/// The snapshot every block reads during iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Broadcast {
    pub k: usize,
    pub lambda: Vec<f64>,
    /// `Ax^k − c`
    pub residual: Vec<f64>,
}

/// What blocks must do before the next step.
#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Keep,
    /// Restore the previous iterate and use the new proximal spec.
    Rollback(ProxSpec),
    /// Use the new proximal spec from the current iterate.
    SetProx(ProxSpec),
}

/// One block's share of a reduction.
#[derive(Debug, Clone)]
pub struct Contribution {
    pub block: usize,
    /// `A_i x_i^{k+1}`
    pub ax: Vec<f64>,
    /// `A_i (x_i^k − x_i^{k+1})`
    pub adx: Vec<f64>,
    /// `A_i x̃_i^{k+1}` for the corrected variant.
    pub ax_pred: Option<Vec<f64>>,
    pub objective: f64,
    /// `‖x_i^k − x_i^{k+1}‖²_{G_x,i}`
    pub dx_gx_sq: f64,
    pub dx_sq: f64,
    pub x_sq: f64,
    pub err_gx_sq: f64,
    pub err_x_sq: f64,
    pub xstar_sq: f64,
}

/// Exact running sums of contributions.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub ax: Vec<ExactSum>,
    pub adx: Vec<ExactSum>,
    pub ax_pred: Vec<ExactSum>,
    pub objective: ExactSum,
    pub dx_gx_sq: ExactSum,
    pub dx_sq: ExactSum,
    pub x_sq: ExactSum,
    pub err_gx_sq: ExactSum,
    pub err_x_sq: ExactSum,
    pub xstar_sq: ExactSum,
    pub blocks: usize,
}

impl Reduction {
    pub fn new(m: usize, with_predictor: bool) -> Self {
        Reduction {
            ax: vec![ExactSum::new(); m],
            adx: vec![ExactSum::new(); m],
            ax_pred: if with_predictor { vec![ExactSum::new(); m] } else { Vec::new() },
            objective: ExactSum::new(),
            dx_gx_sq: ExactSum::new(),
            dx_sq: ExactSum::new(),
            x_sq: ExactSum::new(),
            err_gx_sq: ExactSum::new(),
            err_x_sq: ExactSum::new(),
            xstar_sq: ExactSum::new(),
            blocks: 0,
        }
    }

    pub fn add(&mut self, c: &Contribution) {
        for (acc, v) in self.ax.iter_mut().zip(&c.ax) {
            acc.add(*v);
        }
        for (acc, v) in self.adx.iter_mut().zip(&c.adx) {
            acc.add(*v);
        }
        if let Some(p) = &c.ax_pred {
            for (acc, v) in self.ax_pred.iter_mut().zip(p) {
                acc.add(*v);
            }
        }
        self.objective.add(c.objective);
        self.dx_gx_sq.add(c.dx_gx_sq);
        self.dx_sq.add(c.dx_sq);
        self.x_sq.add(c.x_sq);
        self.err_gx_sq.add(c.err_gx_sq);
        self.err_x_sq.add(c.err_x_sq);
        self.xstar_sq.add(c.xstar_sq);
        self.blocks += 1;
    }

    pub fn merge(&mut self, other: &Reduction) {
        for (a, b) in self.ax.iter_mut().zip(&other.ax) {
            a.merge(b);
        }
        for (a, b) in self.adx.iter_mut().zip(&other.adx) {
            a.merge(b);
        }
        for (a, b) in self.ax_pred.iter_mut().zip(&other.ax_pred) {
            a.merge(b);
        }
        self.objective.merge(&other.objective);
        self.dx_gx_sq.merge(&other.dx_gx_sq);
        self.dx_sq.merge(&other.dx_sq);
        self.x_sq.merge(&other.x_sq);
        self.err_gx_sq.merge(&other.err_gx_sq);
        self.err_x_sq.merge(&other.err_x_sq);
        self.xstar_sq.merge(&other.xstar_sq);
        self.blocks += other.blocks;
    }

    /// Number of floats in this reduction's serialized form.
    pub fn payload_floats(&self) -> usize {
        let parts = |v: &[ExactSum]| v.iter().map(|a| a.len().max(1)).sum::<usize>();
        parts(&self.ax) + parts(&self.adx) + parts(&self.ax_pred) + 9
    }
}

/// `round(Σ − c)` entrywise, exactly rounded.
fn residual_from(acc: &[ExactSum], rhs: &[f64]) -> Vec<f64> {
    acc.iter()
        .zip(rhs)
        .map(|(a, c)| {
            let mut s = a.clone();
            s.add(-c);
            s.value()
        })
        .collect()
}

/// State and update rule of one block.
#[derive(Debug, Clone)]
pub struct BlockTask<'p> {
    index: usize,
    f: &'p BlockFunction,
    a: &'p Matrix,
    rho: f64,
    variant: Variant,
    prox: BlockProx,
    metric: BlockMetric,
    x: Vec<f64>,
    x_prev: Vec<f64>,
    ax: Vec<f64>,
    ax_prev: Vec<f64>,
    reference: Option<&'p [f64]>,
    xstar_sq: f64,
    sub: SubproblemSolver,
}

impl<'p> BlockTask<'p> {
    /// `prox` is this block's `P_i`; the corrected variant ignores it.
    pub fn new(
        index: usize,
        problem: &'p Problem,
        rho: f64,
        variant: Variant,
        prox: BlockProx,
        x0: Vec<f64>,
        reference: Option<&'p [f64]>,
    ) -> Result<Self, Error> {
        let f = &problem.objective.terms[index];
        let a = problem.operator.block(index);
        if x0.len() != a.cols() {
            return Err(Error::structure(index, "initial block has the wrong length"));
        }
        let prox = if variant.has_predictor() { BlockProx::None } else { prox };
        let mut sub = SubproblemSolver::new(index, f, a);
        sub.prepare(f, a, &prox, rho)?;
        let ax = a.mul_vec(&x0);
        Ok(BlockTask {
            index,
            f,
            a,
            rho,
            variant,
            metric: BlockMetric::proximal(&prox, rho),
            prox,
            x_prev: x0.clone(),
            x: x0,
            ax_prev: ax.clone(),
            ax,
            reference,
            xstar_sq: reference.map_or(0.0, linalg::norm_sq),
            sub,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn prox(&self) -> &BlockProx {
        &self.prox
    }

    fn errors(&self, x: &[f64]) -> (f64, f64) {
        match self.reference {
            Some(r) => {
                let e = linalg::sub(x, r);
                (self.metric.quad_form(self.a, &e), linalg::norm_sq(&e))
            }
            None => (0.0, 0.0),
        }
    }

    /// Contribution of the current iterate, with zero differences.
    pub fn initial(&self) -> Contribution {
        let m = self.ax.len();
        let (err_gx_sq, err_x_sq) = self.errors(&self.x);
        Contribution {
            block: self.index,
            ax: self.ax.clone(),
            adx: vec![0.0; m],
            ax_pred: self.variant.has_predictor().then(|| self.ax.clone()),
            objective: self.f.value(&self.x),
            dx_gx_sq: 0.0,
            dx_sq: 0.0,
            x_sq: linalg::norm_sq(&self.x),
            err_gx_sq,
            err_x_sq,
            xstar_sq: self.xstar_sq,
        }
    }

    /// Updates this block from the broadcast snapshot.
    pub fn step(&mut self, bc: &Broadcast) -> Result<Contribution, Error> {
        let inv_rho = 1.0 / self.rho;
        // w = Ax^k − c − λ^k/ρ and b = A_i x_i^k − w
        let w: Vec<f64> = bc.residual.iter().zip(&bc.lambda).map(|(r, l)| r - l * inv_rho).collect();
        let b: Vec<f64> = self.ax.iter().zip(&w).map(|(a, w)| a - w).collect();
        let sol = self.sub.solve(self.f, self.a, &self.prox, self.rho, &b, &w, &self.x)?;
        let (new, ax_new, ax_pred) = match self.variant {
            Variant::Proximal => {
                let ax_new = self.a.mul_vec(&sol);
                (sol, ax_new, None)
            }
            Variant::Corrected { alpha } => {
                let ax_pred = self.a.mul_vec(&sol);
                if alpha == 1.0 {
                    (sol, ax_pred.clone(), Some(ax_pred))
                } else {
                    let new: Vec<f64> = self.x.iter().zip(&sol).map(|(x, p)| x - alpha * (x - p)).collect();
                    let ax_new = self.a.mul_vec(&new);
                    (new, ax_new, Some(ax_pred))
                }
            }
        };
        let dx = linalg::sub(&self.x, &new);
        let adx = self.a.mul_vec(&dx);
        let (err_gx_sq, err_x_sq) = self.errors(&new);
        let c = Contribution {
            block: self.index,
            objective: self.f.value(&new),
            dx_gx_sq: self.metric.quad_form_with(&dx, &adx),
            dx_sq: linalg::norm_sq(&dx),
            x_sq: linalg::norm_sq(&new),
            err_gx_sq,
            err_x_sq,
            xstar_sq: self.xstar_sq,
            ax: ax_new.clone(),
            adx,
            ax_pred,
        };
        self.x_prev = core::mem::replace(&mut self.x, new);
        self.ax_prev = core::mem::replace(&mut self.ax, ax_new);
        Ok(c)
    }

    /// Restores the iterate from before the last step.
    pub fn rollback(&mut self) {
        self.x.clone_from(&self.x_prev);
        self.ax.clone_from(&self.ax_prev);
    }

    pub fn set_prox(&mut self, prox: BlockProx) -> Result<(), Error> {
        if self.variant.has_predictor() {
            return Ok(());
        }
        self.sub.prepare(self.f, self.a, &prox, self.rho)?;
        self.metric = BlockMetric::proximal(&prox, self.rho);
        self.prox = prox;
        Ok(())
    }

    pub fn apply_control(&mut self, control: &Control) -> Result<(), Error> {
        match control {
            Control::Keep => Ok(()),
            Control::Rollback(p) => {
                self.rollback();
                self.set_prox(p.blocks[self.index].clone())
            }
            Control::SetProx(p) => self.set_prox(p.blocks[self.index].clone()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Summary {
    objective: f64,
    residual_norm: f64,
    err_g_sq: Option<f64>,
    rel_error: Option<f64>,
}

/// Result of one coordinator round.
#[derive(Debug, Clone)]
pub struct Step {
    /// Applied by every block before anything else.
    pub control: Control,
    /// Snapshot for the next iteration; `None` when the run is over.
    pub broadcast: Option<Broadcast>,
    pub termination: Option<Termination>,
    /// Whether this round appended a record.
    pub recorded: bool,
}

/// Dual update, diagnostics, tuning and stopping for the Jacobi family.
#[derive(Debug, Clone)]
pub struct Coordinator {
    rhs: Vec<f64>,
    rho: f64,
    gamma: f64,
    variant: Variant,
    prox: ProxSpec,
    tuner: Option<Tuner>,
    max_iters: usize,
    stop_tol: f64,
    record_every: usize,
    c_scale: f64,
    ref_lambda: Option<Vec<f64>>,
    has_ref_x: bool,
    guard_sq: f64,
    lambda: Vec<f64>,
    residual: Vec<f64>,
    summary: Summary,
    k: usize,
    records: Vec<IterationRecord>,
    t_last: u64,
}

impl Coordinator {
    /// `config` should be the effective configuration of a Jacobi-family
    /// scheme.
    pub fn new(
        config: &SolverConfig,
        rhs: Vec<f64>,
        lambda0: Vec<f64>,
        ref_lambda: Option<Vec<f64>>,
        has_ref_x: bool,
        u0_norm: f64,
    ) -> Result<Self, Error> {
        let variant = Variant::for_scheme(config.scheme)?;
        let c_scale = linalg::norm(&rhs).max(1.0);
        Ok(Coordinator {
            rho: config.rho,
            gamma: config.gamma,
            variant,
            prox: config.prox.clone(),
            tuner: config.tuner.clone().map(Tuner::new),
            max_iters: config.max_iters,
            stop_tol: config.stop_tol,
            record_every: config.record_every,
            c_scale,
            ref_lambda,
            has_ref_x,
            guard_sq: guard_bound_sq(u0_norm),
            residual: vec![0.0; rhs.len()],
            rhs,
            lambda: lambda0,
            summary: Summary {
                objective: 0.0,
                residual_norm: 0.0,
                err_g_sq: None,
                rel_error: None,
            },
            k: 0,
            records: Vec::new(),
            t_last: 0,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn prox(&self) -> &ProxSpec {
        &self.prox
    }

    pub fn iterations(&self) -> usize {
        self.k
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn into_records(self) -> (Vec<IterationRecord>, Vec<f64>, ProxSpec, usize) {
        (self.records, self.lambda, self.prox, self.k)
    }

    fn lambda_weight(&self) -> f64 {
        1.0 / (self.gamma * self.rho)
    }

    fn err_parts(&self, red: &Reduction, lambda: &[f64]) -> (Option<f64>, Option<f64>) {
        let err_x = red.err_x_sq.value();
        let err_g = self.ref_lambda.as_ref().map(|ls| {
            let dl = linalg::norm_sq(&linalg::sub(lambda, ls));
            clamp(red.err_gx_sq.value() + self.lambda_weight() * dl, err_x + dl)
        });
        let rel = self.has_ref_x.then(|| {
            let xs = red.xstar_sq.value();
            let e = crate::math::sqrt(err_x);
            if xs > 0.0 {
                e / crate::math::sqrt(xs)
            } else {
                e
            }
        });
        (err_g, rel)
    }

    /// Consumes the reduction of the initial iterate.
    pub fn start(&mut self, red0: &Reduction, now_ns: u64) -> Step {
        self.residual = residual_from(&red0.ax, &self.rhs);
        let (err_g_sq, rel_error) = self.err_parts(red0, &self.lambda);
        self.summary = Summary {
            objective: red0.objective.value(),
            residual_norm: linalg::norm(&self.residual),
            err_g_sq,
            rel_error,
        };
        self.t_last = now_ns;
        if self.max_iters == 0 {
            return Step {
                control: Control::Keep,
                broadcast: None,
                termination: Some(Termination::MaxIters),
                recorded: false,
            };
        }
        Step {
            control: Control::Keep,
            broadcast: Some(self.broadcast()),
            termination: None,
            recorded: false,
        }
    }

    fn broadcast(&self) -> Broadcast {
        Broadcast {
            k: self.k,
            lambda: self.lambda.clone(),
            residual: self.residual.clone(),
        }
    }

    fn tau_range(&self) -> (f64, f64) {
        let t = self.prox.taus();
        let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if t.is_empty() {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Consumes the reduction of iteration `k + 1`.
    pub fn finish(&mut self, red: &Reduction, now_ns: u64) -> Result<Step, Error> {
        let k = self.k + 1;
        self.k = k;
        let rho = self.rho;
        let r_new = residual_from(&red.ax, &self.rhs);
        let lambda_new: Vec<f64> = match self.variant {
            Variant::Proximal => {
                let s = self.gamma * rho;
                self.lambda.iter().zip(&r_new).map(|(l, r)| l - s * r).collect()
            }
            Variant::Corrected { alpha } => {
                let r_pred = residual_from(&red.ax_pred, &self.rhs);
                let pred: Vec<f64> = self.lambda.iter().zip(&r_pred).map(|(l, r)| l - rho * r).collect();
                if alpha == 1.0 {
                    pred
                } else {
                    self.lambda.iter().zip(&pred).map(|(l, p)| l - alpha * (l - p)).collect()
                }
            }
        };
        let dl = linalg::sub(&self.lambda, &lambda_new);
        let dl_sq = linalg::norm_sq(&dl);
        let adx: Vec<f64> = red.adx.iter().map(|a| a.value()).collect();
        let dx_gx = red.dx_gx_sq.value();
        let dx_sq = red.dx_sq.value();
        let lw = self.lambda_weight();
        let h = h_from_parts(dx_gx, dl_sq, linalg::dot(&dl, &adx), rho, self.gamma);
        let du_g = clamp(dx_gx + lw * dl_sq, dx_sq + dl_sq);
        let du_gp = clamp(dx_gx - rho * linalg::norm_sq(&adx) + lw * dl_sq, dx_sq + dl_sq);
        let (err_g_sq, rel_error) = self.err_parts(red, &lambda_new);
        let new_summary = Summary {
            objective: red.objective.value(),
            residual_norm: linalg::norm(&r_new),
            err_g_sq,
            rel_error,
        };
        let u_sq = red.x_sq.value() + linalg::norm_sq(&lambda_new);
        let diverged = !(u_sq <= self.guard_sq)
            || !new_summary.objective.is_finite() && !new_summary.objective.is_infinite()
            || lambda_new.iter().any(|v| !v.is_finite());
        let duration_ns = now_ns.saturating_sub(self.t_last);
        self.t_last = now_ns;
        let mut record = IterationRecord {
            k,
            objective: new_summary.objective,
            primal_residual: new_summary.residual_norm,
            h_value: Some(h),
            du_g_sq: Some(du_g),
            du_gp_sq: Some(du_gp),
            err_g_sq: new_summary.err_g_sq,
            rel_error: new_summary.rel_error,
            duration_ns,
            ..IterationRecord::default()
        };

        if diverged {
            self.commit(lambda_new, r_new, new_summary);
            self.records.push(record);
            return Ok(Step {
                control: Control::Keep,
                broadcast: None,
                termination: Some(Termination::DivergenceGuard),
                recorded: true,
            });
        }

        let mut control = Control::Keep;
        if let Some(tuner) = self.tuner.as_mut() {
            match tuner.step(k, h, du_g, &self.prox, rho)? {
                TuneDecision::IncreaseAndRestart(p) => {
                    let adjustments = tuner.adjustments();
                    self.prox = p;
                    let (tau_min, tau_max) = self.tau_range();
                    // the state stays at u^{k-1}
                    record.objective = self.summary.objective;
                    record.primal_residual = self.summary.residual_norm;
                    record.err_g_sq = self.summary.err_g_sq;
                    record.rel_error = self.summary.rel_error;
                    record.tuner_event = Some(TunerEvent {
                        kind: TunerEventKind::IncreaseAndRestart,
                        adjustments,
                        tau_min,
                        tau_max,
                    });
                    self.records.push(record);
                    let done = k >= self.max_iters;
                    return Ok(Step {
                        control: Control::Rollback(self.prox.clone()),
                        broadcast: (!done).then(|| self.broadcast()),
                        termination: done.then_some(Termination::MaxIters),
                        recorded: true,
                    });
                }
                TuneDecision::Keep => {
                    if let Some(p) = tuner.scheduled_decrease(k, &self.prox) {
                        let adjustments = tuner.adjustments();
                        self.prox = p;
                        let (tau_min, tau_max) = self.tau_range();
                        record.tuner_event = Some(TunerEvent {
                            kind: TunerEventKind::Decrease,
                            adjustments,
                            tau_min,
                            tau_max,
                        });
                        control = Control::SetProx(self.prox.clone());
                    }
                }
            }
        }

        self.commit(lambda_new, r_new, new_summary);
        let at_record = k % self.record_every == 0;
        let termination = if at_record && new_summary.residual_norm / self.c_scale <= self.stop_tol {
            Some(Termination::Tolerance)
        } else if k >= self.max_iters {
            Some(Termination::MaxIters)
        } else {
            None
        };
        let recorded = at_record || record.tuner_event.is_some() || termination.is_some();
        if recorded {
            self.records.push(record);
        }
        Ok(Step {
            control,
            broadcast: termination.is_none().then(|| self.broadcast()),
            termination,
            recorded,
        })
    }

    fn commit(&mut self, lambda: Vec<f64>, residual: Vec<f64>, summary: Summary) {
        self.lambda = lambda;
        self.residual = residual;
        self.summary = summary;
    }
}
