//! The iteration schemes.
//!
//! Every scheme works on a [`Problem`] and returns a [`History`]. The
//! Jacobi family (proximal Jacobian, plain Jacobian, correction-step
//! Jacobian) is built from per-block [`engine::BlockTask`]s and an
//! [`engine::Coordinator`], which is also what the message-passing runtime
//! drives.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::block::{BlockVector, Iterate};
use crate::diagnostics::IterationRecord;
use crate::error::Error;
use crate::objective::Problem;
use crate::prox::ProxSpec;
use crate::tuning::TunerConfig;

pub mod dual;
pub mod engine;
pub mod gauss_seidel;
pub mod jacobi;
mod monitor;
pub(crate) mod subproblem;
pub mod vsadmm;

pub use dual::solve_dual_decomp;
pub use gauss_seidel::solve_gauss_seidel;
pub use jacobi::{solve_corr_jacobi, solve_jacobi, solve_prox_jacobi};
pub use vsadmm::{solve_vsadmm, z_update};

/// Step rule for dual decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DualStep {
    /// `α_k = a`
    Constant(f64),
    /// `α_k = c₀/√k`
    Diminishing(f64),
    /// `α_k = 1/(‖A‖²·√k)`
    Default,
}

/// Which iteration scheme to run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scheme {
    ProxJacobi,
    Jacobi,
    GaussSeidel,
    Vsadmm,
    /// Jacobian predictor followed by `u ← u − α(u − ũ)`.
    CorrJacobi { alpha: f64 },
    DualDecomp(DualStep),
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ProxJacobi => "prox_jacobi",
            Scheme::Jacobi => "jacobi",
            Scheme::GaussSeidel => "gauss_seidel",
            Scheme::Vsadmm => "vsadmm",
            Scheme::CorrJacobi { .. } => "corr_jacobi",
            Scheme::DualDecomp(_) => "dual_decomp",
        }
    }

    /// Whether the scheme has Jacobi semantics (parallel block updates
    /// from one snapshot, no sequential barrier).
    pub fn is_jacobi_family(&self) -> bool {
        matches!(self, Scheme::ProxJacobi | Scheme::Jacobi | Scheme::CorrJacobi { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Penalty `ρ > 0`.
    pub rho: f64,
    /// Dual damping `γ ∈ (0, 2)`.
    pub gamma: f64,
    pub max_iters: usize,
    /// Stop when `‖Ax − c‖/max(1, ‖c‖) ≤ stop_tol`.
    pub stop_tol: f64,
    pub prox: ProxSpec,
    pub seed: u64,
    /// Record (and test the stopping rule) every this many iterations.
    pub record_every: usize,
    /// Adaptive tuning; used by the proximal Jacobian scheme only.
    pub tuner: Option<TunerConfig>,
}

impl SolverConfig {
    /// Defaults: `γ = 1`, 1000 iterations, `stop_tol = 1e−8`, no proximal
    /// term, record every iteration, no tuner.
    pub fn new(scheme: Scheme, rho: f64, n_blocks: usize) -> Self {
        SolverConfig {
            scheme,
            rho,
            gamma: 1.0,
            max_iters: 1000,
            stop_tol: 1e-8,
            prox: ProxSpec::none(n_blocks),
            seed: 0,
            record_every: 1,
            tuner: None,
        }
    }

    pub fn with_prox(mut self, prox: ProxSpec) -> Self {
        self.prox = prox;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn with_tuner(mut self, tuner: TunerConfig) -> Self {
        self.tuner = Some(tuner);
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    /// Checks the scalar invariants and the prox spec against `problem`.
    pub fn validate(&self, problem: &Problem) -> Result<(), Error> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::config(format!("ρ must be positive and finite, got {}", self.rho)));
        }
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(Error::config(format!("γ must lie in (0, 2), got {}", self.gamma)));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every must be positive"));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::config(format!("stop_tol must be nonnegative, got {}", self.stop_tol)));
        }
        match self.scheme {
            Scheme::CorrJacobi { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                return Err(Error::config(format!("correction step α must lie in (0, 1], got {alpha}")));
            }
            Scheme::DualDecomp(DualStep::Constant(a) | DualStep::Diminishing(a)) if !(a > 0.0) || !a.is_finite() => {
                return Err(Error::config(format!("dual step must be positive, got {a}")));
            }
            _ => {}
        }
        if self.scheme == Scheme::ProxJacobi {
            self.prox.validate(&problem.operator, self.rho)?;
            if let Some(t) = &self.tuner {
                t.validate(problem.num_blocks())?;
                let stuck = self.prox.blocks.iter().enumerate().find(|(i, b)| {
                    matches!(b, crate::prox::BlockProx::None) && t.beta[if t.beta.len() == 1 { 0 } else { *i }] == 0.0
                });
                if let Some((i, _)) = stuck {
                    return Err(Error::config(format!(
                        "block {i}: the tuner cannot grow P_i = 0 with β_i = 0; give the block a τ or set β_i > 0"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The configuration a scheme actually runs with: plain schemes force
    /// `P = 0` and `γ = 1`, and only the proximal Jacobian scheme tunes.
    pub fn effective(&self, n_blocks: usize) -> SolverConfig {
        let mut c = self.clone();
        if c.scheme != Scheme::ProxJacobi {
            c.prox = ProxSpec::none(n_blocks);
            c.gamma = 1.0;
            c.tuner = None;
        }
        c
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Termination {
    Tolerance,
    MaxIters,
    DivergenceGuard,
}

/// Message counts of a distributed run, filled in by the runtime.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CommLog {
    pub workers: usize,
    /// Rows `m` of the operator.
    pub rows: usize,
    /// Broadcast rounds (one per iteration, including the initial one).
    pub broadcast_rounds: u64,
    /// Reduction rounds (one per iteration, including the initial one).
    pub reduce_rounds: u64,
    pub broadcast_messages: u64,
    pub reduce_messages: u64,
    pub control_messages: u64,
    /// Modeled bytes by message class.
    pub broadcast_bytes: u64,
    pub reduce_bytes: u64,
    pub control_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct History {
    pub scheme: Scheme,
    /// Strictly increasing in `k`.
    pub records: Vec<IterationRecord>,
    pub final_iterate: Iterate,
    pub termination: Termination,
    /// Iterations performed, restarted ones included.
    pub iterations: usize,
    /// Proximal spec in force at the end (after any tuning).
    pub final_prox: ProxSpec,
    /// Per-block duals of the variable-splitting scheme.
    pub block_duals: Option<Vec<Vec<f64>>>,
    pub comm: Option<CommLog>,
}

impl History {
    pub fn last_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Bitwise equality of everything except wall-clock durations and
    /// communication counters.
    pub fn same_trajectory(&self, other: &History) -> bool {
        self.scheme == other.scheme
            && self.termination == other.termination
            && self.iterations == other.iterations
            && self.final_prox == other.final_prox
            && iterate_bits_eq(&self.final_iterate, &other.final_iterate)
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| record_bits_eq(a, b))
    }

    /// Series of one optional record field over the recorded iterations.
    pub fn series(&self, f: impl Fn(&IterationRecord) -> Option<f64>) -> Vec<f64> {
        self.records.iter().filter_map(f).collect()
    }
}

fn bits(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

fn opt_bits(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => bits(x, y),
        (None, None) => true,
        _ => false,
    }
}

fn slice_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| bits(*x, *y))
}

pub fn iterate_bits_eq(a: &Iterate, b: &Iterate) -> bool {
    slice_bits(&a.lambda, &b.lambda)
        && a.x.num_blocks() == b.x.num_blocks()
        && a.x.blocks().iter().zip(b.x.blocks()).all(|(p, q)| slice_bits(p, q))
}

/// Bitwise equality of two records, ignoring `duration_ns`.
pub fn record_bits_eq(a: &IterationRecord, b: &IterationRecord) -> bool {
    a.k == b.k
        && bits(a.objective, b.objective)
        && bits(a.primal_residual, b.primal_residual)
        && opt_bits(a.h_value, b.h_value)
        && opt_bits(a.du_g_sq, b.du_g_sq)
        && opt_bits(a.du_gp_sq, b.du_gp_sq)
        && opt_bits(a.err_g_sq, b.err_g_sq)
        && opt_bits(a.rel_error, b.rel_error)
        && opt_bits(a.dw_h_sq, b.dw_h_sq)
        && opt_bits(a.r_p, b.r_p)
        && opt_bits(a.r_d, b.r_d)
        && a.tuner_event == b.tuner_event
}

/// Monotonic nanosecond clock for per-iteration durations.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

/// Runs independent block tasks, possibly concurrently.
pub trait BlockExecutor: Sync {
    fn run(&self, tasks: &mut [&mut (dyn FnMut() + Send)]);
}

/// Runs tasks one after another in index order.
pub struct SequentialExecutor;

impl BlockExecutor for SequentialExecutor {
    fn run(&self, tasks: &mut [&mut (dyn FnMut() + Send)]) {
        for t in tasks.iter_mut() {
            t();
        }
    }
}

/// Known solution used for error diagnostics.
#[derive(Debug, Clone)]
pub struct Reference {
    pub x: BlockVector,
    /// Optimal multiplier; `‖u − u*‖²_G` is reported only when present.
    pub lambda: Option<Vec<f64>>,
}

pub type Callback<'a> = dyn FnMut(usize, &Iterate, &IterationRecord) + 'a;

/// Optional inputs to a solve.
#[derive(Default)]
pub struct SolveOptions<'a> {
    /// Starting point; zero when absent.
    pub initial: Option<Iterate>,
    pub reference: Option<Reference>,
    /// Called with every recorded iteration.
    pub callback: Option<Box<Callback<'a>>>,
    pub clock: Option<&'a dyn Clock>,
    pub executor: Option<&'a dyn BlockExecutor>,
}

impl<'a> SolveOptions<'a> {
    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_initial(mut self, initial: Iterate) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn with_clock(mut self, clock: &'a dyn Clock) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn with_executor(mut self, executor: &'a dyn BlockExecutor) -> Self {
        self.executor = Some(executor);
        self
    }

    pub fn with_callback(mut self, cb: impl FnMut(usize, &Iterate, &IterationRecord) + 'a) -> Self {
        self.callback = Some(Box::new(cb));
        self
    }
}

/// Runs the scheme named in `config`.
pub fn solve(problem: &Problem, config: &SolverConfig, options: SolveOptions<'_>) -> Result<History, Error> {
    match config.scheme {
        Scheme::ProxJacobi | Scheme::Jacobi | Scheme::CorrJacobi { .. } => jacobi::run(problem, config, options),
        Scheme::GaussSeidel => solve_gauss_seidel(problem, config, options),
        Scheme::Vsadmm => solve_vsadmm(problem, config, options),
        Scheme::DualDecomp(_) => solve_dual_decomp(problem, config, options),
    }
}

pub(crate) fn initial_iterate(problem: &Problem, options: &SolveOptions<'_>) -> Result<Iterate, Error> {
    match &options.initial {
        Some(u) => {
            u.check_conforms(&problem.operator)?;
            Ok(u.clone())
        }
        None => Ok(Iterate::zeros(&problem.operator)),
    }
}

pub(crate) fn check_reference(problem: &Problem, options: &SolveOptions<'_>) -> Result<(), Error> {
    if let Some(r) = &options.reference {
        problem.operator.check_conforms(&r.x)?;
        if let Some(l) = &r.lambda {
            if l.len() != problem.operator.rows() {
                return Err(Error::shape("reference λ has the wrong length"));
            }
        }
    }
    Ok(())
}

/// Squared divergence threshold `(1e8(1 + ‖u⁰‖))²`.
pub(crate) fn guard_bound_sq(u0_norm: f64) -> f64 {
    let b = 1e8 * (1.0 + u0_norm);
    b * b
}
