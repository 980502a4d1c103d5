//! Checkers and parameter suggesters for the sufficient convergence
//! conditions.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::block::BlockOperator;
use crate::error::Error;
use crate::linalg::{self, Matrix};
use crate::math::sqrt;
use crate::prox::{spectral_norm_sq, BlockProx, ProxSpec};

/// Absolute margin applied to every strict inequality.
pub const STRICT_MARGIN: f64 = 1e-10;

/// One inequality `lhs > rhs` for one block; `margin = lhs − rhs`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockMargin {
    pub block: usize,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionReport {
    pub condition: String,
    pub satisfied: bool,
    pub margins: Vec<BlockMargin>,
    /// `max_{i≠j} ‖A_iᵀA_j‖`
    pub delta: Option<f64>,
    /// `λ_min(A_iᵀA_i)` per block.
    pub lambda_min: Vec<f64>,
    /// Certifying `ε_i` for the general contraction condition.
    pub epsilon: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// `τ` threshold of each block's closed-form bullet, where one applies.
    pub tau_thresholds: Vec<Option<f64>>,
}

impl ConditionReport {
    fn new(condition: &str) -> Self {
        ConditionReport {
            condition: String::from(condition),
            satisfied: false,
            margins: Vec::new(),
            delta: None,
            lambda_min: Vec::new(),
            epsilon: None,
            alpha: None,
            beta: None,
            tau_thresholds: Vec::new(),
        }
    }

    fn push(&mut self, block: usize, inequality: &str, lhs: f64, rhs: f64) {
        self.margins.push(BlockMargin {
            block,
            inequality: String::from(inequality),
            lhs,
            rhs,
            margin: lhs - rhs,
        });
    }

    fn settle(&mut self) {
        self.satisfied = self.margins.iter().all(|m| m.margin > STRICT_MARGIN);
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
    }
}

fn check_gamma(gamma: f64) -> Result<(), Error> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::domain(format!("γ must lie in (0, 2), got {gamma}")));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<(), Error> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::domain(format!("ρ must be positive, got {rho}")));
    }
    Ok(())
}

/// `λ_min(A_iᵀA_i)` via the symmetric eigensolver.
pub fn gram_min_eigenvalue(a: &Matrix) -> Result<f64, Error> {
    linalg::sym_min_eigenvalue(&a.gram())
}

struct BlockSpectra {
    norm_sq: f64,
    min_eig: Option<f64>,
}

impl BlockSpectra {
    fn of(a: &Matrix) -> Result<Self, Error> {
        Ok(BlockSpectra {
            norm_sq: spectral_norm_sq(a)?,
            min_eig: None,
        })
    }

    fn min_eig(&mut self, a: &Matrix) -> Result<f64, Error> {
        if self.min_eig.is_none() {
            self.min_eig = Some(gram_min_eigenvalue(a)?);
        }
        Ok(self.min_eig.unwrap())
    }
}

/// `λ_min(P_i − κ A_iᵀA_i − s I)`, closed form for the τ kinds.
fn shifted_min_eigenvalue(
    p: &BlockProx,
    a: &Matrix,
    spec: &mut BlockSpectra,
    rho: f64,
    kappa: f64,
    s: f64,
) -> Result<f64, Error> {
    // P_i − κAᵀA − sI = t I + g AᵀA (+ E)
    let (t, g) = match p {
        BlockProx::None => (0.0, -kappa),
        BlockProx::Standard(tau) => (*tau, -kappa),
        BlockProx::ProxLinear(tau) => (*tau, -rho - kappa),
        BlockProx::Explicit(e) => {
            let mut m = a.gram().scaled(-kappa);
            m.add_scaled(1.0, e);
            m.add_diag(-s);
            return linalg::sym_min_eigenvalue(&m);
        }
    };
    let gram_part = if g >= 0.0 { g * spec.min_eig(a)? } else { g * spec.norm_sq };
    Ok(t - s + gram_part)
}

/// Checks `P_i ≻ ρ(N/(2−γ) − 1) A_iᵀA_i` for every block.
///
/// Standard and prox-linear blocks are evaluated from `‖A_i‖²` without
/// forming `P_i`; margins then read `τ_i − threshold_i`.
pub fn check_proximal_contraction(
    op: &BlockOperator,
    rho: f64,
    gamma: f64,
    prox: &ProxSpec,
) -> Result<ConditionReport, Error> {
    check_gamma(gamma)?;
    check_rho(rho)?;
    if prox.num_blocks() != op.num_blocks() {
        return Err(Error::shape("prox spec and operator block counts differ"));
    }
    let n = op.num_blocks() as f64;
    let kappa = rho * (n / (2.0 - gamma) - 1.0);
    let mut rep = ConditionReport::new("proximal_contraction");
    for (i, (p, a)) in prox.blocks.iter().zip(op.blocks()).enumerate() {
        let mut spec = BlockSpectra::of(a)?;
        let threshold = match p {
            BlockProx::Standard(_) if kappa >= 0.0 => Some(kappa * spec.norm_sq),
            BlockProx::ProxLinear(_) => Some(rho * n / (2.0 - gamma) * spec.norm_sq),
            _ => None,
        };
        rep.tau_thresholds.push(threshold);
        match (p.tau(), threshold) {
            (Some(tau), Some(th)) => rep.push(i, "tau > threshold", tau, th),
            _ => {
                let ev = shifted_min_eigenvalue(p, a, &mut spec, rho, kappa, 0.0)?;
                rep.push(i, "lambda_min(P_i - kappa A_i^T A_i) > 0", ev, 0.0);
            }
        }
    }
    rep.settle();
    if rep.satisfied {
        let eps = (2.0 - gamma) / n * (1.0 - 1e-6);
        rep.epsilon = Some(alloc::vec![eps; op.num_blocks()]);
    }
    Ok(rep)
}

/// Which closed-form bullet [`suggest_tau`] targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TauKind {
    Standard,
    ProxLinear,
}

/// `τ_i = slack × threshold_i` for the chosen bullet.
pub fn suggest_tau(op: &BlockOperator, rho: f64, gamma: f64, kind: TauKind, slack: f64) -> Result<Vec<f64>, Error> {
    check_gamma(gamma)?;
    check_rho(rho)?;
    if !(slack > 1.0) || !slack.is_finite() {
        return Err(Error::domain(format!("slack must exceed 1, got {slack}")));
    }
    let n = op.num_blocks() as f64;
    op.blocks()
        .iter()
        .map(|a| {
            let norm_sq = spectral_norm_sq(a)?;
            let factor = match kind {
                TauKind::Standard => rho * (n / (2.0 - gamma) - 1.0),
                TauKind::ProxLinear => rho * n / (2.0 - gamma),
            };
            let th = factor * norm_sq;
            // a nonpositive threshold (single block, γ ≤ 1) still needs τ > 0
            Ok(if th > 0.0 { slack * th } else { slack * (STRICT_MARGIN + rho * norm_sq * 1e-6) })
        })
        .collect()
}

/// `max_{i≠j} ‖A_iᵀA_j‖` (spectral norm).
pub fn cross_gram_delta(op: &BlockOperator) -> Result<f64, Error> {
    let mut delta: f64 = 0.0;
    for i in 0..op.num_blocks() {
        for j in i + 1..op.num_blocks() {
            let c = op.block(i).tr_mul(op.block(j));
            delta = delta.max(sqrt(spectral_norm_sq(&c)?));
        }
    }
    Ok(delta)
}

/// Checks `‖A_iᵀA_j‖ ≤ δ` and `λ_min(A_iᵀA_i) > 3(N−1)δ`.
///
/// A single block is reported satisfied with `δ = 0`.
pub fn check_near_orthogonality(op: &BlockOperator) -> Result<ConditionReport, Error> {
    let mut rep = ConditionReport::new("near_orthogonality");
    let n = op.num_blocks();
    let lambda_min: Vec<f64> = op.blocks().iter().map(gram_min_eigenvalue).collect::<Result<_, _>>()?;
    if n == 1 {
        rep.delta = Some(0.0);
        rep.lambda_min = lambda_min;
        rep.satisfied = true;
        return Ok(rep);
    }
    let delta = cross_gram_delta(op)?;
    let rhs = 3.0 * (n as f64 - 1.0) * delta;
    for (i, lm) in lambda_min.iter().enumerate() {
        rep.push(i, "lambda_min(A_i^T A_i) > 3(N-1) delta", *lm, rhs);
    }
    rep.delta = Some(delta);
    rep.lambda_min = lambda_min;
    rep.settle();
    Ok(rep)
}

/// Checks, for given `α ∈ (0, 2−γ)` and `β > 0`,
/// `P_i ≻ ρ(1/α − 1)A_iᵀA_i + (ρ/β)δ(N−1) I` and
/// `λ_min(A_iᵀA_i) > ((2−γ+β)/(2−γ−α)) δ(N−1)`.
pub fn check_near_orthogonal_proximal(
    op: &BlockOperator,
    rho: f64,
    gamma: f64,
    prox: &ProxSpec,
    alpha: f64,
    beta: f64,
) -> Result<ConditionReport, Error> {
    check_gamma(gamma)?;
    check_rho(rho)?;
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::domain(format!("α and β must be positive, got {alpha}, {beta}")));
    }
    if alpha >= 2.0 - gamma {
        return Err(Error::domain(format!("α = {alpha} must be below 2 − γ = {}", 2.0 - gamma)));
    }
    if prox.num_blocks() != op.num_blocks() {
        return Err(Error::shape("prox spec and operator block counts differ"));
    }
    let n = op.num_blocks() as f64;
    let delta = if op.num_blocks() > 1 { cross_gram_delta(op)? } else { 0.0 };
    let kappa = rho * (1.0 / alpha - 1.0);
    let shift = rho / beta * delta * (n - 1.0);
    let ratio = (2.0 - gamma + beta) / (2.0 - gamma - alpha);
    let mut rep = ConditionReport::new("near_orthogonal_proximal");
    for (i, (p, a)) in prox.blocks.iter().zip(op.blocks()).enumerate() {
        let mut spec = BlockSpectra::of(a)?;
        let ev = shifted_min_eigenvalue(p, a, &mut spec, rho, kappa, shift)?;
        rep.push(i, "lambda_min(P_i - rho(1/alpha-1)A_i^T A_i - (rho/beta) delta (N-1) I) > 0", ev, 0.0);
        let lm = spec.min_eig(a)?;
        rep.lambda_min.push(lm);
        rep.push(i, "lambda_min(A_i^T A_i) > ratio delta (N-1)", lm, ratio * delta * (n - 1.0));
    }
    rep.delta = Some(delta);
    rep.alpha = Some(alpha);
    rep.beta = Some(beta);
    rep.settle();
    Ok(rep)
}
