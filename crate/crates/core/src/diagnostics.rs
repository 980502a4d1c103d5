//! Per-iteration measurements and the empirical rate checks.

use alloc::format;
use alloc::vec::Vec;

use crate::block::{BlockOperator, Iterate};
use crate::error::Error;
use crate::linalg;
use crate::metric::MetricSpec;
use crate::prox::ProxSpec;

/// What the adaptive tuner did at an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TunerEventKind {
    /// Contraction test failed; P grew and the iterate was rolled back.
    IncreaseAndRestart,
    /// Scheduled decrease of P.
    Decrease,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TunerEvent {
    pub kind: TunerEventKind,
    /// Total increases so far, including this one.
    pub adjustments: usize,
    pub tau_min: f64,
    pub tau_max: f64,
}

/// Diagnostics for one iteration `k` (the transition `u^{k−1} → u^k`).
///
/// Quantities that need a previous iterate, a reference solution or `N = 2`
/// are `None` when unavailable.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    /// `‖Ax^k − c‖`
    pub primal_residual: f64,
    /// `h(u^{k−1}, u^k)`
    pub h_value: Option<f64>,
    /// `‖u^{k−1} − u^k‖²_G`
    pub du_g_sq: Option<f64>,
    /// `‖u^{k−1} − u^k‖²_{G′}`
    pub du_gp_sq: Option<f64>,
    /// `‖u^k − u*‖²_G`
    pub err_g_sq: Option<f64>,
    /// `‖x^k − x*‖ / ‖x*‖`
    pub rel_error: Option<f64>,
    /// `‖w^{k−1} − w^k‖²_H`, `w = (x_2, λ)`
    pub dw_h_sq: Option<f64>,
    /// `‖r_p‖`
    pub r_p: Option<f64>,
    /// `‖r_d‖`
    pub r_d: Option<f64>,
    pub tuner_event: Option<TunerEvent>,
    pub duration_ns: u64,
}

/// `h(u, u′) = ‖Δx‖²_{G_x} + (2−γ)/(ργ²)‖Δλ‖² + (2/γ) Δλᵀ A Δx`
/// with `Δ = u − u′`. May be negative.
pub fn h_value(
    u_prev: &Iterate,
    u_next: &Iterate,
    op: &BlockOperator,
    rho: f64,
    gamma: f64,
    prox: &ProxSpec,
) -> Result<f64, Error> {
    check_gamma(gamma)?;
    u_prev.check_conforms(op)?;
    u_next.check_conforms(op)?;
    let g = MetricSpec::proximal(op, rho, gamma, prox)?;
    let d = u_prev.sub(u_next)?;
    let mut dx_gx = 0.0;
    let mut adx = alloc::vec![0.0; op.rows()];
    for i in 0..op.num_blocks() {
        let av = op.block(i).mul_vec(d.x.block(i));
        dx_gx += g.block(i).quad_form_with(d.x.block(i), &av);
        linalg::axpy(1.0, &av, &mut adx);
    }
    Ok(h_from_parts(dx_gx, linalg::norm_sq(&d.lambda), linalg::dot(&d.lambda, &adx), rho, gamma))
}

/// `h` from its three ingredients `‖Δx‖²_{G_x}`, `‖Δλ‖²`, `Δλᵀ A Δx`.
#[inline]
pub fn h_from_parts(dx_gx_sq: f64, dl_sq: f64, dl_adx: f64, rho: f64, gamma: f64) -> f64 {
    dx_gx_sq + (2.0 - gamma) / (rho * gamma * gamma) * dl_sq + (2.0 / gamma) * dl_adx
}

fn check_gamma(gamma: f64) -> Result<(), Error> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::domain(format!("γ must lie in (0, 2), got {gamma}")));
    }
    Ok(())
}

/// Two-block residuals `r_p = A_1x_1 + A_2x_2 − c` and
/// `r_d = ρ A_1ᵀA_2 (x_2^k − x_2^{k+1})`, both evaluated at `u_next`.
pub fn two_block_residuals(
    u_prev: &Iterate,
    u_next: &Iterate,
    op: &BlockOperator,
    rho: f64,
) -> Result<(Vec<f64>, Vec<f64>), Error> {
    if op.num_blocks() != 2 {
        return Err(Error::domain(format!(
            "two-block residuals need N = 2, got {}",
            op.num_blocks()
        )));
    }
    u_prev.check_conforms(op)?;
    u_next.check_conforms(op)?;
    let r_p = op.residual(&u_next.x)?;
    let dx2 = linalg::sub(u_prev.x.block(1), u_next.x.block(1));
    let mut r_d = op.block(0).tr_mul_vec(&op.block(1).mul_vec(&dx2));
    r_d.iter_mut().for_each(|v| *v *= rho);
    Ok((r_p, r_d))
}

/// Largest deviation from `r_p = (λ^k − λ^{k+1})/ρ`, relative to `1 + ‖r_p‖`.
pub fn dual_residual_identity_gap(u_prev: &Iterate, u_next: &Iterate, r_p: &[f64], rho: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for ((a, b), r) in u_prev.lambda.iter().zip(&u_next.lambda).zip(r_p) {
        worst = worst.max(((a - b) / rho - r).abs());
    }
    worst / (1.0 + linalg::norm(r_p))
}

/// Result of [`rate_check`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateReport {
    /// `a_{k+1} ≤ a_k(1 + 1e−10) + 1e−14` for every `k`.
    pub monotone: bool,
    /// First 1-based index `k` with `a_{k+1}` violating the test.
    pub first_violation: Option<usize>,
    /// All partial sums are finite and, when a bound was supplied, below it.
    pub partial_sums_bounded: bool,
    pub partial_sum: f64,
    /// `(k, k·a_{2k})` for every `2k` in the last quarter of the series.
    pub k_times_a2k_tail: Vec<(usize, f64)>,
    /// The tail is non-increasing and ends strictly below where it starts.
    pub tail_decreasing: bool,
}

pub const MONOTONE_REL_TOL: f64 = 1e-10;
pub const MONOTONE_ABS_TOL: f64 = 1e-14;

/// Non-increasing test with the diagnostics tolerance.
#[inline]
pub fn non_increasing(prev: f64, next: f64) -> bool {
    next <= prev * (1.0 + MONOTONE_REL_TOL) + MONOTONE_ABS_TOL
}

/// `k·a_{2k}` for the series `a_1, a_2, …` stored at `series[0], series[1], …`.
pub fn k_times_a2k(series: &[f64], k: usize) -> Option<f64> {
    if k == 0 || 2 * k > series.len() {
        return None;
    }
    Some(k as f64 * series[2 * k - 1])
}

/// Empirical `o(1/k)` evidence for a nonnegative series.
pub fn rate_check(series: &[f64]) -> Result<RateReport, Error> {
    rate_check_bounded(series, None)
}

/// [`rate_check`] with an optional bound on the partial sums.
pub fn rate_check_bounded(series: &[f64], bound: Option<f64>) -> Result<RateReport, Error> {
    let n = series.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!("rate check needs at least 8 points, got {n}")));
    }
    let a: Vec<f64> = series.iter().map(|v| if *v < 0.0 && *v > -MONOTONE_ABS_TOL { 0.0 } else { *v }).collect();
    let first_violation = (0..n - 1).find(|&k| !non_increasing(a[k], a[k + 1])).map(|k| k + 1);
    let mut sum = crate::sum::ExactSum::new();
    a.iter().for_each(|v| sum.add(*v));
    let partial_sum = sum.value();
    let partial_sums_bounded = partial_sum.is_finite()
        && a.iter().all(|v| v.is_finite())
        && bound.is_none_or(|b| partial_sum <= b * (1.0 + MONOTONE_REL_TOL) + MONOTONE_ABS_TOL);
    let start = (3 * n).div_ceil(4);
    let k_lo = start.div_ceil(2).max(1);
    let k_times_a2k_tail: Vec<(usize, f64)> =
        (k_lo..=n / 2).filter_map(|k| k_times_a2k(&a, k).map(|v| (k, v))).collect();
    let tail_decreasing = k_times_a2k_tail.len() >= 2
        && k_times_a2k_tail.windows(2).all(|w| non_increasing(w[0].1, w[1].1))
        && k_times_a2k_tail.last().unwrap().1 < k_times_a2k_tail[0].1;
    Ok(RateReport {
        monotone: first_violation.is_none(),
        first_violation,
        partial_sums_bounded,
        partial_sum,
        k_times_a2k_tail,
        tail_decreasing,
    })
}
