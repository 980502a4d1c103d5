//! Adaptive proximal-parameter tuning.
//!
//! After each transition `u^{k−1} → u^k` the tuner tests
//! `h(u^{k−1}, u^k) > η‖u^{k−1} − u^k‖²_G`. If the test fails every `P_i`
//! becomes `α_i P_i + β_i Q_i` and the solver restarts from `u^{k−1}`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::Error;
use crate::prox::ProxSpec;

/// Optional scheduled decrease of `P`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum DecreasePolicy {
    Off,
    /// Multiply every τ by `factor` (in (0, 1)) every `every` iterations,
    /// at most `max_decreases` times in total.
    Every {
        every: usize,
        factor: f64,
        max_decreases: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TunerConfig {
    /// Contraction threshold `η`.
    pub eta: f64,
    /// Growth factors `α_i > 1`; a single entry applies to every block.
    pub alpha: Vec<f64>,
    /// Additive coefficients `β_i ≥ 0`; a single entry applies to every block.
    pub beta: Vec<f64>,
    /// `Q_i = q_scale · I`; `None` means `ρ I`.
    pub q_scale: Option<f64>,
    pub max_adjustments: usize,
    pub decrease: DecreasePolicy,
}

impl Default for TunerConfig {
    fn default() -> Self {
        TunerConfig {
            eta: 1e-3,
            alpha: alloc::vec![2.0],
            beta: alloc::vec![0.0],
            q_scale: None,
            max_adjustments: 60,
            decrease: DecreasePolicy::Off,
        }
    }
}

impl TunerConfig {
    pub fn validate(&self, n_blocks: usize) -> Result<(), Error> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::config(format!("tuner η must be positive, got {}", self.eta)));
        }
        for (name, v, n) in [("α", &self.alpha, n_blocks), ("β", &self.beta, n_blocks)] {
            if v.len() != 1 && v.len() != n {
                return Err(Error::config(format!(
                    "tuner {name} needs 1 or {n} entries, got {}",
                    v.len()
                )));
            }
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 1.0)) {
            return Err(Error::config(format!("tuner α must exceed 1, got {a}")));
        }
        if let Some(b) = self.beta.iter().find(|b| !(**b >= 0.0)) {
            return Err(Error::config(format!("tuner β must be nonnegative, got {b}")));
        }
        if let Some(q) = self.q_scale {
            if !(q > 0.0) {
                return Err(Error::config(format!("tuner Q scale must be positive, got {q}")));
            }
        }
        if self.max_adjustments == 0 {
            return Err(Error::config("tuner max_adjustments must be positive"));
        }
        if let DecreasePolicy::Every { every, factor, .. } = self.decrease {
            if every == 0 || !(factor > 0.0 && factor < 1.0) {
                return Err(Error::config("decrease policy needs every ≥ 1 and factor in (0, 1)"));
            }
        }
        Ok(())
    }

    fn per_block(v: &[f64], n: usize) -> Vec<f64> {
        if v.len() == 1 {
            alloc::vec![v[0]; n]
        } else {
            v.to_vec()
        }
    }

    /// The grown spec `α_i P_i + β_i Q_i`.
    pub fn grow(&self, prox: &ProxSpec, rho: f64) -> ProxSpec {
        let n = prox.num_blocks();
        let q = self.q_scale.unwrap_or(rho);
        let alpha = Self::per_block(&self.alpha, n);
        let beta_q: Vec<f64> = Self::per_block(&self.beta, n).iter().map(|b| b * q).collect();
        prox.grown(&alpha, &beta_q)
    }
}

/// Outcome of one tuner test.
#[derive(Debug, Clone, PartialEq)]
pub enum TuneDecision {
    Keep,
    /// Use the new spec and roll the iterate back to `u^{k−1}`.
    IncreaseAndRestart(ProxSpec),
}

/// Stateless contraction test.
///
/// A zero step (`‖Δu‖²_G = 0`) is kept: the iterate is a fixed point.
pub fn tune_step(h_value: f64, delta_u_g_sq: f64, prox: &ProxSpec, rho: f64, cfg: &TunerConfig) -> TuneDecision {
    if delta_u_g_sq == 0.0 || h_value > cfg.eta * delta_u_g_sq {
        TuneDecision::Keep
    } else {
        TuneDecision::IncreaseAndRestart(cfg.grow(prox, rho))
    }
}

/// Stateful tuner: counts adjustments and drives the decrease schedule.
#[derive(Debug, Clone)]
pub struct Tuner {
    cfg: TunerConfig,
    adjustments: usize,
    decreases: usize,
}

impl Tuner {
    pub fn new(cfg: TunerConfig) -> Self {
        Tuner {
            cfg,
            adjustments: 0,
            decreases: 0,
        }
    }

    pub fn config(&self) -> &TunerConfig {
        &self.cfg
    }

    pub fn adjustments(&self) -> usize {
        self.adjustments
    }

    pub fn decreases(&self) -> usize {
        self.decreases
    }

    /// Tests the transition that produced iteration `k`.
    pub fn step(
        &mut self,
        k: usize,
        h_value: f64,
        delta_u_g_sq: f64,
        prox: &ProxSpec,
        rho: f64,
    ) -> Result<TuneDecision, Error> {
        let d = tune_step(h_value, delta_u_g_sq, prox, rho, &self.cfg);
        if let TuneDecision::IncreaseAndRestart(_) = d {
            if self.adjustments >= self.cfg.max_adjustments {
                return Err(Error::TunerExhausted {
                    iteration: k,
                    adjustments: self.adjustments,
                });
            }
            self.adjustments += 1;
        }
        Ok(d)
    }

    /// Scheduled decrease after a kept iteration `k`, if one is due.
    pub fn scheduled_decrease(&mut self, k: usize, prox: &ProxSpec) -> Option<ProxSpec> {
        match self.cfg.decrease {
            DecreasePolicy::Every {
                every,
                factor,
                max_decreases,
            } if k > 0 && k % every == 0 && self.decreases < max_decreases => {
                self.decreases += 1;
                let n = prox.num_blocks();
                Some(prox.grown(&alloc::vec![factor; n], &alloc::vec![0.0; n]))
            }
            _ => None,
        }
    }
}
