//! TOML run configuration shared by `solve` and `bench`.

use std::fs;
use std::path::{Path, PathBuf};

use paradmm_core::conditions::{suggest_tau, TauKind};
use paradmm_core::linalg::norm1;
use paradmm_core::problems::{gen_basis_pursuit, gen_exchange};
use paradmm_core::solvers::DualStep;
use paradmm_core::tuning::TunerConfig;
use paradmm_core::{Problem, ProxSpec, Scheme, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Defaults of every optional key, shown by `--help`.
pub const DEFAULTS_HELP: &str = "\
Run configuration (TOML; unknown keys are rejected):
  [problem]  kind = exchange | bp | file
             n, N, p (exchange); n, m, k, N, sigma = 0 (bp); path (file)
             seed = 0
  [solver]   scheme = prox_jacobi | jacobi | gauss_seidel | vsadmm | corr_jacobi | dual_decomp
             rho = <float>  or  rho_over_c_l1 = <float> (rho = value / ||c||_1)
             gamma = 1.0, alpha = 0.5 (corr_jacobi)
             prox = standard | prox_linear | none          (default standard)
             tau_policy = none | explicit | exchange | l1 | suggest (default none)
               exchange: tau_i = 0.1 (N-1) rho; l1: tau_i = 0.1 N rho
               explicit: tau = <float> or [<float>, ...]; suggest: slack = 1.1
             max_iters = 1000, stop_tol = 1e-8
             tuner = true for tau_policy exchange | l1, false otherwise
             [solver.tuner_params] eta = 1e-3, alpha = 2.0, beta = 0.0, max_adjustments = 60
             dual_step = default | constant | diminishing, dual_step_size = <float>
  [runtime]  workers = 0 (serial), threads = PARADMM_THREADS or all cores
  [output]   csv, jsonl = <path>, record_every = 1
  [bench]    trials = 1, [[bench.schemes]] scheme = ..., plus any of
             rho, rho_over_c_l1, alpha, prox, tau_policy, tau, tuner";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub runtime: RuntimeSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub bench: Option<BenchSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Exchange,
    Bp,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    pub n: Option<usize>,
    #[serde(rename = "N")]
    pub n_blocks: Option<usize>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    ProxJacobi,
    Jacobi,
    GaussSeidel,
    Vsadmm,
    CorrJacobi,
    DualDecomp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxKindName {
    #[default]
    Standard,
    ProxLinear,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauPolicy {
    #[default]
    None,
    Explicit,
    Exchange,
    L1,
    Suggest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauValues {
    One(f64),
    PerBlock(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualStepName {
    #[default]
    Default,
    Constant,
    Diminishing,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunerParams {
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub max_adjustments: Option<usize>,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn slack() -> f64 {
    1.1
}
fn iters() -> usize {
    1000
}
fn tol() -> f64 {
    1e-8
}
fn every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub scheme: SchemeName,
    pub rho: Option<f64>,
    pub rho_over_c_l1: Option<f64>,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "half")]
    pub alpha: f64,
    #[serde(default)]
    pub prox: ProxKindName,
    #[serde(default)]
    pub tau_policy: TauPolicy,
    pub tau: Option<TauValues>,
    #[serde(default = "slack")]
    pub slack: f64,
    #[serde(default = "iters")]
    pub max_iters: usize,
    #[serde(default = "tol")]
    pub stop_tol: f64,
    pub tuner: Option<bool>,
    #[serde(default)]
    pub tuner_params: TunerParams,
    #[serde(default)]
    pub dual_step: DualStepName,
    pub dual_step_size: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimeSection {
    /// `0` runs serially.
    #[serde(default)]
    pub workers: usize,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub jsonl: Option<PathBuf>,
    #[serde(default = "every")]
    pub record_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            csv: None,
            jsonl: None,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "trials")]
    pub trials: usize,
    pub schemes: Vec<BenchEntry>,
}

fn trials() -> usize {
    1
}

/// One scheme of a comparison; unset keys fall back to `[solver]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchEntry {
    pub scheme: SchemeName,
    pub rho: Option<f64>,
    pub rho_over_c_l1: Option<f64>,
    pub alpha: Option<f64>,
    pub prox: Option<ProxKindName>,
    pub tau_policy: Option<TauPolicy>,
    pub tau: Option<TauValues>,
    pub tuner: Option<bool>,
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a file; relative paths inside it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut cfg.problem.path);
        fix(&mut cfg.output.csv);
        fix(&mut cfg.output.jsonl);
        Ok(cfg)
    }
}

fn need(v: Option<usize>, key: &str) -> Result<usize> {
    v.ok_or_else(|| Error::Config(format!("problem.{key} is required")))
}

impl ProblemSection {
    /// Generates or loads the instance, with `seed` replacing the
    /// configured one for generated kinds.
    pub fn instance(&self, seed: u64) -> Result<Instance> {
        Ok(match self.kind {
            ProblemKind::Exchange => Instance::Exchange(gen_exchange(
                need(self.n, "n")?,
                need(self.n_blocks, "N")?,
                need(self.p, "p")?,
                seed,
            )?),
            ProblemKind::Bp => Instance::BasisPursuit(gen_basis_pursuit(
                need(self.m, "m")?,
                need(self.n, "n")?,
                need(self.n_blocks, "N")?,
                need(self.k, "k")?,
                self.sigma,
                seed,
            )?),
            ProblemKind::File => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("problem.path is required for kind = file".into()))?;
                Instance::load(path)?.0
            }
        })
    }
}

impl SolverSection {
    pub fn apply(&self, e: &BenchEntry) -> SolverSection {
        let mut s = self.clone();
        s.scheme = e.scheme;
        if e.rho.is_some() || e.rho_over_c_l1.is_some() {
            s.rho = e.rho;
            s.rho_over_c_l1 = e.rho_over_c_l1;
        }
        if let Some(a) = e.alpha {
            s.alpha = a;
        }
        if let Some(p) = e.prox {
            s.prox = p;
        }
        if let Some(t) = e.tau_policy {
            s.tau_policy = t;
        }
        if e.tau.is_some() {
            s.tau = e.tau.clone();
        }
        if e.tuner.is_some() {
            s.tuner = e.tuner;
        }
        s
    }

    pub fn rho_for(&self, problem: &Problem) -> Result<f64> {
        match (self.rho, self.rho_over_c_l1) {
            (Some(r), None) => Ok(r),
            (None, Some(s)) => {
                let c1 = norm1(problem.operator.rhs());
                if c1 > 0.0 {
                    Ok(s / c1)
                } else {
                    Err(Error::Config("rho_over_c_l1 needs a nonzero c".into()))
                }
            }
            (Some(_), Some(_)) => Err(Error::Config("set only one of solver.rho and solver.rho_over_c_l1".into())),
            (None, None) => Err(Error::Config("solver.rho or solver.rho_over_c_l1 is required".into())),
        }
    }

    pub fn scheme(&self) -> Result<Scheme> {
        Ok(match self.scheme {
            SchemeName::ProxJacobi => Scheme::ProxJacobi,
            SchemeName::Jacobi => Scheme::Jacobi,
            SchemeName::GaussSeidel => Scheme::GaussSeidel,
            SchemeName::Vsadmm => Scheme::Vsadmm,
            SchemeName::CorrJacobi => Scheme::CorrJacobi { alpha: self.alpha },
            SchemeName::DualDecomp => Scheme::DualDecomp(match (self.dual_step, self.dual_step_size) {
                (DualStepName::Default, None) => DualStep::Default,
                (DualStepName::Constant, Some(a)) => DualStep::Constant(a),
                (DualStepName::Diminishing, Some(c)) => DualStep::Diminishing(c),
                (DualStepName::Default, Some(_)) => {
                    return Err(Error::Config("dual_step_size needs dual_step = constant | diminishing".into()))
                }
                (_, None) => return Err(Error::Config("dual_step constant | diminishing needs dual_step_size".into())),
            }),
        })
    }

    /// Resolves the section against a problem.
    pub fn build(&self, problem: &Problem, record_every: usize) -> Result<SolverConfig> {
        let n = problem.num_blocks();
        let rho = self.rho_for(problem)?;
        let scheme = self.scheme()?;
        let taus: Option<Vec<f64>> = match self.tau_policy {
            TauPolicy::None => None,
            TauPolicy::Explicit => Some(match &self.tau {
                Some(TauValues::One(t)) => vec![*t; n],
                Some(TauValues::PerBlock(v)) if v.len() == n => v.clone(),
                Some(TauValues::PerBlock(v)) => {
                    return Err(Error::Config(format!("solver.tau has {} entries for {n} blocks", v.len())))
                }
                None => return Err(Error::Config("tau_policy = explicit needs solver.tau".into())),
            }),
            TauPolicy::Exchange => Some(vec![0.1 * (n as f64 - 1.0) * rho; n]),
            TauPolicy::L1 => Some(vec![0.1 * n as f64 * rho; n]),
            TauPolicy::Suggest => {
                let kind = match self.prox {
                    ProxKindName::ProxLinear => TauKind::ProxLinear,
                    _ => TauKind::Standard,
                };
                Some(suggest_tau(&problem.operator, rho, self.gamma, kind, self.slack)?)
            }
        };
        if taus.is_some() && self.tau_policy != TauPolicy::Explicit && self.tau.is_some() {
            return Err(Error::Config("solver.tau is only read with tau_policy = explicit".into()));
        }
        let prox = match (taus, self.prox) {
            (None, _) | (_, ProxKindName::None) => ProxSpec::none(n),
            (Some(t), ProxKindName::Standard) => ProxSpec::standard(&t),
            (Some(t), ProxKindName::ProxLinear) => ProxSpec::prox_linear(&t),
        };
        let tuner_on = self
            .tuner
            .unwrap_or(matches!(self.tau_policy, TauPolicy::Exchange | TauPolicy::L1));
        let tuner = tuner_on.then(|| {
            let d = TunerConfig::default();
            let p = &self.tuner_params;
            TunerConfig {
                eta: p.eta.unwrap_or(d.eta),
                alpha: p.alpha.map_or(d.alpha, |a| vec![a]),
                beta: p.beta.map_or(d.beta, |b| vec![b]),
                max_adjustments: p.max_adjustments.unwrap_or(d.max_adjustments),
                ..d
            }
        });
        let mut cfg = SolverConfig::new(scheme, rho, n)
            .with_prox(prox)
            .with_gamma(self.gamma)
            .with_max_iters(self.max_iters)
            .with_stop_tol(self.stop_tol)
            .with_record_every(record_every);
        if let Some(t) = tuner {
            if scheme == Scheme::ProxJacobi {
                cfg = cfg.with_tuner(t);
            } else if self.tuner == Some(true) {
                return Err(Error::Config(format!("the tuner applies to prox_jacobi only, not {}", scheme.name())));
            }
        }
        cfg.validate(problem)?;
        Ok(cfg)
    }
}
