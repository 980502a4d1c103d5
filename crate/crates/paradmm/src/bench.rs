//! Running configured solves and averaging several of them.

use std::collections::BTreeMap;
use std::io::Write;

use paradmm_core::diagnostics::{IterationRecord, TunerEvent};
use paradmm_core::solvers::{solve, SolveOptions};
use paradmm_core::History;

use crate::config::{RunConfigFile, SolverSection};
use crate::error::{Error, Result};
use crate::exec::{RayonExecutor, StdClock};
use crate::instance::Instance;
use crate::output::{event_name, fmt_f64, COLUMNS};
use crate::runtime::{run_distributed_with, RunOptions};

/// Solves the configured problem for one seed. `workers = 0` runs serially
/// on `executor`.
pub fn run_once(
    cfg: &RunConfigFile,
    solver: &SolverSection,
    seed: u64,
    workers: usize,
    executor: &RayonExecutor,
) -> Result<(Instance, History)> {
    let inst = cfg.problem.instance(seed)?;
    let problem = inst.problem()?;
    let sc = solver.build(&problem, cfg.output.record_every)?;
    let history = if workers == 0 {
        let mut opts = SolveOptions::default().with_executor(executor).with_clock(&StdClock);
        if let Some(r) = inst.reference() {
            opts = opts.with_reference(r);
        }
        solve(&problem, &sc, opts)?
    } else {
        let opts = RunOptions {
            reference: inst.reference(),
            clock: Some(&StdClock),
            ..RunOptions::default()
        };
        run_distributed_with(&problem, &sc, workers, opts)?
    };
    Ok((inst, history))
}

/// Mean curve of one scheme (and penalty) over the trials.
#[derive(Debug, Clone)]
pub struct Curve {
    pub scheme: String,
    pub rho: f64,
    pub rows: Vec<MeanRow>,
}

#[derive(Debug, Clone)]
pub struct MeanRow {
    pub k: usize,
    /// Trials with a record at `k`.
    pub samples: usize,
    /// Per column of [`COLUMNS`] after `k`: the mean, or the common tuner
    /// event, as text.
    pub cells: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub seeds: Vec<u64>,
    pub curves: Vec<Curve>,
}

fn mean_opt(rs: &[&IterationRecord], f: impl Fn(&IterationRecord) -> Option<f64>) -> String {
    let vals: Option<Vec<f64>> = rs.iter().map(|r| f(r)).collect();
    match vals {
        Some(v) if !v.is_empty() => fmt_f64(v.iter().sum::<f64>() / v.len() as f64),
        _ => String::new(),
    }
}

/// The common count when every trial agrees, else the mean.
fn adjustments(rs: &[&IterationRecord]) -> String {
    let counts: Option<Vec<usize>> = rs.iter().map(|r| r.tuner_event.as_ref().map(|e| e.adjustments)).collect();
    match counts {
        Some(c) if c.iter().all(|v| *v == c[0]) => c[0].to_string(),
        Some(c) => fmt_f64(c.iter().sum::<usize>() as f64 / c.len() as f64),
        None => String::new(),
    }
}

fn aggregate(histories: &[History]) -> Vec<MeanRow> {
    let mut by_k: BTreeMap<usize, Vec<&IterationRecord>> = BTreeMap::new();
    for h in histories {
        for r in &h.records {
            by_k.entry(r.k).or_default().push(r);
        }
    }
    by_k.into_iter()
        .map(|(k, rs)| {
            let ev = |r: &IterationRecord| r.tuner_event.as_ref().map(|e| e.kind);
            let first = ev(rs[0]);
            let event = if rs.iter().all(|r| ev(r) == first) {
                first.map(|k| event_name(k).to_string()).unwrap_or_default()
            } else {
                "mixed".to_string()
            };
            let te = |f: fn(&TunerEvent) -> f64| {
                move |r: &IterationRecord| r.tuner_event.as_ref().map(f)
            };
            let cells = vec![
                mean_opt(&rs, |r| Some(r.objective)),
                mean_opt(&rs, |r| Some(r.primal_residual)),
                mean_opt(&rs, |r| r.h_value),
                mean_opt(&rs, |r| r.du_g_sq),
                mean_opt(&rs, |r| r.du_gp_sq),
                mean_opt(&rs, |r| r.err_g_sq),
                mean_opt(&rs, |r| r.rel_error),
                mean_opt(&rs, |r| r.dw_h_sq),
                mean_opt(&rs, |r| r.r_p),
                mean_opt(&rs, |r| r.r_d),
                event,
                adjustments(&rs),
                mean_opt(&rs, te(|e| e.tau_min)),
                mean_opt(&rs, te(|e| e.tau_max)),
                (rs.iter().map(|r| r.duration_ns as u128).sum::<u128>() / rs.len() as u128).to_string(),
            ];
            MeanRow {
                k,
                samples: rs.len(),
                cells,
            }
        })
        .collect()
}

/// Runs every `[[bench.schemes]]` entry on seeds `s, s+1, …` and, when
/// `rho_grid` is given, once per penalty value.
pub fn bench(cfg: &RunConfigFile, rho_grid: Option<&[f64]>, workers: usize) -> Result<BenchOutput> {
    let b = cfg
        .bench
        .as_ref()
        .ok_or_else(|| Error::Config("bench needs a [bench] section".into()))?;
    if b.schemes.is_empty() || b.trials == 0 {
        return Err(Error::Config("[bench] needs at least one scheme and one trial".into()));
    }
    let seeds: Vec<u64> = (0..b.trials as u64).map(|t| cfg.problem.seed + t).collect();
    let executor = RayonExecutor::from_env();
    let mut curves = Vec::new();
    for entry in &b.schemes {
        let base = cfg.solver.apply(entry);
        let variants: Vec<SolverSection> = match rho_grid {
            None => vec![base],
            Some(g) => g
                .iter()
                .map(|r| SolverSection {
                    rho: Some(*r),
                    rho_over_c_l1: None,
                    ..base.clone()
                })
                .collect(),
        };
        for s in variants {
            let mut histories = Vec::with_capacity(seeds.len());
            let mut rho = f64::NAN;
            for &seed in &seeds {
                let (inst, h) = run_once(cfg, &s, seed, workers, &executor)?;
                rho = s.rho_for(&inst.problem()?)?;
                log::info!("{} seed {seed}: {} iterations, {:?}", h.scheme.name(), h.iterations, h.termination);
                histories.push(h);
            }
            curves.push(Curve {
                scheme: histories[0].scheme.name().to_string(),
                rho,
                rows: aggregate(&histories),
            });
        }
    }
    Ok(BenchOutput { seeds, curves })
}

/// Comparison CSV: a `# seeds:` comment line, then `scheme, rho, samples`
/// followed by the history columns.
pub fn write_bench_csv<W: Write>(out: W, b: &BenchOutput) -> Result<()> {
    let mut out = out;
    let seeds: Vec<String> = b.seeds.iter().map(|s| s.to_string()).collect();
    writeln!(out, "# seeds: {}", seeds.join(",")).map_err(|e| Error::io("bench output", e))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["scheme", "rho", "samples"];
    header.extend_from_slice(&COLUMNS);
    let err = |e: csv::Error| Error::format("bench output", e.to_string());
    w.write_record(&header).map_err(err)?;
    for c in &b.curves {
        for r in &c.rows {
            let mut row = vec![c.scheme.clone(), fmt_f64(c.rho), r.samples.to_string(), r.k.to_string()];
            row.extend(r.cells.iter().cloned());
            w.write_record(&row).map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io("bench output", e))
}
