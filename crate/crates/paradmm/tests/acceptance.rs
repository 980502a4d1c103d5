//! Acceptance criteria AC1 to AC10, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are run and reported like the
//! others but do not fail the process.

use std::process::ExitCode;
use std::time::Instant;

use paradmm::exec::RayonExecutor;
use paradmm::runtime::{comm_stats, run_distributed, HEADER_BYTES};
use paradmm_core::conditions::{
    check_near_orthogonal_proximal, check_near_orthogonality, check_proximal_contraction, suggest_tau, TauKind,
    STRICT_MARGIN,
};
use paradmm_core::diagnostics::{k_times_a2k, rate_check};
use paradmm_core::linalg::norm1;
use paradmm_core::problems::{gen_basis_pursuit, gen_exchange};
use paradmm_core::rng::Rng;
use paradmm_core::solvers::{record_bits_eq, solve, DualStep, Reference, SolveOptions};
use paradmm_core::tuning::TunerConfig;
use paradmm_core::{
    BlockFunction, BlockOperator, BlockVector, Iterate, Problem, ProxSpec, Scheme, SeparableObjective, SolverConfig,
    Termination,
};
use paradmm_testkit as tk;
use paradmm_testkit::nalgebra::DMatrix;

/// Dual decomposition is undefined on the specified exchange instances
/// (`p < n` makes every block subproblem unbounded), so the ordering
/// against it cannot be established.
const KNOWN_UNATTAINABLE: &[&str] = &["AC1"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn kkt_reference(p: &Problem) -> Reference {
    let k = tk::quadratic_kkt(p);
    Reference {
        x: k.x,
        lambda: Some(k.lambda),
    }
}

fn ac1() -> Outcome {
    let t0 = Instant::now();
    let (n, n_blocks, p) = (100, 100, 80);
    let mut wins_vs = 0;
    let mut dd_errors = Vec::new();
    let mut wins_dd = 0;
    let mut notes = Vec::new();
    for seed in 0..10 {
        let inst = gen_exchange(n, n_blocks, p, seed).unwrap();
        let prob = inst.problem();
        let rho = 0.01;
        let prox = SolverConfig::new(Scheme::ProxJacobi, rho, n_blocks)
            .with_prox(ProxSpec::uniform_standard(n_blocks, 0.1 * (n_blocks as f64 - 1.0) * rho))
            .with_tuner(TunerConfig::default())
            .with_max_iters(200)
            .with_stop_tol(0.0);
        let hp = solve(&prob, &prox, SolveOptions::default()).unwrap();
        let vs = SolverConfig::new(Scheme::Vsadmm, 1.0, n_blocks).with_max_iters(200).with_stop_tol(0.0);
        let hv = solve(&prob, &vs, SolveOptions::default()).unwrap();
        let rp = hp.last_record().unwrap();
        let rv = hv.last_record().unwrap();
        let beats_vs = rp.primal_residual < rv.primal_residual && rp.objective < rv.objective;
        wins_vs += beats_vs as usize;
        let dd = SolverConfig::new(Scheme::DualDecomp(DualStep::Default), 1.0, n_blocks)
            .with_max_iters(200)
            .with_stop_tol(0.0);
        match solve(&prob, &dd, SolveOptions::default()) {
            Ok(hd) => {
                let rd = hd.last_record().unwrap();
                wins_dd += (beats_vs && rp.primal_residual < rd.primal_residual && rp.objective < rd.objective) as usize;
            }
            Err(e) => dd_errors.push(e.to_string()),
        }
        if seed == 0 {
            notes.push(format!(
                "seed 0 at k=200: prox res {:.2e} obj {:.2e}; vsadmm res {:.2e} obj {:.2e}",
                rp.primal_residual, rp.objective, rv.primal_residual, rv.objective
            ));
        }
    }
    // supplementary: p > n, where dual decomposition is defined
    let mut supp = 0;
    for seed in 0..10 {
        let prob = gen_exchange(n, n_blocks, 120, seed).unwrap().problem();
        let rho = 0.01;
        let prox = SolverConfig::new(Scheme::ProxJacobi, rho, n_blocks)
            .with_prox(ProxSpec::uniform_standard(n_blocks, 0.1 * (n_blocks as f64 - 1.0) * rho))
            .with_tuner(TunerConfig::default())
            .with_max_iters(200)
            .with_stop_tol(0.0);
        let hp = solve(&prob, &prox, SolveOptions::default()).unwrap();
        let dd = SolverConfig::new(Scheme::DualDecomp(DualStep::Default), 1.0, n_blocks)
            .with_max_iters(200)
            .with_stop_tol(0.0);
        let hd = solve(&prob, &dd, SolveOptions::default()).unwrap();
        let (rp, rd) = (hp.last_record().unwrap(), hd.last_record().unwrap());
        supp += (rp.primal_residual < rd.primal_residual && rp.objective < rd.objective) as usize;
    }
    let secs = t0.elapsed().as_secs_f64();
    let dd_note = match dd_errors.first() {
        Some(e) => format!("dual decomposition failed on {}/10 seeds ({e})", dd_errors.len()),
        None => "dual decomposition ran on every seed".into(),
    };
    outcome(
        wins_vs >= 8 && wins_dd >= 8 && secs <= 60.0,
        format!(
            "prox beats vsadmm on {wins_vs}/10, beats both on {wins_dd}/10; {dd_note}; \
             p=120 variant: prox beats dual decomposition on {supp}/10; {}; {secs:.1}s",
            notes.join("; ")
        ),
    )
}

fn bp_config(prob: &Problem, iters: usize) -> SolverConfig {
    let n = prob.num_blocks();
    let rho = 10.0 / norm1(prob.operator.rhs());
    SolverConfig::new(Scheme::ProxJacobi, rho, n)
        .with_prox(ProxSpec::uniform_prox_linear(n, 0.1 * n as f64 * rho))
        .with_tuner(TunerConfig::default())
        .with_max_iters(iters)
        .with_stop_tol(0.0)
}

fn ac2() -> Outcome {
    let t0 = Instant::now();
    let exec = RayonExecutor::from_env();
    let mut clean = 0;
    let mut clean_detail = Vec::new();
    let mut noisy = 0;
    let mut noisy_detail = Vec::new();
    for seed in 0..10 {
        for sigma in [0.0, 1e-3] {
            let inst = gen_basis_pursuit(300, 1000, 100, 60, sigma, seed).unwrap();
            let prob = inst.problem();
            let r = Reference {
                x: inst.x_star_blocks(),
                lambda: None,
            };
            let h = solve(
                &prob,
                &bp_config(&prob, 2000),
                SolveOptions::default().with_reference(r).with_executor(&exec),
            )
            .unwrap();
            let errs = h.series(|r| r.rel_error);
            if sigma == 0.0 {
                let hit = errs.iter().position(|e| *e < 1e-4);
                clean += hit.is_some() as usize;
                clean_detail.push(hit.map_or("-".to_string(), |k| (k + 1).to_string()));
            } else {
                let tail = &errs[errs.len() - 200..];
                let ok = tail.iter().all(|e| (1e-4..=1e-1).contains(e));
                noisy += ok as usize;
                noisy_detail.push(format!("{:.1e}", errs.last().unwrap()));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        clean >= 8 && noisy >= 8 && secs <= 300.0,
        format!(
            "noise-free below 1e-4 on {clean}/10 (first k: {}); noisy plateau in band on {noisy}/10 (final: {}); {secs:.1}s",
            clean_detail.join(","),
            noisy_detail.join(",")
        ),
    )
}

struct SmallRun {
    err_g: Vec<f64>,
    h: Vec<f64>,
    du_gp: Vec<f64>,
}

fn small_runs() -> Vec<SmallRun> {
    (0..20)
        .map(|seed| {
            let prob = tk::random_quadratic_problem(3000 + seed, &[5, 5, 5], 8);
            let (rho, gamma) = (1.0, 1.0);
            let taus = suggest_tau(&prob.operator, rho, gamma, TauKind::Standard, 1.1).unwrap();
            let cfg = SolverConfig::new(Scheme::ProxJacobi, rho, 3)
                .with_prox(ProxSpec::standard(&taus))
                .with_max_iters(1000)
                .with_stop_tol(0.0);
            let h = solve(&prob, &cfg, SolveOptions::default().with_reference(kkt_reference(&prob))).unwrap();
            SmallRun {
                err_g: h.series(|r| r.err_g_sq),
                h: h.series(|r| r.h_value),
                du_gp: h.series(|r| r.du_gp_sq),
            }
        })
        .collect()
}

fn ac3(runs: &[SmallRun]) -> Outcome {
    let mut ok = 0;
    let mut worst_h = f64::INFINITY;
    for r in runs {
        let scale = r.err_g[0];
        let mono = r.err_g.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10) + 1e-14 * scale);
        let hmin = r.h.iter().copied().fold(f64::INFINITY, f64::min);
        worst_h = worst_h.min(hmin / scale);
        ok += (mono && hmin >= -1e-14 * scale) as usize;
    }
    outcome(
        ok == runs.len(),
        format!("{ok}/{} runs monotone with h ≥ 0 (min h/e₁ = {worst_h:.2e})", runs.len()),
    )
}

fn ac4(runs: &[SmallRun]) -> Outcome {
    let mut ok = 0;
    let mut ratios = Vec::new();
    for r in runs {
        let rep = rate_check(&r.du_gp).unwrap();
        let a = k_times_a2k(&r.du_gp, 50).unwrap();
        let b = k_times_a2k(&r.du_gp, 500).unwrap();
        ratios.push(if b > 0.0 { a / b } else { f64::INFINITY });
        ok += (rep.monotone && b * 10.0 <= a) as usize;
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        ok == runs.len(),
        format!("{ok}/{} monotone with ≥10× tail drop (smallest drop {min_ratio:.1e}×)", runs.len()),
    )
}

fn ac5() -> Outcome {
    let mut ok = 0;
    let mut slack = f64::INFINITY;
    for seed in 0..20 {
        let prob = tk::random_quadratic_problem(5000 + seed, &[3, 4], 5);
        let rho = 1.0;
        let kkt = tk::quadratic_kkt(&prob);
        let cfg = SolverConfig::new(Scheme::GaussSeidel, rho, 2).with_max_iters(300).with_stop_tol(0.0);
        let mut w1: Option<Iterate> = None;
        let h = solve(
            &prob,
            &cfg,
            SolveOptions::default().with_callback(|k, u, _| {
                if k == 1 {
                    w1 = Some(u.clone());
                }
            }),
        )
        .unwrap();
        let w1 = w1.unwrap();
        let a2 = prob.operator.block(1);
        let dx2: Vec<f64> = w1.x.block(1).iter().zip(kkt.x.block(1)).map(|(a, b)| a - b).collect();
        let ad = a2.mul_vec(&dx2);
        let dl: Vec<f64> = w1.lambda.iter().zip(&kkt.lambda).map(|(a, b)| a - b).collect();
        let bound = rho * paradmm_core::linalg::norm_sq(&ad) + paradmm_core::linalg::norm_sq(&dl) / rho;
        let dw = h.series(|r| r.dw_h_sq);
        let mono = dw.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10) + 1e-14 * dw[0]);
        let sum: f64 = dw[1..].iter().sum();
        slack = slack.min(bound + 1e-8 - sum);
        ok += (mono && sum <= bound + 1e-8) as usize;
    }
    outcome(ok == 20, format!("{ok}/20 monotone and summable (smallest slack {slack:.2e})"))
}

fn near_orthogonal_problem(seed: u64) -> Problem {
    let sizes = [3, 3, 2];
    let blocks = tk::near_orthogonal_blocks(seed, &sizes, 10, 1e-3);
    let mut rng = Rng::new(100 + seed);
    let terms = sizes
        .iter()
        .map(|&n| BlockFunction::quadratic(tk::gaussian_matrix(&mut rng, n + 1, n), tk::gaussian_vec(&mut rng, n + 1)).unwrap())
        .collect();
    let xh = BlockVector::split(&tk::gaussian_vec(&mut rng, 8), &sizes).unwrap();
    let c = BlockOperator::new(blocks.clone(), vec![0.0; 10]).unwrap().apply(&xh).unwrap();
    Problem::new(BlockOperator::new(blocks, c).unwrap(), SeparableObjective::new(terms)).unwrap()
}

fn ac6() -> Outcome {
    let mut ok = 0;
    let mut checked = 0;
    for seed in 0..10 {
        let prob = near_orthogonal_problem(seed);
        if !check_near_orthogonality(&prob.operator).unwrap().satisfied {
            continue;
        }
        checked += 1;
        let cfg = SolverConfig::new(Scheme::Jacobi, 1.0, 3).with_max_iters(2000).with_stop_tol(0.0);
        let h = solve(&prob, &cfg, SolveOptions::default()).unwrap();
        ok += h.records.iter().any(|r| r.primal_residual < 1e-6) as usize;
    }
    let prob = tk::gaussian_instance(0);
    let check = check_near_orthogonality(&prob.operator).unwrap();
    let jac = solve(
        &prob,
        &SolverConfig::new(Scheme::Jacobi, 1.0, 3).with_max_iters(5000),
        SolveOptions::default(),
    )
    .unwrap();
    let cfg = SolverConfig::new(Scheme::ProxJacobi, 1.0, 3)
        .with_prox(ProxSpec::uniform_standard(3, 0.01))
        .with_tuner(TunerConfig::default())
        .with_max_iters(20000)
        .with_stop_tol(0.0);
    let prox = solve(&prob, &cfg, SolveOptions::default()).unwrap();
    let hit = prox.records.iter().find(|r| r.primal_residual < 1e-6).map(|r| r.k);
    let pass = checked == 10
        && ok == 10
        && !check.satisfied
        && jac.termination == Termination::DivergenceGuard
        && hit.is_some();
    outcome(
        pass,
        format!(
            "near-orthogonal: check passed {checked}/10, jacobi converged {ok}/10; gaussian: check {}, jacobi {:?} at k={}, \
             prox+tuner residual < 1e-6 at k={} (final τ {:.3e})",
            if check.satisfied { "passes" } else { "fails" },
            jac.termination,
            jac.iterations,
            hit.map_or("-".into(), |k| k.to_string()),
            prox.final_prox.taus()[0],
        ),
    )
}

type Trace = (paradmm_core::History, Vec<Iterate>);

fn collect(prob: &Problem, cfg: &SolverConfig) -> Trace {
    let mut us = Vec::new();
    let h = solve(prob, cfg, SolveOptions::default().with_callback(|_, u, _| us.push(u.clone()))).unwrap();
    (h, us)
}

fn bits_eq(a: &Trace, b: &Trace) -> bool {
    a.0.records.len() == b.0.records.len()
        && a.0.records.iter().zip(&b.0.records).all(|(x, y)| record_bits_eq(x, y))
        && a.1.len() == b.1.len()
        && a.1.iter().zip(&b.1).all(|(x, y)| paradmm_core::solvers::iterate_bits_eq(x, y))
}

fn ac7() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let prob = tk::random_quadratic_problem(7000 + seed, &[3, 4], 5);
        let rho = 1.3;
        let cfg = SolverConfig::new(Scheme::GaussSeidel, rho, 2).with_max_iters(100).with_stop_tol(0.0);
        let (_, us) = collect(&prob, &cfg);
        let oracle = tk::classic_admm(&prob, rho, 100);
        for (u, (x1, x2, l)) in us.iter().zip(&oracle) {
            for (a, b) in [(u.x.block(0), x1), (u.x.block(1), x2), (&u.lambda[..], l)] {
                let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                worst = worst.max(tk::max_abs_diff(a, b) / scale);
            }
        }
    }
    let a_ok = worst <= 1e-12;
    let mut b_ok = true;
    let mut c_ok = true;
    for seed in 0..5 {
        let prob = tk::random_quadratic_problem(7100 + seed, &[3, 2, 4], 7);
        let base = SolverConfig::new(Scheme::Jacobi, 0.7, 3).with_max_iters(100).with_stop_tol(0.0);
        let jac = collect(&prob, &base);
        let mut px = base.clone();
        px.scheme = Scheme::ProxJacobi;
        b_ok &= bits_eq(&jac, &collect(&prob, &px));
        let mut cj = base.clone();
        cj.scheme = Scheme::CorrJacobi { alpha: 1.0 };
        c_ok &= bits_eq(&jac, &collect(&prob, &cj));
    }
    outcome(
        a_ok && b_ok && c_ok,
        format!("(a) max scaled deviation {worst:.1e}; (b) P=0 bitwise {b_ok}; (c) α=1 bitwise {c_ok}"),
    )
}

fn ac8() -> Outcome {
    let inst = gen_exchange(20, 8, 16, 0).unwrap();
    let prob = inst.problem();
    let rho = 0.01;
    let cfg = SolverConfig::new(Scheme::ProxJacobi, rho, 8)
        .with_prox(ProxSpec::uniform_standard(8, 0.1 * 7.0 * rho))
        .with_tuner(TunerConfig::default())
        .with_max_iters(500)
        .with_stop_tol(0.0);
    let serial = solve(&prob, &cfg, SolveOptions::default()).unwrap();
    let restarts = serial.records.iter().filter(|r| r.tuner_event.is_some()).count();
    let mut same = Vec::new();
    for w in [1, 2, 8] {
        let h = run_distributed(&prob, &cfg, w).unwrap();
        same.push((w, h.same_trajectory(&serial)));
    }
    outcome(
        same.iter().all(|(_, s)| *s),
        format!("bitwise equal for W = {same:?}; {restarts} tuner events in the run"),
    )
}

fn ac9() -> Outcome {
    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
    }
    let mut rng = Rng::new(9090);
    let mut agree = [0usize; 3];
    for _ in 0..50 {
        let op = tk::random_operator(&mut rng);
        let rho = 0.1 + 2.0 * rng.uniform();
        let gamma = 0.1 + 1.8 * rng.uniform();
        let prox = tk::random_prox(&mut rng, &op, rho);
        let n = op.num_blocks() as f64;
        let delta = tk::dense_delta(&op);

        let rep = check_proximal_contraction(&op, rho, gamma, &prox).unwrap();
        let kappa = rho * (n / (2.0 - gamma) - 1.0);
        let mut all = true;
        let mut margins = true;
        for (i, (p, a)) in prox.blocks.iter().zip(op.blocks()).enumerate() {
            let ev = tk::min_eig(&(tk::prox_matrix(p, a, rho) - tk::gram(a) * kappa));
            margins &= close(rep.margins[i].margin, ev);
            all &= ev > STRICT_MARGIN;
        }
        agree[0] += (margins && rep.satisfied == all) as usize;

        let rep = check_near_orthogonality(&op).unwrap();
        let mut all = true;
        let mut margins = close(rep.delta.unwrap(), delta);
        for (i, a) in op.blocks().iter().enumerate() {
            let lm = tk::min_eig(&tk::gram(a));
            let m = lm - 3.0 * (n - 1.0) * delta;
            margins &= close(rep.margins[i].margin, m);
            all &= m > STRICT_MARGIN;
        }
        agree[1] += (margins && rep.satisfied == all) as usize;

        let (alpha, beta) = ((2.0 - gamma) / 2.0, 1.0);
        let rep = check_near_orthogonal_proximal(&op, rho, gamma, &prox, alpha, beta).unwrap();
        let mut all = true;
        let mut margins = true;
        for (i, (p, a)) in prox.blocks.iter().zip(op.blocks()).enumerate() {
            let g = tk::gram(a);
            let k = g.nrows();
            let m1 = tk::prox_matrix(p, a, rho)
                - &g * (rho * (1.0 / alpha - 1.0))
                - DMatrix::identity(k, k) * (rho / beta * delta * (n - 1.0));
            let e1 = tk::min_eig(&m1);
            let e2 = tk::min_eig(&g) - (2.0 - gamma + beta) / (2.0 - gamma - alpha) * delta * (n - 1.0);
            margins &= close(rep.margins[2 * i].margin, e1) && close(rep.margins[2 * i + 1].margin, e2);
            all &= e1 > STRICT_MARGIN && e2 > STRICT_MARGIN;
        }
        agree[2] += (margins && rep.satisfied == all) as usize;
    }
    outcome(
        agree.iter().all(|a| *a == 50),
        format!(
            "agreement over 50 operators: contraction {}, near-orthogonality {}, near-orthogonal proximal {}",
            agree[0], agree[1], agree[2]
        ),
    )
}

fn ac10() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let bp = gen_basis_pursuit(300, 100, 10, 5, 0.0, 1).unwrap();
    let ex16 = gen_exchange(16, 8, 12, 1).unwrap();
    let ex40 = gen_exchange(40, 6, 30, 2).unwrap();
    let cases: [(Problem, usize); 3] = [(bp.problem(), 4), (ex40.problem(), 2), (ex16.problem(), 8)];
    for (prob, w) in cases {
        let m = prob.operator.rows() as u64;
        let n = prob.num_blocks();
        let cfg = SolverConfig::new(Scheme::ProxJacobi, 1.0, n)
            .with_prox(ProxSpec::uniform_prox_linear(n, 1e4))
            .with_max_iters(10)
            .with_stop_tol(0.0);
        let s = comm_stats(&run_distributed(&prob, &cfg, w).unwrap()).unwrap();
        let want = w as u64 * (HEADER_BYTES + 8 * (m + m));
        ok &= s.broadcast_bytes_per_iter == want && s.reduce_bytes_per_iter == want && s.iterations == 10;
        lines.push(format!(
            "m={m} W={w}: broadcast {} reduce {} (closed form {want})",
            s.broadcast_bytes_per_iter, s.reduce_bytes_per_iter
        ));
    }
    outcome(ok, format!("{}; wall-clock tables are not reproduced", lines.join("; ")))
}

fn main() -> ExitCode {
    let runs = small_runs();
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("AC1", Box::new(ac1)),
        ("AC2", Box::new(ac2)),
        ("AC3", Box::new(|| ac3(&runs))),
        ("AC4", Box::new(|| ac4(&runs))),
        ("AC5", Box::new(ac5)),
        ("AC6", Box::new(ac6)),
        ("AC7", Box::new(ac7)),
        ("AC8", Box::new(ac8)),
        ("AC9", Box::new(ac9)),
        ("AC10", Box::new(ac10)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC")).collect();
    let mut unexpected = 0;
    for (name, run) in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == name) {
            continue;
        }
        let o = run();
        let known = KNOWN_UNATTAINABLE.contains(name);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && known { " (known unattainable as specified)" } else { "" };
        println!("{name} {tag}{note}: {}", o.detail);
        if !o.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
