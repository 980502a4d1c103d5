use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paradmm::config::{RunConfigFile, DEFAULTS_HELP};
use paradmm::core::conditions::{
    check_near_orthogonal_proximal, check_near_orthogonality, check_proximal_contraction, suggest_tau, TauKind,
};
use paradmm::core::linalg;
use paradmm::core::problems::{gen_basis_pursuit, gen_exchange};
use paradmm::core::{ProxSpec, Termination};
use paradmm::exec::{RayonExecutor, THREADS_ENV};
use paradmm::instance::Instance;
use paradmm::{bench, output, Error};

#[derive(Parser)]
#[command(name = "paradmm", version, about = "Parallel multi-block ADMM experiments", after_long_help = DEFAULTS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance directory.
    Generate {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Solve from a run configuration. Exit 0: tolerance met, 2: iteration
    /// cap, 3: divergence guard, 1: error.
    #[command(after_long_help = output_help())]
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Worker count for the message-passing runtime; 0 runs serially
        /// with PARADMM_THREADS threads for block updates.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print convergence-condition reports as JSON. Exit 0 iff the
    /// requested condition holds.
    Check(CheckArgs),
    /// Average several schemes over consecutive seeds into one CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated penalties run for every scheme instead of the
        /// configured ones.
        #[arg(long, value_delimiter = ',')]
        rho_grid: Option<Vec<f64>>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Exchange problem with identity coupling and quadratic blocks.
    Exchange {
        #[arg(long)]
        n: usize,
        #[arg(long = "N")]
        n_blocks: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Basis pursuit with a sparse planted solution.
    Bp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long = "N", default_value_t = 100)]
        n_blocks: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Condition {
    Proximal,
    NearOrthogonality,
    NearOrthogonalProximal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Standard,
    ProxLinear,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Condition::NearOrthogonality)]
    condition: Condition,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Uniform τ for every block.
    #[arg(long, conflicts_with = "suggest_tau")]
    tau: Option<f64>,
    /// Use suggested τ_i = slack × threshold_i and echo them.
    #[arg(long)]
    suggest_tau: Option<f64>,
    #[arg(long, value_enum, default_value_t = Kind::Standard)]
    kind: Kind,
    /// α of the near-orthogonal proximal condition; (2−γ)/2 when absent.
    #[arg(long)]
    alpha: Option<f64>,
    /// β of the near-orthogonal proximal condition; 1 when absent.
    #[arg(long)]
    beta: Option<f64>,
}

fn output_help() -> String {
    format!(
        "History CSV columns: {}\nThe block-update thread count is read from {THREADS_ENV}.",
        output::COLUMNS.join(", ")
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Generate { kind } => generate(kind),
        Command::Solve { config, workers } => solve(config, workers),
        Command::Check(a) => check(a),
        Command::Bench {
            config,
            rho_grid,
            out,
            workers,
        } => {
            let cfg = RunConfigFile::load(&config)?;
            let b = bench::bench(&cfg, rho_grid.as_deref(), workers)?;
            match out {
                Some(p) => {
                    let f = File::create(&p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
                    bench::write_bench_csv(BufWriter::new(f), &b)?;
                }
                None => bench::write_bench_csv(io::stdout().lock(), &b)?,
            }
            Ok(0)
        }
    }
}

fn generate(kind: GenKind) -> Result<u8, Error> {
    let (inst, out, seed) = match kind {
        GenKind::Exchange {
            n,
            n_blocks,
            p,
            seed,
            out,
        } => (Instance::Exchange(gen_exchange(n, n_blocks, p, seed)?), out, seed),
        GenKind::Bp {
            n,
            m,
            k,
            n_blocks,
            sigma,
            seed,
            out,
        } => (
            Instance::BasisPursuit(gen_basis_pursuit(m, n, n_blocks, k, sigma, seed)?),
            out,
            seed,
        ),
    };
    let meta = inst.save(&out)?;
    emit(&format!("seed {seed}\nsha256 {}", meta.sha256));
    Ok(0)
}

fn solve(config: PathBuf, workers: Option<usize>) -> Result<u8, Error> {
    let cfg = RunConfigFile::load(&config)?;
    let workers = workers.unwrap_or(cfg.runtime.workers);
    let executor = match cfg.runtime.threads {
        Some(t) => RayonExecutor::new(t),
        None => RayonExecutor::from_env(),
    };
    let (inst, h) = bench::run_once(&cfg, &cfg.solver, cfg.problem.seed, workers, &executor)?;
    if let Some(p) = &cfg.output.csv {
        output::write_history_csv(p, &h)?;
    }
    if let Some(p) = &cfg.output.jsonl {
        output::write_history_jsonl(p, &h)?;
    }
    let problem = inst.problem()?;
    let residual = linalg::norm(&problem.operator.residual(&h.final_iterate.x)?);
    let objective = problem.objective.value(&h.final_iterate.x);
    let mut line = format!(
        "scheme {} iterations {} termination {:?} residual {} objective {}",
        h.scheme.name(),
        h.iterations,
        h.termination,
        output::fmt_f64(residual),
        output::fmt_f64(objective)
    );
    if let Some(r) = inst.reference() {
        let err = h.final_iterate.x.sub(&r.x)?.norm();
        let scale = r.x.norm();
        let rel = if scale > 0.0 { err / scale } else { err };
        line += &format!(" rel_error {}", output::fmt_f64(rel));
    }
    emit(&line);
    Ok(match h.termination {
        Termination::Tolerance => 0,
        Termination::MaxIters => 2,
        Termination::DivergenceGuard => 3,
    })
}

fn check(a: CheckArgs) -> Result<u8, Error> {
    let (inst, _) = Instance::load(&a.instance)?;
    let problem = inst.problem()?;
    let op = &problem.operator;
    let n = op.num_blocks();
    let kind = match a.kind {
        Kind::Standard => TauKind::Standard,
        Kind::ProxLinear => TauKind::ProxLinear,
    };
    let taus = match (a.tau, a.suggest_tau) {
        (Some(t), _) => Some(vec![t; n]),
        (None, Some(slack)) => Some(suggest_tau(op, a.rho, a.gamma, kind, slack)?),
        (None, None) => None,
    };
    let prox = match (&taus, a.kind) {
        (None, _) => ProxSpec::none(n),
        (Some(t), Kind::Standard) => ProxSpec::standard(t),
        (Some(t), Kind::ProxLinear) => ProxSpec::prox_linear(t),
    };
    let alpha = a.alpha.unwrap_or((2.0 - a.gamma) / 2.0);
    let beta = a.beta.unwrap_or(1.0);
    let proximal = check_proximal_contraction(op, a.rho, a.gamma, &prox)?;
    let near = check_near_orthogonality(op)?;
    let near_prox = check_near_orthogonal_proximal(op, a.rho, a.gamma, &prox, alpha, beta)?;
    let satisfied = match a.condition {
        Condition::Proximal => proximal.satisfied,
        Condition::NearOrthogonality => near.satisfied,
        Condition::NearOrthogonalProximal => near_prox.satisfied,
    };
    let report = serde_json::json!({
        "instance": a.instance,
        "tau": taus,
        "reports": [proximal, near, near_prox],
    });
    emit(&serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(if satisfied { 0 } else { 4 })
}

/// Prints to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = writeln!(io::stdout().lock(), "{text}");
}
