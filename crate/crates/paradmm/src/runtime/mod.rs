//! Coordinator/worker execution of the Jacobi family over message channels.
//!
//! Each worker owns a contiguous range of blocks. Per iteration the
//! coordinator broadcasts `(λ^k, Ax^k − c)`, every worker updates its blocks
//! from that snapshot and returns one partial product, and the coordinator
//! merges the partial products in ascending worker order before updating
//! `λ`. Reductions are exact sums, so the run reproduces the serial
//! [`History`] bit for bit for any worker count.

mod message;
mod transport;

use std::thread;
use std::time::Duration;

use paradmm_core::problems::partition_sizes;
use paradmm_core::solvers::engine::{BlockTask, Control, Coordinator, Reduction};
use paradmm_core::solvers::jacobi::build_tasks;
use paradmm_core::solvers::{Clock, CommLog, History, Reference, SolverConfig};
use paradmm_core::{BlockVector, Iterate, Problem};
use serde::Serialize;

pub use message::{Message, FLOAT_BYTES, HEADER_BYTES};
pub use transport::{channel_pair, ChannelEndpoint, Endpoint};

use crate::error::{Error, Result};

/// Blocks owned by one worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerAssignment {
    pub worker: usize,
    /// Ascending block indices.
    pub blocks: Vec<usize>,
}

/// Splits `n_blocks` into `workers` contiguous ranges whose sizes differ by
/// at most one.
pub fn assign_blocks(n_blocks: usize, workers: usize) -> Result<Vec<WorkerAssignment>> {
    if workers == 0 || workers > n_blocks {
        return Err(Error::Config(format!("workers must be in 1..={n_blocks}, got {workers}")));
    }
    let sizes = partition_sizes(n_blocks, workers)?;
    let mut start = 0;
    Ok(sizes
        .into_iter()
        .enumerate()
        .map(|(w, s)| {
            let a = WorkerAssignment {
                worker: w,
                blocks: (start..start + s).collect(),
            };
            start += s;
            a
        })
        .collect())
}

/// Optional inputs to [`run_distributed_with`].
pub struct RunOptions<'a> {
    pub initial: Option<Iterate>,
    pub reference: Option<Reference>,
    pub clock: Option<&'a dyn Clock>,
    /// How long any participant waits for a message.
    pub timeout: Duration,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions {
            initial: None,
            reference: None,
            clock: None,
            timeout: Duration::from_secs(300),
        }
    }
}

/// Runs a Jacobi-family scheme on `workers` worker threads.
pub fn run_distributed(problem: &Problem, config: &SolverConfig, workers: usize) -> Result<History> {
    run_distributed_with(problem, config, workers, RunOptions::default())
}

pub fn run_distributed_with(
    problem: &Problem,
    config: &SolverConfig,
    workers: usize,
    options: RunOptions<'_>,
) -> Result<History> {
    if !config.scheme.is_jacobi_family() {
        return Err(Error::Config(format!(
            "{} needs sequential block updates and cannot run on workers; use prox_jacobi, jacobi or corr_jacobi",
            config.scheme.name()
        )));
    }
    config.validate(problem)?;
    let cfg = config.effective(problem.num_blocks());
    let plan = assign_blocks(problem.num_blocks(), workers)?;
    let op = &problem.operator;
    let u0 = match options.initial {
        Some(u) => {
            u.check_conforms(op)?;
            u
        }
        None => Iterate::zeros(op),
    };
    if let Some(r) = &options.reference {
        op.check_conforms(&r.x)?;
        if r.lambda.as_ref().is_some_and(|l| l.len() != op.rows()) {
            return Err(paradmm_core::Error::Structure {
                block: None,
                msg: "reference λ has the wrong length".into(),
            }
            .into());
        }
    }
    let reference = options.reference;
    let tasks = build_tasks(problem, &cfg, &u0, reference.as_ref().map(|r| &r.x))?;
    let mut coord = Coordinator::new(
        &cfg,
        op.rhs().to_vec(),
        u0.lambda.clone(),
        reference.as_ref().and_then(|r| r.lambda.clone()),
        reference.is_some(),
        u0.norm(),
    )?;
    let has_pred = matches!(cfg.scheme, paradmm_core::Scheme::CorrJacobi { .. });
    let m = op.rows();

    let mut owned: Vec<Vec<BlockTask<'_>>> = plan.iter().map(|_| Vec::new()).collect();
    let mut w = 0;
    for t in tasks {
        if !plan[w].blocks.contains(&t.index()) {
            w += 1;
        }
        owned[w].push(t);
    }

    let mut comm = CommLog {
        workers,
        rows: m,
        ..CommLog::default()
    };
    let (coord_result, xs) = thread::scope(|s| {
        let mut links = Vec::with_capacity(workers);
        let mut handles = Vec::with_capacity(workers);
        for (a, tasks) in plan.iter().zip(owned) {
            let (here, there) = channel_pair("coordinator", &format!("worker {}", a.worker), options.timeout);
            links.push(here);
            let id = a.worker;
            handles.push(s.spawn(move || serve_blocks(id, tasks, there, m, has_pred)));
        }
        let res = coordinate(&mut coord, links, &mut comm, options.clock);
        let xs: Vec<Result<Vec<(usize, Vec<f64>)>>> =
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect();
        (res, xs)
    });
    let termination = coord_result?;
    let mut blocks: Vec<Option<Vec<f64>>> = vec![None; problem.num_blocks()];
    for r in xs {
        for (i, x) in r? {
            blocks[i] = Some(x);
        }
    }
    let x = BlockVector::new(blocks.into_iter().map(|b| b.expect("every block returned")).collect())?;
    let (records, lambda, final_prox, iterations) = coord.into_records();
    Ok(History {
        scheme: cfg.scheme,
        records,
        final_iterate: Iterate::new(x, lambda),
        termination,
        iterations,
        final_prox,
        block_duals: None,
        comm: Some(comm),
    })
}

fn send_counted(ep: &ChannelEndpoint, msg: Message, bytes: &mut u64, count: &mut u64) -> Result<()> {
    *bytes += msg.modeled_bytes();
    *count += 1;
    ep.send(msg)
}

fn coordinate(
    coord: &mut Coordinator,
    links: Vec<ChannelEndpoint>,
    comm: &mut CommLog,
    clock: Option<&dyn Clock>,
) -> Result<paradmm_core::Termination> {
    let now = || clock.map_or(0, |c| c.now_ns());
    let res = (|| -> Result<paradmm_core::Termination> {
        let red0 = gather(&links, 0, comm)?;
        let mut step = coord.start(&red0, now());
        loop {
            let k = coord.iterations();
            if step.control != Control::Keep {
                for ep in &links {
                    let msg = Message::TunerDecision {
                        k,
                        control: step.control.clone(),
                    };
                    send_counted(ep, msg, &mut comm.control_bytes, &mut comm.control_messages)?;
                }
            }
            if let Some(term) = step.termination {
                return Ok(term);
            }
            let bc = step.broadcast.take().expect("running step has a broadcast");
            comm.broadcast_rounds += 1;
            for ep in &links {
                send_counted(
                    ep,
                    Message::Broadcast(bc.clone()),
                    &mut comm.broadcast_bytes,
                    &mut comm.broadcast_messages,
                )?;
            }
            let red = gather(&links, bc.k + 1, comm)?;
            step = coord.finish(&red, now())?;
        }
    })();
    let k = coord.iterations();
    let reason = match &res {
        Ok(t) => format!("{t:?}"),
        Err(e) => e.to_string(),
    };
    for ep in &links {
        let msg = Message::Shutdown { k, reason: reason.clone() };
        // a worker that already stopped has dropped its end
        let _ = send_counted(ep, msg, &mut comm.control_bytes, &mut comm.control_messages);
    }
    res
}

/// Receives one partial product from every worker, in worker order.
fn gather(links: &[ChannelEndpoint], k: usize, comm: &mut CommLog) -> Result<Reduction> {
    comm.reduce_rounds += 1;
    let mut total: Option<Reduction> = None;
    for (w, ep) in links.iter().enumerate() {
        let msg = ep.recv()?;
        comm.reduce_bytes += msg.modeled_bytes();
        comm.reduce_messages += 1;
        match msg {
            Message::PartialProduct {
                k: got,
                worker,
                reduction,
            } if got == k && worker == w => match total.as_mut() {
                Some(t) => t.merge(&reduction),
                None => total = Some(reduction),
            },
            Message::PartialProduct { k: got, worker, .. } => {
                return Err(Error::Protocol(format!(
                    "coordinator expected partial product k={k} from worker {w}, got k={got} from worker {worker}"
                )))
            }
            Message::Shutdown { reason, .. } => {
                return Err(Error::Shutdown(format!("worker {w} stopped: {reason}")));
            }
            other => {
                return Err(Error::Protocol(format!(
                    "coordinator expected partial product k={k} from worker {w}, got {} k={}",
                    other.kind(),
                    other.k()
                )))
            }
        }
    }
    Ok(total.expect("at least one worker"))
}

/// Worker side of the protocol: serves `tasks` over `ep` until shutdown and
/// returns the final block values.
pub fn serve_blocks<E: Endpoint>(
    id: usize,
    mut tasks: Vec<BlockTask<'_>>,
    ep: E,
    m: usize,
    has_pred: bool,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let res = (|| -> Result<()> {
        let mut red = Reduction::new(m, has_pred);
        for t in &tasks {
            red.add(&t.initial());
        }
        ep.send(Message::PartialProduct {
            k: 0,
            worker: id,
            reduction: red,
        })?;
        let mut expected = 0;
        loop {
            let msg = ep.recv()?;
            if msg.k() != expected && !matches!(msg, Message::Shutdown { .. }) {
                return Err(Error::Protocol(format!(
                    "worker {id} expected k={expected}, got {} k={} from coordinator",
                    msg.kind(),
                    msg.k()
                )));
            }
            match msg {
                Message::Shutdown { .. } => return Ok(()),
                Message::TunerDecision { control, .. } => {
                    for t in tasks.iter_mut() {
                        t.apply_control(&control)?;
                    }
                }
                Message::Broadcast(bc) => {
                    let mut red = Reduction::new(m, has_pred);
                    for t in tasks.iter_mut() {
                        red.add(&t.step(&bc)?);
                    }
                    ep.send(Message::PartialProduct {
                        k: bc.k + 1,
                        worker: id,
                        reduction: red,
                    })?;
                    expected += 1;
                }
                Message::PartialProduct { .. } => {
                    return Err(Error::Protocol(format!("worker {id} received a partial product")));
                }
            }
        }
    })();
    if let Err(e) = &res {
        let _ = ep.send(Message::Shutdown {
            k: 0,
            reason: e.to_string(),
        });
    }
    res.map(|()| tasks.iter().map(|t| (t.index(), t.x().to_vec())).collect())
}

/// Per-iteration communication volume of a distributed run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommReport {
    pub workers: usize,
    pub rows: usize,
    pub iterations: usize,
    /// Bytes sent by the coordinator in one broadcast round.
    pub broadcast_bytes_per_iter: u64,
    /// Bytes received by the coordinator in one reduction round.
    pub reduce_bytes_per_iter: u64,
    /// Tuner decisions and shutdowns over the whole run.
    pub control_bytes: u64,
}

/// Byte accounting of a distributed [`History`].
///
/// Under the byte model one round costs `W·(HEADER_BYTES + 8·2m)` in each
/// direction (`3m` floats per partial product with a predictor).
pub fn comm_stats(history: &History) -> Result<CommReport> {
    let c = history.comm.as_ref().ok_or_else(|| {
        Error::Core(paradmm_core::Error::Domain(
            "history has no communication log; it was not produced by run_distributed".into(),
        ))
    })?;
    let per = |bytes: u64, rounds: u64| if rounds == 0 { 0 } else { bytes / rounds };
    Ok(CommReport {
        workers: c.workers,
        rows: c.rows,
        iterations: history.iterations,
        broadcast_bytes_per_iter: per(c.broadcast_bytes, c.broadcast_rounds),
        reduce_bytes_per_iter: per(c.reduce_bytes, c.reduce_rounds),
        control_bytes: c.control_bytes,
    })
}
