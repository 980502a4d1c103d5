use paradmm_core::prox::BlockProx;
use paradmm_core::solvers::engine::{Broadcast, Control, Reduction};

/// Modeled size of a message header in bytes: tag, iteration index and
/// sender id.
pub const HEADER_BYTES: u64 = 16;
/// Modeled size of one payload float.
pub const FLOAT_BYTES: u64 = 8;

/// Everything exchanged between the coordinator and the workers.
#[derive(Debug, Clone)]
pub enum Message {
    /// Coordinator to workers: `λ^k` and `Ax^k − c`.
    Broadcast(Broadcast),
    /// Worker to coordinator: the sums over its blocks for iteration `k`.
    PartialProduct {
        k: usize,
        worker: usize,
        reduction: Reduction,
    },
    /// Coordinator to workers: tuner outcome taking effect before the
    /// broadcast with the same `k`.
    TunerDecision { k: usize, control: Control },
    /// Either direction: stop now.
    Shutdown { k: usize, reason: String },
}

impl Message {
    pub fn k(&self) -> usize {
        match self {
            Message::Broadcast(b) => b.k,
            Message::PartialProduct { k, .. } | Message::TunerDecision { k, .. } | Message::Shutdown { k, .. } => *k,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Broadcast(_) => "broadcast",
            Message::PartialProduct { .. } => "partial_product",
            Message::TunerDecision { .. } => "tuner_decision",
            Message::Shutdown { .. } => "shutdown",
        }
    }

    /// Serialized size under the byte model: a fixed header plus eight
    /// bytes per float.
    ///
    /// A partial product counts its `m`-vectors (`ΣA_i x_i`, `ΣA_i Δx_i`
    /// and the predictor sum when present); the scalar diagnostics it also
    /// carries are instrumentation and are not counted.
    pub fn modeled_bytes(&self) -> u64 {
        let floats = match self {
            Message::Broadcast(b) => b.lambda.len() + b.residual.len(),
            Message::PartialProduct { reduction, .. } => {
                reduction.ax.len() + reduction.adx.len() + reduction.ax_pred.len()
            }
            Message::TunerDecision { control, .. } => match control {
                Control::Keep => 0,
                Control::Rollback(p) | Control::SetProx(p) => p.blocks.iter().map(prox_floats).sum(),
            },
            Message::Shutdown { .. } => 0,
        };
        HEADER_BYTES + FLOAT_BYTES * floats as u64
    }
}

fn prox_floats(p: &BlockProx) -> usize {
    match p {
        BlockProx::None => 0,
        BlockProx::Standard(_) | BlockProx::ProxLinear(_) => 1,
        BlockProx::Explicit(m) => m.rows() * m.cols(),
    }
}
