//! History files.
//!
//! CSV columns, one row per recorded iteration (empty cell = not
//! available):
//!
//! | column | meaning |
//! |---|---|
//! | `k` | iteration index |
//! | `objective` | `Σ f_i(x_i^k)` |
//! | `primal_residual` | `‖Ax^k − c‖` |
//! | `h_value` | transition quantity `h(u^{k−1}, u^k)` |
//! | `du_g_sq`, `du_gp_sq` | `‖u^{k−1} − u^k‖²` in `G` and `G′` |
//! | `err_g_sq` | `‖u^k − u*‖²_G` |
//! | `rel_error` | `‖x^k − x*‖/‖x*‖` |
//! | `dw_h_sq`, `r_p`, `r_d` | two-block quantities |
//! | `tuner_event` | `increase_and_restart` or `decrease` |
//! | `adjustments`, `tau_min`, `tau_max` | tuner state after the event |
//! | `duration_ns` | wall time of the iteration |
//!
//! Floats use the shortest representation that parses back to the same
//! bits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use paradmm_core::diagnostics::{IterationRecord, TunerEvent, TunerEventKind};
use paradmm_core::History;

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 16] = [
    "k",
    "objective",
    "primal_residual",
    "h_value",
    "du_g_sq",
    "du_gp_sq",
    "err_g_sq",
    "rel_error",
    "dw_h_sq",
    "r_p",
    "r_d",
    "tuner_event",
    "adjustments",
    "tau_min",
    "tau_max",
    "duration_ns",
];

/// Shortest round-trip text for `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn event_name(kind: TunerEventKind) -> &'static str {
    match kind {
        TunerEventKind::IncreaseAndRestart => "increase_and_restart",
        TunerEventKind::Decrease => "decrease",
    }
}

pub fn record_row(r: &IterationRecord) -> Vec<String> {
    let ev = r.tuner_event.as_ref();
    vec![
        r.k.to_string(),
        fmt_f64(r.objective),
        fmt_f64(r.primal_residual),
        opt(r.h_value),
        opt(r.du_g_sq),
        opt(r.du_gp_sq),
        opt(r.err_g_sq),
        opt(r.rel_error),
        opt(r.dw_h_sq),
        opt(r.r_p),
        opt(r.r_d),
        ev.map(|e| event_name(e.kind).to_string()).unwrap_or_default(),
        ev.map(|e| e.adjustments.to_string()).unwrap_or_default(),
        opt(ev.map(|e| e.tau_min)),
        opt(ev.map(|e| e.tau_max)),
        r.duration_ns.to_string(),
    ]
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

pub fn write_history_csv(path: &Path, history: &History) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(COLUMNS).map_err(|e| csv_err(path, e))?;
    for r in &history.records {
        w.write_record(record_row(r)).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_opt<T: std::str::FromStr>(s: &str, col: &str, path: &Path, line: u64) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::format(path, format!("line {line}: bad {col} value {s:?}")))
}

fn parse_req<T: std::str::FromStr>(s: &str, col: &str, path: &Path, line: u64) -> Result<T> {
    parse_opt(s, col, path, line)?.ok_or_else(|| Error::format(path, format!("line {line}: {col} is empty")))
}

/// Reads a file written by [`write_history_csv`].
pub fn read_history_csv(path: &Path) -> Result<Vec<IterationRecord>> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = rd.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().ne(COLUMNS) {
        return Err(Error::format(path, format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let f = |i: usize| parse_opt::<f64>(&row[i], COLUMNS[i], path, line);
        let tuner_event = match &row[11] {
            "" => None,
            name => {
                let kind = match name {
                    "increase_and_restart" => TunerEventKind::IncreaseAndRestart,
                    "decrease" => TunerEventKind::Decrease,
                    other => return Err(Error::format(path, format!("line {line}: unknown tuner event {other:?}"))),
                };
                Some(TunerEvent {
                    kind,
                    adjustments: parse_req(&row[12], COLUMNS[12], path, line)?,
                    tau_min: parse_req(&row[13], COLUMNS[13], path, line)?,
                    tau_max: parse_req(&row[14], COLUMNS[14], path, line)?,
                })
            }
        };
        out.push(IterationRecord {
            k: parse_req(&row[0], COLUMNS[0], path, line)?,
            objective: parse_req(&row[1], COLUMNS[1], path, line)?,
            primal_residual: parse_req(&row[2], COLUMNS[2], path, line)?,
            h_value: f(3)?,
            du_g_sq: f(4)?,
            du_gp_sq: f(5)?,
            err_g_sq: f(6)?,
            rel_error: f(7)?,
            dw_h_sq: f(8)?,
            r_p: f(9)?,
            r_d: f(10)?,
            tuner_event,
            duration_ns: parse_req(&row[15], COLUMNS[15], path, line)?,
        });
    }
    Ok(out)
}

/// One JSON object per record.
pub fn write_history_jsonl(path: &Path, history: &History) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in &history.records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::format(path, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
