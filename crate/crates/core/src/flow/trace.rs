use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// One sampled state of a traced orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    /// Flow time including burn-in.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    /// Cumulative log of the leading renormalization factor.
    pub log_stretch: f64,
    /// Whether a deck transformation was applied at this step.
    pub recentered: bool,
}

/// Write trace rows as CSV with a header line.
pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
