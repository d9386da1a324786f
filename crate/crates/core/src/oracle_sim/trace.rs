use std::io::Write;

use serde::Serialize;

use super::simulate::io_err;
use crate::error::Result;
use crate::solver::SolveReport;

/// One round of an elimination sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    /// `"upper"` or `"lower"`.
    pub sequence: &'static str,
    pub k: usize,
    pub thresholds: Vec<f64>,
}

/// Flattens both sequences of a report into plot-ready rows, upper first.
pub fn unraveling_trace_export(report: &SolveReport) -> Vec<TraceRow> {
    let upper = report.upper.iterates.iter().enumerate().map(|(k, t)| TraceRow {
        sequence: "upper",
        k,
        thresholds: t.clone(),
    });
    let lower = report.lower.iterates.iter().enumerate().map(|(k, t)| TraceRow {
        sequence: "lower",
        k,
        thresholds: t.clone(),
    });
    upper.chain(lower).collect()
}

/// Columns `sequence,k,y_0,..,y_{N-1}`.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let n = rows.first().map_or(0, |r| r.thresholds.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sequence".to_string(), "k".to_string()];
    header.extend((0..n).map(|i| format!("y_{i}")));
    w.write_record(&header).map_err(io_err)?;
    for r in rows {
        let mut rec = vec![r.sequence.to_string(), r.k.to_string()];
        rec.extend(r.thresholds.iter().map(f64::to_string));
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(|e| crate::Error::Config(format!("write failed: {e}")))?;
    Ok(())
}
