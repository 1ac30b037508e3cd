//! Trajectory serialization: a CSV table with a fixed column schema shared
//! by all three dynamics, JSON documents carrying the terminal reason, and
//! atomic file writes.
//!
//! Numbers are formatted with Rust's shortest-roundtrip `{}` representation,
//! so exports are byte-stable across runs and platforms and parse back to
//! exactly the same values.

use crate::flow::{FlowTerminal, Trajectory};
use crate::ode::{CrystallineTrajectory, QuantizedTrajectory};
use std::fmt::Write as _;
use std::io;
use std::path::Path;
use thiserror::Error;

/// Serialization failure.
#[derive(Debug, Error)]
pub enum ExportError {
    /// Filesystem failure while writing.
    #[error("could not write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    /// Input text does not match the table schema.
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
}

/// Column names after the leading index column.
const VALUE_COLUMNS: &str = "t,s1,s2,s3,s4,s5,s6,L1,L2,L3,L4,L5,L6,N1,N2,N3,N4,N5,N6,tie_mask,perimeter";

/// One row of the uniform trajectory table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableRow {
    pub index: u64,
    pub t: f64,
    /// Envelope (or limit) supports.
    pub s: [f64; 6],
    /// Side lengths.
    pub l: [f64; 6],
    /// Layer counts (discrete flow), quantized levels (limit dynamics), or
    /// zeros (crystalline comparison flow).
    pub n: [i64; 6],
    pub tie_mask: u8,
    pub perimeter: f64,
}

/// A trajectory flattened to the uniform column schema.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryTable {
    /// Name of the leading column: `k` for step-indexed discrete flows,
    /// `event_index` for the event-driven limit dynamics, `row` for the
    /// smooth comparison flow.
    pub index_label: String,
    pub rows: Vec<TableRow>,
}

impl TrajectoryTable {
    /// The header line of this table's CSV form.
    pub fn header(&self) -> String {
        format!("{},{}", self.index_label, VALUE_COLUMNS)
    }
}

/// Flatten a discrete trajectory; one row per recorded step.
pub fn discrete_table(traj: &Trajectory) -> TrajectoryTable {
    TrajectoryTable {
        index_label: "k".to_string(),
        rows: traj
            .records
            .iter()
            .map(|r| TableRow {
                index: r.k as u64,
                t: r.t,
                s: r.s,
                l: r.l,
                n: r.n,
                tie_mask: r.tie_mask(),
                perimeter: r.perimeter,
            })
            .collect(),
    }
}

/// Flatten a quantized limit trajectory; one row per event, with the level
/// vector in the layer columns.
pub fn quantized_table(traj: &QuantizedTrajectory) -> TrajectoryTable {
    TrajectoryTable {
        index_label: "event_index".to_string(),
        rows: traj
            .records
            .iter()
            .map(|r| TableRow {
                index: r.event_index as u64,
                t: r.t,
                s: r.s,
                l: r.l,
                n: r.m,
                tie_mask: 0,
                perimeter: r.perimeter(),
            })
            .collect(),
    }
}

/// Flatten a crystalline trajectory; one row per accepted integration step,
/// with zero layer columns.
pub fn crystalline_table(traj: &CrystallineTrajectory) -> TrajectoryTable {
    TrajectoryTable {
        index_label: "row".to_string(),
        rows: traj
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| TableRow {
                index: i as u64,
                t: r.t,
                s: r.supports(),
                l: r.l,
                n: [0; 6],
                tie_mask: 0,
                perimeter: r.perimeter(),
            })
            .collect(),
    }
}

/// Render the table as CSV: a header line, then one line per row, `\n`
/// separated with a trailing newline.
pub fn table_csv(table: &TrajectoryTable) -> String {
    let mut out = table.header();
    out.push('\n');
    for r in &table.rows {
        write!(out, "{},{}", r.index, r.t).unwrap();
        for v in r.s {
            write!(out, ",{v}").unwrap();
        }
        for v in r.l {
            write!(out, ",{v}").unwrap();
        }
        for v in r.n {
            write!(out, ",{v}").unwrap();
        }
        write!(out, ",{},{}", r.tie_mask, r.perimeter).unwrap();
        out.push('\n');
    }
    out
}

fn field<T: std::str::FromStr>(
    parts: &[&str],
    idx: usize,
    line: usize,
    what: &str,
) -> Result<T, ExportError> {
    let raw = parts.get(idx).ok_or_else(|| ExportError::Schema {
        line,
        message: format!("missing column {what}"),
    })?;
    raw.parse().map_err(|_| ExportError::Schema {
        line,
        message: format!("column {what} has unparsable value {raw:?}"),
    })
}

/// Parse a table back from its CSV form. The header must match the schema
/// exactly up to the name of the leading index column.
pub fn parse_table_csv(text: &str) -> Result<TrajectoryTable, ExportError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(ExportError::Schema {
        line: 1,
        message: "empty input".to_string(),
    })?;
    let index_label = match header.split_once(',') {
        Some((label, rest)) if rest == VALUE_COLUMNS => label.to_string(),
        _ => {
            return Err(ExportError::Schema {
                line: 1,
                message: format!("header {header:?} does not match the trajectory table schema"),
            })
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 22 {
            return Err(ExportError::Schema {
                line: lineno,
                message: format!("expected 22 columns, found {}", parts.len()),
            });
        }
        let mut s = [0.0; 6];
        let mut l = [0.0; 6];
        let mut n = [0i64; 6];
        for j in 0..6 {
            s[j] = field(&parts, 2 + j, lineno, &format!("s{}", j + 1))?;
            l[j] = field(&parts, 8 + j, lineno, &format!("L{}", j + 1))?;
            n[j] = field(&parts, 14 + j, lineno, &format!("N{}", j + 1))?;
        }
        rows.push(TableRow {
            index: field(&parts, 0, lineno, "index")?,
            t: field(&parts, 1, lineno, "t")?,
            s,
            l,
            n,
            tie_mask: field(&parts, 20, lineno, "tie_mask")?,
            perimeter: field(&parts, 21, lineno, "perimeter")?,
        });
    }
    Ok(TrajectoryTable { index_label, rows })
}

/// Long-form plotting table: `t,series,value` with the twelve series
/// `s1..s6,L1..L6`, one block per series in column order.
pub fn plot_data_csv(table: &TrajectoryTable) -> String {
    let mut out = String::from("t,series,value\n");
    for j in 0..6 {
        for r in &table.rows {
            writeln!(out, "{},s{},{}", r.t, j + 1, r.s[j]).unwrap();
        }
    }
    for j in 0..6 {
        for r in &table.rows {
            writeln!(out, "{},L{},{}", r.t, j + 1, r.l[j]).unwrap();
        }
    }
    out
}

/// JSON document for a discrete trajectory: parameters, records, and the
/// terminal reason. Keys are emitted in sorted order, so the document is
/// byte-stable.
pub fn discrete_json(traj: &Trajectory) -> String {
    let doc = serde_json::json!({
        "schema": 1,
        "flow": "discrete",
        "eps": traj.eps,
        "gamma": traj.gamma,
        "tau": traj.tau,
        "initial_offsets": traj.initial_offsets,
        "terminal": traj.terminal,
        "records": traj.records,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
    text.push('\n');
    text
}

/// JSON document for a quantized limit trajectory.
pub fn quantized_json(traj: &QuantizedTrajectory) -> String {
    let doc = serde_json::json!({
        "schema": 1,
        "flow": "quantized",
        "gamma": traj.gamma,
        "terminal": traj.terminal,
        "records": traj.records,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
    text.push('\n');
    text
}

/// JSON document for a crystalline comparison trajectory.
pub fn crystalline_json(traj: &CrystallineTrajectory) -> String {
    let doc = serde_json::json!({
        "schema": 1,
        "flow": "crystalline",
        "terminal": traj.terminal,
        "records": traj.records,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
    text.push('\n');
    text
}

/// Human-readable stopping reason of a discrete trajectory, as used in run
/// summaries.
pub fn terminal_summary(terminal: &FlowTerminal) -> String {
    match terminal {
        FlowTerminal::Pinned => "pinned (the minimizer moves nothing)".to_string(),
        FlowTerminal::SideVanished { side } => {
            format!("side {side} would vanish at the next step")
        }
        FlowTerminal::MaxSteps => "horizon reached".to_string(),
    }
}

/// Write `contents` to `path` atomically: the bytes land in a sibling
/// temporary file first and are renamed over the target, so a crash never
/// leaves a half-written export.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), ExportError> {
    let io_err = |source: io::Error| ExportError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}
