//! Long-format plot data: melt one or more trajectory tables into
//! `t,series,value` rows that plotting tools ingest directly.

use std::path::{Path, PathBuf};

use clap::Args;
use hexflow_core::export::{
    parse_table_csv, plot_data_csv, write_atomic, ExportError, TableRow, TrajectoryTable,
};

use crate::config::CliError;

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    /// Trajectory tables (CSV) to melt; several files are aligned on the
    /// union of their time grids and prefixed by file stem.
    #[arg(required = true, value_name = "FILE")]
    pub files: Vec<PathBuf>,

    /// Write the long-format CSV here instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn from_export(err: ExportError) -> CliError {
    match err {
        ExportError::Io { path, source } => CliError::Io { path, source },
        ExportError::Schema { .. } => CliError::Schema {
            message: err.to_string(),
        },
    }
}

fn read_table(path: &Path) -> Result<TrajectoryTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let table = parse_table_csv(&text).map_err(|err| CliError::Schema {
        message: format!("{}: {err}", path.display()),
    })?;
    if table.rows.is_empty() {
        return Err(CliError::Schema {
            message: format!("{}: table has a header but no rows", path.display()),
        });
    }
    Ok(table)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|v| v.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Piecewise-linear sample of `(t, value)` knots, clamped at both ends.
/// Repeated timestamps keep the later row, so step-like tables stay faithful.
fn sample(knots: &[(f64, f64)], t: f64) -> f64 {
    let n = knots.len();
    if t <= knots[0].0 {
        return knots[0].1;
    }
    if t >= knots[n - 1].0 {
        return knots[n - 1].1;
    }
    let hi = knots.partition_point(|k| k.0 <= t);
    let (t0, v0) = knots[hi - 1];
    let (t1, v1) = knots[hi];
    if t1 <= t0 {
        return v1;
    }
    let w = (t - t0) / (t1 - t0);
    v0 + w * (v1 - v0)
}

fn series_of(rows: &[TableRow]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out = Vec::with_capacity(12);
    for j in 0..6 {
        let knots: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.s[j])).collect();
        out.push((format!("s{}", j + 1), knots));
    }
    for j in 0..6 {
        let knots: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.l[j])).collect();
        out.push((format!("L{}", j + 1), knots));
    }
    out
}

fn melt_many(tables: &[(String, Vec<TableRow>)]) -> String {
    // Shared grid: the sorted union of every file's timestamps.
    let mut grid: Vec<f64> = tables
        .iter()
        .flat_map(|(_, rows)| rows.iter().map(|r| r.t))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut out = String::from("t,series,value\n");
    for (name, rows) in tables {
        for (series, knots) in series_of(rows) {
            for &t in &grid {
                let v = sample(&knots, t);
                out.push_str(&format!("{t},{name}.{series},{v}\n"));
            }
        }
    }
    out
}

pub fn emit_plot_data(args: &PlotDataArgs) -> Result<(), CliError> {
    let content = if args.files.len() == 1 {
        let table = read_table(&args.files[0])?;
        plot_data_csv(&table)
    } else {
        let mut tables = Vec::with_capacity(args.files.len());
        for path in &args.files {
            tables.push((stem(path), read_table(path)?.rows));
        }
        melt_many(&tables)
    };
    match &args.out {
        None => crate::run::write_stdout(&content),
        Some(out) => write_atomic(out, &content).map_err(from_export),
    }
}
