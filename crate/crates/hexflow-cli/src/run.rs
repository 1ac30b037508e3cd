//! Scenario execution: dispatch to the library, write artifact files
//! atomically, and record a manifest that makes every artifact reproducible.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use hexflow_core::export::{
    crystalline_json, crystalline_table, discrete_json, discrete_table, quantized_json,
    quantized_table, table_csv, write_atomic, ExportError,
};
use hexflow_core::flow::{default_horizon, run_with, FlowError, FlowOptions};
use hexflow_core::lattice::ALPHA_HEX;
use hexflow_core::ode::{
    gamma_limit_check, integrate_crystalline, integrate_quantized, QuantizedTrajectory,
};
use hexflow_core::step::StepOptions;
use hexflow_core::wulff::WulffHexagon;

use crate::config::{CliError, FormatArg, InitialShape, Mode, Scenario};

fn from_flow(err: FlowError) -> CliError {
    CliError::config(err.to_string())
}

/// Print to stdout, treating a closed pipe (`hexflow ... | head`) as normal
/// termination rather than a failure.
pub(crate) fn write_stdout(content: &str) -> Result<(), CliError> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(content.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(source) => Err(CliError::Io {
            path: "<stdout>".to_string(),
            source,
        }),
    }
}

fn from_export(err: ExportError) -> CliError {
    match err {
        ExportError::Io { path, source } => CliError::Io { path, source },
        ExportError::Schema { .. } => CliError::Schema {
            message: err.to_string(),
        },
    }
}

/// One file the scenario produced (or would print to stdout).
struct Artifact {
    /// File name relative to the manifest, or `-` for stdout.
    name: String,
    kind: &'static str,
    content: String,
    terminal: Option<serde_json::Value>,
}

fn horizon(s: &Scenario, e0: &WulffHexagon) -> f64 {
    s.t_max
        .as_ref()
        .map(|t| t.value)
        .unwrap_or_else(|| default_horizon(e0))
}

fn flow_options(s: &Scenario, t_max: f64) -> FlowOptions {
    FlowOptions {
        stepper: s.stepper.into(),
        step: StepOptions {
            tie_policy: s.tie_policy.into(),
            ..StepOptions::default()
        },
        ..FlowOptions::until(t_max)
    }
}

fn terminal_json<T: serde::Serialize>(t: &T) -> Option<serde_json::Value> {
    Some(serde_json::to_value(t).expect("serializable terminal"))
}

fn artifact_name(s: &Scenario, suffix: Option<&str>) -> String {
    let ext = match s.format {
        FormatArg::Csv => "csv",
        FormatArg::Json => "json",
    };
    match &s.out {
        Some(path) => {
            let stem = path
                .file_stem()
                .map(|v| v.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".to_string());
            match suffix {
                Some(sfx) => format!("{stem}-{sfx}.{ext}"),
                None => match path.extension() {
                    Some(e) => format!("{stem}.{}", e.to_string_lossy()),
                    None => format!("{stem}.{ext}"),
                },
            }
        }
        None => "-".to_string(),
    }
}

/// File-system-safe token for a swept parameter value ("1/16" → "1-16").
fn value_token(raw: &str) -> String {
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

fn run_discrete(s: &Scenario) -> Result<Vec<Artifact>, CliError> {
    let e0 = s.initial.hexagon()?;
    let gamma = s.gamma_value()?;
    let eps = s.eps_value()?;
    let traj = run_with(&e0, eps, gamma, &flow_options(s, horizon(s, &e0))).map_err(from_flow)?;
    let content = match s.format {
        FormatArg::Csv => table_csv(&discrete_table(&traj)),
        FormatArg::Json => discrete_json(&traj),
    };
    Ok(vec![Artifact {
        name: artifact_name(s, None),
        kind: "discrete_trajectory",
        content,
        terminal: terminal_json(&traj.terminal),
    }])
}

fn run_ode(s: &Scenario) -> Result<Vec<Artifact>, CliError> {
    let e0 = s.initial.hexagon()?;
    let gamma = s.gamma_value()?;
    let traj = integrate_quantized(e0.supports(), gamma, horizon(s, &e0));
    let content = match s.format {
        FormatArg::Csv => table_csv(&quantized_table(&traj)),
        FormatArg::Json => quantized_json(&traj),
    };
    Ok(vec![Artifact {
        name: artifact_name(s, None),
        kind: "quantized_trajectory",
        content,
        terminal: terminal_json(&traj.terminal),
    }])
}

fn run_crystalline(s: &Scenario) -> Result<Vec<Artifact>, CliError> {
    let e0 = s.initial.hexagon()?;
    let traj = integrate_crystalline(e0.side_lengths(), horizon(s, &e0));
    let content = match s.format {
        FormatArg::Csv => table_csv(&crystalline_table(&traj)),
        FormatArg::Json => crystalline_json(&traj),
    };
    Ok(vec![Artifact {
        name: artifact_name(s, None),
        kind: "crystalline_trajectory",
        content,
        terminal: terminal_json(&traj.terminal),
    }])
}

/// The quantized reference run shared by compare mode.
fn reference_ode(e0: &WulffHexagon, gamma: f64, t_cap: f64) -> QuantizedTrajectory {
    integrate_quantized(e0.supports(), gamma, t_cap)
}

fn run_compare(s: &Scenario) -> Result<Vec<Artifact>, CliError> {
    let e0 = s.initial.hexagon()?;
    let gamma = s.gamma_value()?;
    let t_cap = horizon(s, &e0);
    let ode = reference_ode(&e0, gamma, t_cap);
    let window_end = match ode.extinction_time() {
        Some(t_ext) => 0.9 * t_ext,
        None => t_cap,
    };
    let window = (0.0, window_end);

    let eps: Vec<f64> = s.eps_list.iter().map(|v| v.value).collect();
    let rows = hexflow_core::flow::convergence_study(
        &e0,
        gamma,
        &eps,
        |t| ode.sample(t).0,
        window,
        2000,
    )
    .map_err(from_flow)?;

    // Per-resolution extinction alongside the sup gap.
    let mut extinctions: Vec<Option<f64>> = Vec::new();
    for &e in &eps {
        let traj = run_with(&e0, e, gamma, &flow_options(s, t_cap)).map_err(from_flow)?;
        extinctions.push(traj.extinction_time());
    }
    let t_limit = ode.extinction_time();

    let content = match s.format {
        FormatArg::Csv => {
            let mut out = String::from("eps,sup_gap,extinction_discrete,extinction_limit\n");
            for (row, ext) in rows.iter().zip(&extinctions) {
                let ext_s = ext.map(|v| v.to_string()).unwrap_or_default();
                let lim_s = t_limit.map(|v| v.to_string()).unwrap_or_default();
                out.push_str(&format!("{},{},{ext_s},{lim_s}\n", row.eps, row.sup_gap));
            }
            out
        }
        FormatArg::Json => {
            let rows_json: Vec<serde_json::Value> = rows
                .iter()
                .zip(&extinctions)
                .map(|(row, ext)| {
                    serde_json::json!({
                        "eps": row.eps,
                        "sup_gap": row.sup_gap,
                        "extinction_discrete": ext,
                        "extinction_limit": t_limit,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "schema": 1,
                "flow": "compare",
                "gamma": gamma,
                "window": [window.0, window.1],
                "rows": rows_json,
            });
            let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
            text.push('\n');
            text
        }
    };
    Ok(vec![Artifact {
        name: artifact_name(s, None),
        kind: "convergence_table",
        content,
        terminal: None,
    }])
}

fn run_sweep(s: &Scenario) -> Result<Vec<Artifact>, CliError> {
    if !s.gamma_list.is_empty() {
        return run_gamma_sweep(s);
    }
    if s.out.is_none() {
        return Err(CliError::config(
            "sweep mode writes one file per ε and needs --out",
        ));
    }
    let e0 = s.initial.hexagon()?;
    let gamma = s.gamma_value()?;
    let t_cap = horizon(s, &e0);

    // Run the per-ε scenarios concurrently up to the --jobs bound; artifacts
    // are assembled in ε order, so the result is independent of scheduling.
    let n = s.eps_list.len();
    let slots: Vec<Mutex<Option<Result<Artifact, CliError>>>> =
        (0..n).map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);
    let workers = s.jobs.min(n).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let exact = &s.eps_list[i];
                let result = run_with(&e0, exact.value, gamma, &flow_options(s, t_cap))
                    .map_err(from_flow)
                    .map(|traj| {
                        let content = match s.format {
                            FormatArg::Csv => table_csv(&discrete_table(&traj)),
                            FormatArg::Json => discrete_json(&traj),
                        };
                        Artifact {
                            name: artifact_name(
                                s,
                                Some(&format!("eps-{}", value_token(&exact.raw))),
                            ),
                            kind: "discrete_trajectory",
                            content,
                            terminal: terminal_json(&traj.terminal),
                        }
                    });
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

fn run_gamma_sweep(s: &Scenario) -> Result<Vec<Artifact>, CliError> {
    let side = match &s.initial {
        InitialShape::Regular { side } => side.value,
        _ => {
            return Err(CliError::config(
                "a γ sweep compares closed-form extinction times and needs --regular-L",
            ))
        }
    };
    if !(side > 0.0 && side.is_finite()) {
        return Err(CliError::config(format!(
            "--regular-L: must be positive and finite, got {side}"
        )));
    }
    let gammas: Vec<f64> = s.gamma_list.iter().map(|v| v.value).collect();
    for (exact, &g) in s.gamma_list.iter().zip(&gammas) {
        if side >= ALPHA_HEX * g {
            return Err(CliError::config(format!(
                "--gamma-list: γ = {} pins a regular hexagon of side {side} \
                 (threshold L < 16γ/9); extinction times are undefined",
                exact.raw
            )));
        }
    }
    let rows = gamma_limit_check(side, &gammas);
    let content = match s.format {
        FormatArg::Csv => {
            let mut out = String::from("gamma,t_quantized,t_crystalline,rel_err\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.gamma, r.t_quantized, r.t_crystalline, r.rel_err
                ));
            }
            out
        }
        FormatArg::Json => {
            let doc = serde_json::json!({
                "schema": 1,
                "flow": "gamma_sweep",
                "side": side,
                "rows": rows,
            });
            let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
            text.push('\n');
            text
        }
    };
    Ok(vec![Artifact {
        name: artifact_name(s, None),
        kind: "gamma_sweep_table",
        content,
        terminal: None,
    }])
}

fn manifest(s: &Scenario, artifacts: &[Artifact]) -> String {
    let outputs: Vec<serde_json::Value> = artifacts
        .iter()
        .map(|a| {
            serde_json::json!({
                "path": a.name,
                "kind": a.kind,
                "format": match s.format { FormatArg::Csv => "csv", FormatArg::Json => "json" },
                "terminal": a.terminal,
            })
        })
        .collect();
    let mut doc = serde_json::json!({
        "schema": 1,
        "tool": { "name": "hexflow", "version": env!("CARGO_PKG_VERSION") },
        "config": s,
        "outputs": outputs,
    });
    // Single-trajectory convenience field.
    if artifacts.len() == 1 {
        if let Some(t) = &artifacts[0].terminal {
            doc["terminal"] = t.clone();
        }
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable manifest");
    text.push('\n');
    text
}

/// Run a resolved scenario: compute every artifact, then either print the
/// single table to stdout or write all files atomically next to `--out`
/// together with the run manifest.
pub fn run_scenario(s: &Scenario) -> Result<(), CliError> {
    let artifacts = match s.mode {
        Mode::Discrete => run_discrete(s)?,
        Mode::Ode => run_ode(s)?,
        Mode::Crystalline => run_crystalline(s)?,
        Mode::Compare => run_compare(s)?,
        Mode::Sweep => run_sweep(s)?,
    };
    match &s.out {
        None => {
            for a in &artifacts {
                write_stdout(&a.content)?;
            }
            Ok(())
        }
        Some(out) => {
            let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
            for a in &artifacts {
                write_atomic(&dir.join(&a.name), &a.content).map_err(from_export)?;
            }
            let manifest_path: PathBuf = out.with_extension("manifest.json");
            write_atomic(&manifest_path, &manifest(s, &artifacts)).map_err(from_export)?;
            Ok(())
        }
    }
}
