//! End-to-end tests of the `hexflow` binary: headline scenario invocations,
//! artifact determinism, manifest contents, and exit-code discipline.

use std::path::Path;
use std::process::{Command, Output};

fn hexflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexflow"))
        .args(args)
        .env_remove("HEXFLOW_JOBS")
        .output()
        .expect("binary runs")
}

fn hexflow_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexflow"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn rows_of(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn a_large_regular_hexagon_is_pinned_in_one_row() {
    let out = hexflow(&["--mode", "ode", "--gamma", "1", "--regular-L", "3"]);
    let text = stdout_of(&out);
    let rows = rows_of(&text);
    assert_eq!(rows.len(), 1, "pinned data should produce a single row");
    // All quantized levels are zero and the state sits at t = 0.
    assert_eq!(rows[0][1], "0");
    for (j, level) in rows[0][14..20].iter().enumerate() {
        assert_eq!(level, "0", "N{} must be 0 when pinned", j + 1);
    }
}

#[test]
fn the_convergence_table_lists_every_requested_resolution() {
    let out = hexflow(&[
        "--mode",
        "compare",
        "--gamma",
        "1",
        "--regular-L",
        "1",
        "--eps-list",
        "1/16,1/32,1/64",
    ]);
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "eps,sup_gap,extinction_discrete,extinction_limit"
    );
    let eps: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(eps, ["0.0625", "0.03125", "0.015625"]);
    for row in rows_of(&text) {
        let gap: f64 = row[1].parse().unwrap();
        let e: f64 = row[0].parse().unwrap();
        assert!(gap.is_finite() && gap >= 0.0);
        assert!(gap <= 5.0 * e, "sup gap {gap} exceeds 5ε at ε = {e}");
    }
}

#[test]
fn partial_pinning_holds_short_sides_until_the_switch() {
    let out = hexflow(&[
        "--mode",
        "ode",
        "--partial-pinning",
        "--L-long",
        "3",
        "--L-short",
        "1",
        "--gamma",
        "1",
    ]);
    let text = stdout_of(&out);
    let rows = rows_of(&text);
    assert!(rows.len() >= 3);

    // Long sides (1 and 4) start pinned, short sides move one layer.
    let n0: Vec<&str> = (14..20).map(|j| rows[0][j].as_str()).collect();
    assert_eq!(n0, ["0", "1", "1", "0", "1", "1"]);

    // The long sides start moving when dragged to the threshold: with the
    // short level at 1, the drag rate is 2/γ, so the switch is at
    // T = (L_long − 16γ/9)/2.
    let switch_row = rows
        .iter()
        .find(|r| r[14] != "0")
        .expect("the long sides eventually unpin");
    let t_switch: f64 = switch_row[1].parse().unwrap();
    let expected = (3.0 - 16.0 / 9.0) / 2.0;
    assert!(
        (t_switch - expected).abs() < 1e-10,
        "switch at {t_switch}, expected {expected}"
    );
    // Until that event the short-side lengths are unchanged.
    let l2: f64 = switch_row[9].parse().unwrap();
    assert!((l2 - 1.0).abs() < 1e-9, "short sides moved early: L2 = {l2}");
}

#[test]
fn the_gamma_sweep_orders_extinction_times_correctly() {
    let out = hexflow(&["--gamma-limit"]);
    let text = stdout_of(&out);
    let rows = rows_of(&text);
    assert_eq!(rows.len(), 4);
    let mut last_rel = f64::INFINITY;
    for row in rows {
        let t_q: f64 = row[1].parse().unwrap();
        let t_c: f64 = row[2].parse().unwrap();
        let rel: f64 = row[3].parse().unwrap();
        assert!(t_q >= t_c, "quantized must be slower: {t_q} < {t_c}");
        assert!((t_c - 9.0 / 32.0).abs() < 1e-12, "closed form for L₀ = 1");
        assert!(rel < last_rel, "relative error must shrink along the sweep");
        last_rel = rel;
    }
}

#[test]
fn manifests_record_config_version_and_terminal_state() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("run.csv");
    let out = hexflow(&[
        "--mode",
        "discrete",
        "--gamma",
        "1",
        "--regular-L",
        "1",
        "--eps",
        "1/16",
        "--out",
        target.to_str().unwrap(),
    ]);
    stdout_of(&out);

    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("run.manifest.json"))).unwrap();
    assert_eq!(manifest["schema"], 1);
    assert_eq!(manifest["tool"]["name"], "hexflow");
    assert_eq!(manifest["tool"]["version"], env!("CARGO_PKG_VERSION"));
    // The config block preserves the exact rational spellings.
    assert_eq!(manifest["config"]["eps"]["raw"], "1/16");
    assert_eq!(manifest["config"]["gamma"]["raw"], "1");
    assert_eq!(manifest["config"]["mode"], "discrete");
    // Every listed output exists next to the manifest and carries a terminal.
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    let listed = dir.path().join(outputs[0]["path"].as_str().unwrap());
    assert!(listed.exists(), "manifest lists a missing file");
    assert_eq!(outputs[0]["terminal"]["kind"], "side_vanished");
    assert_eq!(manifest["terminal"]["kind"], "side_vanished");
}

#[test]
fn reruns_and_parallel_sweeps_are_byte_identical() {
    let sweep = |dir: &Path, jobs: &str| {
        let target = dir.join("s.csv");
        let out = hexflow(&[
            "--mode",
            "sweep",
            "--gamma",
            "1",
            "--regular-L",
            "1",
            "--eps-list",
            "1/16,1/32,1/64,1/128",
            "--jobs",
            jobs,
            "--out",
            target.to_str().unwrap(),
        ]);
        stdout_of(&out);
        let mut names: Vec<String> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        let blobs: Vec<String> = names.iter().map(|n| read(&dir.join(n))).collect();
        (names, blobs)
    };

    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let d3 = tempfile::tempdir().unwrap();
    let serial = sweep(d1.path(), "1");
    let parallel = sweep(d2.path(), "4");
    let parallel_again = sweep(d3.path(), "4");

    assert_eq!(
        serial.0,
        vec![
            "s-eps-1-128.csv",
            "s-eps-1-16.csv",
            "s-eps-1-32.csv",
            "s-eps-1-64.csv",
            "s.manifest.json",
        ]
    );
    assert_eq!(serial, parallel, "parallelism changed the artifacts");
    assert_eq!(parallel, parallel_again, "rerun changed the artifacts");

    // No leftover temp files from the atomic writes.
    assert!(serial.0.iter().all(|n| !n.ends_with(".tmp")));
}

#[test]
fn stdout_and_file_sinks_produce_the_same_table() {
    let args = ["--mode", "ode", "--gamma", "1", "--regular-L", "1"];
    let streamed = stdout_of(&hexflow(&args));

    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("t.csv");
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend(["--out", target.to_str().unwrap()]);
    stdout_of(&hexflow(&with_out));

    assert_eq!(streamed, read(&target));
}

#[test]
fn plot_data_melts_one_table_into_twelve_series() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("t.csv");
    stdout_of(&hexflow(&[
        "--mode",
        "ode",
        "--gamma",
        "1",
        "--regular-L",
        "1",
        "--out",
        target.to_str().unwrap(),
    ]));

    let melted = stdout_of(&hexflow(&["plot-data", target.to_str().unwrap()]));
    let mut lines = melted.lines();
    assert_eq!(lines.next().unwrap(), "t,series,value");
    let mut series: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    series.sort();
    series.dedup();
    let expected = [
        "L1", "L2", "L3", "L4", "L5", "L6", "s1", "s2", "s3", "s4", "s5", "s6",
    ];
    assert_eq!(series, expected);
}

#[test]
fn plot_data_aligns_quantized_and_crystalline_tables_on_one_grid() {
    let dir = tempfile::tempdir().unwrap();
    let quantized = dir.path().join("quantized.csv");
    let crystalline = dir.path().join("crystalline.csv");
    stdout_of(&hexflow(&[
        "--mode",
        "ode",
        "--gamma",
        "1",
        "--regular-L",
        "1",
        "--out",
        quantized.to_str().unwrap(),
    ]));
    stdout_of(&hexflow(&[
        "--mode",
        "crystalline",
        "--gamma",
        "1",
        "--regular-L",
        "1",
        "--out",
        crystalline.to_str().unwrap(),
    ]));

    let melted = stdout_of(&hexflow(&[
        "plot-data",
        quantized.to_str().unwrap(),
        crystalline.to_str().unwrap(),
    ]));
    let mut per_series: std::collections::BTreeMap<&str, Vec<&str>> = Default::default();
    for line in melted.lines().skip(1) {
        let mut cells = line.split(',');
        let t = cells.next().unwrap();
        let series = cells.next().unwrap();
        per_series.entry(series).or_default().push(t);
    }
    // 12 series per file, each prefixed by the file stem.
    assert_eq!(per_series.len(), 24);
    assert!(per_series.contains_key("quantized.L1"));
    assert!(per_series.contains_key("crystalline.s6"));
    // Shared grid: every series is sampled at exactly the same times.
    let reference = per_series.values().next().unwrap().clone();
    for (name, times) in &per_series {
        assert_eq!(times, &reference, "series {name} is off the shared grid");
    }
}

#[test]
fn exit_codes_separate_config_io_and_schema_errors() {
    // Config: --eps is mandatory in discrete mode.
    let out = hexflow(&["--mode", "discrete", "--gamma", "1", "--regular-L", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--eps"));

    // Io: unwritable output location.
    let out = hexflow(&[
        "--mode",
        "ode",
        "--gamma",
        "1",
        "--regular-L",
        "1",
        "--out",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Schema: an empty trajectory file.
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = hexflow(&["plot-data", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    // Schema: a CSV that is not a trajectory table.
    let other = dir.path().join("other.csv");
    std::fs::write(&other, "eps,sup_gap\n0.0625,0.1\n").unwrap();
    let out = hexflow(&["plot-data", other.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn a_singular_datum_reports_velocity_intervals_and_exits_zero() {
    // L exactly at the pinning threshold 16γ/9: the continuation is
    // genuinely non-unique, which is reported, not failed.
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("singular.json");
    let out = hexflow(&[
        "--mode",
        "ode",
        "--gamma",
        "1",
        "--regular-L",
        "16/9",
        "--out",
        target.to_str().unwrap(),
    ]);
    stdout_of(&out);
    let doc: serde_json::Value = serde_json::from_str(&read(&target)).unwrap();
    assert_eq!(doc["terminal"]["kind"], "non_unique_velocity");
    assert_eq!(doc["terminal"]["sides"].as_array().unwrap().len(), 6);
}

#[test]
fn the_output_extension_selects_json_and_rationals_survive_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("run.json");
    stdout_of(&hexflow(&[
        "--mode",
        "discrete",
        "--gamma",
        "2",
        "--regular-L",
        "8/5",
        "--eps",
        "1/64",
        "--out",
        target.to_str().unwrap(),
    ]));
    let doc: serde_json::Value = serde_json::from_str(&read(&target)).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["flow"], "discrete");
    assert_eq!(doc["eps"], 1.0 / 64.0);

    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("run.manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["format"], "json");
    assert_eq!(manifest["config"]["eps"]["raw"], "1/64");
    assert_eq!(manifest["config"]["eps"]["value"], 0.015625);
    assert_eq!(manifest["config"]["initial"]["side"]["raw"], "8/5");
    assert_eq!(manifest["config"]["initial"]["side"]["value"], 1.6);
}

#[test]
fn the_jobs_environment_variable_is_a_default_not_an_override() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("s.csv");
    let args = [
        "--mode",
        "sweep",
        "--gamma",
        "1",
        "--regular-L",
        "1",
        "--eps-list",
        "1/16,1/32",
        "--out",
        target.to_str().unwrap(),
    ];
    let out = hexflow_env(&args, "HEXFLOW_JOBS", "2");
    stdout_of(&out);
    assert!(dir.path().join("s-eps-1-16.csv").exists());

    // Malformed values are rejected loudly, naming the variable.
    let out = hexflow_env(&args, "HEXFLOW_JOBS", "many");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("HEXFLOW_JOBS"));
}
