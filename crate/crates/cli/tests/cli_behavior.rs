//! CLI contract tests: exit codes, error tagging, config merging, rerun
//! determinism, and output schema sanity.

use std::path::PathBuf;
use std::process::{Command, Output};

fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../assets")
        .join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shakegrid"))
        .args(args)
        .output()
        .unwrap()
}

fn base_args(out: &str) -> Vec<String> {
    vec![
        "--case".into(),
        asset("cases/coastal30.json").display().to_string(),
        "--shakemap-mean".into(),
        asset("rasters/synthetic_csz_mean.asc")
            .display()
            .to_string(),
        "--shakemap-sigma".into(),
        asset("rasters/synthetic_csz_sigma.asc")
            .display()
            .to_string(),
        "--curves".into(),
        asset("curves/default_curves.json").display().to_string(),
        "--iterations".into(),
        "10".into(),
        "--days".into(),
        "30".into(),
        "--seed".into(),
        "42".into(),
        "--out".into(),
        out.into(),
    ]
}

#[test]
fn happy_path_exits_zero_with_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = base_args(dir.path().to_str().unwrap());
    args.push("--emit-daylogs".into());
    args.push("--dump-xbb".into());
    args.push("--debug-pf-iteration".into());
    args.push("0".into());
    let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "daylogs.csv",
        "percentiles.csv",
        "metrics.csv",
        "metrics.json",
        "substation_recovery.csv",
        "islands.csv",
        "pf_convergence.csv",
        "manifest.json",
        "xbb_topology.json",
        "pf_solutions.csv",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
}

#[test]
fn missing_curve_entry_names_the_pair_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // Drop the (disconnect_switch, high) entry from the curve table.
    let table: Vec<serde_json::Value> = serde_json::from_str(
        &std::fs::read_to_string(asset("curves/default_curves.json")).unwrap(),
    )
    .unwrap();
    let pruned: Vec<&serde_json::Value> = table
        .iter()
        .filter(|e| !(e["component"] == "disconnect_switch" && e["voltage"] == "high"))
        .collect();
    let curves_path = dir.path().join("pruned_curves.json");
    std::fs::write(&curves_path, serde_json::to_string(&pruned).unwrap()).unwrap();

    let out_dir = dir.path().join("out");
    let mut args = base_args(out_dir.to_str().unwrap());
    args[7] = curves_path.display().to_string();
    let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error[SG_INPUT_CURVES]"), "{stderr}");
    assert!(
        stderr.contains("disconnect_switch") && stderr.contains("high"),
        "must name the missing pair: {stderr}"
    );
}

#[test]
fn malformed_case_exits_one_with_tag() {
    let dir = tempfile::tempdir().unwrap();
    let bad_case = dir.path().join("bad.json");
    std::fs::write(&bad_case, "{\"name\": \"broken\"").unwrap();
    let out_dir = dir.path().join("out");
    let mut args = base_args(out_dir.to_str().unwrap());
    args[1] = bad_case.display().to_string();
    let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[SG_INPUT_CASE]"));
}

#[test]
fn unwritable_output_directory_exits_two() {
    let out = run(&base_args("/proc/shakegrid-cannot-write-here")
        .iter()
        .map(|s| s.as_str())
        .collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[SG_IO]"));
}

#[test]
fn identical_invocations_differ_only_in_wall_clock() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let mut args = base_args(dir.path().to_str().unwrap());
        args.push("--emit-daylogs".into());
        let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
        assert!(out.status.success());
    }
    for name in [
        "daylogs.csv",
        "percentiles.csv",
        "metrics.csv",
        "metrics.json",
        "substation_recovery.csv",
        "islands.csv",
        "pf_convergence.csv",
    ] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} not byte-identical");
    }
    // Manifests match after dropping the wall-clock field.
    let strip = |dir: &tempfile::TempDir| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        v.as_object_mut().unwrap().remove("wall_clock_seconds");
        v
    };
    assert_eq!(strip(&dir_a), strip(&dir_b));
}

#[test]
fn cli_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.json");
    let config = serde_json::json!({
        "case": asset("cases/coastal30.json"),
        "shakemap_mean": asset("rasters/synthetic_csz_mean.asc"),
        "shakemap_sigma": asset("rasters/synthetic_csz_sigma.asc"),
        "curves": asset("curves/default_curves.json"),
        "iterations": 99,
        "days": 23,
        "seed": 5,
        "out": dir.path().join("out"),
    });
    std::fs::write(&config_path, config.to_string()).unwrap();

    // --iterations on the command line beats the file's 99.
    let out = run(&[
        "--config",
        config_path.to_str().unwrap(),
        "--iterations",
        "4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["config"]["iterations"], 4);
    assert_eq!(manifest["config"]["horizon_days"], 23);
    assert_eq!(manifest["master_seed"], 5);
}

#[test]
fn outputs_parse_under_their_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = base_args(dir.path().to_str().unwrap());
    args.push("--emit-daylogs".into());
    let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(out.status.success());

    // Every CSV: consistent column counts, numeric fields parse.
    for (name, numeric_from) in [
        ("daylogs.csv", 0),
        ("percentiles.csv", 0),
        ("islands.csv", 0),
        ("pf_convergence.csv", 0),
        ("substation_recovery.csv", 1),
    ] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        let header_cols = lines.next().unwrap().split(',').count();
        let mut rows = 0;
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), header_cols, "{name}: ragged row");
            for f in fields.iter().skip(numeric_from) {
                if !f.is_empty() && *f != "true" && *f != "false" {
                    f.parse::<f64>()
                        .unwrap_or_else(|_| panic!("{name}: bad field {f}"));
                }
            }
            rows += 1;
        }
        assert!(rows > 0, "{name} is empty");
    }

    // daylogs row count = iterations × (horizon + 1).
    let daylogs = std::fs::read_to_string(dir.path().join("daylogs.csv")).unwrap();
    assert_eq!(daylogs.lines().count() - 1, 10 * 31);

    // substation_recovery has one row per bus.
    let recovery = std::fs::read_to_string(dir.path().join("substation_recovery.csv")).unwrap();
    assert_eq!(recovery.lines().count() - 1, 30);

    // metrics.json carries the three severity rows with ordered percentiles.
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    let rows = metrics["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let labels: Vec<u64> = rows
        .iter()
        .map(|r| r["percentile"].as_u64().unwrap())
        .collect();
    assert_eq!(labels, vec![5, 50, 95]);
    for row in rows {
        assert!(row["p0"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn unrecoverable_damage_falls_back_to_horizon_t_f() {
    // Everything shaken fails and repairs take ~1e6 days: the worst-case row
    // never recovers inside the horizon, so t_f falls back and is flagged.
    let dir = tempfile::tempdir().unwrap();
    let table: Vec<serde_json::Value> = serde_json::from_str(
        &std::fs::read_to_string(asset("curves/default_curves.json")).unwrap(),
    )
    .unwrap();
    let doomed: Vec<serde_json::Value> = table
        .into_iter()
        .map(|mut e| {
            e["fragility"]["median_g"] = serde_json::json!(1e-6);
            e["fragility"]["beta"] = serde_json::json!(0.1);
            e["restoration"]["median_days"] = serde_json::json!(1e6);
            e
        })
        .collect();
    let curves_path = dir.path().join("doomed.json");
    std::fs::write(&curves_path, serde_json::to_string(&doomed).unwrap()).unwrap();

    let out_dir = dir.path().join("out");
    let mut args = base_args(out_dir.to_str().unwrap());
    args[7] = curves_path.display().to_string();
    let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["t_f_fell_back_to_horizon"], true);
    assert_eq!(metrics["t_f"], 30);
    let worst = &metrics["rows"].as_array().unwrap()[2];
    assert_eq!(worst["percentile"], 95);
    assert_eq!(worst["unrecovered"], true);
    assert_eq!(worst["t_re"], serde_json::Value::Null);

    // Substations that never recover inside the horizon report -1.
    let recovery = std::fs::read_to_string(out_dir.join("substation_recovery.csv")).unwrap();
    assert!(recovery
        .lines()
        .skip(1)
        .any(|l| l.split(',').nth(3) == Some("-1")));
}

#[test]
fn connectivity_mode_flag_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = base_args(dir.path().to_str().unwrap());
    args.push("--connectivity-mode".into());
    args.push("component".into());
    let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["connectivity_mode"], "component");
}

#[test]
fn zero_damage_region_yields_flat_percentiles() {
    // Curves with enormous medians: nothing fails, so percentiles.csv holds
    // constant rows equal to the undamaged totals.
    let dir = tempfile::tempdir().unwrap();
    let table: Vec<serde_json::Value> = serde_json::from_str(
        &std::fs::read_to_string(asset("curves/default_curves.json")).unwrap(),
    )
    .unwrap();
    let immortal: Vec<serde_json::Value> = table
        .into_iter()
        .map(|mut e| {
            e["fragility"]["median_g"] = serde_json::json!(1e9);
            e
        })
        .collect();
    let curves_path = dir.path().join("immortal.json");
    std::fs::write(&curves_path, serde_json::to_string(&immortal).unwrap()).unwrap();

    let out_dir = dir.path().join("out");
    let mut args = base_args(out_dir.to_str().unwrap());
    args[7] = curves_path.display().to_string();
    let out = run(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(out.status.success());

    let text = std::fs::read_to_string(out_dir.join("percentiles.csv")).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        // connected_load p5/p50/p95 all equal the whole-system load.
        assert_eq!(f[1], "1885");
        assert_eq!(f[2], "1885");
        assert_eq!(f[3], "1885");
        // region load and gen capacity stay at their undamaged totals.
        assert_eq!(f[4], "355");
        assert_eq!(f[7], "4090");
    }

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metrics.json")).unwrap())
            .unwrap();
    for row in metrics["rows"].as_array().unwrap() {
        assert_eq!(row["lambda"], 0.0);
        assert_eq!(row["resilience"], 1.0);
    }
}
