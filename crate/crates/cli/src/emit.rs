//! Result artifact writers. CSV for the bulk tables, JSON for structured
//! summaries; float fields use Rust's shortest-roundtrip formatting so
//! identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use shakegrid::engine::{RunResult, Series, NEVER};
use shakegrid::grid::GridCase;
use shakegrid::math::percentile_nearest_rank_u32;
use shakegrid::metrics::MetricsTable;
use shakegrid::powerflow::PfSolution;
use shakegrid::xbb::XbbModel;

use crate::manifest::RunManifest;
use crate::AppFailure;

pub fn write_file(out_dir: &Path, name: &str, content: &str) -> Result<(), AppFailure> {
    let path = out_dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| AppFailure::io(format!("cannot write {}: {e}", path.display())))
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn daylogs_csv(run: &RunResult) -> Option<String> {
    let iterations = run.day_logs.as_ref()?;
    let mut s = String::new();
    s.push_str(
        "iteration,day,connected_load_mw,connected_load_region_mw,degree_connected_load_mw,\
         degree_connected_load_region_mw,connected_gen_mw,connected_gen_region_mw,branches_out,\
         generators_out,loads_out,components_damaged,island_count,largest_island_bus_count,\
         pf_converged,pf_load_served_mw,pf_generation_available_mw\n",
    );
    for it in iterations {
        for log in &it.day_logs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                it.iteration,
                log.day,
                log.connected_load_mw,
                log.connected_load_region_mw,
                log.degree_connected_load_mw,
                log.degree_connected_load_region_mw,
                log.connected_gen_mw,
                log.connected_gen_region_mw,
                log.branches_out,
                log.generators_out,
                log.loads_out,
                log.components_damaged,
                log.island_count,
                log.largest_island_bus_count,
                log.pf_converged,
                opt_f64(log.pf_load_served_mw),
                log.pf_generation_available_mw,
            );
        }
    }
    Some(s)
}

pub fn percentiles_csv(run: &RunResult) -> String {
    let series = [
        ("connected_load", Series::ConnectedLoad),
        ("connected_load_region", Series::ConnectedLoadRegion),
        ("connected_gen", Series::ConnectedGen),
        ("connected_gen_region", Series::ConnectedGenRegion),
    ];
    let mut header = String::from("day");
    for (name, _) in &series {
        for q in ["p5", "p50", "p95"] {
            let _ = write!(header, ",{name}_{q}");
        }
    }
    let mut s = header;
    s.push('\n');

    let bands: Vec<[Vec<f64>; 3]> = series
        .iter()
        .map(|&(_, sr)| {
            [
                run.percentile_trajectory(sr, 5.0),
                run.percentile_trajectory(sr, 50.0),
                run.percentile_trajectory(sr, 95.0),
            ]
        })
        .collect();
    for day in 0..run.days() {
        let _ = write!(s, "{day}");
        for band in &bands {
            for q in band {
                let _ = write!(s, ",{}", q[day]);
            }
        }
        s.push('\n');
    }
    s
}

pub fn metrics_csv(table: &MetricsTable) -> String {
    let mut s = String::from(
        "percentile,p0_mw,pd_mw,pe_mw,t_db,t_de,t_rb,t_re,lambda_mw,phi_mw_per_day,\
         epsilon_days,pi_mw_per_day,resilience,unrecovered,t_f\n",
    );
    for row in &table.rows {
        let m = &row.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.percentile,
            m.p0,
            m.pd,
            opt_f64(m.pe),
            m.t_db,
            m.t_de,
            m.t_rb,
            m.t_re.map(|t| t.to_string()).unwrap_or_default(),
            m.lambda,
            opt_f64(m.phi),
            m.epsilon,
            opt_f64(m.pi),
            m.resilience,
            m.unrecovered,
            m.t_f,
        );
    }
    s
}

/// Per-substation recovery summary. Days beyond the horizon (or the NEVER
/// sentinel) are reported as -1: not recovered within the run.
pub fn substation_recovery_csv(run: &RunResult, case: &GridCase) -> String {
    let horizon = run.config.horizon_days;
    let report = |day: u32| -> i64 {
        if day == NEVER || day > horizon {
            -1
        } else {
            day as i64
        }
    };
    let mut s = String::from(
        "bus_id,lat,lon,full_service_day_p50,full_service_day_p95,\
         functional_day_p50,functional_day_p95\n",
    );
    let n_subs = case.buses.len();
    for sub in 0..n_subs {
        let full: Vec<u32> = run
            .substation_full_service_day
            .iter()
            .map(|per_iter| per_iter[sub])
            .collect();
        let functional: Vec<u32> = run
            .substation_functional_day
            .iter()
            .map(|per_iter| per_iter[sub])
            .collect();
        let loc = case.location_of_bus_idx(sub);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            case.buses[sub].id,
            loc.lat,
            loc.lon,
            report(percentile_nearest_rank_u32(&full, 50.0)),
            report(percentile_nearest_rank_u32(&full, 95.0)),
            report(percentile_nearest_rank_u32(&functional, 50.0)),
            report(percentile_nearest_rank_u32(&functional, 95.0)),
        );
    }
    s
}

pub fn islands_csv(run: &RunResult) -> String {
    let mut s = String::from("day,island_count_p50,largest_island_p50\n");
    for day in 0..run.days() {
        let _ = writeln!(
            s,
            "{},{},{}",
            day,
            percentile_nearest_rank_u32(&run.island_count[day], 50.0),
            percentile_nearest_rank_u32(&run.largest_island[day], 50.0),
        );
    }
    s
}

pub fn pf_convergence_csv(run: &RunResult) -> String {
    let mut s = String::from("day,converged_fraction,converged_by_fraction\n");
    let by = run.pf_converged_by_fraction();
    for (day, by_day) in by.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", day, run.pf_converged_fraction(day), by_day);
    }
    s
}

pub fn pf_debug_csv(solutions: &[Option<PfSolution>], case: &GridCase) -> String {
    let mut s = String::from("day,bus_id,vm_pu,va_rad\n");
    for (day, sol) in solutions.iter().enumerate() {
        let Some(sol) = sol else { continue };
        for (local, &bus_idx) in sol.bus_idxs.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                day, case.buses[bus_idx].id, sol.vm[local], sol.va[local]
            );
        }
    }
    s
}

pub struct EmitRequest<'a> {
    pub run: &'a RunResult,
    pub case: &'a GridCase,
    pub xbb: &'a XbbModel,
    pub table: &'a MetricsTable,
    pub manifest: &'a RunManifest,
    pub dump_xbb: bool,
    pub pf_debug: Option<&'a [Option<PfSolution>]>,
}

/// Write every artifact into `out_dir`, creating it if needed.
pub fn emit_outputs(req: &EmitRequest, out_dir: &Path) -> Result<(), AppFailure> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| AppFailure::io(format!("cannot create {}: {e}", out_dir.display())))?;

    if let Some(daylogs) = daylogs_csv(req.run) {
        write_file(out_dir, "daylogs.csv", &daylogs)?;
    }
    write_file(out_dir, "percentiles.csv", &percentiles_csv(req.run))?;
    write_file(out_dir, "metrics.csv", &metrics_csv(req.table))?;
    let metrics_json = serde_json::to_string_pretty(req.table)
        .map_err(|e| AppFailure::io(format!("metrics serialization: {e}")))?;
    write_file(out_dir, "metrics.json", &metrics_json)?;
    write_file(
        out_dir,
        "substation_recovery.csv",
        &substation_recovery_csv(req.run, req.case),
    )?;
    write_file(out_dir, "islands.csv", &islands_csv(req.run))?;
    write_file(out_dir, "pf_convergence.csv", &pf_convergence_csv(req.run))?;
    let manifest_json = serde_json::to_string_pretty(req.manifest)
        .map_err(|e| AppFailure::io(format!("manifest serialization: {e}")))?;
    write_file(out_dir, "manifest.json", &manifest_json)?;

    if req.dump_xbb {
        let topo = serde_json::to_string_pretty(&req.xbb.topology_json(req.case))
            .map_err(|e| AppFailure::io(format!("topology serialization: {e}")))?;
        write_file(out_dir, "xbb_topology.json", &topo)?;
    }
    if let Some(solutions) = req.pf_debug {
        write_file(
            out_dir,
            "pf_solutions.csv",
            &pf_debug_csv(solutions, req.case),
        )?;
    }
    Ok(())
}
