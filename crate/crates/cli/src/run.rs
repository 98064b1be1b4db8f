//! Input loading and run orchestration.

use std::time::Instant;

use shakegrid::curves::CurveSet;
use shakegrid::engine::{self, SimInputs};
use shakegrid::grid::GridCase;
use shakegrid::hazard::ShakeRaster;
use shakegrid::metrics;
use shakegrid::xbb::XbbModel;

use crate::config::Resolved;
use crate::emit::{emit_outputs, EmitRequest};
use crate::manifest::{digest_file, RunManifest};
use crate::AppFailure;

pub fn execute(resolved: &Resolved) -> Result<(), AppFailure> {
    let started = Instant::now();

    let case_text = std::fs::read_to_string(&resolved.case_path).map_err(|e| {
        AppFailure::input(
            "SG_INPUT_CASE",
            format!("cannot read {}: {e}", resolved.case_path.display()),
        )
    })?;
    let case = GridCase::parse(&case_text)
        .map_err(|e| AppFailure::input("SG_INPUT_CASE", e.to_string()))?;

    let mean_text = std::fs::read_to_string(&resolved.mean_path).map_err(|e| {
        AppFailure::input(
            "SG_INPUT_RASTER",
            format!("cannot read {}: {e}", resolved.mean_path.display()),
        )
    })?;
    let sigma_text = std::fs::read_to_string(&resolved.sigma_path).map_err(|e| {
        AppFailure::input(
            "SG_INPUT_RASTER",
            format!("cannot read {}: {e}", resolved.sigma_path.display()),
        )
    })?;
    let raster = ShakeRaster::parse(&mean_text, &sigma_text)
        .map_err(|e| AppFailure::input("SG_INPUT_RASTER", e.to_string()))?;

    let curves = match &resolved.curves_path {
        None => CurveSet::with_defaults(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                AppFailure::input(
                    "SG_INPUT_CURVES",
                    format!("cannot read {}: {e}", path.display()),
                )
            })?;
            CurveSet::parse(&text)
                .map_err(|e| AppFailure::input("SG_INPUT_CURVES", e.to_string()))?
        }
    };

    let xbb =
        XbbModel::build(&case).map_err(|e| AppFailure::input("SG_INPUT_CASE", e.to_string()))?;

    if let Some(iter) = resolved.debug_pf_iteration {
        if iter >= resolved.sim.iterations {
            return Err(AppFailure::input(
                "SG_INPUT_CONFIG",
                format!(
                    "--debug-pf-iteration {iter} is outside 0..{}",
                    resolved.sim.iterations
                ),
            ));
        }
    }

    let inputs = SimInputs {
        case: &case,
        xbb: &xbb,
        raster: &raster,
        curves: &curves,
    };
    let run = engine::run_monte_carlo(&resolved.sim, &inputs, resolved.emit_daylogs)
        .map_err(|e| AppFailure::input("SG_INPUT_CONFIG", e.to_string()))?;
    let table = metrics::metrics_table(&run)
        .map_err(|e| AppFailure::io(format!("metrics computation: {e}")))?;

    let pf_debug = resolved
        .debug_pf_iteration
        .map(|iter| engine::replay_iteration_pf(&inputs, &resolved.sim, iter));

    let manifest = RunManifest {
        tool: "shakegrid".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: resolved.sim.master_seed,
        config: resolved.sim,
        case: digest_file(&resolved.case_path)?,
        shakemap_mean: digest_file(&resolved.mean_path)?,
        shakemap_sigma: digest_file(&resolved.sigma_path)?,
        curves: resolved
            .curves_path
            .as_deref()
            .map(digest_file)
            .transpose()?,
        emit_daylogs: resolved.emit_daylogs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };

    emit_outputs(
        &EmitRequest {
            run: &run,
            case: &case,
            xbb: &xbb,
            table: &table,
            manifest: &manifest,
            dump_xbb: resolved.dump_xbb,
            pf_debug: pf_debug.as_deref(),
        },
        &resolved.out_dir,
    )?;

    eprintln!(
        "shakegrid: wrote results for {} iterations x {} days to {}",
        resolved.sim.iterations,
        resolved.sim.horizon_days,
        resolved.out_dir.display()
    );
    Ok(())
}
