//! The quasi-steady-state Monte Carlo loop: damage at day 0, restoration
//! draws, then a day-stepped recovery horizon with daily connectivity and
//! power-flow logging, across seeded iterations with deterministic
//! parallelism.
//!
//! Iterations are embarrassingly parallel; each owns a private damage state
//! and rng substream, and aggregation folds results in iteration order, so a
//! run is a pure function of `(inputs, master_seed)` regardless of thread
//! count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::CurveSet;
use crate::grid::{GridCase, RegionBox};
use crate::hazard::ShakeRaster;
use crate::math::percentile_nearest_rank;
use crate::powerflow::{
    find_islands, island_accounting, select_slack, solve_island, PfOptions, ServiceState,
};
use crate::rng::SubstreamRng;
use crate::xbb::{AssetRef, CompId, ConnectivityMode, DamageState, XbbModel};

/// Functional-connection sentinel: never reached within the horizon.
pub const NEVER: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub iterations: u32,
    pub horizon_days: u32,
    pub master_seed: u64,
    pub recovery_threshold: f64,
    pub region: RegionBox,
    pub connectivity_mode: ConnectivityMode,
    pub pf_tolerance_pu: f64,
    pub pf_max_iterations: u32,
    /// 0 = use the default thread count.
    pub thread_count: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            iterations: 2500,
            horizon_days: 1000,
            master_seed: 0,
            recovery_threshold: 0.99,
            region: RegionBox {
                min_lat: 39.0,
                max_lat: 49.0,
                min_lon: -130.0,
                max_lon: -121.0,
            },
            connectivity_mode: ConnectivityMode::Degree,
            pf_tolerance_pu: 1e-6,
            pf_max_iterations: 30,
            thread_count: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("config: iterations must be ≥ 1")]
    NoIterations,
    #[error("config: horizon_days must be ≥ 1")]
    NoHorizon,
    #[error("config: recovery_threshold must be in (0, 1], got {0}")]
    BadThreshold(f64),
}

/// Read-only simulation inputs shared across iterations.
#[derive(Clone, Copy)]
pub struct SimInputs<'a> {
    pub case: &'a GridCase,
    pub xbb: &'a XbbModel,
    pub raster: &'a ShakeRaster,
    pub curves: &'a CurveSet,
}

/// One simulated day's state snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayLog {
    pub day: u32,
    /// Load at in-service nodes whose bus sits in the largest island.
    pub connected_load_mw: f64,
    pub connected_load_region_mw: f64,
    /// Load at in-service nodes regardless of island membership.
    pub degree_connected_load_mw: f64,
    pub degree_connected_load_region_mw: f64,
    /// Generation capacity at in-service generators in the largest island.
    pub connected_gen_mw: f64,
    pub connected_gen_region_mw: f64,
    pub branches_out: u32,
    pub generators_out: u32,
    pub loads_out: u32,
    pub components_damaged: u32,
    pub island_count: u32,
    pub largest_island_bus_count: u32,
    pub pf_converged: bool,
    pub pf_load_served_mw: Option<f64>,
    pub pf_generation_available_mw: f64,
}

/// Everything logged for one Monte Carlo iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationResult {
    pub iteration: u32,
    /// horizon_days + 1 entries; index = day.
    pub day_logs: Vec<DayLog>,
    /// Per substation: max recovery day over its own components (0 when
    /// untouched). May exceed the horizon; reporting marks those unrecovered.
    pub substation_full_service_day: Vec<u32>,
    /// Per substation: first day the functional-connection criterion holds
    /// ([`NEVER`] when not reached within the horizon).
    pub substation_functional_day: Vec<u32>,
}

/// The logged per-day scalar series, addressable for percentile queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    ConnectedLoad,
    ConnectedLoadRegion,
    DegreeConnectedLoad,
    DegreeConnectedLoadRegion,
    ConnectedGen,
    ConnectedGenRegion,
}

impl Series {
    pub const ALL: [Series; 6] = [
        Series::ConnectedLoad,
        Series::ConnectedLoadRegion,
        Series::DegreeConnectedLoad,
        Series::DegreeConnectedLoadRegion,
        Series::ConnectedGen,
        Series::ConnectedGenRegion,
    ];

    fn index(self) -> usize {
        match self {
            Series::ConnectedLoad => 0,
            Series::ConnectedLoadRegion => 1,
            Series::DegreeConnectedLoad => 2,
            Series::DegreeConnectedLoadRegion => 3,
            Series::ConnectedGen => 4,
            Series::ConnectedGenRegion => 5,
        }
    }

    fn pick(self, log: &DayLog) -> f64 {
        match self {
            Series::ConnectedLoad => log.connected_load_mw,
            Series::ConnectedLoadRegion => log.connected_load_region_mw,
            Series::DegreeConnectedLoad => log.degree_connected_load_mw,
            Series::DegreeConnectedLoadRegion => log.degree_connected_load_region_mw,
            Series::ConnectedGen => log.connected_gen_mw,
            Series::ConnectedGenRegion => log.connected_gen_region_mw,
        }
    }
}

/// Aggregated run output: per-day scalar matrices over iterations, the
/// per-substation recovery days, and (optionally) the full day logs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub config: SimulationConfig,
    /// Undamaged totals (system and region): the P0 reference values.
    pub system_load_p0_mw: f64,
    pub region_load_p0_mw: f64,
    pub system_gen_p0_mw: f64,
    pub region_gen_p0_mw: f64,
    /// `series[s][day][iteration]` for the six scalar series.
    series: Vec<Vec<Vec<f64>>>,
    /// `[day][iteration]` matrices.
    pub island_count: Vec<Vec<u32>>,
    pub largest_island: Vec<Vec<u32>>,
    pub pf_converged: Vec<Vec<bool>>,
    pub pf_load_served_mw: Vec<Vec<Option<f64>>>,
    /// `[iteration][substation]`.
    pub substation_full_service_day: Vec<Vec<u32>>,
    pub substation_functional_day: Vec<Vec<u32>>,
    /// Full per-iteration logs, when retention was requested.
    pub day_logs: Option<Vec<IterationResult>>,
}

impl RunResult {
    pub fn days(&self) -> usize {
        self.config.horizon_days as usize + 1
    }

    /// Per-day nearest-rank percentile of one series across iterations.
    pub fn percentile_trajectory(&self, series: Series, q: f64) -> Vec<f64> {
        self.series[series.index()]
            .iter()
            .map(|day_values| percentile_nearest_rank(day_values, q))
            .collect()
    }

    pub fn series_day(&self, series: Series, day: usize) -> &[f64] {
        &self.series[series.index()][day]
    }

    /// Fraction of iterations whose power flow converged on `day`.
    pub fn pf_converged_fraction(&self, day: usize) -> f64 {
        let row = &self.pf_converged[day];
        row.iter().filter(|&&c| c).count() as f64 / row.len() as f64
    }

    /// Fraction of iterations whose first convergence happened on or before
    /// `day` (the convergence CDF).
    pub fn pf_converged_by_fraction(&self) -> Vec<f64> {
        let iters = self.config.iterations as usize;
        let days = self.days();
        let mut first = vec![NEVER; iters];
        for day in 0..days {
            for (it, first_day) in first.iter_mut().enumerate() {
                if *first_day == NEVER && self.pf_converged[day][it] {
                    *first_day = day as u32;
                }
            }
        }
        (0..days)
            .map(|day| {
                first
                    .iter()
                    .filter(|&&f| f != NEVER && f as usize <= day)
                    .count() as f64
                    / iters as f64
            })
            .collect()
    }
}

/// The day-0 damage phase: one PGA draw per location (ascending location
/// id), a fragility trial per component (ascending component id), then a
/// restoration-day draw per damaged component (ascending component id).
#[derive(Debug, Clone, PartialEq)]
pub struct DamageDraw {
    /// Indexed by location index in the case.
    pub pga_by_location: Vec<f64>,
    /// (component, recovery day), ascending by component id.
    pub damaged: Vec<(CompId, u32)>,
}

pub fn damage_phase(inputs: &SimInputs, rng: &mut SubstreamRng) -> DamageDraw {
    let case = inputs.case;
    let mut order: Vec<usize> = (0..case.locations.len()).collect();
    order.sort_by_key(|&i| case.locations[i].id);

    let mut pga_by_location = vec![0.0; case.locations.len()];
    for &li in &order {
        pga_by_location[li] = inputs.raster.sample_pga(&case.locations[li], rng).pga_g;
    }

    let mut failed = Vec::new();
    for (ci, info) in inputs.xbb.components.iter().enumerate() {
        let pga = pga_by_location[info.location_idx];
        let curve = inputs.curves.fragility(info.kind, info.voltage_class);
        if curve.sample_failure(pga, rng) {
            failed.push(ci as CompId);
        }
    }

    let damaged = failed
        .into_iter()
        .map(|ci| {
            let info = &inputs.xbb.components[ci as usize];
            let curve = inputs.curves.restoration(info.kind, info.voltage_class);
            (ci, curve.sample_day(rng))
        })
        .collect();

    DamageDraw {
        pga_by_location,
        damaged,
    }
}

/// Asset in-service flags implied by the current damage state.
fn derive_service(
    case: &GridCase,
    xbb: &XbbModel,
    state: &DamageState,
    mode: ConnectivityMode,
) -> ServiceState {
    let mut service = ServiceState::from_case(case);
    for (graph_idx, graph) in xbb.graphs.iter().enumerate() {
        if state.substation_fully_restored(graph_idx) {
            continue;
        }
        for asset in state.out_of_service_assets(graph, mode) {
            match asset {
                AssetRef::BranchEnd { branch_idx, .. } => {
                    service.branch_in_service[branch_idx] = false;
                }
                AssetRef::Generator { gen_idx } => service.gen_in_service[gen_idx] = false,
                AssetRef::Load { load_idx } => service.load_in_service[load_idx] = false,
            }
        }
    }
    for branch_idx in 0..case.branches.len() {
        if state.branch_transformer_down(branch_idx) {
            service.branch_in_service[branch_idx] = false;
        }
    }
    service
}

fn compute_day_log(
    day: u32,
    inputs: &SimInputs,
    config: &SimulationConfig,
    state: &DamageState,
    service: &ServiceState,
    region_mask: &[bool],
) -> DayLog {
    let case = inputs.case;
    let islands = find_islands(case, service);
    let largest = &islands[0];
    let mut in_largest = vec![false; case.buses.len()];
    for &b in &largest.bus_idxs {
        in_largest[b] = true;
    }

    let mut connected_load = 0.0;
    let mut connected_load_region = 0.0;
    let mut degree_load = 0.0;
    let mut degree_load_region = 0.0;
    for (li, load) in case.loads.iter().enumerate() {
        if !service.load_in_service[li] {
            continue;
        }
        let bus = case.bus_idx(load.bus).unwrap();
        degree_load += load.p;
        if region_mask[bus] {
            degree_load_region += load.p;
        }
        if in_largest[bus] {
            connected_load += load.p;
            if region_mask[bus] {
                connected_load_region += load.p;
            }
        }
    }

    let mut connected_gen = 0.0;
    let mut connected_gen_region = 0.0;
    for (gi, gen) in case.generators.iter().enumerate() {
        if !service.gen_in_service[gi] {
            continue;
        }
        let bus = case.bus_idx(gen.bus).unwrap();
        if in_largest[bus] {
            connected_gen += gen.pmax;
            if region_mask[bus] {
                connected_gen_region += gen.pmax;
            }
        }
    }

    let branches_out = service.branch_in_service.iter().filter(|&&s| !s).count() as u32;
    let generators_out = service.gen_in_service.iter().filter(|&&s| !s).count() as u32;
    let loads_out = service.load_in_service.iter().filter(|&&s| !s).count() as u32;

    let pf_opts = PfOptions {
        tolerance_pu: config.pf_tolerance_pu,
        max_iterations: config.pf_max_iterations,
        ..PfOptions::default()
    };
    let (pf_converged, pf_load_served_mw) = match select_slack(case, largest, service) {
        Ok(slack) => {
            let sol = solve_island(case, largest, slack, &pf_opts, None);
            let acct = island_accounting(case, largest, sol.converged);
            (sol.converged, acct.load_served_mw)
        }
        Err(_) => (false, None),
    };
    let pf_generation_available_mw =
        island_accounting(case, largest, false).generation_available_mw;

    DayLog {
        day,
        connected_load_mw: connected_load,
        connected_load_region_mw: connected_load_region,
        degree_connected_load_mw: degree_load,
        degree_connected_load_region_mw: degree_load_region,
        connected_gen_mw: connected_gen,
        connected_gen_region_mw: connected_gen_region,
        branches_out,
        generators_out,
        loads_out,
        components_damaged: state.remaining_damaged(),
        island_count: islands.len() as u32,
        largest_island_bus_count: largest.bus_count() as u32,
        pf_converged,
        pf_load_served_mw,
        pf_generation_available_mw,
    }
}

/// One full iteration: damage, schedule, then step the horizon day by day.
/// Days without recovery events reuse the previous day's snapshot (the state
/// is identical, so the log is too).
pub fn run_iteration(
    inputs: &SimInputs,
    config: &SimulationConfig,
    iteration: u32,
) -> IterationResult {
    let mut rng = SubstreamRng::new(config.master_seed, iteration as u64);
    let draw = damage_phase(inputs, &mut rng);

    let mut state = inputs.xbb.undamaged_state();
    state
        .apply_damage(inputs.xbb, &draw.damaged)
        .expect("damage_phase produces valid component ids");

    let region_mask: Vec<bool> = (0..inputs.case.buses.len())
        .map(|b| {
            let loc = inputs.case.location_of_bus_idx(b);
            config.region.contains(loc.lat, loc.lon)
        })
        .collect();

    let substation_full_service_day = state.full_service_days(inputs.xbb);
    let n_subs = inputs.xbb.graphs.len();
    let mut substation_functional_day = vec![NEVER; n_subs];
    let mode = config.connectivity_mode;
    for (gi, graph) in inputs.xbb.graphs.iter().enumerate() {
        if state.is_functionally_connected(graph, mode) {
            substation_functional_day[gi] = 0;
        }
    }

    let mut day_logs = Vec::with_capacity(config.horizon_days as usize + 1);
    let mut service = derive_service(inputs.case, inputs.xbb, &state, mode);
    day_logs.push(compute_day_log(
        0,
        inputs,
        config,
        &state,
        &service,
        &region_mask,
    ));

    let event_days: Vec<u32> = state
        .event_days()
        .into_iter()
        .filter(|&d| d <= config.horizon_days)
        .collect();
    let mut next_event = 0usize;

    for day in 1..=config.horizon_days {
        if next_event < event_days.len() && event_days[next_event] == day {
            next_event += 1;
            let returned = state.advance_restoration(inputs.xbb, day);
            // Only substations that got an edge back can newly satisfy the
            // functional-connection criterion.
            let mut touched: Vec<usize> = returned
                .iter()
                .map(|&ge| {
                    // Global edge ids are contiguous per graph.
                    inputs.xbb.graphs.partition_point(|g| g.edge_offset <= ge) - 1
                })
                .collect();
            touched.dedup();
            for gi in touched {
                if substation_functional_day[gi] == NEVER
                    && state.is_functionally_connected(&inputs.xbb.graphs[gi], mode)
                {
                    substation_functional_day[gi] = day;
                }
            }
            service = derive_service(inputs.case, inputs.xbb, &state, mode);
            day_logs.push(compute_day_log(
                day,
                inputs,
                config,
                &state,
                &service,
                &region_mask,
            ));
        } else {
            let mut log = day_logs.last().unwrap().clone();
            log.day = day;
            day_logs.push(log);
        }
    }

    IterationResult {
        iteration,
        day_logs,
        substation_full_service_day,
        substation_functional_day,
    }
}

/// Run the full set of iterations and aggregate. `retain_day_logs` keeps
/// every iteration's logs in the result (needed for the day-log export);
/// aggregation itself never requires them.
pub fn run_monte_carlo(
    config: &SimulationConfig,
    inputs: &SimInputs,
    retain_day_logs: bool,
) -> Result<RunResult, EngineError> {
    if config.iterations == 0 {
        return Err(EngineError::NoIterations);
    }
    if config.horizon_days == 0 {
        return Err(EngineError::NoHorizon);
    }
    if !(config.recovery_threshold > 0.0 && config.recovery_threshold <= 1.0) {
        return Err(EngineError::BadThreshold(config.recovery_threshold));
    }

    let days = config.horizon_days as usize + 1;
    let iters = config.iterations as usize;

    let mut result = RunResult {
        config: *config,
        system_load_p0_mw: inputs.case.summary(None).load_mw,
        region_load_p0_mw: inputs.case.summary(Some(&config.region)).load_mw,
        system_gen_p0_mw: inputs.case.summary(None).gen_capacity_mw,
        region_gen_p0_mw: inputs.case.summary(Some(&config.region)).gen_capacity_mw,
        series: (0..Series::ALL.len())
            .map(|_| (0..days).map(|_| Vec::with_capacity(iters)).collect())
            .collect(),
        island_count: (0..days).map(|_| Vec::with_capacity(iters)).collect(),
        largest_island: (0..days).map(|_| Vec::with_capacity(iters)).collect(),
        pf_converged: (0..days).map(|_| Vec::with_capacity(iters)).collect(),
        pf_load_served_mw: (0..days).map(|_| Vec::with_capacity(iters)).collect(),
        substation_full_service_day: Vec::with_capacity(iters),
        substation_functional_day: Vec::with_capacity(iters),
        day_logs: retain_day_logs.then(Vec::new),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.thread_count)
        .build()
        .expect("thread pool construction");

    let batch = 64.max(rayon::current_num_threads() * 4);
    let mut done = 0u32;
    let progress_every = (config.iterations / 20).max(1);
    let mut next_progress = progress_every;

    for start in (0..config.iterations).step_by(batch) {
        let end = (start + batch as u32).min(config.iterations);
        let chunk: Vec<IterationResult> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| run_iteration(inputs, config, i))
                .collect()
        });
        for iter_result in chunk {
            fold_iteration(&mut result, &iter_result);
            if let Some(logs) = result.day_logs.as_mut() {
                logs.push(iter_result);
            }
        }
        done = end;
        if done >= next_progress {
            eprintln!(
                "shakegrid: {done}/{} iterations complete",
                config.iterations
            );
            next_progress += progress_every;
        }
    }
    debug_assert_eq!(done, config.iterations);

    Ok(result)
}

/// Replay one iteration's dynamics and return the largest-island power-flow
/// solution for every day (None when no slack exists). Deterministic replay
/// of the same substream the engine used; intended for the debug CSV dump.
pub fn replay_iteration_pf(
    inputs: &SimInputs,
    config: &SimulationConfig,
    iteration: u32,
) -> Vec<Option<crate::powerflow::PfSolution>> {
    let mut rng = SubstreamRng::new(config.master_seed, iteration as u64);
    let draw = damage_phase(inputs, &mut rng);
    let mut state = inputs.xbb.undamaged_state();
    state
        .apply_damage(inputs.xbb, &draw.damaged)
        .expect("damage_phase produces valid component ids");

    let pf_opts = PfOptions {
        tolerance_pu: config.pf_tolerance_pu,
        max_iterations: config.pf_max_iterations,
        ..PfOptions::default()
    };
    let solve_current = |state: &DamageState| {
        let service = derive_service(inputs.case, inputs.xbb, state, config.connectivity_mode);
        let islands = find_islands(inputs.case, &service);
        match select_slack(inputs.case, &islands[0], &service) {
            Ok(slack) => Some(solve_island(
                inputs.case,
                &islands[0],
                slack,
                &pf_opts,
                None,
            )),
            Err(_) => None,
        }
    };

    let mut out = Vec::with_capacity(config.horizon_days as usize + 1);
    out.push(solve_current(&state));
    let event_days: Vec<u32> = state
        .event_days()
        .into_iter()
        .filter(|&d| d <= config.horizon_days)
        .collect();
    let mut next_event = 0usize;
    for day in 1..=config.horizon_days {
        if next_event < event_days.len() && event_days[next_event] == day {
            next_event += 1;
            state.advance_restoration(inputs.xbb, day);
            out.push(solve_current(&state));
        } else {
            out.push(out.last().unwrap().clone());
        }
    }
    out
}

fn fold_iteration(result: &mut RunResult, iter_result: &IterationResult) {
    for (day, log) in iter_result.day_logs.iter().enumerate() {
        for s in Series::ALL {
            result.series[s.index()][day].push(s.pick(log));
        }
        result.island_count[day].push(log.island_count);
        result.largest_island[day].push(log.largest_island_bus_count);
        result.pf_converged[day].push(log.pf_converged);
        result.pf_load_served_mw[day].push(log.pf_load_served_mw);
    }
    result
        .substation_full_service_day
        .push(iter_result.substation_full_service_day.clone());
    result
        .substation_functional_day
        .push(iter_result.substation_functional_day.clone());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{CurveEntry, CurveSet};
    use crate::grid::{
        BranchId, BranchRecord, BusId, BusKind, BusRecord, CaseFile, GenId, GenRecord, LoadId,
        LoadRecord, LocationId, LocationRecord,
    };
    use crate::hazard::ShakeRaster;
    use crate::xbb::XbbModel;

    /// 4-bus case: two west (shaken) buses, two east (quiet) buses.
    /// Gen in the east, loads both sides.
    pub(crate) fn mini_case() -> GridCase {
        GridCase::from_file(CaseFile {
            name: "mini4".into(),
            base_mva: 100.0,
            locations: vec![
                LocationRecord {
                    id: LocationId(1),
                    lat: 45.0,
                    lon: -123.5,
                },
                LocationRecord {
                    id: LocationId(2),
                    lat: 44.0,
                    lon: -123.0,
                },
                LocationRecord {
                    id: LocationId(3),
                    lat: 45.0,
                    lon: -118.0,
                },
                LocationRecord {
                    id: LocationId(4),
                    lat: 44.0,
                    lon: -117.5,
                },
            ],
            buses: vec![
                BusRecord {
                    id: BusId(1),
                    location: LocationId(1),
                    base_kv: 230.0,
                    kind: BusKind::Pq,
                },
                BusRecord {
                    id: BusId(2),
                    location: LocationId(2),
                    base_kv: 230.0,
                    kind: BusKind::Pq,
                },
                BusRecord {
                    id: BusId(3),
                    location: LocationId(3),
                    base_kv: 230.0,
                    kind: BusKind::SlackCandidate,
                },
                BusRecord {
                    id: BusId(4),
                    location: LocationId(4),
                    base_kv: 230.0,
                    kind: BusKind::Pq,
                },
            ],
            branches: vec![
                BranchRecord {
                    id: BranchId(1),
                    from: BusId(1),
                    to: BusId(2),
                    r: 0.01,
                    x: 0.06,
                    b: 0.02,
                    transformer: false,
                    in_service: true,
                },
                BranchRecord {
                    id: BranchId(2),
                    from: BusId(2),
                    to: BusId(3),
                    r: 0.01,
                    x: 0.06,
                    b: 0.02,
                    transformer: false,
                    in_service: true,
                },
                BranchRecord {
                    id: BranchId(3),
                    from: BusId(3),
                    to: BusId(4),
                    r: 0.01,
                    x: 0.06,
                    b: 0.02,
                    transformer: false,
                    in_service: true,
                },
                BranchRecord {
                    id: BranchId(4),
                    from: BusId(1),
                    to: BusId(3),
                    r: 0.02,
                    x: 0.12,
                    b: 0.02,
                    transformer: false,
                    in_service: true,
                },
            ],
            generators: vec![GenRecord {
                id: GenId(1),
                bus: BusId(3),
                pmax: 500.0,
                pmin: 0.0,
                qmax: 250.0,
                qmin: -250.0,
                vset: 1.02,
                in_service: true,
            }],
            loads: vec![
                LoadRecord {
                    id: LoadId(1),
                    bus: BusId(1),
                    p: 60.0,
                    q: 15.0,
                    in_service: true,
                },
                LoadRecord {
                    id: LoadId(2),
                    bus: BusId(2),
                    p: 40.0,
                    q: 10.0,
                    in_service: true,
                },
                LoadRecord {
                    id: LoadId(3),
                    bus: BusId(4),
                    p: 80.0,
                    q: 20.0,
                    in_service: true,
                },
            ],
        })
        .unwrap()
    }

    /// Raster covering the two western locations with a deterministic (σ=0)
    /// PGA of `pga_g`; the eastern locations fall outside.
    pub(crate) fn west_raster(pga_g: f64) -> ShakeRaster {
        let mu = pga_g.ln();
        let mean = format!(
            "ncols 2\nnrows 2\nxllcorner -124.0\nyllcorner 43.0\ncellsize 1.5\n{mu} {mu}\n{mu} {mu}\n"
        );
        let sigma = "ncols 2\nnrows 2\nxllcorner -124.0\nyllcorner 43.0\ncellsize 1.5\n0 0\n0 0\n"
            .to_string();
        ShakeRaster::parse(&mean, &sigma).unwrap()
    }

    /// Curves with a single fragility probability `p` at PGA 1.0 for every
    /// kind/class (median chosen so Φ(ln(1/median)/β) = p) and fixed
    /// restoration at `days`.
    pub(crate) fn flat_curves(p: f64, days: f64) -> CurveSet {
        let beta = 0.4;
        let median = (-crate::math::phi_inv(p) * beta).exp();
        let entries: Vec<CurveEntry> = CurveSet::default_table()
            .into_iter()
            .map(|mut e| {
                e.fragility.median_g = median;
                e.fragility.beta = beta;
                e.restoration.median_days = days;
                e.restoration.beta = 1e-9;
                e
            })
            .collect();
        CurveSet::from_entries(&entries).unwrap()
    }

    fn no_damage_curves() -> CurveSet {
        // Medians far above any sampled PGA: nothing ever fails.
        let entries: Vec<CurveEntry> = CurveSet::default_table()
            .into_iter()
            .map(|mut e| {
                e.fragility.median_g = 1e9;
                e
            })
            .collect();
        CurveSet::from_entries(&entries).unwrap()
    }

    fn test_config(iterations: u32, days: u32) -> SimulationConfig {
        SimulationConfig {
            iterations,
            horizon_days: days,
            master_seed: 7,
            region: RegionBox::new(39.0, 49.0, -130.0, -121.0).unwrap(),
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn zero_damage_run_is_flat_at_p0() {
        let case = mini_case();
        let xbb = XbbModel::build(&case).unwrap();
        let raster = west_raster(0.8);
        let curves = no_damage_curves();
        let inputs = SimInputs {
            case: &case,
            xbb: &xbb,
            raster: &raster,
            curves: &curves,
        };
        let config = test_config(3, 10);
        let run = run_monte_carlo(&config, &inputs, true).unwrap();

        assert_eq!(run.system_load_p0_mw, 180.0);
        assert_eq!(run.region_load_p0_mw, 100.0);
        for it in run.day_logs.as_ref().unwrap() {
            assert_eq!(it.day_logs.len(), 11);
            for log in &it.day_logs {
                assert_eq!(log.connected_load_mw, 180.0);
                assert_eq!(log.connected_load_region_mw, 100.0);
                assert_eq!(log.island_count, 1);
                assert_eq!(log.largest_island_bus_count, 4);
                assert!(log.pf_converged);
                assert_eq!(log.pf_load_served_mw, Some(180.0));
                assert_eq!(log.components_damaged, 0);
            }
            assert!(it.substation_full_service_day.iter().all(|&d| d == 0));
            assert!(it.substation_functional_day.iter().all(|&d| d == 0));
        }
    }

    #[test]
    fn forced_damage_recovers_on_schedule() {
        let case = mini_case();
        let xbb = XbbModel::build(&case).unwrap();
        let raster = west_raster(100.0); // enormous shaking in the west
                                         // A 6.5-day median with a vanishing beta pins every draw to day 7
                                         // (an exactly integer median would straddle the ceiling boundary).
        let curves = flat_curves(0.999_999, 6.5);
        let inputs = SimInputs {
            case: &case,
            xbb: &xbb,
            raster: &raster,
            curves: &curves,
        };
        let config = test_config(2, 12);
        let run = run_monte_carlo(&config, &inputs, true).unwrap();

        for it in run.day_logs.as_ref().unwrap() {
            // All western components fail → region load is 0 through day 6.
            for day in 0..7 {
                assert_eq!(it.day_logs[day].connected_load_region_mw, 0.0, "day {day}");
            }
            // Day 7: everything repaired; back to the pre-event state.
            for day in 7..=12 {
                let log = &it.day_logs[day];
                assert_eq!(log.connected_load_region_mw, 100.0, "day {day}");
                assert_eq!(log.connected_load_mw, 180.0);
                assert_eq!(log.components_damaged, 0);
            }
            // Eastern substations were never damaged.
            assert_eq!(it.substation_full_service_day[2], 0);
            assert_eq!(it.substation_full_service_day[3], 0);
            assert_eq!(it.substation_full_service_day[0], 7);
            assert_eq!(it.substation_functional_day[0], 7);
        }
    }

    #[test]
    fn connected_load_and_islands_are_monotone() {
        let case = mini_case();
        let xbb = XbbModel::build(&case).unwrap();
        let raster = west_raster(0.9);
        let curves = CurveSet::with_defaults();
        let inputs = SimInputs {
            case: &case,
            xbb: &xbb,
            raster: &raster,
            curves: &curves,
        };
        let config = test_config(40, 60);
        let run = run_monte_carlo(&config, &inputs, true).unwrap();

        for it in run.day_logs.as_ref().unwrap() {
            let logs = &it.day_logs;
            for w in logs.windows(2) {
                assert!(w[1].connected_load_mw >= w[0].connected_load_mw);
                assert!(w[1].connected_load_region_mw >= w[0].connected_load_region_mw);
                assert!(w[1].degree_connected_load_mw >= w[0].degree_connected_load_mw);
                assert!(w[1].largest_island_bus_count >= w[0].largest_island_bus_count);
                assert!(w[1].branches_out <= w[0].branches_out);
                assert!(w[1].generators_out <= w[0].generators_out);
                assert!(w[1].loads_out <= w[0].loads_out);
                assert!(w[1].components_damaged <= w[0].components_damaged);
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let case = mini_case();
        let xbb = XbbModel::build(&case).unwrap();
        let raster = west_raster(0.9);
        let curves = CurveSet::with_defaults();
        let inputs = SimInputs {
            case: &case,
            xbb: &xbb,
            raster: &raster,
            curves: &curves,
        };

        let mut config = test_config(12, 20);
        config.thread_count = 1;
        let run_serial = run_monte_carlo(&config, &inputs, true).unwrap();
        config.thread_count = 8;
        let run_parallel = run_monte_carlo(&config, &inputs, true).unwrap();

        // Configs differ in thread_count; everything else must be identical.
        assert_eq!(run_serial.series, run_parallel.series);
        assert_eq!(run_serial.day_logs, run_parallel.day_logs);
        assert_eq!(
            run_serial.substation_full_service_day,
            run_parallel.substation_full_service_day
        );
        assert_eq!(run_serial.pf_converged, run_parallel.pf_converged);
    }

    #[test]
    fn percentile_trajectories_are_ordered() {
        let case = mini_case();
        let xbb = XbbModel::build(&case).unwrap();
        let raster = west_raster(0.7);
        let curves = CurveSet::with_defaults();
        let inputs = SimInputs {
            case: &case,
            xbb: &xbb,
            raster: &raster,
            curves: &curves,
        };
        let run = run_monte_carlo(&test_config(50, 40), &inputs, false).unwrap();

        let p5 = run.percentile_trajectory(Series::ConnectedLoad, 5.0);
        let p50 = run.percentile_trajectory(Series::ConnectedLoad, 50.0);
        let p95 = run.percentile_trajectory(Series::ConnectedLoad, 95.0);
        for day in 0..run.days() {
            assert!(p5[day] <= p50[day] && p50[day] <= p95[day], "day {day}");
        }
        let p0 = run.percentile_trajectory(Series::ConnectedLoad, 0.0);
        let p100 = run.percentile_trajectory(Series::ConnectedLoad, 100.0);
        for day in 0..run.days() {
            assert!(p0[day] <= p5[day] && p95[day] <= p100[day]);
        }
    }

    #[test]
    fn convergence_cdf_is_non_decreasing() {
        let case = mini_case();
        let xbb = XbbModel::build(&case).unwrap();
        let raster = west_raster(0.9);
        let curves = CurveSet::with_defaults();
        let inputs = SimInputs {
            case: &case,
            xbb: &xbb,
            raster: &raster,
            curves: &curves,
        };
        let run = run_monte_carlo(&test_config(30, 30), &inputs, false).unwrap();
        let cdf = run.pf_converged_by_fraction();
        for w in cdf.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn damage_phase_draw_order_is_stable() {
        let case = mini_case();
        let xbb = XbbModel::build(&case).unwrap();
        let raster = west_raster(0.6);
        let curves = CurveSet::with_defaults();
        let inputs = SimInputs {
            case: &case,
            xbb: &xbb,
            raster: &raster,
            curves: &curves,
        };
        let a = damage_phase(&inputs, &mut SubstreamRng::new(11, 5));
        let b = damage_phase(&inputs, &mut SubstreamRng::new(11, 5));
        assert_eq!(a, b);
        // Damaged list is ascending by component id with days ≥ 1.
        for w in a.damaged.windows(2) {
            assert!(w[0].0 < w[1].0);
        }
        assert!(a.damaged.iter().all(|&(_, d)| d >= 1));
    }

    #[test]
    fn component_mode_never_connects_more_load_than_degree_mode() {
        let case = mini_case();
        let xbb = XbbModel::build(&case).unwrap();
        let raster = west_raster(0.9);
        let curves = CurveSet::with_defaults();
        let inputs = SimInputs {
            case: &case,
            xbb: &xbb,
            raster: &raster,
            curves: &curves,
        };
        let mut config = test_config(15, 30);
        let degree = run_monte_carlo(&config, &inputs, false).unwrap();
        config.connectivity_mode = ConnectivityMode::Component;
        let component = run_monte_carlo(&config, &inputs, false).unwrap();
        for day in 0..degree.days() {
            let d = degree.series_day(Series::DegreeConnectedLoad, day);
            let c = component.series_day(Series::DegreeConnectedLoad, day);
            for (it, (dv, cv)) in d.iter().zip(c).enumerate() {
                assert!(
                    cv <= dv,
                    "day {day} iter {it}: component {cv} > degree {dv}"
                );
            }
        }
    }

    #[test]
    fn replay_matches_the_logged_power_flow_outcomes() {
        let case = mini_case();
        let xbb = XbbModel::build(&case).unwrap();
        let raster = west_raster(0.9);
        let curves = CurveSet::with_defaults();
        let inputs = SimInputs {
            case: &case,
            xbb: &xbb,
            raster: &raster,
            curves: &curves,
        };
        let config = test_config(3, 25);
        let run = run_monte_carlo(&config, &inputs, true).unwrap();
        for iteration in 0..config.iterations {
            let solutions = replay_iteration_pf(&inputs, &config, iteration);
            let logs = &run.day_logs.as_ref().unwrap()[iteration as usize].day_logs;
            assert_eq!(solutions.len(), logs.len());
            for (day, (sol, log)) in solutions.iter().zip(logs).enumerate() {
                let replay_converged = sol.as_ref().is_some_and(|s| s.converged);
                assert_eq!(
                    replay_converged, log.pf_converged,
                    "iter {iteration} day {day}"
                );
            }
        }
    }
}
