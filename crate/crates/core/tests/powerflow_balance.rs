//! Power-flow checks that recompute physics through an independent route:
//! branch-flow power balance, bus-order invariance, and dense/banded solver
//! agreement on a case large enough to cross the sparse threshold.

use shakegrid::grid::{
    BranchId, BranchRecord, BusId, BusKind, BusRecord, CaseFile, GenId, GenRecord, GridCase,
    LoadId, LoadRecord, LocationId, LocationRecord,
};
use shakegrid::powerflow::{find_islands, select_slack, solve_island, PfOptions, ServiceState};

fn desk_case() -> GridCase {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../assets/cases/coastal30.json");
    GridCase::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Complex power flowing out of each bus, computed branch by branch from the
/// pi model (no Y-bus, no Jacobian machinery).
fn injections_from_branch_flows(
    case: &GridCase,
    bus_of: &std::collections::HashMap<usize, usize>,
    vm: &[f64],
    va: &[f64],
) -> (Vec<f64>, Vec<f64>, f64) {
    let n = vm.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut losses = 0.0;
    for branch in &case.branches {
        let fi = case.bus_idx(branch.from).unwrap();
        let ti = case.bus_idx(branch.to).unwrap();
        let (Some(&f), Some(&t)) = (bus_of.get(&fi), bus_of.get(&ti)) else {
            continue;
        };
        let (gs, bs) = {
            let d = branch.r * branch.r + branch.x * branch.x;
            (branch.r / d, -branch.x / d)
        };
        let half_b = branch.b / 2.0;
        // Complex arithmetic by hand: V = vm·e^{jva}, y = gs + j·bs.
        let (vf_re, vf_im) = (vm[f] * va[f].cos(), vm[f] * va[f].sin());
        let (vt_re, vt_im) = (vm[t] * va[t].cos(), vm[t] * va[t].sin());
        let flow = |a_re: f64, a_im: f64, b_re: f64, b_im: f64| -> (f64, f64) {
            // I = (Va − Vb)·y + Va·j·half_b; S = Va·conj(I)
            let d_re = a_re - b_re;
            let d_im = a_im - b_im;
            let i_re = d_re * gs - d_im * bs - a_im * half_b;
            let i_im = d_re * bs + d_im * gs + a_re * half_b;
            (a_re * i_re + a_im * i_im, a_im * i_re - a_re * i_im)
        };
        let (pf, qf) = flow(vf_re, vf_im, vt_re, vt_im);
        let (pt, qt) = flow(vt_re, vt_im, vf_re, vf_im);
        p[f] += pf;
        q[f] += qf;
        p[t] += pt;
        q[t] += qt;
        losses += pf + pt;
    }
    (p, q, losses)
}

#[test]
fn converged_solution_balances_power_via_branch_flows() {
    let case = desk_case();
    let service = ServiceState::from_case(&case);
    let islands = find_islands(&case, &service);
    let slack = select_slack(&case, &islands[0], &service).unwrap();
    let opts = PfOptions::default();
    let sol = solve_island(&case, &islands[0], slack, &opts, None);
    assert!(sol.converged);

    let bus_of: std::collections::HashMap<usize, usize> = sol
        .bus_idxs
        .iter()
        .enumerate()
        .map(|(local, &case_idx)| (case_idx, local))
        .collect();
    let (p_inj, q_inj, losses) = injections_from_branch_flows(&case, &bus_of, &sol.vm, &sol.va);

    let base = case.system_base_mva;
    // Scheduled dispatch mirrors the solver's proportional rule.
    let island_load: f64 = islands[0].load_idxs.iter().map(|&l| case.loads[l].p).sum();
    let island_pmax: f64 = islands[0]
        .gen_idxs
        .iter()
        .map(|&g| case.generators[g].pmax)
        .sum();
    let factor = island_load / island_pmax;

    // Every PQ bus's recomputed injection must match its scheduled load.
    for (local, &case_idx) in sol.bus_idxs.iter().enumerate() {
        let has_gen = case
            .gen_idxs_at_bus(case_idx)
            .iter()
            .any(|&g| service.gen_in_service[g]);
        if has_gen {
            continue;
        }
        let p_load: f64 = case
            .load_idxs_at_bus(case_idx)
            .iter()
            .map(|&l| case.loads[l].p)
            .sum::<f64>()
            / base;
        let q_load: f64 = case
            .load_idxs_at_bus(case_idx)
            .iter()
            .map(|&l| case.loads[l].q)
            .sum::<f64>()
            / base;
        assert!(
            (p_inj[local] + p_load).abs() < 10.0 * opts.tolerance_pu,
            "P at bus {case_idx}: {} vs load {}",
            p_inj[local],
            p_load
        );
        assert!(
            (q_inj[local] + q_load).abs() < 10.0 * opts.tolerance_pu,
            "Q at bus {case_idx}"
        );
    }

    // Global balance: scheduled PV dispatch + slack output − load − losses ≈ 0.
    let slack_local = bus_of[&slack];
    let mut total_gen = 0.0;
    for &g in &islands[0].gen_idxs {
        let bus = case.bus_idx(case.generators[g].bus).unwrap();
        if bus != slack {
            total_gen += case.generators[g].pmax * factor / base;
        }
    }
    let slack_load: f64 = case
        .load_idxs_at_bus(slack)
        .iter()
        .map(|&l| case.loads[l].p)
        .sum::<f64>()
        / base;
    let slack_gen = p_inj[slack_local] + slack_load;
    total_gen += slack_gen;
    let residual = total_gen - island_load / base - losses;
    assert!(
        residual.abs() < 10.0 * opts.tolerance_pu,
        "balance residual {residual}"
    );
}

#[test]
fn desk_case_warm_start_reconverges_in_one_iteration() {
    let case = desk_case();
    let service = ServiceState::from_case(&case);
    let islands = find_islands(&case, &service);
    let slack = select_slack(&case, &islands[0], &service).unwrap();
    let opts = PfOptions::default();
    let sol = solve_island(&case, &islands[0], slack, &opts, None);
    assert!(sol.converged);
    let warm = solve_island(&case, &islands[0], slack, &opts, Some((&sol.vm, &sol.va)));
    assert!(warm.converged);
    assert!(warm.iterations <= 1, "{} iterations", warm.iterations);
}

#[test]
fn islands_partition_in_service_buses_for_random_service_states() {
    let case = desk_case();
    let mut state = 0x1234_5678_9abc_def0u64;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 33) as u32
    };
    for _ in 0..50 {
        let mut service = ServiceState::from_case(&case);
        for b in service.branch_in_service.iter_mut() {
            *b = next() % 3 != 0; // ~1/3 of branches out
        }
        let islands = find_islands(&case, &service);
        let total: usize = islands.iter().map(|i| i.bus_count()).sum();
        assert_eq!(total, case.buses.len());
        // Sorted by size descending.
        for w in islands.windows(2) {
            assert!(w[0].bus_count() >= w[1].bus_count());
        }
        // No bus appears twice.
        let mut seen = std::collections::HashSet::new();
        for island in &islands {
            for &b in &island.bus_idxs {
                assert!(seen.insert(b));
            }
        }
    }
}

#[test]
fn bus_order_does_not_change_the_solution() {
    let case = desk_case();
    let mut file = case.to_file();
    file.buses.reverse();
    file.branches.reverse();
    file.generators.reverse();
    file.loads.reverse();
    let permuted = GridCase::from_file(file).unwrap();

    let solve = |case: &GridCase| {
        let service = ServiceState::from_case(case);
        let islands = find_islands(case, &service);
        let slack = select_slack(case, &islands[0], &service).unwrap();
        let sol = solve_island(case, &islands[0], slack, &PfOptions::default(), None);
        assert!(sol.converged);
        let mut by_id: Vec<(BusId, f64, f64)> = sol
            .bus_idxs
            .iter()
            .enumerate()
            .map(|(local, &b)| (case.buses[b].id, sol.vm[local], sol.va[local]))
            .collect();
        by_id.sort_by_key(|&(id, _, _)| id);
        by_id
    };

    let a = solve(&case);
    let b = solve(&permuted);
    for ((id_a, vm_a, va_a), (id_b, vm_b, va_b)) in a.into_iter().zip(b) {
        assert_eq!(id_a, id_b);
        assert!((vm_a - vm_b).abs() < 1e-9, "bus {id_a} vm");
        assert!((va_a - va_b).abs() < 1e-9, "bus {id_a} va");
    }
}

/// A 600-bus ladder: two parallel 300-bus chains with rungs, generators
/// every 50 buses, light loads in between. Big enough to cross the default
/// 500-bus sparse threshold.
fn ladder_case(n_per_chain: usize) -> GridCase {
    let n = 2 * n_per_chain;
    let locations = vec![LocationRecord {
        id: LocationId(1),
        lat: 45.0,
        lon: -110.0,
    }];
    let buses: Vec<BusRecord> = (0..n)
        .map(|i| BusRecord {
            id: BusId(i as u32 + 1),
            location: LocationId(1),
            base_kv: 230.0,
            kind: BusKind::Pq,
        })
        .collect();
    let mut branches = Vec::new();
    let mut bid = 0u32;
    let mut add = |from: usize, to: usize, branches: &mut Vec<BranchRecord>| {
        bid += 1;
        branches.push(BranchRecord {
            id: BranchId(bid),
            from: BusId(from as u32 + 1),
            to: BusId(to as u32 + 1),
            r: 0.002,
            x: 0.012,
            b: 0.004,
            transformer: false,
            in_service: true,
        });
    };
    for c in 0..2 {
        let base = c * n_per_chain;
        for i in 0..n_per_chain - 1 {
            add(base + i, base + i + 1, &mut branches);
        }
    }
    for i in (0..n_per_chain).step_by(25) {
        add(i, n_per_chain + i, &mut branches);
    }
    let mut generators = Vec::new();
    let mut gid = 0u32;
    for i in (0..n).step_by(50) {
        gid += 1;
        generators.push(GenRecord {
            id: GenId(gid),
            bus: BusId(i as u32 + 1),
            pmax: 120.0,
            pmin: 0.0,
            qmax: 60.0,
            qmin: -60.0,
            vset: 1.02,
            in_service: true,
        });
    }
    let mut loads = Vec::new();
    let mut lid = 0u32;
    for i in (5..n).step_by(10) {
        lid += 1;
        loads.push(LoadRecord {
            id: LoadId(lid),
            bus: BusId(i as u32 + 1),
            p: 8.0,
            q: 2.0,
            in_service: true,
        });
    }
    GridCase::from_file(CaseFile {
        name: "ladder600".into(),
        base_mva: 100.0,
        locations,
        buses,
        branches,
        generators,
        loads,
    })
    .unwrap()
}

#[test]
fn banded_path_agrees_with_dense_path_on_600_buses() {
    let case = ladder_case(300);
    let service = ServiceState::from_case(&case);
    let islands = find_islands(&case, &service);
    assert_eq!(islands.len(), 1);
    let slack = select_slack(&case, &islands[0], &service).unwrap();

    // Forced banded (island > threshold) vs forced dense.
    let banded_opts = PfOptions {
        dense_threshold: 10,
        ..PfOptions::default()
    };
    let dense_opts = PfOptions {
        dense_threshold: 100_000,
        ..PfOptions::default()
    };
    let sol_banded = solve_island(&case, &islands[0], slack, &banded_opts, None);
    let sol_dense = solve_island(&case, &islands[0], slack, &dense_opts, None);
    assert!(
        sol_banded.converged,
        "banded mismatch {}",
        sol_banded.max_mismatch_pu
    );
    assert!(sol_dense.converged);
    for i in 0..sol_dense.vm.len() {
        assert!(
            (sol_banded.vm[i] - sol_dense.vm[i]).abs() < 1e-8,
            "vm diverges at local bus {i}"
        );
        assert!((sol_banded.va[i] - sol_dense.va[i]).abs() < 1e-8);
    }
    // The default threshold routes a 600-bus island to the banded path.
    let sol_default = solve_island(&case, &islands[0], slack, &PfOptions::default(), None);
    assert!(sol_default.converged);
}
