//! Island detection, slack selection, and Newton-Raphson AC power flow over
//! the in-service bus-branch model.
//!
//! Non-convergence is an ordinary logged outcome, never a panic: heavily
//! damaged systems routinely fail to solve and the daily logs record that.
//! Generator reactive limits are not enforced (no PV→PQ switching).

mod linalg;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{BusId, GridCase};

/// Per-asset in-service flags, derived each simulated day from the substation
/// graphs and transformer components. An asset out of service never enters
/// any island's solvable set.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceState {
    pub bus_in_service: Vec<bool>,
    pub branch_in_service: Vec<bool>,
    pub gen_in_service: Vec<bool>,
    pub load_in_service: Vec<bool>,
}

impl ServiceState {
    /// Everything the case file marks in service, undamaged.
    pub fn from_case(case: &GridCase) -> Self {
        Self {
            bus_in_service: vec![true; case.buses.len()],
            branch_in_service: case.branches.iter().map(|b| b.in_service).collect(),
            gen_in_service: case.generators.iter().map(|g| g.in_service).collect(),
            load_in_service: case.loads.iter().map(|l| l.in_service).collect(),
        }
    }
}

/// Maximal connected component of the in-service grid, with its induced
/// in-service assets. Indices address the `GridCase` collections.
#[derive(Debug, Clone, PartialEq)]
pub struct Island {
    pub bus_idxs: Vec<usize>,
    pub branch_idxs: Vec<usize>,
    pub gen_idxs: Vec<usize>,
    pub load_idxs: Vec<usize>,
}

impl Island {
    pub fn bus_count(&self) -> usize {
        self.bus_idxs.len()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PfError {
    #[error("island has no in-service generator; no slack can be selected")]
    NoSlack,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Connected components over in-service buses and in-service branches whose
/// endpoints are both in service. Sorted by bus count descending, ties broken
/// by the smallest contained bus id.
pub fn find_islands(case: &GridCase, service: &ServiceState) -> Vec<Island> {
    let n = case.buses.len();
    let mut uf = UnionFind::new(n);
    for (bi, branch) in case.branches.iter().enumerate() {
        if !service.branch_in_service[bi] {
            continue;
        }
        let from = case.bus_idx(branch.from).unwrap();
        let to = case.bus_idx(branch.to).unwrap();
        if service.bus_in_service[from] && service.bus_in_service[to] {
            uf.union(from, to);
        }
    }

    let mut root_to_island: std::collections::HashMap<usize, usize> = Default::default();
    let mut islands: Vec<Island> = Vec::new();
    for bus in 0..n {
        if !service.bus_in_service[bus] {
            continue;
        }
        let root = uf.find(bus);
        let idx = *root_to_island.entry(root).or_insert_with(|| {
            islands.push(Island {
                bus_idxs: Vec::new(),
                branch_idxs: Vec::new(),
                gen_idxs: Vec::new(),
                load_idxs: Vec::new(),
            });
            islands.len() - 1
        });
        islands[idx].bus_idxs.push(bus);
    }

    for island in &mut islands {
        let member: std::collections::HashSet<usize> = island.bus_idxs.iter().copied().collect();
        for &bus in &island.bus_idxs {
            for &bi in case.branch_idxs_at_bus(bus) {
                let branch = &case.branches[bi];
                // Each in-service branch belongs to exactly one island; count
                // it at its from-side to avoid duplicates.
                if service.branch_in_service[bi]
                    && case.bus_idx(branch.from).unwrap() == bus
                    && member.contains(&case.bus_idx(branch.to).unwrap())
                {
                    island.branch_idxs.push(bi);
                }
            }
            for &gi in case.gen_idxs_at_bus(bus) {
                if service.gen_in_service[gi] {
                    island.gen_idxs.push(gi);
                }
            }
            for &li in case.load_idxs_at_bus(bus) {
                if service.load_in_service[li] {
                    island.load_idxs.push(li);
                }
            }
        }
        island.branch_idxs.sort_unstable();
        island.gen_idxs.sort_unstable();
        island.load_idxs.sort_unstable();
    }

    islands.sort_by_key(|island| {
        let min_id = island
            .bus_idxs
            .iter()
            .map(|&b| case.buses[b].id)
            .min()
            .unwrap_or(BusId(u32::MAX));
        (std::cmp::Reverse(island.bus_count()), min_id)
    });
    islands
}

/// The island's generator bus with the largest total in-service p_max;
/// ties go to the smallest bus id.
pub fn select_slack(
    case: &GridCase,
    island: &Island,
    service: &ServiceState,
) -> Result<usize, PfError> {
    let mut best: Option<(f64, BusId, usize)> = None;
    let mut totals: std::collections::HashMap<usize, f64> = Default::default();
    for &gi in &island.gen_idxs {
        if !service.gen_in_service[gi] {
            continue;
        }
        let bus = case.bus_idx(case.generators[gi].bus).unwrap();
        *totals.entry(bus).or_insert(0.0) += case.generators[gi].pmax;
    }
    for (&bus, &total) in &totals {
        let id = case.buses[bus].id;
        let better = match best {
            None => true,
            Some((bt, bid, _)) => total > bt || (total == bt && id < bid),
        };
        if better {
            best = Some((total, id, bus));
        }
    }
    best.map(|(_, _, bus)| bus).ok_or(PfError::NoSlack)
}

/// Newton-Raphson solver knobs. `dense_threshold` is the island bus count at
/// or below which the dense Jacobian path is used.
#[derive(Debug, Clone, Copy)]
pub struct PfOptions {
    pub tolerance_pu: f64,
    pub max_iterations: u32,
    pub dense_threshold: usize,
}

impl Default for PfOptions {
    fn default() -> Self {
        Self {
            tolerance_pu: 1e-6,
            max_iterations: 30,
            dense_threshold: 500,
        }
    }
}

/// Power-flow outcome for one island. `vm`/`va` parallel `bus_idxs` and hold
/// the last iterate even when not converged.
#[derive(Debug, Clone, Serialize)]
pub struct PfSolution {
    pub converged: bool,
    pub iterations: u32,
    pub max_mismatch_pu: f64,
    /// The correction system was numerically singular.
    pub singular: bool,
    pub bus_idxs: Vec<usize>,
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
enum BusType {
    Slack,
    Pv,
    Pq,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Cplx {
    re: f64,
    im: f64,
}

impl Cplx {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    fn inv(self) -> Self {
        let d = self.re * self.re + self.im * self.im;
        Self::new(self.re / d, -self.im / d)
    }

    fn add(self, o: Cplx) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

/// Island-local admittance structure and bus scheduling.
struct IslandSystem {
    n: usize,
    /// Sorted adjacency per local bus: (local neighbor, Y entry).
    ybus: Vec<Vec<(usize, Cplx)>>,
    bus_type: Vec<BusType>,
    p_sched: Vec<f64>,
    q_sched: Vec<f64>,
    v_sched: Vec<f64>,
}

/// Proportional-to-capacity dispatch: every non-slack in-service generator
/// injects pmax·(island load / island pmax); the slack absorbs the remainder
/// plus losses. The case schema carries no dispatch setpoints, so scheduled
/// injections have to be derived.
fn build_system(case: &GridCase, island: &Island, slack_bus_idx: usize) -> IslandSystem {
    let n = island.bus_count();
    let base = case.system_base_mva;
    let mut local_of = std::collections::HashMap::with_capacity(n);
    for (local, &bus) in island.bus_idxs.iter().enumerate() {
        local_of.insert(bus, local);
    }

    // Y-bus from the pi model: series 1/(r+jx), half the charging at each end.
    let mut ybus: Vec<std::collections::BTreeMap<usize, Cplx>> = vec![Default::default(); n];
    for &bi in &island.branch_idxs {
        let branch = &case.branches[bi];
        let f = local_of[&case.bus_idx(branch.from).unwrap()];
        let t = local_of[&case.bus_idx(branch.to).unwrap()];
        let ys = Cplx::new(branch.r, branch.x).inv();
        let shunt = Cplx::new(0.0, branch.b / 2.0);
        for (a, b) in [(f, t), (t, f)] {
            let diag = ybus[a].entry(a).or_default();
            *diag = diag.add(ys).add(shunt);
            let off = ybus[a].entry(b).or_default();
            *off = off.add(Cplx::new(-ys.re, -ys.im));
        }
    }
    for (local, row) in ybus.iter_mut().enumerate() {
        row.entry(local).or_default();
    }

    let island_load_p: f64 = island.load_idxs.iter().map(|&li| case.loads[li].p).sum();
    let island_pmax: f64 = island
        .gen_idxs
        .iter()
        .map(|&gi| case.generators[gi].pmax)
        .sum();
    let dispatch_factor = if island_pmax > 0.0 {
        island_load_p / island_pmax
    } else {
        0.0
    };

    let mut p_sched = vec![0.0; n];
    let mut q_sched = vec![0.0; n];
    let mut v_sched = vec![1.0; n];
    let mut bus_type = vec![BusType::Pq; n];
    // Highest-capacity in-service generator per bus sets the voltage; ties go
    // to the smallest generator id.
    let mut vset_pick: Vec<Option<(f64, crate::grid::GenId)>> = vec![None; n];

    for &gi in &island.gen_idxs {
        let gen = &case.generators[gi];
        let local = local_of[&case.bus_idx(gen.bus).unwrap()];
        bus_type[local] = BusType::Pv;
        p_sched[local] += gen.pmax * dispatch_factor / base;
        let better = match vset_pick[local] {
            None => true,
            Some((pmax, id)) => gen.pmax > pmax || (gen.pmax == pmax && gen.id < id),
        };
        if better {
            vset_pick[local] = Some((gen.pmax, gen.id));
            v_sched[local] = gen.vset;
        }
    }
    for &li in &island.load_idxs {
        let load = &case.loads[li];
        let local = local_of[&case.bus_idx(load.bus).unwrap()];
        p_sched[local] -= load.p / base;
        q_sched[local] -= load.q / base;
    }
    bus_type[local_of[&slack_bus_idx]] = BusType::Slack;

    IslandSystem {
        n,
        ybus: ybus
            .into_iter()
            .map(|row| row.into_iter().collect())
            .collect(),
        bus_type,
        p_sched,
        q_sched,
        v_sched,
    }
}

impl IslandSystem {
    /// P and Q injection at every bus for the given voltage state.
    fn injections(&self, vm: &[f64], va: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut p = vec![0.0; self.n];
        let mut q = vec![0.0; self.n];
        for i in 0..self.n {
            let mut pi = 0.0;
            let mut qi = 0.0;
            for &(k, y) in &self.ybus[i] {
                let theta = va[i] - va[k];
                let (sin, cos) = theta.sin_cos();
                pi += vm[k] * (y.re * cos + y.im * sin);
                qi += vm[k] * (y.re * sin - y.im * cos);
            }
            p[i] = vm[i] * pi;
            q[i] = vm[i] * qi;
        }
        (p, q)
    }
}

/// Solve one island with polar Newton-Raphson from a flat start (or from
/// `warm`, a previous solution's (vm, va) in island bus order). The island
/// must already be induced from the current service state.
pub fn solve_island(
    case: &GridCase,
    island: &Island,
    slack_bus_idx: usize,
    opts: &PfOptions,
    warm: Option<(&[f64], &[f64])>,
) -> PfSolution {
    let sys = build_system(case, island, slack_bus_idx);
    let n = sys.n;

    let mut vm: Vec<f64> = match warm {
        Some((vm, _)) => vm.to_vec(),
        None => (0..n)
            .map(|i| match sys.bus_type[i] {
                BusType::Pq => 1.0,
                _ => sys.v_sched[i],
            })
            .collect(),
    };
    let mut va: Vec<f64> = match warm {
        Some((_, va)) => va.to_vec(),
        None => vec![0.0; n],
    };

    // Variable layout: angles for every non-slack bus, then magnitudes for
    // PQ buses.
    let angle_vars: Vec<usize> = (0..n)
        .filter(|&i| sys.bus_type[i] != BusType::Slack)
        .collect();
    let vmag_vars: Vec<usize> = (0..n).filter(|&i| sys.bus_type[i] == BusType::Pq).collect();
    let n_vars = angle_vars.len() + vmag_vars.len();

    let mut iterations = 0;
    let mut singular = false;
    let (converged, max_mismatch) = loop {
        let (p, q) = sys.injections(&vm, &va);
        let mut mismatch = Vec::with_capacity(n_vars);
        for &i in &angle_vars {
            mismatch.push(sys.p_sched[i] - p[i]);
        }
        for &i in &vmag_vars {
            mismatch.push(sys.q_sched[i] - q[i]);
        }
        let max_mismatch = mismatch.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

        if max_mismatch < opts.tolerance_pu {
            break (true, max_mismatch);
        }
        if iterations >= opts.max_iterations || n_vars == 0 {
            break (false, max_mismatch);
        }

        let delta = if n <= opts.dense_threshold {
            solve_correction_dense(&sys, &vm, &va, &p, &q, &angle_vars, &vmag_vars, &mismatch)
        } else {
            solve_correction_banded(&sys, &vm, &va, &p, &q, &angle_vars, &vmag_vars, &mismatch)
        };
        let Some(delta) = delta else {
            singular = true;
            break (false, max_mismatch);
        };

        for (k, &i) in angle_vars.iter().enumerate() {
            va[i] += delta[k];
        }
        for (k, &i) in vmag_vars.iter().enumerate() {
            vm[i] += delta[angle_vars.len() + k];
        }
        iterations += 1;
    };

    PfSolution {
        converged,
        iterations,
        max_mismatch_pu: max_mismatch,
        singular,
        bus_idxs: island.bus_idxs.clone(),
        vm,
        va,
    }
}

/// One Jacobian entry for equation bus `i` and variable bus `k`.
#[allow(clippy::too_many_arguments)]
fn jac_entry(
    vm: &[f64],
    va: &[f64],
    p: &[f64],
    q: &[f64],
    i: usize,
    k: usize,
    y: Cplx,
    p_equation: bool,
    v_variable: bool,
) -> f64 {
    if i == k {
        let y_ii = y;
        return match (p_equation, v_variable) {
            (true, false) => -q[i] - y_ii.im * vm[i] * vm[i],
            (true, true) => p[i] / vm[i] + y_ii.re * vm[i],
            (false, false) => p[i] - y_ii.re * vm[i] * vm[i],
            (false, true) => q[i] / vm[i] - y_ii.im * vm[i],
        };
    }
    let theta = va[i] - va[k];
    let (sin, cos) = theta.sin_cos();
    match (p_equation, v_variable) {
        (true, false) => vm[i] * vm[k] * (y.re * sin - y.im * cos),
        (true, true) => vm[i] * (y.re * cos + y.im * sin),
        (false, false) => -vm[i] * vm[k] * (y.re * cos + y.im * sin),
        (false, true) => vm[i] * (y.re * sin - y.im * cos),
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_correction_dense(
    sys: &IslandSystem,
    vm: &[f64],
    va: &[f64],
    p: &[f64],
    q: &[f64],
    angle_vars: &[usize],
    vmag_vars: &[usize],
    mismatch: &[f64],
) -> linalg::SolveResult {
    let n_vars = mismatch.len();
    let mut var_of_angle = vec![usize::MAX; sys.n];
    let mut var_of_vmag = vec![usize::MAX; sys.n];
    for (idx, &bus) in angle_vars.iter().enumerate() {
        var_of_angle[bus] = idx;
    }
    for (idx, &bus) in vmag_vars.iter().enumerate() {
        var_of_vmag[bus] = angle_vars.len() + idx;
    }

    let mut jac = vec![0.0; n_vars * n_vars];
    let mut fill = |row: usize, i: usize, p_equation: bool| {
        for &(k, y) in &sys.ybus[i] {
            if var_of_angle[k] != usize::MAX {
                jac[row * n_vars + var_of_angle[k]] =
                    jac_entry(vm, va, p, q, i, k, y, p_equation, false);
            }
            if var_of_vmag[k] != usize::MAX {
                jac[row * n_vars + var_of_vmag[k]] =
                    jac_entry(vm, va, p, q, i, k, y, p_equation, true);
            }
        }
    };
    for (row, &i) in angle_vars.iter().enumerate() {
        fill(row, i, true);
    }
    for (idx, &i) in vmag_vars.iter().enumerate() {
        fill(angle_vars.len() + idx, i, false);
    }
    linalg::solve_dense(jac, mismatch.to_vec(), n_vars)
}

#[allow(clippy::too_many_arguments)]
fn solve_correction_banded(
    sys: &IslandSystem,
    vm: &[f64],
    va: &[f64],
    p: &[f64],
    q: &[f64],
    angle_vars: &[usize],
    vmag_vars: &[usize],
    mismatch: &[f64],
) -> linalg::SolveResult {
    // RCM on the bus adjacency, then interleave each bus's angle/magnitude
    // variables so the variable bandwidth tracks the bus bandwidth.
    let adj: Vec<Vec<usize>> = (0..sys.n)
        .map(|i| {
            sys.ybus[i]
                .iter()
                .map(|&(k, _)| k)
                .filter(|&k| k != i)
                .collect()
        })
        .collect();
    let bus_order = linalg::reverse_cuthill_mckee(&adj);

    let mut var_of_angle = vec![usize::MAX; sys.n];
    let mut var_of_vmag = vec![usize::MAX; sys.n];
    let mut old_var_order = Vec::with_capacity(mismatch.len());
    {
        let mut next = 0;
        let mut angle_pos = vec![usize::MAX; sys.n];
        let mut vmag_pos = vec![usize::MAX; sys.n];
        for (idx, &bus) in angle_vars.iter().enumerate() {
            angle_pos[bus] = idx;
        }
        for (idx, &bus) in vmag_vars.iter().enumerate() {
            vmag_pos[bus] = angle_vars.len() + idx;
        }
        for &bus in &bus_order {
            if angle_pos[bus] != usize::MAX {
                var_of_angle[bus] = next;
                old_var_order.push(angle_pos[bus]);
                next += 1;
            }
            if vmag_pos[bus] != usize::MAX {
                var_of_vmag[bus] = next;
                old_var_order.push(vmag_pos[bus]);
                next += 1;
            }
        }
        debug_assert_eq!(next, mismatch.len());
    }

    // Half bandwidth over the permuted variable graph.
    let mut hbw = 0usize;
    for i in 0..sys.n {
        for &(k, _) in &sys.ybus[i] {
            for &vi in &[var_of_angle[i], var_of_vmag[i]] {
                if vi == usize::MAX {
                    continue;
                }
                for &vk in &[var_of_angle[k], var_of_vmag[k]] {
                    if vk == usize::MAX {
                        continue;
                    }
                    hbw = hbw.max(vi.abs_diff(vk));
                }
            }
        }
    }

    let n_vars = mismatch.len();
    let mut band = linalg::BandMatrix::new(n_vars, hbw);
    let mut rhs = vec![0.0; n_vars];
    let fill = |row: usize, i: usize, p_equation: bool, band: &mut linalg::BandMatrix| {
        for &(k, y) in &sys.ybus[i] {
            if var_of_angle[k] != usize::MAX {
                band.add(
                    row,
                    var_of_angle[k],
                    jac_entry(vm, va, p, q, i, k, y, p_equation, false),
                );
            }
            if var_of_vmag[k] != usize::MAX {
                band.add(
                    row,
                    var_of_vmag[k],
                    jac_entry(vm, va, p, q, i, k, y, p_equation, true),
                );
            }
        }
    };
    for (idx, &i) in angle_vars.iter().enumerate() {
        rhs[var_of_angle[i]] = mismatch[idx];
        fill(var_of_angle[i], i, true, &mut band);
    }
    for (idx, &i) in vmag_vars.iter().enumerate() {
        rhs[var_of_vmag[i]] = mismatch[angle_vars.len() + idx];
        fill(var_of_vmag[i], i, false, &mut band);
    }

    let x = band.solve(rhs)?;
    // Permute the correction back to the caller's variable order.
    let mut out = vec![0.0; n_vars];
    for (new, &old) in old_var_order.iter().enumerate() {
        out[old] = x[new];
    }
    Some(out)
}

/// MW accounting for one island: load served (only when the solve converged)
/// and generation available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IslandAccounting {
    pub load_served_mw: Option<f64>,
    pub generation_available_mw: f64,
}

pub fn island_accounting(case: &GridCase, island: &Island, converged: bool) -> IslandAccounting {
    let load: f64 = island.load_idxs.iter().map(|&li| case.loads[li].p).sum();
    let gen: f64 = island
        .gen_idxs
        .iter()
        .map(|&gi| case.generators[gi].pmax)
        .sum();
    IslandAccounting {
        load_served_mw: converged.then_some(load),
        generation_available_mw: gen,
    }
}
