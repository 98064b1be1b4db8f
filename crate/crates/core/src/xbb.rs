//! Extended bus-branch (xBB) model: each bus becomes a graph whose nodes are
//! the bus's assets (branch ends, generators, loads, plus internal bus nodes
//! where the layout requires) and whose edges are switch groups — a series
//! disconnect–breaker–disconnect chain that is live only while all three
//! components are intact.
//!
//! Four substation layouts are used, chosen from the feeder count: single bus
//! single breaker (1–2 feeders), ring bus (3–4), breaker-and-a-half (5+), and
//! double bus double breaker for any bus with generation. Branches flagged as
//! transformers carry one additional transformer component in series; damage
//! to it removes the branch from service until it recovers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::VoltageClass;
use crate::grid::{BusId, GridCase};

pub type CompId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Archetype {
    #[serde(rename = "sbsb")]
    Sbsb,
    #[serde(rename = "rb")]
    Rb,
    #[serde(rename = "bah")]
    Bah,
    #[serde(rename = "dbdb")]
    Dbdb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    #[serde(rename = "circuit_breaker")]
    CircuitBreaker,
    #[serde(rename = "disconnect_switch")]
    DisconnectSwitch,
    #[serde(rename = "transformer")]
    Transformer,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 3] = [
        ComponentKind::CircuitBreaker,
        ComponentKind::DisconnectSwitch,
        ComponentKind::Transformer,
    ];
}

impl std::fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ComponentKind::CircuitBreaker => "circuit_breaker",
            ComponentKind::DisconnectSwitch => "disconnect_switch",
            ComponentKind::Transformer => "transformer",
        };
        write!(f, "{s}")
    }
}

/// Which end of a branch a feeder node represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchEnd {
    From,
    To,
}

/// The bus-branch asset behind a feeder node. Indices point into the
/// `GridCase` collections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssetRef {
    BranchEnd { branch_idx: usize, end: BranchEnd },
    Generator { gen_idx: usize },
    Load { load_idx: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    /// Structural bus-bar node: no fragility, no asset, ignored by outage
    /// accounting.
    InternalBus,
    Asset(AssetRef),
}

/// A switch-group edge between two local nodes. Components are global ids,
/// stored [SD, CB, SD].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SgEdge {
    pub a: usize,
    pub b: usize,
    pub components: [CompId; 3],
}

#[derive(Debug, Clone)]
pub struct SubstationGraph {
    pub bus_id: BusId,
    pub bus_idx: usize,
    pub archetype: Archetype,
    pub nodes: Vec<NodeKind>,
    pub edges: Vec<SgEdge>,
    /// Global ids of this substation's nodes/edges: global = offset + local.
    pub node_offset: usize,
    pub edge_offset: usize,
}

impl SubstationGraph {
    pub fn component_count_by_kind(&self, kind: ComponentKind) -> usize {
        match kind {
            ComponentKind::CircuitBreaker => self.edges.len(),
            ComponentKind::DisconnectSwitch => 2 * self.edges.len(),
            ComponentKind::Transformer => 0,
        }
    }
}

/// Where a component sits in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompSite {
    /// Inside a substation switch group.
    Edge { graph_idx: usize, edge_idx: usize },
    /// In series with a transformer branch.
    Branch { branch_idx: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct ComponentInfo {
    pub kind: ComponentKind,
    pub voltage_class: VoltageClass,
    /// Index into `GridCase::locations`.
    pub location_idx: usize,
    pub site: CompSite,
}

#[derive(Debug, Error)]
pub enum XbbError {
    #[error("bus {bus} has no feeders; cannot build a substation graph")]
    NoFeeders { bus: BusId },
    #[error("ring bus needs at least 3 feeders, bus {bus} has {feeders}")]
    RingTooSmall { bus: BusId, feeders: usize },
    #[error("bus {bus}: {source}")]
    Voltage {
        bus: BusId,
        source: crate::curves::CurveError,
    },
    #[error("component id {0} does not belong to this model")]
    UnknownComponent(CompId),
}

/// Decide the layout from the feeder count; any generation forces DBDB.
pub fn assign_archetype(feeder_count: usize, has_generator: bool) -> Archetype {
    if has_generator {
        Archetype::Dbdb
    } else if feeder_count <= 2 {
        Archetype::Sbsb
    } else if feeder_count <= 4 {
        Archetype::Rb
    } else {
        Archetype::Bah
    }
}

/// Feeders are every BB asset connected to the bus: incident branch ends,
/// generators, and loads (static presence; operational flags do not change
/// the equipment count).
pub fn count_feeders(case: &GridCase, bus: BusId) -> Result<usize, crate::grid::CaseError> {
    let i = case.bus_idx(bus)?;
    Ok(case.branch_idxs_at_bus(i).len()
        + case.gen_idxs_at_bus(i).len()
        + case.load_idxs_at_bus(i).len())
}

/// The whole-case xBB expansion: one substation graph per bus plus the
/// per-branch transformer components. Immutable after build; per-iteration
/// damage lives in [`DamageState`].
#[derive(Debug, Clone)]
pub struct XbbModel {
    pub graphs: Vec<SubstationGraph>,
    pub components: Vec<ComponentInfo>,
    /// Per branch: the series transformer component, when flagged.
    pub branch_transformer: Vec<Option<CompId>>,
    /// Global node ids for each asset.
    pub gen_node: Vec<usize>,
    pub load_node: Vec<usize>,
    pub branch_from_node: Vec<usize>,
    pub branch_to_node: Vec<usize>,
    pub total_nodes: usize,
    pub total_edges: usize,
    /// Static (undamaged) degree per global node.
    static_degree: Vec<u32>,
    /// Substation owning each component (None for branch transformers).
    comp_substation: Vec<Option<usize>>,
}

fn canonical_feeders(case: &GridCase, bus_idx: usize) -> Vec<AssetRef> {
    let mut feeders = Vec::new();
    for &bi in case.branch_idxs_at_bus(bus_idx) {
        let branch = &case.branches[bi];
        let end = if case.bus_idx(branch.from).unwrap() == bus_idx {
            BranchEnd::From
        } else {
            BranchEnd::To
        };
        feeders.push(AssetRef::BranchEnd {
            branch_idx: bi,
            end,
        });
    }
    for &gi in case.gen_idxs_at_bus(bus_idx) {
        feeders.push(AssetRef::Generator { gen_idx: gi });
    }
    for &li in case.load_idxs_at_bus(bus_idx) {
        feeders.push(AssetRef::Load { load_idx: li });
    }
    feeders
}

/// Build one substation graph. `next_comp` supplies global component ids;
/// three are taken per switch-group edge.
pub fn build_substation_graph(
    bus_id: BusId,
    bus_idx: usize,
    archetype: Archetype,
    feeders: &[AssetRef],
    next_comp: &mut CompId,
) -> Result<SubstationGraph, XbbError> {
    if feeders.is_empty() {
        return Err(XbbError::NoFeeders { bus: bus_id });
    }
    let n = feeders.len();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut sg = |a: usize, b: usize, edges: &mut Vec<SgEdge>| {
        let base = *next_comp;
        *next_comp += 3;
        edges.push(SgEdge {
            a,
            b,
            components: [base, base + 1, base + 2],
        });
    };

    match archetype {
        Archetype::Sbsb => {
            nodes.push(NodeKind::InternalBus);
            for (i, f) in feeders.iter().enumerate() {
                nodes.push(NodeKind::Asset(*f));
                sg(0, i + 1, &mut edges);
            }
        }
        Archetype::Rb => {
            if n < 3 {
                return Err(XbbError::RingTooSmall {
                    bus: bus_id,
                    feeders: n,
                });
            }
            for f in feeders {
                nodes.push(NodeKind::Asset(*f));
            }
            for i in 0..n {
                sg(i, (i + 1) % n, &mut edges);
            }
        }
        Archetype::Bah => {
            nodes.push(NodeKind::InternalBus); // bus A
            nodes.push(NodeKind::InternalBus); // bus B
            for f in feeders {
                nodes.push(NodeKind::Asset(*f));
            }
            let mut i = 0;
            while i + 1 < n {
                // Full bay: busA — f_i — f_{i+1} — busB.
                let fa = 2 + i;
                let fb = 2 + i + 1;
                sg(0, fa, &mut edges);
                sg(fa, fb, &mut edges);
                sg(fb, 1, &mut edges);
                i += 2;
            }
            if i < n {
                // Half bay for the odd feeder: busA — f — busB.
                let f = 2 + i;
                sg(0, f, &mut edges);
                sg(f, 1, &mut edges);
            }
        }
        Archetype::Dbdb => {
            nodes.push(NodeKind::InternalBus); // bus A
            nodes.push(NodeKind::InternalBus); // bus B
            for (i, f) in feeders.iter().enumerate() {
                nodes.push(NodeKind::Asset(*f));
                sg(0, 2 + i, &mut edges);
                sg(1, 2 + i, &mut edges);
            }
        }
    }

    Ok(SubstationGraph {
        bus_id,
        bus_idx,
        archetype,
        nodes,
        edges,
        node_offset: 0,
        edge_offset: 0,
    })
}

impl XbbModel {
    pub fn build(case: &GridCase) -> Result<Self, XbbError> {
        let mut graphs = Vec::with_capacity(case.buses.len());
        let mut components = Vec::new();
        let mut next_comp: CompId = 0;
        let mut node_offset = 0;
        let mut edge_offset = 0;

        let mut gen_node = vec![usize::MAX; case.generators.len()];
        let mut load_node = vec![usize::MAX; case.loads.len()];
        let mut branch_from_node = vec![usize::MAX; case.branches.len()];
        let mut branch_to_node = vec![usize::MAX; case.branches.len()];

        for (bus_idx, bus) in case.buses.iter().enumerate() {
            let class =
                VoltageClass::from_base_kv(bus.base_kv).map_err(|source| XbbError::Voltage {
                    bus: bus.id,
                    source,
                })?;
            let feeders = canonical_feeders(case, bus_idx);
            let has_gen = !case.gen_idxs_at_bus(bus_idx).is_empty();
            let archetype = assign_archetype(feeders.len(), has_gen);

            let comp_base = next_comp;
            let mut graph =
                build_substation_graph(bus.id, bus_idx, archetype, &feeders, &mut next_comp)?;
            graph.node_offset = node_offset;
            graph.edge_offset = edge_offset;

            let graph_idx = graphs.len();
            let location_idx = case.location_idx_of_bus(bus_idx);
            for (edge_idx, edge) in graph.edges.iter().enumerate() {
                for (k, _comp) in edge.components.iter().enumerate() {
                    let kind = if k == 1 {
                        ComponentKind::CircuitBreaker
                    } else {
                        ComponentKind::DisconnectSwitch
                    };
                    components.push(ComponentInfo {
                        kind,
                        voltage_class: class,
                        location_idx,
                        site: CompSite::Edge {
                            graph_idx,
                            edge_idx,
                        },
                    });
                }
            }
            debug_assert_eq!(components.len(), next_comp as usize);
            debug_assert_eq!(comp_base + 3 * graph.edges.len() as CompId, next_comp);

            for (local, node) in graph.nodes.iter().enumerate() {
                let global = node_offset + local;
                if let NodeKind::Asset(asset) = node {
                    match *asset {
                        AssetRef::BranchEnd { branch_idx, end } => match end {
                            BranchEnd::From => branch_from_node[branch_idx] = global,
                            BranchEnd::To => branch_to_node[branch_idx] = global,
                        },
                        AssetRef::Generator { gen_idx } => gen_node[gen_idx] = global,
                        AssetRef::Load { load_idx } => load_node[load_idx] = global,
                    }
                }
            }

            node_offset += graph.nodes.len();
            edge_offset += graph.edges.len();
            graphs.push(graph);
        }

        // Transformer branches carry one series transformer component, rated
        // at the higher-voltage endpoint's class and located at that endpoint.
        let mut branch_transformer = vec![None; case.branches.len()];
        for (bi, branch) in case.branches.iter().enumerate() {
            if !branch.transformer {
                continue;
            }
            let from_idx = case.bus_idx(branch.from).unwrap();
            let to_idx = case.bus_idx(branch.to).unwrap();
            let hi_idx = if case.buses[from_idx].base_kv >= case.buses[to_idx].base_kv {
                from_idx
            } else {
                to_idx
            };
            let class =
                VoltageClass::from_base_kv(case.buses[hi_idx].base_kv).expect("validated above");
            let location_idx = case.location_idx_of_bus(hi_idx);
            branch_transformer[bi] = Some(next_comp);
            components.push(ComponentInfo {
                kind: ComponentKind::Transformer,
                voltage_class: class,
                location_idx,
                site: CompSite::Branch { branch_idx: bi },
            });
            next_comp += 1;
        }

        let total_nodes = node_offset;
        let total_edges = edge_offset;
        let mut static_degree = vec![0u32; total_nodes];
        for g in &graphs {
            for e in &g.edges {
                static_degree[g.node_offset + e.a] += 1;
                static_degree[g.node_offset + e.b] += 1;
            }
        }

        let mut comp_substation = vec![None; components.len()];
        for (ci, info) in components.iter().enumerate() {
            if let CompSite::Edge { graph_idx, .. } = info.site {
                comp_substation[ci] = Some(graph_idx);
            }
        }

        Ok(Self {
            graphs,
            components,
            branch_transformer,
            gen_node,
            load_node,
            branch_from_node,
            branch_to_node,
            total_nodes,
            total_edges,
            static_degree,
            comp_substation,
        })
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn substation_of_component(&self, comp: CompId) -> Option<usize> {
        self.comp_substation[comp as usize]
    }

    /// Fresh per-iteration state with everything intact.
    pub fn undamaged_state(&self) -> DamageState {
        DamageState {
            recovery_day: vec![0; self.components.len()],
            edge_down: vec![0; self.total_edges],
            degree: self.static_degree.clone(),
            branch_tx_down: vec![false; self.branch_transformer.len()],
            schedule: Vec::new(),
            cursor: 0,
            damaged_left: vec![0; self.graphs.len()],
        }
    }

    /// Topology dump (nodes, edges, component ids) keyed by bus id; the
    /// debug artifact behind `--dump-xbb`.
    pub fn topology_json(&self, case: &GridCase) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for g in &self.graphs {
            let nodes: Vec<serde_json::Value> = g
                .nodes
                .iter()
                .map(|n| match n {
                    NodeKind::InternalBus => serde_json::json!({"kind": "internal_bus"}),
                    NodeKind::Asset(AssetRef::BranchEnd { branch_idx, .. }) => {
                        serde_json::json!({"kind": "branch", "id": case.branches[*branch_idx].id.0})
                    }
                    NodeKind::Asset(AssetRef::Generator { gen_idx }) => {
                        serde_json::json!({"kind": "generator", "id": case.generators[*gen_idx].id.0})
                    }
                    NodeKind::Asset(AssetRef::Load { load_idx }) => {
                        serde_json::json!({"kind": "load", "id": case.loads[*load_idx].id.0})
                    }
                })
                .collect();
            let edges: Vec<serde_json::Value> = g
                .edges
                .iter()
                .map(|e| serde_json::json!({"a": e.a, "b": e.b, "components": e.components}))
                .collect();
            map.insert(
                g.bus_id.to_string(),
                serde_json::json!({
                    "archetype": g.archetype,
                    "nodes": nodes,
                    "edges": edges,
                }),
            );
        }
        serde_json::Value::Object(map)
    }
}

/// Substation connectivity rule for taking assets in and out of service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectivityMode {
    /// An asset is in service while its node has live degree > 0 (the
    /// literal rule from the damage methodology).
    #[serde(rename = "degree")]
    Degree,
    /// Stricter: an asset is in service only while its node can reach at
    /// least one other asset node over live edges.
    #[serde(rename = "component")]
    Component,
}

/// Overall condition of one substation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ServiceStatus {
    FullyRestored,
    FunctionallyConnected,
    Degraded,
}

/// Per-iteration mutable damage/recovery state for the whole model.
///
/// Days must be advanced in increasing order; each damaged component recovers
/// exactly once, on its scheduled day.
#[derive(Debug, Clone)]
pub struct DamageState {
    /// Per component: 0 = never damaged, d ≥ 1 = damaged, recovers on day d.
    pub recovery_day: Vec<u32>,
    /// Per global edge: number of its three components still damaged.
    edge_down: Vec<u8>,
    /// Per global node: live incident edge count.
    degree: Vec<u32>,
    /// Per branch: transformer component still damaged.
    branch_tx_down: Vec<bool>,
    /// (day, component) pairs sorted ascending; `cursor` marks progress.
    schedule: Vec<(u32, CompId)>,
    cursor: usize,
    /// Per substation: damaged components not yet recovered.
    damaged_left: Vec<u32>,
}

impl DamageState {
    /// Mark `damaged` components (with their scheduled recovery days) as
    /// failed and drop every edge that contains one. Ids must belong to the
    /// model.
    pub fn apply_damage(
        &mut self,
        model: &XbbModel,
        damaged: &[(CompId, u32)],
    ) -> Result<(), XbbError> {
        for &(comp, day) in damaged {
            if comp as usize >= model.components.len() {
                return Err(XbbError::UnknownComponent(comp));
            }
            debug_assert!(day >= 1, "damaged components recover after day 0");
            if self.recovery_day[comp as usize] != 0 {
                continue; // already damaged
            }
            self.recovery_day[comp as usize] = day;
            match model.components[comp as usize].site {
                CompSite::Edge {
                    graph_idx,
                    edge_idx,
                } => {
                    let g = &model.graphs[graph_idx];
                    let ge = g.edge_offset + edge_idx;
                    if self.edge_down[ge] == 0 {
                        let e = &g.edges[edge_idx];
                        self.degree[g.node_offset + e.a] -= 1;
                        self.degree[g.node_offset + e.b] -= 1;
                    }
                    self.edge_down[ge] += 1;
                    self.damaged_left[graph_idx] += 1;
                }
                CompSite::Branch { branch_idx } => {
                    self.branch_tx_down[branch_idx] = true;
                }
            }
            self.schedule.push((day, comp));
        }
        self.schedule.sort_unstable();
        self.cursor = 0;
        Ok(())
    }

    /// Recover every component scheduled for `day`; returns the global edge
    /// ids that came back live. Days must be visited in increasing order.
    pub fn advance_restoration(&mut self, model: &XbbModel, day: u32) -> Vec<usize> {
        debug_assert!(day >= 1);
        let mut returned = Vec::new();
        while self.cursor < self.schedule.len() && self.schedule[self.cursor].0 <= day {
            let (d, comp) = self.schedule[self.cursor];
            debug_assert_eq!(d, day, "days must be advanced in order");
            self.cursor += 1;
            match model.components[comp as usize].site {
                CompSite::Edge {
                    graph_idx,
                    edge_idx,
                } => {
                    let g = &model.graphs[graph_idx];
                    let ge = g.edge_offset + edge_idx;
                    self.edge_down[ge] -= 1;
                    if self.edge_down[ge] == 0 {
                        let e = &g.edges[edge_idx];
                        self.degree[g.node_offset + e.a] += 1;
                        self.degree[g.node_offset + e.b] += 1;
                        returned.push(ge);
                    }
                    self.damaged_left[graph_idx] -= 1;
                }
                CompSite::Branch { branch_idx } => {
                    self.branch_tx_down[branch_idx] = false;
                }
            }
        }
        returned
    }

    /// Days (ascending) on which at least one component recovers.
    pub fn event_days(&self) -> Vec<u32> {
        let mut days: Vec<u32> = self.schedule.iter().map(|&(d, _)| d).collect();
        days.dedup();
        days
    }

    /// Components still damaged (all kinds, transformer included).
    pub fn remaining_damaged(&self) -> u32 {
        (self.schedule.len() - self.cursor) as u32
    }

    pub fn node_degree(&self, global_node: usize) -> u32 {
        self.degree[global_node]
    }

    pub fn edge_is_live(&self, global_edge: usize) -> bool {
        self.edge_down[global_edge] == 0
    }

    pub fn branch_transformer_down(&self, branch_idx: usize) -> bool {
        self.branch_tx_down[branch_idx]
    }

    pub fn live_edge_count(&self, graph: &SubstationGraph) -> usize {
        (0..graph.edges.len())
            .filter(|&e| self.edge_is_live(graph.edge_offset + e))
            .count()
    }

    /// Asset nodes currently out of service in one substation under `mode`.
    /// Internal bus nodes are never reported.
    pub fn out_of_service_assets(
        &self,
        graph: &SubstationGraph,
        mode: ConnectivityMode,
    ) -> Vec<AssetRef> {
        let mut out = Vec::new();
        match mode {
            ConnectivityMode::Degree => {
                for (local, node) in graph.nodes.iter().enumerate() {
                    if let NodeKind::Asset(asset) = node {
                        if self.degree[graph.node_offset + local] == 0 {
                            out.push(*asset);
                        }
                    }
                }
            }
            ConnectivityMode::Component => {
                let comp = self.local_components(graph);
                // Count asset nodes per live component.
                let mut asset_count = vec![0usize; graph.nodes.len()];
                for (local, node) in graph.nodes.iter().enumerate() {
                    if matches!(node, NodeKind::Asset(_)) {
                        asset_count[comp[local]] += 1;
                    }
                }
                for (local, node) in graph.nodes.iter().enumerate() {
                    if let NodeKind::Asset(asset) = node {
                        if asset_count[comp[local]] < 2 {
                            out.push(*asset);
                        }
                    }
                }
            }
        }
        out
    }

    /// Connected-component label per local node over live edges.
    fn local_components(&self, graph: &SubstationGraph) -> Vec<usize> {
        let n = graph.nodes.len();
        let mut label = vec![usize::MAX; n];
        let mut adj = vec![Vec::new(); n];
        for (ei, e) in graph.edges.iter().enumerate() {
            if self.edge_is_live(graph.edge_offset + ei) {
                adj[e.a].push(e.b);
                adj[e.b].push(e.a);
            }
        }
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// True when the substation meets the functional-connection criterion:
    /// every node has live degree > 0 (degree mode), or all asset nodes are
    /// mutually reachable (component mode).
    pub fn is_functionally_connected(
        &self,
        graph: &SubstationGraph,
        mode: ConnectivityMode,
    ) -> bool {
        match mode {
            ConnectivityMode::Degree => {
                (0..graph.nodes.len()).all(|local| self.degree[graph.node_offset + local] > 0)
            }
            ConnectivityMode::Component => {
                let comp = self.local_components(graph);
                let mut assets = graph
                    .nodes
                    .iter()
                    .enumerate()
                    .filter(|(_, n)| matches!(n, NodeKind::Asset(_)));
                match assets.next() {
                    None => true,
                    Some((first, _)) => assets.all(|(local, _)| comp[local] == comp[first]),
                }
            }
        }
    }

    pub fn substation_fully_restored(&self, graph_idx: usize) -> bool {
        self.damaged_left[graph_idx] == 0
    }

    pub fn service_status(
        &self,
        model: &XbbModel,
        graph_idx: usize,
        mode: ConnectivityMode,
    ) -> ServiceStatus {
        if self.substation_fully_restored(graph_idx) {
            ServiceStatus::FullyRestored
        } else if self.is_functionally_connected(&model.graphs[graph_idx], mode) {
            ServiceStatus::FunctionallyConnected
        } else {
            ServiceStatus::Degraded
        }
    }

    /// Day each substation reaches full service: the max recovery day over
    /// its own damaged components (0 when untouched).
    pub fn full_service_days(&self, model: &XbbModel) -> Vec<u32> {
        let mut days = vec![0u32; model.graphs.len()];
        for (ci, info) in model.components.iter().enumerate() {
            if let CompSite::Edge { graph_idx, .. } = info.site {
                days[graph_idx] = days[graph_idx].max(self.recovery_day[ci]);
            }
        }
        days
    }
}
