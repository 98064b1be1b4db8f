//! Bus-branch case ingestion, validation, and geographic queries.
//!
//! The canonical case format is a JSON document with five arrays (locations,
//! buses, branches, generators, loads). All power quantities are MW/MVAr and
//! impedances are per-unit on `base_mva`. Several buses may share one
//! geographic location.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! id_newtype {
    ($name:ident) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(BusId);
id_newtype!(LocationId);
id_newtype!(BranchId);
id_newtype!(GenId);
id_newtype!(LoadId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    #[serde(rename = "pq")]
    Pq,
    #[serde(rename = "pv")]
    Pv,
    #[serde(rename = "slack")]
    SlackCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRecord {
    pub id: LocationId,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRecord {
    pub id: BusId,
    pub location: LocationId,
    pub base_kv: f64,
    pub kind: BusKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub id: BranchId,
    pub from: BusId,
    pub to: BusId,
    pub r: f64,
    pub x: f64,
    pub b: f64,
    pub transformer: bool,
    #[serde(default = "default_true")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRecord {
    pub id: GenId,
    pub bus: BusId,
    pub pmax: f64,
    pub pmin: f64,
    pub qmax: f64,
    pub qmin: f64,
    pub vset: f64,
    #[serde(default = "default_true")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRecord {
    pub id: LoadId,
    pub bus: BusId,
    pub p: f64,
    pub q: f64,
    #[serde(default = "default_true")]
    pub in_service: bool,
}

fn default_true() -> bool {
    true
}

/// Raw case document exactly as serialized on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFile {
    pub name: String,
    pub base_mva: f64,
    pub locations: Vec<LocationRecord>,
    pub buses: Vec<BusRecord>,
    pub branches: Vec<BranchRecord>,
    pub generators: Vec<GenRecord>,
    pub loads: Vec<LoadRecord>,
}

/// Closed-interval geographic box; boundary points are inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl RegionBox {
    pub fn new(min_lat: f64, max_lat: f64, min_lon: f64, max_lon: f64) -> Result<Self, CaseError> {
        if !(min_lat < max_lat && min_lon < max_lon) {
            return Err(CaseError::InvalidRegion {
                min_lat,
                max_lat,
                min_lon,
                max_lon,
            });
        }
        Ok(Self {
            min_lat,
            max_lat,
            min_lon,
            max_lon,
        })
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.min_lat && lat <= self.max_lat && lon >= self.min_lon && lon <= self.max_lon
    }
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("case parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("case validation failed:\n{}", issues.join("\n"))]
    Validation { issues: Vec<String> },
    #[error("io error reading case: {0}")]
    Io(#[from] std::io::Error),
    #[error(
        "invalid region box: require min < max on both axes, got \
         lat [{min_lat}, {max_lat}], lon [{min_lon}, {max_lon}]"
    )]
    InvalidRegion {
        min_lat: f64,
        max_lat: f64,
        min_lon: f64,
        max_lon: f64,
    },
    #[error("unknown bus id {0}")]
    UnknownBus(BusId),
}

/// Validated, immutable bus-branch case with id→index lookups and per-bus
/// asset lists. Safe to share read-only across concurrent iterations.
#[derive(Debug, Clone)]
pub struct GridCase {
    pub name: String,
    pub system_base_mva: f64,
    pub locations: Vec<LocationRecord>,
    pub buses: Vec<BusRecord>,
    pub branches: Vec<BranchRecord>,
    pub generators: Vec<GenRecord>,
    pub loads: Vec<LoadRecord>,

    bus_index: HashMap<BusId, usize>,
    location_index: HashMap<LocationId, usize>,
    branches_at_bus: Vec<Vec<usize>>,
    gens_at_bus: Vec<Vec<usize>>,
    loads_at_bus: Vec<Vec<usize>>,
}

impl PartialEq for GridCase {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.system_base_mva == other.system_base_mva
            && self.locations == other.locations
            && self.buses == other.buses
            && self.branches == other.branches
            && self.generators == other.generators
            && self.loads == other.loads
    }
}

/// Aggregate totals for a case, optionally restricted to a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseSummary {
    pub bus_count: usize,
    pub gen_capacity_mw: f64,
    pub load_mw: f64,
}

impl GridCase {
    pub fn parse(source: &str) -> Result<Self, CaseError> {
        let file: CaseFile = serde_json::from_str(source).map_err(|e| CaseError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn parse_reader<R: Read>(mut reader: R) -> Result<Self, CaseError> {
        let mut buf = String::new();
        reader.read_to_string(&mut buf)?;
        Self::parse(&buf)
    }

    /// Validate a raw document and build the lookup structures.
    pub fn from_file(file: CaseFile) -> Result<Self, CaseError> {
        let mut issues = Vec::new();

        if file.base_mva <= 0.0 || file.base_mva.is_nan() {
            issues.push(format!("base_mva must be > 0, got {}", file.base_mva));
        }
        if file.generators.is_empty() {
            issues.push("case has no generators".to_string());
        }

        let mut location_index = HashMap::new();
        for (i, loc) in file.locations.iter().enumerate() {
            if location_index.insert(loc.id, i).is_some() {
                issues.push(format!("duplicate location id {}", loc.id));
            }
            if !(-90.0..=90.0).contains(&loc.lat) {
                issues.push(format!(
                    "location {} latitude {} out of range",
                    loc.id, loc.lat
                ));
            }
            if !(-180.0..=180.0).contains(&loc.lon) {
                issues.push(format!(
                    "location {} longitude {} out of range",
                    loc.id, loc.lon
                ));
            }
        }

        let mut bus_index = HashMap::new();
        for (i, bus) in file.buses.iter().enumerate() {
            if bus_index.insert(bus.id, i).is_some() {
                issues.push(format!("duplicate bus id {}", bus.id));
            }
            if !location_index.contains_key(&bus.location) {
                issues.push(format!(
                    "bus {} references unknown location {}",
                    bus.id, bus.location
                ));
            }
            if bus.base_kv < 13.2 {
                issues.push(format!(
                    "bus {} base_kv {} below the 13.2 kV model floor",
                    bus.id, bus.base_kv
                ));
            }
        }

        let mut branch_ids = HashMap::new();
        for branch in &file.branches {
            if branch_ids.insert(branch.id, ()).is_some() {
                issues.push(format!("duplicate branch id {}", branch.id));
            }
            if branch.from == branch.to {
                issues.push(format!(
                    "branch {} connects bus {} to itself",
                    branch.id, branch.from
                ));
            }
            if branch.x == 0.0 {
                issues.push(format!("branch {} has zero reactance", branch.id));
            }
            for end in [branch.from, branch.to] {
                if !bus_index.contains_key(&end) {
                    issues.push(format!(
                        "branch {} references unknown bus {}",
                        branch.id, end
                    ));
                }
            }
        }

        let mut gen_ids = HashMap::new();
        for gen in &file.generators {
            if gen_ids.insert(gen.id, ()).is_some() {
                issues.push(format!("duplicate generator id {}", gen.id));
            }
            if !bus_index.contains_key(&gen.bus) {
                issues.push(format!(
                    "generator {} references unknown bus {}",
                    gen.id, gen.bus
                ));
            }
            if gen.pmax < gen.pmin {
                issues.push(format!(
                    "generator {} has pmax {} < pmin {}",
                    gen.id, gen.pmax, gen.pmin
                ));
            }
            if gen.vset <= 0.0 || gen.vset.is_nan() {
                issues.push(format!(
                    "generator {} has non-positive vset {}",
                    gen.id, gen.vset
                ));
            }
        }

        let mut load_ids = HashMap::new();
        for load in &file.loads {
            if load_ids.insert(load.id, ()).is_some() {
                issues.push(format!("duplicate load id {}", load.id));
            }
            if !bus_index.contains_key(&load.bus) {
                issues.push(format!(
                    "load {} references unknown bus {}",
                    load.id, load.bus
                ));
            }
        }

        if !issues.is_empty() {
            return Err(CaseError::Validation { issues });
        }

        let n = file.buses.len();
        let mut branches_at_bus = vec![Vec::new(); n];
        let mut gens_at_bus = vec![Vec::new(); n];
        let mut loads_at_bus = vec![Vec::new(); n];
        for (i, branch) in file.branches.iter().enumerate() {
            branches_at_bus[bus_index[&branch.from]].push(i);
            branches_at_bus[bus_index[&branch.to]].push(i);
        }
        for (i, gen) in file.generators.iter().enumerate() {
            gens_at_bus[bus_index[&gen.bus]].push(i);
        }
        for (i, load) in file.loads.iter().enumerate() {
            loads_at_bus[bus_index[&load.bus]].push(i);
        }

        Ok(Self {
            name: file.name,
            system_base_mva: file.base_mva,
            locations: file.locations,
            buses: file.buses,
            branches: file.branches,
            generators: file.generators,
            loads: file.loads,
            bus_index,
            location_index,
            branches_at_bus,
            gens_at_bus,
            loads_at_bus,
        })
    }

    pub fn to_file(&self) -> CaseFile {
        CaseFile {
            name: self.name.clone(),
            base_mva: self.system_base_mva,
            locations: self.locations.clone(),
            buses: self.buses.clone(),
            branches: self.branches.clone(),
            generators: self.generators.clone(),
            loads: self.loads.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("case serialization cannot fail")
    }

    pub fn bus_idx(&self, id: BusId) -> Result<usize, CaseError> {
        self.bus_index
            .get(&id)
            .copied()
            .ok_or(CaseError::UnknownBus(id))
    }

    pub fn location_of_bus_idx(&self, bus_idx: usize) -> &LocationRecord {
        &self.locations[self.location_idx_of_bus(bus_idx)]
    }

    pub fn location_idx_of_bus(&self, bus_idx: usize) -> usize {
        self.location_index[&self.buses[bus_idx].location]
    }

    pub fn branch_idxs_at_bus(&self, bus_idx: usize) -> &[usize] {
        &self.branches_at_bus[bus_idx]
    }

    pub fn gen_idxs_at_bus(&self, bus_idx: usize) -> &[usize] {
        &self.gens_at_bus[bus_idx]
    }

    pub fn load_idxs_at_bus(&self, bus_idx: usize) -> &[usize] {
        &self.loads_at_bus[bus_idx]
    }

    /// Bus indexes whose location falls inside the box (closed intervals).
    pub fn bus_idxs_in_region(&self, region: &RegionBox) -> Vec<usize> {
        (0..self.buses.len())
            .filter(|&i| {
                let loc = self.location_of_bus_idx(i);
                region.contains(loc.lat, loc.lon)
            })
            .collect()
    }

    /// Bus ids whose location falls inside the box, ascending.
    pub fn buses_in_region(&self, region: &RegionBox) -> Vec<BusId> {
        let mut ids: Vec<BusId> = self
            .bus_idxs_in_region(region)
            .into_iter()
            .map(|i| self.buses[i].id)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Totals over the whole case, or over the buses inside `region`.
    /// Capacity and load count in-service records attached to those buses.
    pub fn summary(&self, region: Option<&RegionBox>) -> CaseSummary {
        let in_region: Vec<bool> = match region {
            None => vec![true; self.buses.len()],
            Some(r) => {
                let mut mask = vec![false; self.buses.len()];
                for i in self.bus_idxs_in_region(r) {
                    mask[i] = true;
                }
                mask
            }
        };
        let bus_count = in_region.iter().filter(|&&b| b).count();
        let gen_capacity_mw = self
            .generators
            .iter()
            .filter(|g| g.in_service && in_region[self.bus_index[&g.bus]])
            .map(|g| g.pmax)
            .sum();
        let load_mw = self
            .loads
            .iter()
            .filter(|l| l.in_service && in_region[self.bus_index[&l.bus]])
            .map(|l| l.p)
            .sum();
        CaseSummary {
            bus_count,
            gen_capacity_mw,
            load_mw,
        }
    }
}
