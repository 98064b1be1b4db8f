//! Seismic-resilience Monte Carlo simulator for bus-branch transmission grids.
//!
//! The pipeline: a bus-branch case ([`grid`]) is expanded into per-substation
//! component graphs ([`xbb`]); shaking intensity is sampled from a raster pair
//! ([`hazard`]); lognormal fragility and restoration curves ([`curves`]) damage
//! components and schedule their recovery; the engine ([`engine`]) steps each
//! iteration through a multi-hundred-day horizon, logging connectivity and
//! power-flow feasibility ([`powerflow`]); resilience metrics ([`metrics`])
//! summarize the percentile trajectories.

pub mod curves;
pub mod engine;
pub mod grid;
pub mod hazard;
pub mod math;
pub mod metrics;
pub mod powerflow;
pub mod rng;
pub mod xbb;

pub use curves::{CurveSet, FragilityCurve, RestorationCurve, VoltageClass};
pub use engine::{DayLog, IterationResult, RunResult, SimulationConfig};
pub use grid::{GridCase, RegionBox};
pub use hazard::ShakeRaster;
pub use metrics::{PerformanceTrajectory, ResilienceMetrics};
pub use xbb::{Archetype, ComponentKind, XbbModel};
