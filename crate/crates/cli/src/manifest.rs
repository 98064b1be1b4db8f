//! The run manifest: config echo, input digests, tool version, and timing —
//! enough to reproduce a run bit-for-bit (wall clock aside).

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use shakegrid::engine::SimulationConfig;

use crate::AppFailure;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub config: SimulationConfig,
    pub case: InputDigest,
    pub shakemap_mean: InputDigest,
    pub shakemap_sigma: InputDigest,
    /// Absent when the built-in placeholder curve table was used.
    pub curves: Option<InputDigest>,
    pub emit_daylogs: bool,
    /// The only field expected to differ between identical invocations.
    pub wall_clock_seconds: f64,
}

pub fn digest_file(path: &Path) -> Result<InputDigest, AppFailure> {
    let bytes = std::fs::read(path)
        .map_err(|e| AppFailure::io(format!("cannot read {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: format!("{:x}", hasher.finalize()),
    })
}
