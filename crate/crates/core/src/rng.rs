//! Deterministic per-iteration random substreams.
//!
//! Every Monte Carlo iteration owns a ChaCha8 stream keyed by the master seed
//! with the iteration index as the stream id, so results are a pure function
//! of `(master_seed, iteration)` no matter how iterations are scheduled across
//! threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math::phi_inv;

/// One iteration's private random stream.
pub struct SubstreamRng {
    inner: ChaCha8Rng,
}

impl SubstreamRng {
    /// Substream for `iteration` under `master_seed`.
    pub fn new(master_seed: u64, iteration: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(iteration);
        Self { inner }
    }

    /// Uniform draw on the open interval (0, 1); never returns 0 or 1, so it
    /// is safe to feed through Φ⁻¹ or logarithms.
    pub fn uniform_open01(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via the inverse-CDF transform of one uniform.
    pub fn standard_normal(&mut self) -> f64 {
        phi_inv(self.uniform_open01())
    }
}
