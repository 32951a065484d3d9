//! Game oracles: constructed ground-truth games, a toy embedding model, and a
//! caching client for a remote scoring service.

mod multilinear;
mod remote;
mod toy;

pub use multilinear::{multilinear_eval, MultilinearGame, MultilinearOracle, PlantConfig};
pub use remote::{remote_eval, DiskCache, RemoteConfig, RemoteInfo, RemoteOracle, ScoreRequest, PROTOCOL_MAJOR};
pub use toy::{ToyEmbeddingGame, ToyEmbeddingOracle};

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::game::{BimodalContext, GameOracle, OracleMetadata};

/// Stable 64-bit seed derived from a root seed and a path of string parts.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Multiplies every score of the wrapped oracle by a constant.
pub struct ScaledOracle<O> {
    inner: O,
    factor: f64,
}

impl<O: GameOracle> ScaledOracle<O> {
    pub fn new(inner: O, factor: f64) -> Self {
        Self { inner, factor }
    }
}

impl<O: GameOracle> GameOracle for ScaledOracle<O> {
    fn metadata(&self) -> OracleMetadata {
        let mut m = self.inner.metadata();
        m.extra.insert("scale".into(), self.factor.to_string());
        m
    }

    fn evaluate(&self, ctx: &BimodalContext) -> Result<f64> {
        Ok(self.inner.evaluate(ctx)? * self.factor)
    }

    fn evaluate_batch(&self, ctxs: &[BimodalContext]) -> Result<Vec<f64>> {
        Ok(self
            .inner
            .evaluate_batch(ctxs)?
            .into_iter()
            .map(|v| v * self.factor)
            .collect())
    }
}
