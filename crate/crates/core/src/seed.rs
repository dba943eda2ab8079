//! Named seed derivation.
//!
//! Every random stream is identified by the root seed plus a path such as
//! `constants`, `dual/<dt>/<origin>` or `sim/<path>`. The path is hashed into
//! a ChaCha key; individual replicates use the ChaCha stream id, so replicate
//! `r` of a stream is the same regardless of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    pub fn new(root: u64, path: &str) -> Self {
        let mut h = Sha256::new();
        h.update(root.to_le_bytes());
        h.update(path.as_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        Self(key)
    }

    /// Generator for replicate `index` of this stream.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(index);
        rng
    }

    /// First 8 bytes of the key, for use as a child root seed.
    pub fn as_u64(&self) -> u64 {
        u64::from_le_bytes(self.0[..8].try_into().expect("8 bytes"))
    }
}
