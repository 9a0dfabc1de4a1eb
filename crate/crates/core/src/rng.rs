//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed and
//! positioned on a ChaCha stream derived from `(purpose, chain, unit)`.
//! Two streams with the same key produce identical sequences; distinct
//! keys land on distinct ChaCha streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a stream is used for. Part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    Covariates,
    Choices,
    Truth,
    Prior,
    Hyper,
    Beta,
    Alpha,
    Phi,
    Geweke,
    Test,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Covariates => 1,
            Purpose::Choices => 2,
            Purpose::Truth => 3,
            Purpose::Prior => 4,
            Purpose::Hyper => 5,
            Purpose::Beta => 6,
            Purpose::Alpha => 7,
            Purpose::Phi => 8,
            Purpose::Geweke => 9,
            Purpose::Test => 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub purpose: Purpose,
    pub chain: u32,
    pub unit: u64,
}

impl StreamId {
    pub fn new(purpose: Purpose, chain: u32, unit: u64) -> Self {
        Self { purpose, chain, unit }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    id: StreamId,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, id: StreamId) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        let stream = splitmix64(splitmix64(id.purpose.tag() ^ ((id.chain as u64) << 16)) ^ splitmix64(id.unit));
        inner.set_stream(stream);
        Self { master_seed, id, inner }
    }

    pub fn from_parts(master_seed: u64, purpose: Purpose, chain: u32, unit: u64) -> Self {
        Self::new(master_seed, StreamId::new(purpose, chain, unit))
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// One stream per unit `0..count`, all sharing purpose and chain.
    pub fn family(master_seed: u64, purpose: Purpose, chain: u32, count: usize) -> Vec<Self> {
        (0..count as u64).map(|u| Self::from_parts(master_seed, purpose, chain, u)).collect()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
