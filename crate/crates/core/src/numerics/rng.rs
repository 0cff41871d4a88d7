use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed out by [`RngStream`].
pub type StreamRng = ChaCha8Rng;

/// A reproducible random stream: ChaCha8 keyed by `master_seed`, with the
/// 64-bit ChaCha stream selector set to `stream_id`.
///
/// The same pair always yields the same sequence; different stream ids give
/// independent keystreams under one master seed, so sweep cells can be
/// evaluated in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Stream for a labelled job, e.g. `("bimodal/basis", &[d, run])`.
    pub fn derive(master_seed: u64, label: &str, parts: &[u64]) -> Self {
        Self::new(master_seed, stream_id(label, parts))
    }

    /// Fresh generator positioned at the start of the stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Stable 64-bit id from a label and integer coordinates (FNV-1a over the
/// label, then a splitmix64 fold of each part).
pub fn stream_id(label: &str, parts: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
