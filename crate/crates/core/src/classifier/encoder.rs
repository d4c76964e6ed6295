use super::patch_input::SEP_TOKEN;

/// Maps a token sequence to a fixed-size embedding.
pub trait Encoder: Send + Sync {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, tokens: &[String]) -> Vec<f64>;
}

pub const HASH_EMBED_ID: &str = "hash-embed";

/// Frozen feature-hashing encoder. Every (segment, token) pair maps to a
/// pseudo-random ±1 direction; the embedding is the L2-normalized sum over
/// the sequence. Tokens after the first `[SEP]` belong to segment 1, so the
/// same token contributes differently on the removed and added sides of a
/// patch input.
#[derive(Debug, Clone)]
pub struct HashingEncoder {
    dim: usize,
    seed: u64,
}

impl HashingEncoder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim, seed }
    }

    fn accumulate(&self, segment: u8, token: &str, out: &mut [f64]) {
        let mut state = fnv1a(self.seed, segment, token.as_bytes());
        let mut bits = 0u64;
        for (i, slot) in out.iter_mut().enumerate() {
            if i % 64 == 0 {
                state = splitmix64(state);
                bits = state;
            }
            *slot += if bits & 1 == 1 { 1.0 } else { -1.0 };
            bits >>= 1;
        }
    }
}

impl Encoder for HashingEncoder {
    fn id(&self) -> &str {
        HASH_EMBED_ID
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, tokens: &[String]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut segment = 0u8;
        for token in tokens {
            self.accumulate(segment, token, &mut out);
            if token == SEP_TOKEN {
                segment = 1;
            }
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|x| *x /= norm);
        }
        out
    }
}

fn fnv1a(seed: u64, segment: u8, bytes: &[u8]) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for &b in std::iter::once(&segment).chain(bytes) {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
