use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::bits::BitString;
use super::FIELD_BITS;

pub const NONCE_BITS: usize = 128;

/// The deterministic generator threaded through every party.
pub type SimRng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `width` uniformly random bits.
pub fn random_bits(rng: &mut SimRng, width: usize) -> BitString {
    let mut bytes = vec![0u8; width.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    BitString::from_bytes(&bytes, width)
}

/// A 128-bit nonce. In hashes and XOR terms it is used zero-extended to the
/// 160-bit field width, see [`Nonce::field`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Nonce(BitString);

impl Nonce {
    pub fn from_bits(bits: BitString) -> Nonce {
        assert_eq!(bits.width(), NONCE_BITS, "nonce must be 128 bits");
        Nonce(bits)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    /// The nonce zero-extended to 160 bits.
    pub fn field(&self) -> BitString {
        self.0.widen(FIELD_BITS)
    }

    /// Inverse of [`Nonce::field`]; `None` unless the top 32 bits are zero.
    pub fn from_field(field: &BitString) -> Option<Nonce> {
        if field.width() != FIELD_BITS || !field.has_zero_prefix(FIELD_BITS - NONCE_BITS) {
            return None;
        }
        Some(Nonce(field.slice(FIELD_BITS - NONCE_BITS, NONCE_BITS)))
    }
}

pub fn random_nonce(rng: &mut SimRng) -> Nonce {
    Nonce(random_bits(rng, NONCE_BITS))
}
