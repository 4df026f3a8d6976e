use serde::{Deserialize, Serialize};
use sha1::{Digest as _, Sha1};

use super::bits::{concat, BitString};

pub const DIGEST_BITS: usize = 160;

/// A 160-bit SHA-1 output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Digest(#[serde(with = "super::bits::hex160")] BitString);

impl Digest {
    /// Wraps a 160-bit value. Panics on any other width.
    pub fn from_bits(bits: BitString) -> Digest {
        assert_eq!(bits.width(), DIGEST_BITS, "digest must be 160 bits");
        Digest(bits)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn into_bits(self) -> BitString {
        self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }
}

impl AsRef<BitString> for Digest {
    fn as_ref(&self) -> &BitString {
        &self.0
    }
}

/// SHA-1 of the byte image of `data` (right-padded with zero bits to a whole
/// byte).
pub fn hash(data: &BitString) -> Digest {
    let out = Sha1::digest(data.as_bytes());
    Digest(BitString::from_byte_vec(out.to_vec()))
}

/// `h(p0 ‖ p1 ‖ ...)`.
pub fn hash_parts(parts: &[&BitString]) -> Digest {
    hash(&concat(parts.iter().copied()))
}

/// One observed hash evaluation: the concatenated parts and the output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashRecord {
    pub parts: Vec<BitString>,
    pub output: BitString,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_matches_fips_vector() {
        assert_eq!(
            hash(&BitString::empty()).to_hex(),
            "da39a3ee5e6b4b0d3255bfef95601890afd80709"
        );
    }

    #[test]
    fn abc_matches_fips_vector() {
        let abc = BitString::from_byte_vec(b"abc".to_vec());
        assert_eq!(
            hash(&abc).to_hex(),
            "a9993e364706816aba3e25717850c26c9cd0d89d"
        );
        assert_eq!(hash(&abc), hash(&abc));
    }

    #[test]
    fn unaligned_input_is_right_padded() {
        // 0b101 pads to 0xa0
        let bits = BitString::from_bits([true, false, true]);
        let padded = BitString::from_byte_vec(vec![0xa0]);
        assert_eq!(hash(&bits), hash(&padded));
    }

    #[test]
    fn hash_parts_is_hash_of_concat() {
        let a = BitString::from_byte_vec(vec![1, 2, 3]);
        let b = BitString::from_u32(9);
        assert_eq!(hash_parts(&[&a, &b]), hash(&concat([&a, &b])));
    }

    #[test]
    fn short_corpus_has_no_collisions() {
        let mut seen = std::collections::HashSet::new();
        for i in 0u32..2000 {
            assert!(seen.insert(hash(&BitString::from_u32(i))));
        }
    }
}
