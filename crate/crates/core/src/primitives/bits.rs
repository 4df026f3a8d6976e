//! Fixed-width bit strings.
//!
//! Bits are packed most-significant first into bytes. When the width is not a
//! multiple of eight the unused low bits of the final byte are always zero, so
//! the byte image doubles as the canonical right-zero-padded hash input.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bytes: Vec<u8>,
    width: usize,
}

impl BitString {
    pub fn zeros(width: usize) -> Self {
        BitString {
            bytes: vec![0; width.div_ceil(8)],
            width,
        }
    }

    pub fn empty() -> Self {
        Self::zeros(0)
    }

    /// Builds a bit string from its byte image. Bits beyond `width` must be
    /// zero; they are cleared if not.
    pub fn from_bytes(bytes: &[u8], width: usize) -> Self {
        assert!(
            bytes.len() * 8 >= width,
            "{} bytes cannot hold {} bits",
            bytes.len(),
            width
        );
        let mut bytes = bytes[..width.div_ceil(8)].to_vec();
        let rem = width % 8;
        if rem != 0 {
            if let Some(last) = bytes.last_mut() {
                *last &= 0xffu8 << (8 - rem);
            }
        }
        BitString { bytes, width }
    }

    /// Whole bytes; width is `8 * bytes.len()`.
    pub fn from_byte_vec(bytes: Vec<u8>) -> Self {
        let width = bytes.len() * 8;
        BitString { bytes, width }
    }

    pub fn from_u32(value: u32) -> Self {
        Self::from_byte_vec(value.to_be_bytes().to_vec())
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = BitString::empty();
        for bit in bits {
            if out.width.is_multiple_of(8) {
                out.bytes.push(0);
            }
            out.width += 1;
            out.set(out.width - 1, bit);
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0
    }

    /// Byte image, right-padded with zero bits.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Bit `index`, counting from the most significant end.
    pub fn get(&self, index: usize) -> bool {
        assert!(
            index < self.width,
            "bit {index} out of range {}",
            self.width
        );
        self.bytes[index / 8] & (0x80 >> (index % 8)) != 0
    }

    pub fn set(&mut self, index: usize, bit: bool) {
        assert!(
            index < self.width,
            "bit {index} out of range {}",
            self.width
        );
        let mask = 0x80 >> (index % 8);
        if bit {
            self.bytes[index / 8] |= mask;
        } else {
            self.bytes[index / 8] &= !mask;
        }
    }

    pub fn flip(&mut self, index: usize) {
        let bit = self.get(index);
        self.set(index, !bit);
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn hamming_distance(&self, other: &BitString) -> usize {
        self.xor(other).count_ones()
    }

    /// Bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.width, "slice past end");
        if start.is_multiple_of(8) {
            return BitString::from_bytes(&self.bytes[start / 8..], len);
        }
        BitString::from_bits((start..start + len).map(|i| self.get(i)))
    }

    /// Bitwise XOR. The narrower operand is zero-extended on the left, so the
    /// result has the wider operand's width.
    pub fn xor(&self, other: &BitString) -> BitString {
        let (wide, narrow) = if self.width >= other.width {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = wide.clone();
        let offset = wide.width - narrow.width;
        if offset % 8 == 0 {
            let base = offset / 8;
            for (i, b) in narrow.bytes.iter().enumerate() {
                out.bytes[base + i] ^= b;
            }
        } else {
            for i in 0..narrow.width {
                if narrow.get(i) {
                    out.flip(offset + i);
                }
            }
        }
        out
    }

    /// Zero-extends on the left to `width` bits.
    pub fn widen(&self, width: usize) -> BitString {
        assert!(
            width >= self.width,
            "cannot widen {} to {}",
            self.width,
            width
        );
        BitString::zeros(width).xor(self)
    }

    pub fn append(&mut self, other: &BitString) {
        if self.width.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.width += other.width;
        } else {
            for bit in other.bits() {
                if self.width.is_multiple_of(8) {
                    self.bytes.push(0);
                }
                self.width += 1;
                self.set(self.width - 1, bit);
            }
        }
    }

    /// Lowercase hex of the byte image, no separators.
    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn from_hex(s: &str, width: usize) -> Result<BitString, HexError> {
        let bytes = hex::decode(s).map_err(|_| HexError::NotHex)?;
        if bytes.len() != width.div_ceil(8) {
            return Err(HexError::Width {
                expected: width,
                found: bytes.len() * 8,
            });
        }
        let bs = BitString::from_bytes(&bytes, width);
        if bs.bytes != bytes {
            return Err(HexError::TrailingBits);
        }
        Ok(bs)
    }

    /// Leading `n` bits are all zero.
    pub fn has_zero_prefix(&self, n: usize) -> bool {
        (0..n.min(self.width)).all(|i| !self.get(i))
    }
}

/// Concatenates `parts` in order.
pub fn concat<'a, I>(parts: I) -> BitString
where
    I: IntoIterator<Item = &'a BitString>,
{
    let mut out = BitString::empty();
    for part in parts {
        out.append(part);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HexError {
    #[error("not a hex string")]
    NotHex,
    #[error("expected {expected} bits, found {found}")]
    Width { expected: usize, found: usize },
    #[error("bits set beyond the declared width")]
    TrailingBits,
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}:{})", self.width, self.to_hex())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Serialized as `{"width": n, "hex": "..."}`.
#[derive(Serialize, Deserialize)]
struct BitStringRepr {
    width: usize,
    hex: String,
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        BitStringRepr {
            width: self.width,
            hex: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = BitStringRepr::deserialize(d)?;
        BitString::from_hex(&repr.hex, repr.width).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for fields whose width is fixed by the schema: plain hex.
pub(crate) mod hex160 {
    use super::BitString;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BitString, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_hex())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BitString, D::Error> {
        let s = String::deserialize(d)?;
        BitString::from_hex(&s, 160).map_err(serde::de::Error::custom)
    }
}
