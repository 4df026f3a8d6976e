//! Bit-exact message encodings.
//!
//! Every message is the concatenation of its fields in declaration order,
//! big-endian within each field, with no tags, lengths or padding. Message type
//! and routing travel out of band on the simulated channel and are not counted.

use serde::{Deserialize, Serialize};

use crate::primitives::{concat, BitString, Digest, DIGEST_BITS, FIELD_BITS};
use crate::session::SessionTranscript;

pub const TIMESTAMP_BITS: usize = 32;

/// Simulated-clock ticks, 32 bits on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u32);

impl Timestamp {
    pub fn bits(&self) -> BitString {
        BitString::from_u32(self.0)
    }

    fn from_bits(bits: &BitString) -> Timestamp {
        let b = bits.as_bytes();
        Timestamp(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// `|self - now| < window`.
    pub fn is_fresh(&self, now: Timestamp, window: u32) -> bool {
        (self.0 as i64 - now.0 as i64).unsigned_abs() < window as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("{message}: expected {expected} bits, found {found}")]
    WidthMismatch {
        message: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{message}.{field}: expected {expected} bits, found {found}")]
    FieldWidth {
        message: &'static str,
        field: &'static str,
        expected: usize,
        found: usize,
    },
}

/// A fixed-layout protocol message.
pub trait WireMessage: Sized {
    const NAME: &'static str;
    /// `(field name, width)` in wire order.
    const LAYOUT: &'static [(&'static str, usize)];

    fn to_fields(&self) -> Vec<BitString>;
    fn from_fields(fields: Vec<BitString>) -> Self;

    fn bit_width() -> usize {
        Self::LAYOUT.iter().map(|(_, w)| w).sum()
    }

    fn encode(&self) -> Result<BitString, WireError> {
        let fields = self.to_fields();
        for ((name, width), field) in Self::LAYOUT.iter().zip(&fields) {
            if field.width() != *width {
                return Err(WireError::FieldWidth {
                    message: Self::NAME,
                    field: name,
                    expected: *width,
                    found: field.width(),
                });
            }
        }
        Ok(concat(&fields))
    }

    fn decode(raw: &BitString) -> Result<Self, WireError> {
        if raw.width() != Self::bit_width() {
            return Err(WireError::WidthMismatch {
                message: Self::NAME,
                expected: Self::bit_width(),
                found: raw.width(),
            });
        }
        let mut offset = 0;
        let fields = Self::LAYOUT
            .iter()
            .map(|(_, w)| {
                let f = raw.slice(offset, *w);
                offset += w;
                f
            })
            .collect();
        Ok(Self::from_fields(fields))
    }
}

macro_rules! field_layout {
    ($($name:literal : $w:expr),* $(,)?) => {
        &[$(($name, $w)),*]
    };
}

/// User to gateway: `{MAC_1, RID_j, G_i, F_i', TS_1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Msg1 {
    pub mac1: Digest,
    pub rid_j: BitString,
    pub g_i: BitString,
    pub f_i_prime: BitString,
    pub ts1: Timestamp,
}

impl WireMessage for Msg1 {
    const NAME: &'static str = "MSG1";
    const LAYOUT: &'static [(&'static str, usize)] = field_layout!(
        "MAC_1": DIGEST_BITS, "RID_j": FIELD_BITS, "G_i": FIELD_BITS,
        "F_i'": FIELD_BITS, "TS_1": TIMESTAMP_BITS,
    );

    fn to_fields(&self) -> Vec<BitString> {
        vec![
            self.mac1.bits().clone(),
            self.rid_j.clone(),
            self.g_i.clone(),
            self.f_i_prime.clone(),
            self.ts1.bits(),
        ]
    }

    fn from_fields(f: Vec<BitString>) -> Self {
        Msg1 {
            mac1: Digest::from_bits(f[0].clone()),
            rid_j: f[1].clone(),
            g_i: f[2].clone(),
            f_i_prime: f[3].clone(),
            ts1: Timestamp::from_bits(&f[4]),
        }
    }
}

/// Gateway to UAV: `{MAC_2, V_1, H_i, F_i'', TS_2}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Msg2 {
    pub mac2: Digest,
    pub v1: BitString,
    pub h_i: BitString,
    pub f_i_dprime: BitString,
    pub ts2: Timestamp,
}

impl WireMessage for Msg2 {
    const NAME: &'static str = "MSG2";
    const LAYOUT: &'static [(&'static str, usize)] = field_layout!(
        "MAC_2": DIGEST_BITS, "V_1": FIELD_BITS, "H_i": FIELD_BITS,
        "F_i''": FIELD_BITS, "TS_2": TIMESTAMP_BITS,
    );

    fn to_fields(&self) -> Vec<BitString> {
        vec![
            self.mac2.bits().clone(),
            self.v1.clone(),
            self.h_i.clone(),
            self.f_i_dprime.clone(),
            self.ts2.bits(),
        ]
    }

    fn from_fields(f: Vec<BitString>) -> Self {
        Msg2 {
            mac2: Digest::from_bits(f[0].clone()),
            v1: f[1].clone(),
            h_i: f[2].clone(),
            f_i_dprime: f[3].clone(),
            ts2: Timestamp::from_bits(&f[4]),
        }
    }
}

/// UAV to user: `{V_5, V_4, TS_3, V_2}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Msg3 {
    pub v5: BitString,
    pub v4: BitString,
    pub ts3: Timestamp,
    pub v2: BitString,
}

impl WireMessage for Msg3 {
    const NAME: &'static str = "MSG3";
    const LAYOUT: &'static [(&'static str, usize)] = field_layout!(
        "V_5": FIELD_BITS, "V_4": FIELD_BITS, "TS_3": TIMESTAMP_BITS, "V_2": FIELD_BITS,
    );

    fn to_fields(&self) -> Vec<BitString> {
        vec![
            self.v5.clone(),
            self.v4.clone(),
            self.ts3.bits(),
            self.v2.clone(),
        ]
    }

    fn from_fields(f: Vec<BitString>) -> Self {
        Msg3 {
            v5: f[0].clone(),
            v4: f[1].clone(),
            ts3: Timestamp::from_bits(&f[2]),
            v2: f[3].clone(),
        }
    }
}

macro_rules! registration_message {
    ($(#[$doc:meta])* $ty:ident, $name:literal, { $($field:ident : $label:literal),+ $(,)? }) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
        pub struct $ty {
            $(pub $field: BitString,)+
        }

        impl WireMessage for $ty {
            const NAME: &'static str = $name;
            const LAYOUT: &'static [(&'static str, usize)] = &[$(($label, FIELD_BITS)),+];

            fn to_fields(&self) -> Vec<BitString> {
                vec![$(self.$field.clone()),+]
            }

            fn from_fields(f: Vec<BitString>) -> Self {
                let mut it = f.into_iter();
                $ty { $($field: it.next().expect("layout arity"),)+ }
            }
        }
    };
}

registration_message!(
    /// `{TID_i, TPW_i}` over the secure registration channel.
    UserRegistrationRequest, "USER_REG_REQ", { tid: "TID_i", tpw: "TPW_i" });
registration_message!(UserRegistrationResponse, "USER_REG_RESP", { tc_id: "TC_IDi" });
registration_message!(UavRegistrationRequest, "UAV_REG_REQ", { id: "ID_j" });
registration_message!(UavRegistrationResponse, "UAV_REG_RESP", { tc_id: "TC_IDj", challenge: "C_j" });
registration_message!(UavResponseSubmission, "UAV_REG_PUF", { response: "R_j" });
registration_message!(
    /// `{TID_i, TPW_i'}` for smart-card replacement.
    ReplacementRequest, "REPLACE_REQ", { tid: "TID_i", tpw: "TPW_i'" });
registration_message!(ReplacementResponse, "REPLACE_RESP", { tc_id: "TC_IDi" });

/// Per-message and total bit counts of one AKA session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitCounts {
    pub msg1: usize,
    pub msg2: usize,
    pub msg3: usize,
    pub total: usize,
    pub message_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BitCountError {
    #[error("transcript has no {0}")]
    Incomplete(&'static str),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// Measures the serialized messages of a completed session.
pub fn protocol_bits(transcript: &SessionTranscript) -> Result<BitCounts, BitCountError> {
    let msg1 = transcript
        .msg1
        .as_ref()
        .ok_or(BitCountError::Incomplete("MSG1"))?;
    let msg2 = transcript
        .msg2
        .as_ref()
        .ok_or(BitCountError::Incomplete("MSG2"))?;
    let msg3 = transcript
        .msg3
        .as_ref()
        .ok_or(BitCountError::Incomplete("MSG3"))?;
    let sizes = [
        msg1.encode()?.width(),
        msg2.encode()?.width(),
        msg3.encode()?.width(),
    ];
    Ok(BitCounts {
        msg1: sizes[0],
        msg2: sizes[1],
        msg3: sizes[2],
        total: sizes.iter().sum(),
        message_count: sizes.len(),
    })
}

/// Reference communication costs of the comparison protocols.
pub const BASELINE_BITS: [(&str, usize, usize); 4] = [
    ("Wazid et al. 2019", 3, 1696),
    ("Xu et al. 2023", 3, 2336),
    ("Alladi et al. 2020", 6, 3200),
    ("Mahmood et al. 2022", 3, 2240),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{random_bits, rng_from_seed, SimRng};
    use proptest::prelude::*;

    fn f(rng: &mut SimRng) -> BitString {
        random_bits(rng, 160)
    }

    fn sample(seed: u64) -> (Msg1, Msg2, Msg3) {
        let mut r = rng_from_seed(seed);
        let m1 = Msg1 {
            mac1: Digest::from_bits(f(&mut r)),
            rid_j: f(&mut r),
            g_i: f(&mut r),
            f_i_prime: f(&mut r),
            ts1: Timestamp(seed as u32),
        };
        let m2 = Msg2 {
            mac2: Digest::from_bits(f(&mut r)),
            v1: f(&mut r),
            h_i: f(&mut r),
            f_i_dprime: f(&mut r),
            ts2: Timestamp(!(seed as u32)),
        };
        let m3 = Msg3 {
            v5: f(&mut r),
            v4: f(&mut r),
            ts3: Timestamp(seed.wrapping_mul(31) as u32),
            v2: f(&mut r),
        };
        (m1, m2, m3)
    }

    #[test]
    fn encoded_widths() {
        let (m1, m2, m3) = sample(1);
        assert_eq!(m1.encode().unwrap().width(), 672);
        assert_eq!(m2.encode().unwrap().width(), 672);
        assert_eq!(m3.encode().unwrap().width(), 512);
        let reg = UavRegistrationResponse {
            tc_id: BitString::zeros(160),
            challenge: BitString::zeros(160),
        };
        assert_eq!(reg.encode().unwrap().width(), 320);
    }

    #[test]
    fn msg1_layout_offsets() {
        let (m1, _, _) = sample(2);
        let raw = m1.encode().unwrap();
        assert_eq!(raw.slice(0, 160), *m1.mac1.bits());
        assert_eq!(raw.slice(160, 160), m1.rid_j);
        assert_eq!(raw.slice(320, 160), m1.g_i);
        assert_eq!(raw.slice(480, 160), m1.f_i_prime);
        assert_eq!(raw.slice(640, 32), m1.ts1.bits());
    }

    #[test]
    fn wrong_width_rejected() {
        let err = Msg1::decode(&BitString::zeros(671)).unwrap_err();
        assert_eq!(
            err,
            WireError::WidthMismatch {
                message: "MSG1",
                expected: 672,
                found: 671
            }
        );
        let (_, _, mut m3) = sample(3);
        m3.v4 = BitString::zeros(128);
        assert!(matches!(
            m3.encode(),
            Err(WireError::FieldWidth { field: "V_4", .. })
        ));
    }

    #[test]
    fn freshness_window() {
        assert!(Timestamp(10).is_fresh(Timestamp(11), 2));
        assert!(!Timestamp(10).is_fresh(Timestamp(12), 2));
        assert!(!Timestamp(12).is_fresh(Timestamp(10), 2));
        assert!(!Timestamp(u32::MAX).is_fresh(Timestamp(0), 2));
    }

    #[test]
    fn incomplete_transcript_has_no_bit_count() {
        let t = SessionTranscript::default();
        assert_eq!(protocol_bits(&t), Err(BitCountError::Incomplete("MSG1")));
    }

    proptest! {
        #[test]
        fn round_trips(seed in any::<u64>()) {
            let (m1, m2, m3) = sample(seed);
            prop_assert_eq!(Msg1::decode(&m1.encode().unwrap()).unwrap(), m1);
            prop_assert_eq!(Msg2::decode(&m2.encode().unwrap()).unwrap(), m2);
            prop_assert_eq!(Msg3::decode(&m3.encode().unwrap()).unwrap(), m3);
        }

        #[test]
        fn decode_is_total_and_inverts(bytes in prop::collection::vec(any::<u8>(), 84)) {
            let raw = BitString::from_byte_vec(bytes);
            let m1 = Msg1::decode(&raw).unwrap();
            prop_assert_eq!(m1.encode().unwrap(), raw.clone());
            let m2 = Msg2::decode(&raw).unwrap();
            prop_assert_eq!(m2.encode().unwrap(), raw.clone());
            let m3 = Msg3::decode(&raw.slice(0, 512)).unwrap();
            prop_assert_eq!(m3.encode().unwrap(), raw.slice(0, 512));
        }
    }
}
