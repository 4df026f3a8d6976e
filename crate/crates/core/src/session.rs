use std::fmt;

use serde::{Deserialize, Serialize};

use crate::meter::OpCounter;
use crate::primitives::{hash, Digest, FuzzyExtractorParams};
use crate::wire::{Msg1, Msg2, Msg3};

/// Parameters every party agrees on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Freshness window in clock ticks.
    pub delta_t: u32,
    pub fe: FuzzyExtractorParams,
    pub puf_noise: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            delta_t: 2,
            fe: FuzzyExtractorParams::default(),
            puf_noise: 0.0,
        }
    }
}

/// The established user/UAV key. Its `Debug` output shows only the
/// fingerprint.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey(Digest);

impl SessionKey {
    pub(crate) fn new(d: Digest) -> SessionKey {
        SessionKey(d)
    }

    /// `h(SK)`, safe to print.
    pub fn fingerprint(&self) -> String {
        hash(self.0.bits()).to_hex()
    }

    pub fn expose(&self) -> &Digest {
        &self.0
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionKey(fp:{})", &self.fingerprint()[..16])
    }
}

/// Messages and per-role tallies of one AKA run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub msg1: Option<Msg1>,
    pub msg2: Option<Msg2>,
    pub msg3: Option<Msg3>,
    pub user_ops: OpCounter,
    pub gwn_ops: OpCounter,
    pub uav_ops: OpCounter,
    /// The user accepted MSG3 and derived a key.
    pub completed: bool,
}
