//! UAV side: registration responder and AKA step 3.

use serde::{Deserialize, Serialize};

use crate::meter::Meter;
use crate::primitives::{hex160, random_nonce, BitString, Digest, Nonce, PufDevice, SimRng};
use crate::replay::ReplayCache;
use crate::session::SessionKey;
use crate::wire::{Msg2, Msg3, Timestamp, UavRegistrationResponse, UavResponseSubmission};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UavError {
    #[error("stale timestamp")]
    StaleTimestamp,
    #[error("replayed message")]
    ReplayDetected,
    #[error("MAC_2 mismatch")]
    MacMismatch,
}

/// Everything a captured UAV gives up: `{C_j, ID_j, TC_IDj}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryImage {
    #[serde(with = "hex160")]
    pub id: BitString,
    #[serde(with = "hex160")]
    pub challenge: BitString,
    pub tc_id: Digest,
}

#[derive(Debug, Clone)]
pub struct UavState {
    memory: MemoryImage,
    replay: ReplayCache,
}

impl UavState {
    pub fn from_memory(memory: MemoryImage) -> UavState {
        UavState {
            memory,
            replay: ReplayCache::new(),
        }
    }

    pub fn id(&self) -> &BitString {
        &self.memory.id
    }

    /// Registration step 3: answer the gateway's challenge and keep the
    /// credentials. The response itself is not stored.
    pub fn register(
        dev: &PufDevice,
        id: BitString,
        resp: &UavRegistrationResponse,
        rng: &mut SimRng,
        meter: &mut Meter,
    ) -> (UavResponseSubmission, UavState) {
        let response = meter.puf(dev, &resp.challenge, rng);
        let state = UavState::from_memory(MemoryImage {
            id,
            challenge: resp.challenge.clone(),
            tc_id: Digest::from_bits(resp.tc_id.clone()),
        });
        (UavResponseSubmission { response }, state)
    }

    /// The physical-capture surface. The PUF is a device property and is
    /// not part of it.
    pub fn capture_memory(&self) -> MemoryImage {
        self.memory.clone()
    }

    /// AKA step 3. No key material is produced on any error path.
    pub fn aka_respond(
        &mut self,
        dev: &PufDevice,
        msg2: &Msg2,
        now: Timestamp,
        delta_t: u32,
        rng: &mut SimRng,
        meter: &mut Meter,
    ) -> Result<(Msg3, SessionKey), UavError> {
        if !msg2.ts2.is_fresh(now, delta_t) {
            return Err(UavError::StaleTimestamp);
        }
        if self.replay.contains(msg2.mac2.bits()) {
            return Err(UavError::ReplayDetected);
        }
        let MemoryImage {
            id,
            challenge,
            tc_id,
        } = &self.memory;
        let r_j = meter.puf(dev, challenge, rng);
        let mask1 = meter.h(&[id, tc_id.bits(), &r_j]);
        let n_j = meter.xor(&msg2.v1, mask1.bits());
        let tid_j = meter.h(&[id, &n_j]);
        let mac2 = meter.h(&[&msg2.v1, tid_j.bits(), &r_j, &msg2.ts2.bits()]);
        // A recovered nonce must carry the zero prefix of a 128-bit value.
        if mac2 != msg2.mac2 || Nonce::from_field(&n_j).is_none() {
            return Err(UavError::MacMismatch);
        }
        if !self.replay.insert(msg2.mac2.bits(), msg2.ts2, now, delta_t) {
            return Err(UavError::ReplayDetected);
        }

        let n_k = random_nonce(rng).field();
        let ts3 = now.bits();
        let tid_i = meter.xor(&msg2.h_i, &n_j);
        let mask2 = meter.h(&[id, &tid_i, &ts3]);
        let v2 = meter.xor(mask2.bits(), &n_k);
        let f_i = meter.xor(&msg2.f_i_dprime, &r_j);
        let rid_j = meter.xor(id, &f_i);
        let v3 = meter.h(&[tid_j.bits(), tc_id.bits()]);
        let sk = meter.h(&[v3.bits(), &tid_i, &rid_j, &n_k, &ts3]);
        let mask4 = meter.h(&[&tid_i, &rid_j, &n_k]);
        let v4 = meter.xor(v3.bits(), mask4.bits());
        let mask5 = meter.h(&[&tid_i, &rid_j, &ts3]);
        let v5 = meter.xor(mask5.bits(), &n_k);
        Ok((
            Msg3 {
                v5,
                v4,
                ts3: now,
                v2,
            },
            SessionKey::new(sk),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{puf_eval, random_bits, rng_from_seed};
    use crate::user::credential;

    fn registered(seed: u64) -> (UavState, PufDevice, BitString, SimRng) {
        let mut rng = rng_from_seed(seed);
        let dev = PufDevice::manufacture(&mut rng, 0.0);
        let resp = UavRegistrationResponse {
            tc_id: random_bits(&mut rng, 160),
            challenge: random_bits(&mut rng, 160),
        };
        let (sub, state) = UavState::register(
            &dev,
            credential("uav-1").unwrap(),
            &resp,
            &mut rng,
            &mut Meter::new(),
        );
        (state, dev, sub.response, rng)
    }

    #[test]
    fn registered_response_is_reproducible_and_not_stored() {
        let (state, dev, r_j, mut rng) = registered(1);
        assert_eq!(puf_eval(&dev, &state.memory.challenge, &mut rng), r_j);
        let mem = state.capture_memory();
        assert_ne!(mem.id, r_j);
        assert_ne!(mem.challenge, r_j);
        assert_ne!(*mem.tc_id.bits(), r_j);
        let json = serde_json::to_string(&mem).unwrap();
        assert!(!json.contains(&r_j.to_hex()));
        assert!(!json.contains(&dev.seed().to_hex()));
    }

    #[test]
    fn same_challenge_different_devices() {
        let mut rng = rng_from_seed(2);
        let resp = UavRegistrationResponse {
            tc_id: random_bits(&mut rng, 160),
            challenge: random_bits(&mut rng, 160),
        };
        let a = PufDevice::manufacture(&mut rng, 0.0);
        let b = PufDevice::manufacture(&mut rng, 0.0);
        let id = credential("x").unwrap();
        let (ra, _) = UavState::register(&a, id.clone(), &resp, &mut rng, &mut Meter::new());
        let (rb, _) = UavState::register(&b, id, &resp, &mut rng, &mut Meter::new());
        assert_ne!(ra.response, rb.response);
    }

    #[test]
    fn forged_msg2_rejected_without_key() {
        let (mut state, dev, _, mut rng) = registered(3);
        let msg2 = Msg2 {
            mac2: Digest::from_bits(random_bits(&mut rng, 160)),
            v1: random_bits(&mut rng, 160),
            h_i: random_bits(&mut rng, 160),
            f_i_dprime: random_bits(&mut rng, 160),
            ts2: Timestamp(5),
        };
        let r = state.aka_respond(&dev, &msg2, Timestamp(5), 2, &mut rng, &mut Meter::new());
        assert_eq!(r.unwrap_err(), UavError::MacMismatch);
        let r = state.aka_respond(&dev, &msg2, Timestamp(9), 2, &mut rng, &mut Meter::new());
        assert_eq!(r.unwrap_err(), UavError::StaleTimestamp);
    }
}
