//! Gateway node: registrar for users and UAVs and relay for AKA step 2.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::meter::Meter;
use crate::primitives::{
    hash_parts, hex160, random_bits, random_nonce, BitString, Digest, Nonce, SimRng, FIELD_BITS,
};
use crate::replay::ReplayCache;
use crate::wire::{
    Msg1, Msg2, ReplacementRequest, ReplacementResponse, Timestamp, UavRegistrationRequest,
    UavRegistrationResponse, UavResponseSubmission, UserRegistrationRequest,
    UserRegistrationResponse,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GwnError {
    #[error("already registered")]
    DuplicateRegistration,
    #[error("unknown UAV")]
    UnknownUav,
    #[error("stale timestamp")]
    StaleTimestamp,
    #[error("replayed message")]
    ReplayDetected,
    #[error("MAC_1 mismatch")]
    MacMismatch,
    #[error("TID_i already present")]
    TidAlreadyPresent,
}

/// Gateway-side record of one UAV. `response` is filled when the UAV submits
/// its PUF response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UavRecord {
    pub nonce: Nonce,
    pub tc_id: Digest,
    #[serde(with = "hex160")]
    pub challenge: BitString,
    pub response: Option<BitString>,
}

/// Announcement that a UAV joined, delivered to registered users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastEvent {
    #[serde(with = "hex160")]
    pub uav_id: BitString,
}

#[derive(Debug)]
pub struct Gateway {
    id: BitString,
    secret: BitString,
    delta_t: u32,
    user_tids: BTreeSet<Digest>,
    uavs: BTreeMap<BitString, UavRecord>,
    replay: Mutex<ReplayCache>,
}

impl Clone for Gateway {
    fn clone(&self) -> Self {
        Gateway {
            id: self.id.clone(),
            secret: self.secret.clone(),
            delta_t: self.delta_t,
            user_tids: self.user_tids.clone(),
            uavs: self.uavs.clone(),
            replay: Mutex::new(self.replay.lock().expect("replay cache poisoned").clone()),
        }
    }
}

impl Gateway {
    /// Draws the long-term secret `s`.
    pub fn init(id: BitString, delta_t: u32, rng: &mut SimRng) -> Gateway {
        assert_eq!(id.width(), FIELD_BITS);
        Gateway {
            id,
            secret: random_bits(rng, FIELD_BITS),
            delta_t,
            user_tids: BTreeSet::new(),
            uavs: BTreeMap::new(),
            replay: Mutex::new(ReplayCache::new()),
        }
    }

    pub fn id(&self) -> &BitString {
        &self.id
    }

    pub fn delta_t(&self) -> u32 {
        self.delta_t
    }

    /// `h(ID_G ‖ s)`, the value every smart card stores as `C_i`.
    pub fn mask(&self) -> Digest {
        hash_parts(&[&self.id, &self.secret])
    }

    pub fn uav_count(&self) -> usize {
        self.uavs.len()
    }

    pub fn uav_record(&self, id: &BitString) -> Option<&UavRecord> {
        self.uavs.get(id)
    }

    pub fn knows_tid(&self, tid: &BitString) -> bool {
        self.user_tids.contains(&Digest::from_bits(tid.clone()))
    }

    pub fn register_user(
        &mut self,
        req: &UserRegistrationRequest,
        meter: &mut Meter,
    ) -> Result<UserRegistrationResponse, GwnError> {
        let tid = Digest::from_bits(req.tid.clone());
        if self.user_tids.contains(&tid) {
            return Err(GwnError::DuplicateRegistration);
        }
        let tc_id = self.issue(&req.tid, &req.tpw, meter);
        self.user_tids.insert(tid);
        Ok(UserRegistrationResponse { tc_id })
    }

    fn issue(&self, tid: &BitString, tpw: &BitString, meter: &mut Meter) -> BitString {
        let mask = meter.h(&[&self.id, &self.secret]);
        let t = meter.xor(tid, tpw);
        meter.xor(&t, mask.bits())
    }

    pub fn register_uav_begin(
        &mut self,
        req: &UavRegistrationRequest,
        rng: &mut SimRng,
        meter: &mut Meter,
    ) -> Result<UavRegistrationResponse, GwnError> {
        if self.uavs.contains_key(&req.id) {
            return Err(GwnError::DuplicateRegistration);
        }
        let nonce = random_nonce(rng);
        let tid_j = meter.h(&[&req.id, &nonce.field()]);
        let tc_id = meter.h(&[tid_j.bits(), &self.secret]);
        let challenge = random_bits(rng, FIELD_BITS);
        self.uavs.insert(
            req.id.clone(),
            UavRecord {
                nonce,
                tc_id: tc_id.clone(),
                challenge: challenge.clone(),
                response: None,
            },
        );
        Ok(UavRegistrationResponse {
            tc_id: tc_id.into_bits(),
            challenge,
        })
    }

    pub fn register_uav_complete(
        &mut self,
        id: &BitString,
        submission: &UavResponseSubmission,
    ) -> Result<(), GwnError> {
        let record = self.uavs.get_mut(id).ok_or(GwnError::UnknownUav)?;
        record.response = Some(submission.response.clone());
        Ok(())
    }

    /// Registers a UAV joining after deployment and produces the broadcast
    /// that tells users about it.
    pub fn add_uav_dynamic(
        &mut self,
        req: &UavRegistrationRequest,
        rng: &mut SimRng,
        meter: &mut Meter,
    ) -> Result<(UavRegistrationResponse, BroadcastEvent), GwnError> {
        let resp = self.register_uav_begin(req, rng, meter)?;
        Ok((
            resp,
            BroadcastEvent {
                uav_id: req.id.clone(),
            },
        ))
    }

    /// Issues a new `TC_IDi` for a replacement card, but only when the
    /// presented `TID_i` is not yet known.
    pub fn process_replacement(
        &mut self,
        req: &ReplacementRequest,
        meter: &mut Meter,
    ) -> Result<ReplacementResponse, GwnError> {
        let tid = Digest::from_bits(req.tid.clone());
        if self.user_tids.contains(&tid) {
            return Err(GwnError::TidAlreadyPresent);
        }
        let tc_id = self.issue(&req.tid, &req.tpw, meter);
        self.user_tids.insert(tid);
        Ok(ReplacementResponse { tc_id })
    }

    /// AKA step 2. Rejections happen before any part of MSG2 is computed.
    ///
    /// Takes `&self`: concurrent relays share the registry, and only the
    /// replay cache is locked.
    pub fn relay_auth(
        &self,
        msg1: &Msg1,
        now: Timestamp,
        meter: &mut Meter,
    ) -> Result<Msg2, GwnError> {
        self.relay_auth_routed(msg1, now, meter).map(|(m, _)| m)
    }

    /// [`Gateway::relay_auth`], also returning the recovered `ID_j` the
    /// message is addressed to.
    pub fn relay_auth_routed(
        &self,
        msg1: &Msg1,
        now: Timestamp,
        meter: &mut Meter,
    ) -> Result<(Msg2, BitString), GwnError> {
        if !msg1.ts1.is_fresh(now, self.delta_t) {
            return Err(GwnError::StaleTimestamp);
        }
        if self
            .replay
            .lock()
            .expect("replay cache poisoned")
            .contains(msg1.mac1.bits())
        {
            return Err(GwnError::ReplayDetected);
        }
        let ts1 = msg1.ts1.bits();
        let m1 = meter.h(&[&self.id, &self.secret]);
        let e = meter.h(&[m1.bits(), &ts1]);
        let f = meter.xor(e.bits(), &msg1.f_i_prime);
        let tid_i = meter.xor(&msg1.g_i, &f);
        if meter.h(&[&tid_i, e.bits(), &ts1]) != msg1.mac1 {
            return Err(GwnError::MacMismatch);
        }
        let id_j = meter.xor(&msg1.rid_j, &f);
        let record = self.uavs.get(&id_j).ok_or(GwnError::UnknownUav)?;
        let r_j = record.response.as_ref().ok_or(GwnError::UnknownUav)?;
        let n_j = record.nonce.field();
        let tid_j = meter.h(&[&id_j, &n_j]);
        let ts2 = now.bits();
        let mask1 = meter.h(&[&id_j, record.tc_id.bits(), r_j]);
        let v1 = meter.xor(mask1.bits(), &n_j);
        let mac2 = meter.h(&[&v1, tid_j.bits(), r_j, &ts2]);
        let f_dprime = meter.xor(&f, r_j);
        let h_i = meter.xor(&tid_i, &n_j);
        if !self.replay.lock().expect("replay cache poisoned").insert(
            msg1.mac1.bits(),
            msg1.ts1,
            now,
            self.delta_t,
        ) {
            return Err(GwnError::ReplayDetected);
        }
        let msg2 = Msg2 {
            mac2,
            v1,
            h_i,
            f_i_dprime: f_dprime,
            ts2: now,
        };
        Ok((msg2, id_j))
    }

    pub fn snapshot(&self) -> GatewaySnapshot {
        GatewaySnapshot {
            id: self.id.clone(),
            delta_t: self.delta_t,
            user_tids: self.user_tids.iter().cloned().collect(),
            uavs: self
                .uavs
                .iter()
                .map(|(id, r)| (id.to_hex(), r.clone()))
                .collect(),
        }
    }

    pub fn secret_file(&self) -> GatewaySecret {
        GatewaySecret {
            secret: self.secret.clone(),
        }
    }

    pub fn restore(snapshot: GatewaySnapshot, secret: GatewaySecret) -> Result<Gateway, String> {
        let mut uavs = BTreeMap::new();
        for (hex_id, record) in snapshot.uavs {
            let id = BitString::from_hex(&hex_id, FIELD_BITS).map_err(|e| e.to_string())?;
            uavs.insert(id, record);
        }
        Ok(Gateway {
            id: snapshot.id,
            secret: secret.secret,
            delta_t: snapshot.delta_t,
            user_tids: snapshot.user_tids.into_iter().collect(),
            uavs,
            replay: Mutex::new(ReplayCache::new()),
        })
    }
}

/// Persistent registry, everything except `s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewaySnapshot {
    #[serde(with = "hex160")]
    pub id: BitString,
    pub delta_t: u32,
    pub user_tids: Vec<Digest>,
    /// Keyed by hex `ID_j`.
    pub uavs: BTreeMap<String, UavRecord>,
}

/// The gateway secret `s`. Simulation only; kept in its own file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewaySecret {
    #[serde(with = "hex160")]
    pub secret: BitString,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::rng_from_seed;
    use crate::user::credential;

    fn gateway(seed: u64) -> (Gateway, SimRng) {
        let mut rng = rng_from_seed(seed);
        let g = Gateway::init(credential("gwn").unwrap(), 2, &mut rng);
        (g, rng)
    }

    fn req(rng: &mut SimRng) -> UserRegistrationRequest {
        UserRegistrationRequest {
            tid: random_bits(rng, 160),
            tpw: random_bits(rng, 160),
        }
    }

    #[test]
    fn secret_depends_on_seed() {
        assert_eq!(gateway(1).0.secret, gateway(1).0.secret);
        assert_ne!(gateway(1).0.secret, gateway(2).0.secret);
    }

    #[test]
    fn register_user_cancellation_and_duplicates() {
        let (mut g, mut rng) = gateway(3);
        let r = req(&mut rng);
        let resp = g.register_user(&r, &mut Meter::new()).unwrap();
        assert_eq!(resp.tc_id.xor(&r.tid).xor(&r.tpw), *g.mask().bits());
        assert_eq!(
            g.register_user(&r, &mut Meter::new()),
            Err(GwnError::DuplicateRegistration)
        );
    }

    #[test]
    fn replacement_only_for_unknown_tid() {
        let (mut g, mut rng) = gateway(4);
        let r = req(&mut rng);
        g.register_user(&r, &mut Meter::new()).unwrap();
        let old = ReplacementRequest {
            tid: r.tid.clone(),
            tpw: r.tpw.clone(),
        };
        assert_eq!(
            g.process_replacement(&old, &mut Meter::new()),
            Err(GwnError::TidAlreadyPresent)
        );
        let fresh = req(&mut rng);
        let fresh = ReplacementRequest {
            tid: fresh.tid,
            tpw: fresh.tpw,
        };
        let resp = g.process_replacement(&fresh, &mut Meter::new()).unwrap();
        assert_eq!(resp.tc_id.xor(&fresh.tid).xor(&fresh.tpw), *g.mask().bits());
        assert!(g.knows_tid(&fresh.tid));
    }

    #[test]
    fn uav_registration_records() {
        let (mut g, mut rng) = gateway(5);
        let a = UavRegistrationRequest {
            id: credential("uav-a").unwrap(),
        };
        let b = UavRegistrationRequest {
            id: credential("uav-b").unwrap(),
        };
        let ra = g
            .register_uav_begin(&a, &mut rng, &mut Meter::new())
            .unwrap();
        let rb = g
            .register_uav_begin(&b, &mut rng, &mut Meter::new())
            .unwrap();
        assert_ne!(ra.challenge, rb.challenge);
        let rec = g.uav_record(&a.id).unwrap();
        let tid_j = hash_parts(&[&a.id, &rec.nonce.field()]);
        assert_eq!(ra.tc_id, hash_parts(&[tid_j.bits(), &g.secret]).into_bits());
        assert_eq!(
            g.register_uav_begin(&a, &mut rng, &mut Meter::new()),
            Err(GwnError::DuplicateRegistration)
        );
        let unknown = credential("ghost").unwrap();
        let sub = UavResponseSubmission {
            response: BitString::zeros(160),
        };
        assert_eq!(
            g.register_uav_complete(&unknown, &sub),
            Err(GwnError::UnknownUav)
        );
        g.register_uav_complete(&a.id, &sub).unwrap();
        assert!(g.uav_record(&a.id).unwrap().response.is_some());
    }

    #[test]
    fn dynamic_addition_grows_registry_by_one() {
        let (mut g, mut rng) = gateway(6);
        let before = g.uav_count();
        let req = UavRegistrationRequest {
            id: credential("late").unwrap(),
        };
        let (_, event) = g
            .add_uav_dynamic(&req, &mut rng, &mut Meter::new())
            .unwrap();
        assert_eq!(event.uav_id, req.id);
        assert_eq!(g.uav_count(), before + 1);
    }

    #[test]
    fn stale_msg1_costs_no_hash() {
        let (g, mut rng) = gateway(7);
        let msg = Msg1 {
            mac1: Digest::from_bits(random_bits(&mut rng, 160)),
            rid_j: random_bits(&mut rng, 160),
            g_i: random_bits(&mut rng, 160),
            f_i_prime: random_bits(&mut rng, 160),
            ts1: Timestamp(0),
        };
        let mut m = Meter::new();
        assert_eq!(
            g.relay_auth(&msg, Timestamp(100), &mut m),
            Err(GwnError::StaleTimestamp)
        );
        assert_eq!(m.counts().hash, 0);
        assert_eq!(
            g.relay_auth(&msg, Timestamp(1), &mut m),
            Err(GwnError::MacMismatch)
        );
        assert_eq!(m.counts().hash, 3);
    }

    #[test]
    fn snapshot_round_trip() {
        let (mut g, mut rng) = gateway(8);
        g.register_user(&req(&mut rng), &mut Meter::new()).unwrap();
        let uav = UavRegistrationRequest {
            id: credential("u").unwrap(),
        };
        g.register_uav_begin(&uav, &mut rng, &mut Meter::new())
            .unwrap();
        let json = serde_json::to_string(&g.snapshot()).unwrap();
        let back = Gateway::restore(serde_json::from_str(&json).unwrap(), g.secret_file()).unwrap();
        assert_eq!(back.snapshot(), g.snapshot());
        assert_eq!(back.mask(), g.mask());
        assert!(!json.contains(&g.secret.to_hex()));
    }
}
