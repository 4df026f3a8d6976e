//! User and smart-card side: registration, login, AKA steps 1 and 4,
//! credential update and card replacement.

use serde::{Deserialize, Serialize};

use crate::meter::Meter;
use crate::primitives::{
    hex160, random_nonce, BitString, Digest, FuzzyError, FuzzyExtractorParams, Nonce, SimRng,
    FIELD_BITS,
};
use crate::session::SessionKey;
use crate::wire::{
    Msg1, Msg3, ReplacementRequest, ReplacementResponse, Timestamp, UserRegistrationRequest,
    UserRegistrationResponse,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UserError {
    /// Wrong password and biometric mismatch are deliberately indistinguishable.
    #[error("login failed")]
    LoginFailed,
    #[error("stale timestamp")]
    StaleTimestamp,
    #[error("responder authentication failed")]
    AuthFailed,
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("{0}")]
    Credential(String),
}

/// UTF-8 identity or password, right-padded with zeros to 160 bits.
pub fn credential(s: &str) -> Result<BitString, UserError> {
    let bytes = s.as_bytes();
    if bytes.is_empty() || bytes.len() * 8 > FIELD_BITS {
        return Err(UserError::Credential(format!(
            "credential must be 1..=20 bytes, got {}",
            bytes.len()
        )));
    }
    let mut buf = [0u8; FIELD_BITS / 8];
    buf[..bytes.len()].copy_from_slice(bytes);
    Ok(BitString::from_byte_vec(buf.to_vec()))
}

/// Smart-card record `{A_i, B_i, C_i, tau_i, t}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmartCard {
    #[serde(with = "hex160")]
    pub a: BitString,
    pub b: Digest,
    #[serde(with = "hex160")]
    pub c: BitString,
    pub tau: BitString,
    pub fe: FuzzyExtractorParams,
    /// Per-block error tolerance of the fuzzy extractor.
    pub t: usize,
}

impl SmartCard {
    /// The card's fields as stored, in record order.
    pub fn fields(&self) -> [&BitString; 4] {
        [&self.a, self.b.bits(), &self.c, &self.tau]
    }
}

/// User-side secrets held between registration request and card issuance.
#[derive(Debug, Clone)]
pub struct PendingRegistration {
    id: BitString,
    tid: Digest,
    tpw: Digest,
    nonce: Nonce,
}

impl PendingRegistration {
    pub fn tid(&self) -> &Digest {
        &self.tid
    }

    pub fn nonce(&self) -> &Nonce {
        &self.nonce
    }
}

/// Values recovered by a successful login; never persisted.
#[derive(Debug, Clone)]
pub struct LoginContext {
    pub(crate) tid: Digest,
    pub(crate) tpw: Digest,
    pub(crate) nonce: BitString,
    pub(crate) c: BitString,
}

impl LoginContext {
    pub fn tid(&self) -> &Digest {
        &self.tid
    }

    /// The recovered registration nonce, zero-extended to 160 bits.
    pub fn nonce_field(&self) -> &BitString {
        &self.nonce
    }
}

/// What the user keeps between sending MSG1 and receiving MSG3.
#[derive(Debug, Clone)]
pub struct PendingSession {
    tid: Digest,
    rid_j: BitString,
    id_j: BitString,
    ts1: Timestamp,
}

impl PendingSession {
    pub fn ts1(&self) -> Timestamp {
        self.ts1
    }

    pub fn rid_j(&self) -> &BitString {
        &self.rid_j
    }
}

fn blind(id: &BitString, pw: &BitString, nonce: &Nonce, meter: &mut Meter) -> (Digest, Digest) {
    let n = nonce.field();
    (meter.h(&[id, &n]), meter.h(&[pw, &n]))
}

pub fn register_begin(
    id: &BitString,
    pw: &BitString,
    rng: &mut SimRng,
    meter: &mut Meter,
) -> (UserRegistrationRequest, PendingRegistration) {
    let nonce = random_nonce(rng);
    let (tid, tpw) = blind(id, pw, &nonce, meter);
    let request = UserRegistrationRequest {
        tid: tid.bits().clone(),
        tpw: tpw.bits().clone(),
    };
    (
        request,
        PendingRegistration {
            id: id.clone(),
            tid,
            tpw,
            nonce,
        },
    )
}

/// Mints the card from the gateway's `TC_IDi` and a fresh biometric key.
pub fn register_complete(
    pending: PendingRegistration,
    response: &UserRegistrationResponse,
    bio: &BitString,
    params: &FuzzyExtractorParams,
    rng: &mut SimRng,
    meter: &mut Meter,
) -> Result<SmartCard, UserError> {
    let (sigma, tau) = meter.fe_gen(bio, params, rng)?;
    let id = &pending.id;
    let mask = meter.h(&[id, sigma.bits()]);
    let a = meter.xor(&pending.nonce.field(), mask.bits());
    let b = meter.h(&[id, pending.tpw.bits(), sigma.bits()]);
    let tc_tid = meter.xor(&response.tc_id, pending.tid.bits());
    let c = meter.xor(&tc_tid, pending.tpw.bits());
    Ok(SmartCard {
        a,
        b,
        c,
        tau,
        fe: *params,
        t: params.tolerance(),
    })
}

/// Recovers `n_i`, `TID_i`, `TPW_i` from the card and checks `B_i`. Every
/// input combination yields either a context or `LoginFailed`.
pub fn login(
    card: &SmartCard,
    id: &BitString,
    pw: &BitString,
    bio: &BitString,
    meter: &mut Meter,
) -> Result<LoginContext, UserError> {
    let sigma = meter
        .fe_rep(bio, &card.tau, &card.fe)
        .map_err(|_| UserError::LoginFailed)?;
    let mask = meter.h(&[id, sigma.bits()]);
    let nonce = meter.xor(&card.a, mask.bits());
    let tid = meter.h(&[id, &nonce]);
    let tpw = meter.h(&[pw, &nonce]);
    let b = meter.h(&[id, tpw.bits(), sigma.bits()]);
    if b != card.b {
        return Err(UserError::LoginFailed);
    }
    Ok(LoginContext {
        tid,
        tpw,
        nonce,
        c: card.c.clone(),
    })
}

/// AKA step 1: builds MSG1 towards UAV `id_j`.
pub fn initiate(
    ctx: &LoginContext,
    id_j: &BitString,
    now: Timestamp,
    meter: &mut Meter,
) -> (Msg1, PendingSession) {
    let ts1 = now.bits();
    let tid = ctx.tid.bits();
    let e = meter.h(&[&ctx.c, &ts1]);
    let f = meter.h(&[tid, ctx.tpw.bits(), &ts1]);
    let mac1 = meter.h(&[tid, e.bits(), &ts1]);
    let rid_j = meter.xor(id_j, f.bits());
    let f_prime = meter.xor(e.bits(), f.bits());
    let g = meter.xor(tid, f.bits());
    let msg = Msg1 {
        mac1,
        rid_j: rid_j.clone(),
        g_i: g,
        f_i_prime: f_prime,
        ts1: now,
    };
    (
        msg,
        PendingSession {
            tid: ctx.tid.clone(),
            rid_j,
            id_j: id_j.clone(),
            ts1: now,
        },
    )
}

/// AKA step 4: verifies the UAV and derives the session key.
pub fn finalize(
    pending: PendingSession,
    msg3: &Msg3,
    now: Timestamp,
    delta_t: u32,
    meter: &mut Meter,
) -> Result<SessionKey, UserError> {
    if !msg3.ts3.is_fresh(now, delta_t) {
        return Err(UserError::StaleTimestamp);
    }
    let ts3 = msg3.ts3.bits();
    let tid = pending.tid.bits();
    let rid = &pending.rid_j;
    let mask5 = meter.h(&[tid, rid, &ts3]);
    let nk = meter.xor(&msg3.v5, mask5.bits());
    let mask2 = meter.h(&[&pending.id_j, tid, &ts3]);
    let v2 = meter.xor(mask2.bits(), &nk);
    if v2 != msg3.v2 {
        return Err(UserError::AuthFailed);
    }
    let mask4 = meter.h(&[tid, rid, &nk]);
    let v3 = meter.xor(&msg3.v4, mask4.bits());
    Ok(SessionKey::new(meter.h(&[&v3, tid, rid, &nk, &ts3])))
}

/// Password and biometric update, performed on the card alone.
///
/// `C_i` is carried over unchanged: it must keep equalling the gateway mask
/// for later MSG1s to verify, and the gateway is not involved in the update.
#[allow(clippy::too_many_arguments)]
pub fn update_credentials(
    card: &SmartCard,
    id: &BitString,
    pw_old: &BitString,
    bio_old: &BitString,
    pw_new: &BitString,
    bio_new: &BitString,
    rng: &mut SimRng,
    meter: &mut Meter,
) -> Result<SmartCard, UserError> {
    let ctx = login(card, id, pw_old, bio_old, meter)?;
    let (sigma, tau) = meter.fe_gen(bio_new, &card.fe, rng)?;
    let tpw_new = meter.h(&[pw_new, &ctx.nonce]);
    let mask = meter.h(&[id, sigma.bits()]);
    let a = meter.xor(&ctx.nonce, mask.bits());
    let b = meter.h(&[id, tpw_new.bits(), sigma.bits()]);
    Ok(SmartCard {
        a,
        b,
        c: card.c.clone(),
        tau,
        fe: card.fe,
        t: card.fe.tolerance(),
    })
}

/// Replacement step 1: a fresh nonce and blinded identity for a new card.
pub fn replacement_request(
    id: &BitString,
    pw_new: &BitString,
    rng: &mut SimRng,
    meter: &mut Meter,
) -> (ReplacementRequest, PendingRegistration) {
    let (req, pending) = register_begin(id, pw_new, rng, meter);
    (
        ReplacementRequest {
            tid: req.tid,
            tpw: req.tpw,
        },
        pending,
    )
}

/// Replacement step 3: writes the new card.
pub fn replacement_complete(
    pending: PendingRegistration,
    response: &ReplacementResponse,
    bio: &BitString,
    params: &FuzzyExtractorParams,
    rng: &mut SimRng,
    meter: &mut Meter,
) -> Result<SmartCard, UserError> {
    let response = UserRegistrationResponse {
        tc_id: response.tc_id.clone(),
    };
    register_complete(pending, &response, bio, params, rng, meter)
}
