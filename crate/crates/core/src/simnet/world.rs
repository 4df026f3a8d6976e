//! A whole deployment: gateway, users and UAVs wired to one [`Network`].

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::closure::{AdversaryKnowledge, Algebra};
use super::network::{Endpoint, Envelope, MessageKind, NetError, Network, SimClock};
use crate::gwn::{Gateway, GwnError};
use crate::meter::{Meter, OpCounter};
use crate::primitives::{
    hash_parts, random_bits, rng_from_seed, BitString, HashRecord, PufDevice, SimRng,
};
use crate::session::{ProtocolConfig, SessionKey, SessionTranscript};
use crate::uav::UavState;
use crate::user::{self, credential, LoginContext, PendingSession, SmartCard, UserError};
use crate::wire::{Msg1, Msg2, Msg3, UavRegistrationRequest, WireMessage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub seed: u64,
    pub protocol: ProtocolConfig,
    /// Maximum bit errors per repetition block in each biometric reading,
    /// capped at the extractor tolerance.
    pub reading_noise: usize,
    pub start_tick: u32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            seed: 0,
            protocol: ProtocolConfig::default(),
            reading_noise: 1,
            start_tick: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorldError {
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("unknown UAV {0}")]
    UnknownUav(String),
    #[error("unknown session {0}")]
    UnknownSession(u64),
    #[error("{0} already exists")]
    Duplicate(String),
    #[error("session {0} has not completed")]
    Incomplete(u64),
    #[error(transparent)]
    User(#[from] UserError),
    #[error(transparent)]
    Gateway(#[from] GwnError),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone)]
pub struct UserParty {
    pub id: BitString,
    pub password: BitString,
    pub biometric: BitString,
    pub card: SmartCard,
    pub known_uavs: BTreeMap<String, BitString>,
}

#[derive(Debug, Clone)]
pub struct UavParty {
    pub id: BitString,
    pub state: UavState,
    pub device: PufDevice,
}

/// A message some party refused, with the work spent refusing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub tick: u32,
    pub message: u64,
    pub session: u64,
    pub party: Endpoint,
    pub kind: MessageKind,
    pub reason: String,
    pub ops: OpCounter,
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub user: String,
    pub uav: String,
    pending: Option<PendingSession>,
    pub transcript: SessionTranscript,
    pub user_key: Option<SessionKey>,
    pub uav_key: Option<SessionKey>,
}

impl SessionState {
    pub fn keys_agree(&self) -> bool {
        matches!((&self.user_key, &self.uav_key), (Some(a), Some(b)) if a == b)
    }

    pub fn awaiting_msg3(&self) -> bool {
        self.pending.is_some()
    }
}

/// Ground-truth values of one completed session, for closure queries.
#[derive(Debug, Clone)]
pub struct SessionSecrets {
    pub id_i: BitString,
    pub tid_i: BitString,
    pub id_j: BitString,
    pub rid_j: BitString,
    pub n_j: BitString,
    pub r_j: BitString,
    pub tc_id_j: BitString,
    pub tid_j: BitString,
    pub e_i: BitString,
    pub f_i: BitString,
    pub n_k: BitString,
    pub v3: BitString,
    pub ts3: BitString,
    pub sk: BitString,
}

#[derive(Debug, Clone)]
pub struct World {
    config: WorldConfig,
    rng: SimRng,
    pub network: Network,
    gateway: Gateway,
    users: BTreeMap<String, UserParty>,
    uavs: BTreeMap<String, UavParty>,
    uav_names: BTreeMap<BitString, String>,
    sessions: BTreeMap<u64, SessionState>,
    next_session: u64,
    hash_log: Vec<HashRecord>,
    rejections: Vec<Rejection>,
    emitted: BTreeMap<MessageKind, u64>,
}

fn encoded<M: WireMessage>(m: &M) -> BitString {
    m.encode().expect("honest messages have layout widths")
}

impl World {
    pub fn new(config: WorldConfig) -> World {
        let mut rng = rng_from_seed(config.seed);
        let gateway = Gateway::init(
            credential("gwn").expect("literal credential"),
            config.protocol.delta_t,
            &mut rng,
        );
        World {
            config,
            rng,
            network: Network::new(SimClock::starting_at(config.start_tick)),
            gateway,
            users: BTreeMap::new(),
            uavs: BTreeMap::new(),
            uav_names: BTreeMap::new(),
            sessions: BTreeMap::new(),
            next_session: 1,
            hash_log: Vec::new(),
            rejections: Vec::new(),
            emitted: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn gateway_mut(&mut self) -> &mut Gateway {
        &mut self.gateway
    }

    pub fn user(&self, name: &str) -> Result<&UserParty, WorldError> {
        self.users
            .get(name)
            .ok_or_else(|| WorldError::UnknownUser(name.into()))
    }

    pub fn uav(&self, name: &str) -> Result<&UavParty, WorldError> {
        self.uavs
            .get(name)
            .ok_or_else(|| WorldError::UnknownUav(name.into()))
    }

    pub fn session(&self, id: u64) -> Result<&SessionState, WorldError> {
        self.sessions.get(&id).ok_or(WorldError::UnknownSession(id))
    }

    pub fn sessions(&self) -> &BTreeMap<u64, SessionState> {
        &self.sessions
    }

    pub fn rejections(&self) -> &[Rejection] {
        &self.rejections
    }

    pub fn rejections_for(&self, session: u64) -> impl Iterator<Item = &Rejection> {
        self.rejections.iter().filter(move |r| r.session == session)
    }

    /// How many messages of `kind` honest parties have produced.
    pub fn emitted(&self, kind: MessageKind) -> u64 {
        self.emitted.get(&kind).copied().unwrap_or(0)
    }

    fn absorb(&mut self, meter: &mut Meter) -> OpCounter {
        self.hash_log.extend(meter.take_log());
        meter.counts()
    }

    pub fn add_user(&mut self, name: &str, password: &str) -> Result<(), WorldError> {
        if self.users.contains_key(name) {
            return Err(WorldError::Duplicate(name.into()));
        }
        let id = credential(name)?;
        let password = credential(password)?;
        let fe = self.config.protocol.fe;
        let biometric = random_bits(&mut self.rng, fe.bio_bits());
        let mut meter = Meter::recording();
        let (req, pending) = user::register_begin(&id, &password, &mut self.rng, &mut meter);
        let me = Endpoint::User(name.into());
        self.network.transfer(
            me.clone(),
            Endpoint::Gateway,
            MessageKind::UserRegistrationRequest,
            encoded(&req),
            true,
        );
        let resp = self.gateway.register_user(&req, &mut meter)?;
        self.network.transfer(
            Endpoint::Gateway,
            me,
            MessageKind::UserRegistrationResponse,
            encoded(&resp),
            true,
        );
        let card =
            user::register_complete(pending, &resp, &biometric, &fe, &mut self.rng, &mut meter)?;
        self.absorb(&mut meter);
        let known_uavs = self
            .uavs
            .iter()
            .map(|(n, u)| (n.clone(), u.id.clone()))
            .collect();
        self.users.insert(
            name.into(),
            UserParty {
                id,
                password,
                biometric,
                card,
                known_uavs,
            },
        );
        Ok(())
    }

    /// Pre-deployment UAV registration.
    pub fn add_uav(&mut self, name: &str) -> Result<(), WorldError> {
        self.register_uav(name, false)
    }

    /// Registration after deployment, announced to every user.
    pub fn add_uav_dynamic(&mut self, name: &str) -> Result<(), WorldError> {
        self.register_uav(name, true)
    }

    fn register_uav(&mut self, name: &str, dynamic: bool) -> Result<(), WorldError> {
        if self.uavs.contains_key(name) {
            return Err(WorldError::Duplicate(name.into()));
        }
        let id = credential(name)?;
        let device = PufDevice::manufacture(&mut self.rng, self.config.protocol.puf_noise);
        let mut meter = Meter::recording();
        let me = Endpoint::Uav(name.into());
        let req = UavRegistrationRequest { id: id.clone() };
        self.network.transfer(
            me.clone(),
            Endpoint::Gateway,
            MessageKind::UavRegistrationRequest,
            encoded(&req),
            true,
        );
        let resp = if dynamic {
            let (resp, event) = self
                .gateway
                .add_uav_dynamic(&req, &mut self.rng, &mut meter)?;
            for user in self.users.keys() {
                self.network.transfer(
                    Endpoint::Gateway,
                    Endpoint::User(user.clone()),
                    MessageKind::Broadcast,
                    event.uav_id.clone(),
                    true,
                );
            }
            resp
        } else {
            self.gateway
                .register_uav_begin(&req, &mut self.rng, &mut meter)?
        };
        self.network.transfer(
            Endpoint::Gateway,
            me.clone(),
            MessageKind::UavRegistrationResponse,
            encoded(&resp),
            true,
        );
        let (submission, state) =
            UavState::register(&device, id.clone(), &resp, &mut self.rng, &mut meter);
        self.network.transfer(
            me,
            Endpoint::Gateway,
            MessageKind::UavResponseSubmission,
            encoded(&submission),
            true,
        );
        self.gateway.register_uav_complete(&id, &submission)?;
        self.absorb(&mut meter);
        for user in self.users.values_mut() {
            user.known_uavs.insert(name.into(), id.clone());
        }
        self.uav_names.insert(id.clone(), name.into());
        self.uavs
            .insert(name.into(), UavParty { id, state, device });
        Ok(())
    }

    /// A fresh reading of the user's biometric with bounded noise.
    pub fn read_biometric(&mut self, name: &str) -> Result<BitString, WorldError> {
        let template = self.user(name)?.biometric.clone();
        let fe = self.config.protocol.fe;
        let noise = self.config.reading_noise.min(fe.tolerance());
        Ok(noisy_reading(
            &template,
            fe.repetition,
            noise,
            &mut self.rng,
        ))
    }

    /// Login with arbitrary credentials, as a card thief or forgetful user.
    pub fn try_login(
        &mut self,
        name: &str,
        password: &BitString,
        reading: &BitString,
    ) -> Result<LoginContext, WorldError> {
        let card = self.user(name)?.card.clone();
        let id = self.user(name)?.id.clone();
        let mut meter = Meter::recording();
        let r = user::login(&card, &id, password, reading, &mut meter);
        self.absorb(&mut meter);
        Ok(r?)
    }

    pub fn update_credentials(
        &mut self,
        name: &str,
        new_password: &str,
        new_biometric: bool,
    ) -> Result<(), WorldError> {
        let pw_new = credential(new_password)?;
        let reading = self.read_biometric(name)?;
        let fe = self.config.protocol.fe;
        let bio_new = if new_biometric {
            random_bits(&mut self.rng, fe.bio_bits())
        } else {
            self.user(name)?.biometric.clone()
        };
        let party = self.user(name)?.clone();
        let mut meter = Meter::recording();
        let card = user::update_credentials(
            &party.card,
            &party.id,
            &party.password,
            &reading,
            &pw_new,
            &bio_new,
            &mut self.rng,
            &mut meter,
        )?;
        self.absorb(&mut meter);
        let party = self.users.get_mut(name).expect("checked above");
        party.card = card;
        party.password = pw_new;
        party.biometric = bio_new;
        Ok(())
    }

    /// Lost-card recovery with a new password.
    pub fn replace_card(&mut self, name: &str, new_password: &str) -> Result<(), WorldError> {
        let pw_new = credential(new_password)?;
        let party = self.user(name)?.clone();
        let mut meter = Meter::recording();
        let (req, pending) =
            user::replacement_request(&party.id, &pw_new, &mut self.rng, &mut meter);
        let me = Endpoint::User(name.into());
        self.network.transfer(
            me.clone(),
            Endpoint::Gateway,
            MessageKind::ReplacementRequest,
            encoded(&req),
            true,
        );
        let resp = self.gateway.process_replacement(&req, &mut meter)?;
        self.network.transfer(
            Endpoint::Gateway,
            me,
            MessageKind::ReplacementResponse,
            encoded(&resp),
            true,
        );
        let card = user::replacement_complete(
            pending,
            &resp,
            &party.biometric,
            &self.config.protocol.fe,
            &mut self.rng,
            &mut meter,
        )?;
        self.absorb(&mut meter);
        let party = self.users.get_mut(name).expect("checked above");
        party.card = card;
        party.password = pw_new;
        Ok(())
    }

    /// Login and AKA step 1; queues MSG1 and returns the session tag.
    pub fn start_aka(&mut self, user_name: &str, uav_name: &str) -> Result<u64, WorldError> {
        let id_j = self
            .user(user_name)?
            .known_uavs
            .get(uav_name)
            .cloned()
            .ok_or_else(|| WorldError::UnknownUav(uav_name.into()))?;
        let reading = self.read_biometric(user_name)?;
        let party = self.user(user_name)?;
        let (card, id, pw) = (party.card.clone(), party.id.clone(), party.password.clone());
        let mut meter = Meter::recording();
        let login = user::login(&card, &id, &pw, &reading, &mut meter);
        let ctx = match login {
            Ok(ctx) => ctx,
            Err(e) => {
                self.absorb(&mut meter);
                return Err(e.into());
            }
        };
        let now = self.network.now();
        let (msg1, pending) = user::initiate(&ctx, &id_j, now, &mut meter);
        let ops = self.absorb(&mut meter);
        let session = self.next_session;
        self.next_session += 1;
        self.network.send(
            Endpoint::User(user_name.into()),
            Endpoint::Gateway,
            MessageKind::Msg1,
            encoded(&msg1),
            false,
            session,
        );
        self.sessions.insert(
            session,
            SessionState {
                user: user_name.into(),
                uav: uav_name.into(),
                pending: Some(pending),
                transcript: SessionTranscript {
                    msg1: Some(msg1),
                    user_ops: ops,
                    ..SessionTranscript::default()
                },
                user_key: None,
                uav_key: None,
            },
        );
        Ok(session)
    }

    /// Delivers the next due message; `false` when nothing is in flight.
    pub fn step(&mut self) -> bool {
        match self.network.next_ready() {
            Some(env) => {
                self.deliver(env);
                true
            }
            None => false,
        }
    }

    pub fn run_until_idle(&mut self) {
        while self.step() {}
    }

    /// Delivers messages until one of `kind` for `session` is in flight and
    /// returns its id.
    pub fn run_until(&mut self, kind: MessageKind, session: u64) -> Option<u64> {
        loop {
            if let Some(e) = self
                .network
                .in_flight()
                .iter()
                .find(|e| e.kind == kind && e.session == session)
            {
                return Some(e.id);
            }
            if !self.step() {
                return None;
            }
        }
    }

    /// A complete honest run.
    pub fn run_aka(&mut self, user_name: &str, uav_name: &str) -> Result<u64, WorldError> {
        let s = self.start_aka(user_name, uav_name)?;
        self.run_until_idle();
        Ok(s)
    }

    fn reject(&mut self, env: &Envelope, reason: String, ops: OpCounter) {
        self.rejections.push(Rejection {
            tick: self.network.now().0,
            message: env.id,
            session: env.session,
            party: env.dest.clone(),
            kind: env.kind,
            reason,
            ops,
        });
    }

    fn deliver(&mut self, env: Envelope) {
        match (&env.dest, env.kind) {
            (Endpoint::Gateway, MessageKind::Msg1) => self.at_gateway(env),
            (Endpoint::Uav(name), MessageKind::Msg2) => {
                let name = name.clone();
                self.at_uav(&name, env)
            }
            (Endpoint::User(name), MessageKind::Msg3) => {
                let name = name.clone();
                self.at_user(&name, env)
            }
            (Endpoint::Adversary, _) => {}
            _ => self.reject(&env, "unexpected message".into(), OpCounter::default()),
        }
    }

    fn at_gateway(&mut self, env: Envelope) {
        let msg = match Msg1::decode(&env.payload) {
            Ok(m) => m,
            Err(e) => return self.reject(&env, e.to_string(), OpCounter::default()),
        };
        let mut meter = Meter::recording();
        let now = self.network.now();
        let result = self.gateway.relay_auth_routed(&msg, now, &mut meter);
        let ops = self.absorb(&mut meter);
        match result {
            Ok((msg2, id_j)) => {
                let dest = match self.uav_names.get(&id_j) {
                    Some(n) => Endpoint::Uav(n.clone()),
                    None => Endpoint::Adversary,
                };
                if let Some(s) = self.sessions.get_mut(&env.session) {
                    if s.transcript.msg2.is_none() {
                        s.transcript.msg2 = Some(msg2.clone());
                        s.transcript.gwn_ops = ops;
                    }
                }
                *self.emitted.entry(MessageKind::Msg2).or_default() += 1;
                self.network.send(
                    Endpoint::Gateway,
                    dest,
                    MessageKind::Msg2,
                    encoded(&msg2),
                    false,
                    env.session,
                );
            }
            Err(e) => self.reject(&env, e.to_string(), ops),
        }
    }

    fn at_uav(&mut self, name: &str, env: Envelope) {
        let msg = match Msg2::decode(&env.payload) {
            Ok(m) => m,
            Err(e) => return self.reject(&env, e.to_string(), OpCounter::default()),
        };
        let Some(party) = self.uavs.get_mut(name) else {
            return self.reject(&env, "no such UAV".into(), OpCounter::default());
        };
        let mut meter = Meter::recording();
        let now = self.network.now();
        let result = party.state.aka_respond(
            &party.device,
            &msg,
            now,
            self.config.protocol.delta_t,
            &mut self.rng,
            &mut meter,
        );
        let ops = self.absorb(&mut meter);
        match result {
            Ok((msg3, key)) => {
                let mut dest = Endpoint::Adversary;
                if let Some(s) = self.sessions.get_mut(&env.session) {
                    dest = Endpoint::User(s.user.clone());
                    if s.transcript.msg3.is_none() {
                        s.transcript.msg3 = Some(msg3.clone());
                        s.transcript.uav_ops = ops;
                        s.uav_key = Some(key);
                    }
                }
                *self.emitted.entry(MessageKind::Msg3).or_default() += 1;
                self.network.send(
                    Endpoint::Uav(name.into()),
                    dest,
                    MessageKind::Msg3,
                    encoded(&msg3),
                    false,
                    env.session,
                );
            }
            Err(e) => self.reject(&env, e.to_string(), ops),
        }
    }

    fn at_user(&mut self, name: &str, env: Envelope) {
        let msg = match Msg3::decode(&env.payload) {
            Ok(m) => m,
            Err(e) => return self.reject(&env, e.to_string(), OpCounter::default()),
        };
        let pending = match self.sessions.get(&env.session) {
            Some(s) if s.user == name => s.pending.clone(),
            _ => None,
        };
        let Some(pending) = pending else {
            return self.reject(&env, "no pending session".into(), OpCounter::default());
        };
        let mut meter = Meter::recording();
        let now = self.network.now();
        let result = user::finalize(pending, &msg, now, self.config.protocol.delta_t, &mut meter);
        let ops = self.absorb(&mut meter);
        match result {
            Ok(key) => {
                let s = self.sessions.get_mut(&env.session).expect("checked above");
                s.pending = None;
                s.user_key = Some(key);
                s.transcript.user_ops += ops;
                s.transcript.completed = true;
            }
            Err(e) => self.reject(&env, e.to_string(), ops),
        }
    }

    /// Every public-channel payload, sliced at field boundaries.
    pub fn public_knowledge(&self) -> AdversaryKnowledge {
        self.knowledge_where(|e| !e.secure)
    }

    /// Secure-channel payloads of the given kinds.
    pub fn secure_knowledge(&self, kinds: &[MessageKind]) -> AdversaryKnowledge {
        self.knowledge_where(|e| e.secure && kinds.contains(&e.kind))
    }

    fn knowledge_where(&self, keep: impl Fn(&Envelope) -> bool) -> AdversaryKnowledge {
        let mut k = AdversaryKnowledge::new();
        for e in self.network.recorded().iter().filter(|e| keep(e)) {
            k.learn_sliced(
                &format!("{}#{}", e.kind.name(), e.id),
                &e.payload,
                e.kind.layout(),
            );
        }
        k
    }

    /// Every hash evaluation performed so far.
    pub fn algebra(&self) -> Algebra {
        Algebra::new(self.hash_log.iter().cloned())
    }

    pub fn hash_log(&self) -> &[HashRecord] {
        &self.hash_log
    }

    pub fn session_secrets(&self, session: u64) -> Result<SessionSecrets, WorldError> {
        let s = self.session(session)?;
        let (Some(msg1), Some(msg3), Some(key)) =
            (&s.transcript.msg1, &s.transcript.msg3, &s.user_key)
        else {
            return Err(WorldError::Incomplete(session));
        };
        let party = self.user(&s.user)?;
        let ctx = user::login(
            &party.card,
            &party.id,
            &party.password,
            &party.biometric,
            &mut Meter::new(),
        )?;
        let uav = self.uav(&s.uav)?;
        let record = self
            .gateway
            .uav_record(&uav.id)
            .ok_or_else(|| WorldError::UnknownUav(s.uav.clone()))?;
        let tid_i = ctx.tid().bits().clone();
        let rid_j = msg1.rid_j.clone();
        let n_j = record.nonce.field();
        let tid_j = hash_parts(&[&uav.id, &n_j]).into_bits();
        let tc_id_j = record.tc_id.bits().clone();
        let ts1 = msg1.ts1.bits();
        let ts3 = msg3.ts3.bits();
        let n_k = msg3.v5.xor(hash_parts(&[&tid_i, &rid_j, &ts3]).bits());
        let v3 = hash_parts(&[&tid_j, &tc_id_j]).into_bits();
        Ok(SessionSecrets {
            id_i: party.id.clone(),
            e_i: hash_parts(&[&party.card.c, &ts1]).into_bits(),
            f_i: rid_j.xor(&uav.id),
            id_j: uav.id.clone(),
            r_j: record.response.clone().unwrap_or_else(BitString::empty),
            tid_i,
            rid_j,
            n_j,
            tc_id_j,
            tid_j,
            n_k,
            v3,
            ts3,
            sk: key.expose().bits().clone(),
        })
    }
}

/// Flips a random number of bits, at most `noise`, in every block of `r`.
pub fn noisy_reading(template: &BitString, r: usize, noise: usize, rng: &mut SimRng) -> BitString {
    let mut reading = template.clone();
    for block in 0..template.width() / r {
        let flips = rng.gen_range(0..=noise.min(r));
        for k in sample(rng, r, flips) {
            reading.flip(block * r + k);
        }
    }
    reading
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deployed(seed: u64) -> World {
        let mut w = World::new(WorldConfig {
            seed,
            ..WorldConfig::default()
        });
        w.add_uav("uav-alpha").unwrap();
        w.add_user("alice", "hunter2").unwrap();
        w
    }

    #[test]
    fn honest_run_agrees_and_counts() {
        let mut w = deployed(0);
        let s = w.run_aka("alice", "uav-alpha").unwrap();
        let st = w.session(s).unwrap();
        assert!(st.keys_agree());
        assert!(st.transcript.completed);
        assert_eq!(w.rejections().len(), 0);
        let secrets = w.session_secrets(s).unwrap();
        let sk = hash_parts(&[
            &secrets.v3,
            &secrets.tid_i,
            &secrets.rid_j,
            &secrets.n_k,
            &secrets.ts3,
        ]);
        assert_eq!(sk.bits(), &secrets.sk);
        assert!(secrets.n_k.has_zero_prefix(32));
    }

    #[test]
    fn dropping_msg2_stalls_without_keys() {
        let mut w = deployed(1);
        let s = w.start_aka("alice", "uav-alpha").unwrap();
        let id = w.run_until(MessageKind::Msg2, s).unwrap();
        w.network.drop_message(id).unwrap();
        w.run_until_idle();
        let st = w.session(s).unwrap();
        assert!(st.user_key.is_none() && st.uav_key.is_none());
        assert!(st.awaiting_msg3());
    }

    #[test]
    fn delayed_msg1_is_stale() {
        let mut w = deployed(2);
        let s = w.start_aka("alice", "uav-alpha").unwrap();
        let id = w.run_until(MessageKind::Msg1, s).unwrap();
        w.network.delay(id, 2).unwrap();
        w.run_until_idle();
        let r: Vec<_> = w.rejections_for(s).collect();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].reason, GwnError::StaleTimestamp.to_string());
        assert!(r[0].ops.is_zero());
    }

    #[test]
    fn noisy_reading_respects_bound() {
        let mut rng = rng_from_seed(9);
        let t = random_bits(&mut rng, 160);
        for _ in 0..50 {
            let r = noisy_reading(&t, 5, 2, &mut rng);
            for b in 0..32 {
                assert!(r.slice(b * 5, 5).hamming_distance(&t.slice(b * 5, 5)) <= 2);
            }
        }
    }

    #[test]
    fn same_seed_same_world() {
        let mut a = deployed(4);
        let mut b = deployed(4);
        let sa = a.run_aka("alice", "uav-alpha").unwrap();
        let sb = b.run_aka("alice", "uav-alpha").unwrap();
        assert_eq!(
            a.session(sa).unwrap().user_key,
            b.session(sb).unwrap().user_key
        );
        assert_eq!(a.network.log(), b.network.log());
    }
}
