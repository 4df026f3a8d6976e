//! The attack catalog. Each scenario builds a fresh deployment, plays one
//! adversary strategy and turns the outcome into verdicts.
//!
//! Verdicts whose claim starts with `sk_` are session-key secrecy claims.
//! Observations record facts the scenario surfaced that are not part of its
//! claim; they never affect `pass`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::closure::{closure, replay_skeleton, AdversaryKnowledge, Closure, TraceStep};
use super::network::{Action, Endpoint, LogEntry, MessageKind, Tamper};
use super::world::{SessionSecrets, World, WorldConfig, WorldError};
use crate::gwn::GwnError;
use crate::meter::OpCounter;
use crate::primitives::{fe_rep, hash, random_bits, BitString};
use crate::uav::UavError;
use crate::user::UserError;
use crate::wire::{protocol_bits, BitCounts, Msg1, Msg2, Msg3, Timestamp, WireMessage};

pub const SCENARIOS: [&str; 12] = [
    "stolen_card",
    "privileged_insider",
    "impersonation",
    "anonymity_untraceability",
    "uav_capture",
    "mutual_auth",
    "replay",
    "mitm",
    "esl",
    "dos",
    "side_channel",
    "crp_leakage",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub world: WorldConfig,
    /// Hash layers explored by the closure engine.
    pub depth: usize,
    /// Random forgeries per message type.
    pub forgeries: usize,
    /// Garbage MSG1s in the flood.
    pub flood: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            world: WorldConfig::default(),
            depth: 4,
            forgeries: 64,
            flood: 10_000,
        }
    }
}

impl ScenarioConfig {
    pub fn with_seed(seed: u64) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.world.seed = seed;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0}")]
    UnknownScenario(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub note: String,
    pub holds: bool,
    pub detail: String,
}

/// A derivation found by the closure engine. Values are omitted; replaying
/// `steps` against the knowledge set reproduces a value with this
/// fingerprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub target: String,
    pub fingerprint: String,
    pub hash_layers: usize,
    pub verified: bool,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub tick: u32,
    pub action: String,
    pub direction: String,
    pub kind: String,
    pub session: u64,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub depth: usize,
    pub pass: bool,
    pub verdicts: Vec<Verdict>,
    pub observations: Vec<Observation>,
    pub op_counts: BTreeMap<String, OpCounter>,
    pub bit_counts: Option<BitCounts>,
    pub derivations: Vec<TraceRecord>,
    pub transcript: Vec<TranscriptLine>,
}

impl ScenarioReport {
    pub fn verdict(&self, claim: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.claim == claim)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs one catalog entry against a fresh deployment.
pub fn run_scenario(name: &str, config: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let mut run = Run::new(name, config);
    match name {
        "stolen_card" => stolen_card(&mut run)?,
        "privileged_insider" => privileged_insider(&mut run)?,
        "impersonation" => impersonation(&mut run)?,
        "anonymity_untraceability" => anonymity(&mut run)?,
        "uav_capture" => uav_capture(&mut run)?,
        "mutual_auth" => mutual_auth(&mut run)?,
        "replay" => replay(&mut run)?,
        "mitm" => mitm(&mut run)?,
        "esl" => esl(&mut run)?,
        "dos" => dos(&mut run)?,
        "side_channel" => side_channel(&mut run)?,
        "crp_leakage" => crp_leakage(&mut run)?,
        _ => return Err(ScenarioError::UnknownScenario(name.into())),
    }
    Ok(run.finish())
}

struct Run {
    name: String,
    config: ScenarioConfig,
    world: World,
    verdicts: Vec<Verdict>,
    observations: Vec<Observation>,
    derivations: Vec<TraceRecord>,
    reference: Option<u64>,
    show_secure: bool,
}

type Targets = Vec<(String, BitString)>;

impl Run {
    fn new(name: &str, config: &ScenarioConfig) -> Run {
        Run {
            name: name.into(),
            config: *config,
            world: World::new(config.world),
            verdicts: Vec::new(),
            observations: Vec::new(),
            derivations: Vec::new(),
            reference: None,
            show_secure: false,
        }
    }

    fn deploy(&mut self, users: &[&str], uavs: &[&str]) -> Result<(), WorldError> {
        for u in uavs {
            self.world.add_uav(u)?;
        }
        for u in users {
            self.world.add_user(u, &format!("pw-{u}"))?;
        }
        Ok(())
    }

    /// An honest run, followed by a pause longer than the freshness window.
    fn session(&mut self, user: &str, uav: &str) -> Result<u64, WorldError> {
        let s = self.world.run_aka(user, uav)?;
        if self.reference.is_none() && self.world.session(s)?.keys_agree() {
            self.reference = Some(s);
        }
        self.world
            .network
            .advance(self.config.world.protocol.delta_t + 1);
        Ok(s)
    }

    fn verdict(&mut self, claim: &str, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            claim: claim.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn observe(&mut self, note: &str, holds: bool, detail: impl Into<String>) {
        self.observations.push(Observation {
            note: note.into(),
            holds,
            detail: detail.into(),
        });
    }

    fn closure_of(&self, k: &AdversaryKnowledge) -> Closure {
        closure(k, &self.world.algebra(), self.config.depth)
    }

    /// Names of the targets the adversary can derive; each found derivation
    /// is checked and stored.
    fn derivable(&mut self, k: &AdversaryKnowledge, c: &Closure, targets: &Targets) -> Vec<String> {
        let mut found = Vec::new();
        for (name, value) in targets {
            if let Some(d) = c.derive(value) {
                let steps = d.skeleton();
                let verified = d.verify(k) && replay_skeleton(&steps, k).as_ref() == Some(value);
                self.derivations.push(TraceRecord {
                    target: name.clone(),
                    fingerprint: hash(value).to_hex(),
                    hash_layers: d.hash_layers(),
                    verified,
                    steps,
                });
                found.push(name.clone());
            }
        }
        found
    }

    fn secrecy(&mut self, claim: &str, k: &AdversaryKnowledge, targets: &Targets) {
        let c = self.closure_of(k);
        let leaked = self.derivable(k, &c, targets);
        let detail = if leaked.is_empty() {
            format!(
                "none of {} targets derivable at depth {}",
                targets.len(),
                self.config.depth
            )
        } else {
            format!("derivable: {}", leaked.join(", "))
        };
        self.verdict(claim, leaked.is_empty(), detail);
    }

    fn exposure_note(&mut self, note: &str, k: &AdversaryKnowledge, targets: &Targets) {
        let c = self.closure_of(k);
        let leaked = self.derivable(k, &c, targets);
        let holds = leaked.len() == targets.len();
        let detail = format!("{} of {} targets derivable", leaked.len(), targets.len());
        self.observe(note, holds, detail);
    }

    fn secrets(&self, s: u64) -> Result<SessionSecrets, WorldError> {
        self.world.session_secrets(s)
    }

    fn sk(&self, s: u64) -> Result<(String, BitString), WorldError> {
        Ok((format!("SK#{s}"), self.secrets(s)?.sk))
    }

    fn finish(self) -> ScenarioReport {
        let mut op_counts = BTreeMap::new();
        let mut bit_counts = None;
        if let Some(s) = self.reference.and_then(|s| self.world.session(s).ok()) {
            let t = &s.transcript;
            op_counts.insert("user".to_string(), t.user_ops);
            op_counts.insert("gwn".to_string(), t.gwn_ops);
            op_counts.insert("uav".to_string(), t.uav_ops);
            op_counts.insert("total".to_string(), t.user_ops + t.gwn_ops + t.uav_ops);
            bit_counts = protocol_bits(t).ok();
        }
        let transcript = self
            .world
            .network
            .log()
            .iter()
            .filter(|e| !e.secure || self.show_secure)
            .map(transcript_line)
            .collect();
        ScenarioReport {
            pass: self.verdicts.iter().all(|v| v.pass),
            scenario: self.name,
            seed: self.config.world.seed,
            depth: self.config.depth,
            verdicts: self.verdicts,
            observations: self.observations,
            op_counts,
            bit_counts,
            derivations: self.derivations,
            transcript,
        }
    }
}

fn transcript_line(e: &LogEntry) -> TranscriptLine {
    let action = match &e.action {
        Action::Send => "send".to_string(),
        Action::Deliver => "deliver".to_string(),
        Action::Drop => "drop".to_string(),
        Action::Delay { ticks } => format!("delay:{ticks}"),
        Action::Replay { of } => format!("replay:{of}"),
        Action::Tamper(Tamper::FlipBit(i)) => format!("flip:{i}"),
        Action::Tamper(Tamper::Substitute { field, .. }) => format!("substitute:{field}"),
        Action::Inject => "inject".to_string(),
    };
    TranscriptLine {
        tick: e.tick,
        action,
        direction: format!("{} -> {}", e.origin, e.dest),
        kind: e.kind.name().to_string(),
        session: e.session,
        payload: e.payload.to_hex(),
    }
}

fn learn_all(k: &mut AdversaryKnowledge, prefix: &str, values: &[(&str, &BitString)]) {
    for (name, v) in values {
        k.learn(format!("{prefix}.{name}"), (*v).clone());
    }
}

fn recorded(world: &World, session: u64, kind: MessageKind) -> Option<u64> {
    world
        .network
        .recorded()
        .iter()
        .find(|e| e.session == session && e.kind == kind && e.origin != Endpoint::Adversary)
        .map(|e| e.id)
}

fn rejection_reason(world: &World, message: u64) -> Option<String> {
    world
        .rejections()
        .iter()
        .find(|r| r.message == message)
        .map(|r| r.reason.clone())
}

fn stolen_card(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice"], &["uav-alpha"])?;
    let s = run.session("alice", "uav-alpha")?;
    let alice = run.world.user("alice")?.clone();
    let card = &alice.card;
    let ctx = run
        .world
        .try_login("alice", &alice.password, &alice.biometric)?;
    let sigma = fe_rep(&alice.biometric, &card.tau, &card.fe)
        .expect("template matches card")
        .into_bits();

    let mut k = AdversaryKnowledge::new();
    learn_all(
        &mut k,
        "card",
        &[
            ("A_i", &card.a),
            ("B_i", card.b.bits()),
            ("C_i", &card.c),
            ("tau_i", &card.tau),
        ],
    );
    run.secrecy(
        "id_not_derivable",
        &k,
        &vec![("ID_i".into(), alice.id.clone())],
    );
    run.secrecy(
        "password_not_derivable",
        &k,
        &vec![("PW_i".into(), alice.password.clone())],
    );
    run.secrecy(
        "nonce_not_derivable",
        &k,
        &vec![("n_i".into(), ctx.nonce_field().clone())],
    );
    // Checking a password guess against B_i needs sigma, TID_i and ID_i.
    run.secrecy(
        "guess_check_not_derivable",
        &k,
        &vec![
            ("sigma_i".into(), sigma),
            ("TID_i".into(), ctx.tid().bits().clone()),
            ("ID_i".into(), alice.id.clone()),
        ],
    );
    let sk = run.sk(s)?;
    run.secrecy("sk_not_derivable", &k, &vec![sk.clone()]);

    let mut with_traffic = k.clone();
    with_traffic.extend(&run.world.public_knowledge());
    run.exposure_note("card_plus_transcripts_exposes_sk", &with_traffic, &vec![sk]);
    Ok(())
}

fn privileged_insider(run: &mut Run) -> Result<(), WorldError> {
    run.show_secure = true;
    run.world.network.set_insider(true);
    run.deploy(&["alice"], &["uav-alpha"])?;
    let s = run.session("alice", "uav-alpha")?;
    let alice = run.world.user("alice")?.clone();
    let k = run
        .world
        .secure_knowledge(&[MessageKind::UserRegistrationRequest]);
    run.secrecy(
        "password_not_derivable",
        &k,
        &vec![("PW_i".into(), alice.password.clone())],
    );
    run.secrecy(
        "id_not_derivable",
        &k,
        &vec![("ID_i".into(), alice.id.clone())],
    );
    let sk = run.sk(s)?;
    run.secrecy("sk_not_derivable", &k, &vec![sk.clone()]);

    let mut with_traffic = k.clone();
    with_traffic.extend(&run.world.public_knowledge());
    run.exposure_note(
        "insider_plus_transcripts_exposes_sk",
        &with_traffic,
        &vec![sk],
    );
    Ok(())
}

fn fresh_fields<M: WireMessage>(m: &M, ts_field: usize, now: Timestamp) -> Vec<BitString> {
    let mut f = m.to_fields();
    f[ts_field] = now.bits();
    f
}

/// Field-wise mixes of two observed messages, all re-stamped with `now`.
fn structured_forgeries<M: WireMessage>(
    a: &M,
    b: &M,
    ts_field: usize,
    now: Timestamp,
) -> Vec<BitString> {
    let fa = fresh_fields(a, ts_field, now);
    let fb = fresh_fields(b, ts_field, now);
    let mut out = vec![M::from_fields(fa.clone()), M::from_fields(fb.clone())];
    for i in 0..fa.len() {
        if i == ts_field {
            continue;
        }
        let mut mixed = fa.clone();
        mixed[i] = fb[i].clone();
        out.push(M::from_fields(mixed));
    }
    out.iter().filter_map(|m| m.encode().ok()).collect()
}

fn random_forgery<M: WireMessage>(world: &mut World, ts_field: usize) -> BitString {
    let now = world.network.now();
    let fields = M::LAYOUT
        .iter()
        .enumerate()
        .map(|(i, (_, w))| {
            if i == ts_field {
                now.bits()
            } else {
                random_bits(world.rng(), *w)
            }
        })
        .collect();
    M::from_fields(fields).encode().expect("layout widths")
}

fn impersonation(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice", "bob"], &["uav-alpha"])?;
    let s1 = run.session("alice", "uav-alpha")?;
    let s2 = run.session("bob", "uav-alpha")?;
    let t1 = run.world.session(s1)?.transcript.clone();
    let t2 = run.world.session(s2)?.transcript.clone();
    let (m1a, m1b) = (t1.msg1.clone().unwrap(), t2.msg1.clone().unwrap());
    let (m2a, m2b) = (t1.msg2.clone().unwrap(), t2.msg2.clone().unwrap());
    let (m3a, m3b) = (t1.msg3.clone().unwrap(), t2.msg3.clone().unwrap());
    let n = run.config.forgeries;
    let uav = Endpoint::Uav("uav-alpha".into());

    // MSG1 towards the gateway.
    let before = run.world.emitted(MessageKind::Msg2);
    let now = run.world.network.now();
    let mut forged = structured_forgeries(&m1a, &m1b, 4, now);
    for _ in 0..n {
        forged.push(random_forgery::<Msg1>(&mut run.world, 4));
    }
    let total = forged.len();
    for p in forged {
        run.world
            .network
            .inject(Endpoint::Gateway, MessageKind::Msg1, p, u64::MAX);
        run.world.run_until_idle();
    }
    let accepted = run.world.emitted(MessageKind::Msg2) - before;
    run.verdict(
        "msg1_forgeries_rejected",
        accepted == 0,
        format!("{} of {total} forged MSG1 accepted", accepted),
    );

    // MSG2 towards the UAV.
    run.world.network.advance(1);
    let before = run.world.emitted(MessageKind::Msg3);
    let now = run.world.network.now();
    let mut forged = structured_forgeries(&m2a, &m2b, 4, now);
    for _ in 0..n {
        forged.push(random_forgery::<Msg2>(&mut run.world, 4));
    }
    let total = forged.len();
    for p in forged {
        run.world
            .network
            .inject(uav.clone(), MessageKind::Msg2, p, u64::MAX);
        run.world.run_until_idle();
    }
    let accepted = run.world.emitted(MessageKind::Msg3) - before;
    run.verdict(
        "msg2_forgeries_rejected",
        accepted == 0,
        format!("{} of {total} forged MSG2 accepted", accepted),
    );

    // MSG3 towards a user waiting on a session whose MSG1 was suppressed.
    run.world.network.advance(1);
    let s3 = run.world.start_aka("alice", "uav-alpha")?;
    let m1 = run.world.run_until(MessageKind::Msg1, s3).expect("queued");
    run.world.network.drop_message(m1)?;
    let now = run.world.network.now();
    let mut forged = structured_forgeries(&m3a, &m3b, 2, now);
    for _ in 0..n {
        forged.push(random_forgery::<Msg3>(&mut run.world, 2));
    }
    let total = forged.len();
    for p in forged {
        run.world
            .network
            .inject(Endpoint::User("alice".into()), MessageKind::Msg3, p, s3);
        run.world.run_until_idle();
    }
    let st = run.world.session(s3)?;
    let refused = run.world.rejections_for(s3).count();
    run.verdict(
        "msg3_forgeries_rejected",
        st.user_key.is_none() && refused == total,
        format!("{refused} of {total} forged MSG3 refused"),
    );

    run.world
        .network
        .advance(run.config.world.protocol.delta_t + 1);
    let s4 = run.session("alice", "uav-alpha")?;
    let ok = run.world.session(s4)?.keys_agree();
    run.verdict(
        "honest_run_unaffected",
        ok,
        "alice completes AKA after the attempts",
    );
    Ok(())
}

fn anonymity(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice", "bob"], &["uav-alpha"])?;
    let a1 = run.session("alice", "uav-alpha")?;
    let a2 = run.session("alice", "uav-alpha")?;
    let b = run.session("bob", "uav-alpha")?;
    let k = run.world.public_knowledge();
    let ids = vec![
        ("ID_alice".into(), run.world.user("alice")?.id.clone()),
        ("ID_bob".into(), run.world.user("bob")?.id.clone()),
    ];
    run.secrecy("id_not_derivable", &k, &ids);

    let transcript = |w: &World, s: u64| w.session(s).map(|st| st.transcript.clone());
    let (p, q, r) = (
        transcript(&run.world, a1)?,
        transcript(&run.world, a2)?,
        transcript(&run.world, b)?,
    );
    let (m1, m2, m3) = (p.msg1.unwrap(), q.msg1.unwrap(), r.msg1.unwrap());
    let (x, y) = (m1.to_fields(), m2.to_fields());
    let shared = x.iter().filter(|f| y.contains(f)).count();
    run.verdict(
        "msg1_fields_unlinkable",
        shared == 0,
        format!("{shared} identical MSG1 field values across two sessions of one user"),
    );
    let targets = vec![run.sk(a1)?, run.sk(a2)?, run.sk(b)?];
    run.secrecy("sk_not_derivable", &k, &targets);

    let (h1, h2) = (p.msg2.unwrap().h_i, q.msg2.unwrap().h_i);
    run.observe(
        "msg2_h_i_repeats_for_same_pair",
        h1 == h2,
        "H_i = TID_i xor n_j is fixed per user and UAV",
    );
    let linked = m1.g_i.xor(&m2.g_i) == m1.rid_j.xor(&m2.rid_j);
    let unrelated = m1.g_i.xor(&m3.g_i) == m1.rid_j.xor(&m3.rid_j);
    run.observe(
        "msg1_pairs_linkable_by_xor",
        linked && !unrelated,
        "G xor G' equals RID xor RID' exactly when both come from one user to one UAV",
    );
    Ok(())
}

fn uav_capture(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice", "bob"], &["uav-alpha", "uav-bravo"])?;
    let mut captured_sessions = Vec::new();
    let mut other_sessions = Vec::new();
    for user in ["alice", "bob"] {
        captured_sessions.push(run.session(user, "uav-alpha")?);
        other_sessions.push(run.session(user, "uav-bravo")?);
    }
    let mem = run.world.uav("uav-alpha")?.state.capture_memory();
    let mut k = run.world.public_knowledge();
    learn_all(
        &mut k,
        "capture",
        &[
            ("ID_j", &mem.id),
            ("C_j", &mem.challenge),
            ("TC_IDj", mem.tc_id.bits()),
        ],
    );
    let others: Targets = other_sessions
        .iter()
        .map(|&s| run.sk(s))
        .collect::<Result<_, _>>()?;
    run.secrecy("sk_not_derivable_other_uavs", &k, &others);

    let mut ok = true;
    for user in ["alice", "bob"] {
        let s = run.session(user, "uav-bravo")?;
        ok &= run.world.session(s)?.keys_agree();
    }
    run.verdict(
        "other_pairs_complete_aka",
        ok,
        "sessions with the uncaptured UAV still agree on keys",
    );

    let own: Targets = captured_sessions
        .iter()
        .map(|&s| run.sk(s))
        .collect::<Result<_, _>>()?;
    run.exposure_note("captured_uav_sessions_exposed", &k, &own);
    Ok(())
}

fn mutual_auth(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice"], &["uav-alpha"])?;
    let s = run.session("alice", "uav-alpha")?;
    let st = run.world.session(s)?.clone();
    let refused =
        |party: fn(&Endpoint) -> bool, w: &World| w.rejections_for(s).any(|r| party(&r.party));
    let gwn_refused = refused(|p| *p == Endpoint::Gateway, &run.world);
    let uav_refused = refused(|p| matches!(p, Endpoint::Uav(_)), &run.world);
    let user_refused = refused(|p| matches!(p, Endpoint::User(_)), &run.world);
    run.verdict(
        "login_check_passed",
        st.transcript.msg1.is_some(),
        "B_i matched at login",
    );
    run.verdict(
        "mac1_verified",
        st.transcript.msg2.is_some() && !gwn_refused,
        "gateway accepted MSG1",
    );
    run.verdict(
        "mac2_verified",
        st.transcript.msg3.is_some() && !uav_refused,
        "UAV accepted MSG2",
    );
    run.verdict(
        "v2_verified",
        st.transcript.completed && !user_refused,
        "user accepted MSG3",
    );
    run.verdict(
        "keys_agree",
        st.keys_agree(),
        "user and UAV hold the same key",
    );
    let bits = protocol_bits(&st.transcript).map(|b| b.total).unwrap_or(0);
    run.verdict(
        "total_bits",
        bits == 1856,
        format!("{bits} bits over the air"),
    );
    Ok(())
}

fn replay(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice"], &["uav-alpha"])?;
    let s1 = run.world.run_aka("alice", "uav-alpha")?;
    run.reference = Some(s1);
    let ids: Vec<u64> = [MessageKind::Msg1, MessageKind::Msg2, MessageKind::Msg3]
        .iter()
        .map(|&k| recorded(&run.world, s1, k).expect("honest run recorded"))
        .collect();
    let delta_t = run.config.world.protocol.delta_t;
    let stale = UserError::StaleTimestamp.to_string();
    let replayed = GwnError::ReplayDetected.to_string();
    let check = |run: &mut Run, claim: &str, id: u64, into: Option<u64>, expect: &[String]| {
        let before = (
            run.world.emitted(MessageKind::Msg2),
            run.world.emitted(MessageKind::Msg3),
        );
        let r = match into {
            Some(s) => run.world.network.replay_into(id, s),
            None => run.world.network.replay(id),
        }
        .expect("recorded public message");
        run.world.run_until_idle();
        let reason = rejection_reason(&run.world, r);
        let after = (
            run.world.emitted(MessageKind::Msg2),
            run.world.emitted(MessageKind::Msg3),
        );
        let pass = reason.as_ref().is_some_and(|x| expect.contains(x)) && before == after;
        let age = run.world.network.now().0;
        let detail = format!(
            "replayed at tick {age}: {}",
            reason.unwrap_or_else(|| "accepted".into())
        );
        (claim.to_string(), pass, detail)
    };

    // Within the window.
    run.world.network.advance(1);
    let s2 = run.world.start_aka("alice", "uav-alpha")?;
    let m = run.world.run_until(MessageKind::Msg1, s2).expect("queued");
    run.world.network.drop_message(m)?;
    let mut results = vec![
        check(
            run,
            "gwn_rejects_replay_within_window",
            ids[0],
            None,
            std::slice::from_ref(&replayed),
        ),
        check(
            run,
            "uav_rejects_replay_within_window",
            ids[1],
            None,
            &[UavError::ReplayDetected.to_string()],
        ),
    ];
    let own = check(run, "user", ids[2], None, &["no pending session".into()]);
    let cross = check(
        run,
        "user",
        ids[2],
        Some(s2),
        &[UserError::AuthFailed.to_string()],
    );
    results.push((
        "user_rejects_replay_within_window".into(),
        own.1 && cross.1,
        format!("own session: {}; other session: {}", own.2, cross.2),
    ));

    // Beyond the window.
    run.world.network.advance(delta_t);
    results.push(check(
        run,
        "gwn_rejects_replay_after_window",
        ids[0],
        None,
        &[GwnError::StaleTimestamp.to_string()],
    ));
    results.push(check(
        run,
        "uav_rejects_replay_after_window",
        ids[1],
        None,
        &[UavError::StaleTimestamp.to_string()],
    ));
    results.push(check(
        run,
        "user_rejects_replay_after_window",
        ids[2],
        Some(s2),
        &[stale],
    ));
    for (claim, pass, detail) in results {
        run.verdict(&claim, pass, detail);
    }
    Ok(())
}

fn mitm(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice", "bob"], &["uav-alpha"])?;
    let donor = run.session("bob", "uav-alpha")?;
    let control = run.session("alice", "uav-alpha")?;
    let control_ok = run.world.session(control)?.keys_agree();
    let t = run.world.session(donor)?.transcript.clone();
    let donor_fields: BTreeMap<MessageKind, Vec<BitString>> = [
        (MessageKind::Msg1, t.msg1.unwrap().to_fields()),
        (MessageKind::Msg2, t.msg2.unwrap().to_fields()),
        (MessageKind::Msg3, t.msg3.unwrap().to_fields()),
    ]
    .into_iter()
    .collect();

    let (mut runs, mut agreed, mut refused, mut diverged) = (0, 0, 0, 0);
    let mut unchanged = Vec::new();
    let mut accepted_fields = Vec::new();
    for (kind, fields) in &donor_fields {
        for (i, (name, width)) in kind.layout().iter().enumerate() {
            for donor_value in [true, false] {
                let s = run.world.start_aka("alice", "uav-alpha")?;
                let id = run
                    .world
                    .run_until(*kind, s)
                    .expect("honest message in flight");
                let value = if donor_value {
                    fields[i].clone()
                } else {
                    random_bits(run.world.rng(), *width)
                };
                let (start, _) = kind.field_range(name).expect("layout field");
                let current = run
                    .world
                    .network
                    .in_flight()
                    .iter()
                    .find(|e| e.id == id)
                    .map(|e| e.payload.slice(start, *width));
                if current.as_ref() == Some(&value) {
                    // Same value as the honest field, so nothing is modified.
                    unchanged.push(format!("{}.{name}", kind.name()));
                    run.world.run_until_idle();
                    run.world
                        .network
                        .advance(run.config.world.protocol.delta_t + 1);
                    continue;
                }
                let field_label = format!("{}.{name}", kind.name());
                run.world.network.tamper(
                    id,
                    Tamper::Substitute {
                        field: (*name).into(),
                        value,
                    },
                )?;
                run.world.run_until_idle();
                let st = run.world.session(s)?;
                runs += 1;
                if st.keys_agree() {
                    agreed += 1;
                } else if st.user_key.is_some() {
                    diverged += 1;
                    accepted_fields.push(field_label);
                } else {
                    refused += 1;
                }
                run.world
                    .network
                    .advance(run.config.world.protocol.delta_t + 1);
            }
        }
    }
    run.verdict("honest_control_agrees", control_ok, "untampered run agrees");
    run.verdict(
        "no_agreeing_keys_after_substitution",
        agreed == 0,
        format!("{runs} runs: {refused} refused, {diverged} with mismatched keys, {agreed} agreed"),
    );
    accepted_fields.dedup();
    run.observe(
        "modified_msg3_accepted_with_wrong_key",
        !accepted_fields.is_empty(),
        format!(
            "user accepted a modified message and derived a diverging key: {}",
            accepted_fields.join(", ")
        ),
    );
    unchanged.dedup();
    run.observe(
        "donor_fields_equal_to_victim_fields",
        !unchanged.is_empty(),
        format!("substitution was a no-op for: {}", unchanged.join(", ")),
    );
    Ok(())
}

fn esl(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice", "bob"], &["uav-alpha"])?;
    let a = run.session("alice", "uav-alpha")?;
    let b = run.session("alice", "uav-alpha")?;
    run.session("bob", "uav-alpha")?;
    let public = run.world.public_knowledge();
    let (sa, sb) = (run.secrets(a)?, run.secrets(b)?);
    let sk_a = vec![run.sk(a)?];
    let sk_b = vec![run.sk(b)?];

    let mut k = public.clone();
    k.learn("leak.n_k", sa.n_k.clone());
    run.secrecy("sk_not_derivable_given_nk", &k, &sk_a);

    let mut k = public.clone();
    k.learn("leak.n_j", sa.n_j.clone());
    run.secrecy("sk_not_derivable_given_nj", &k, &sk_a);

    let session_secrets = |s: &SessionSecrets, tag: &str| {
        let mut k = public.clone();
        learn_all(
            &mut k,
            tag,
            &[
                ("E_i", &s.e_i),
                ("F_i", &s.f_i),
                ("n_k", &s.n_k),
                ("V_3", &s.v3),
                ("SK", &s.sk),
            ],
        );
        k
    };
    let k = session_secrets(&sb, "later");
    run.secrecy("sk_not_derivable_from_later_session", &k, &sk_a);
    let k = session_secrets(&sa, "earlier");
    run.secrecy("sk_not_derivable_from_earlier_session", &k, &sk_b);

    let mut k = public.clone();
    learn_all(
        &mut k,
        "control",
        &[
            ("V_3", &sa.v3),
            ("TID_i", &sa.tid_i),
            ("RID_j", &sa.rid_j),
            ("n_k", &sa.n_k),
            ("TS_3", &sa.ts3),
        ],
    );
    let c = run.closure_of(&k);
    let found = run.derivable(&k, &c, &sk_a);
    run.verdict(
        "positive_control_derives_sk",
        found.len() == 1,
        "SK derivable once V_3, TID_i, RID_j, n_k and TS_3 are known",
    );

    let mut k = public.clone();
    learn_all(
        &mut k,
        "partial",
        &[("TID_i", &sa.tid_i), ("RID_j", &sa.rid_j), ("n_k", &sa.n_k)],
    );
    run.exposure_note("sk_derivable_without_v3", &k, &sk_a);
    Ok(())
}

fn dos(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice"], &["uav-alpha"])?;
    run.session("alice", "uav-alpha")?;
    let before_msg2 = run.world.emitted(MessageKind::Msg2);
    let before_rej = run.world.rejections().len();
    run.world.network.set_logging(false);
    for i in 0..run.config.flood {
        let mut payload = random_bits(run.world.rng(), Msg1::LAYOUT.iter().map(|(_, w)| w).sum());
        if i % 8 != 0 {
            let now = run.world.network.now().bits();
            for k in 0..32 {
                payload.set(640 + k, now.get(k));
            }
        }
        run.world
            .network
            .inject(Endpoint::Gateway, MessageKind::Msg1, payload, u64::MAX);
        run.world.step();
    }
    run.world.network.set_logging(true);
    let flood: Vec<_> = run.world.rejections()[before_rej..].to_vec();
    let max_hash = flood.iter().map(|r| r.ops.hash).max().unwrap_or(0);
    let heavy = flood.iter().any(|r| r.ops.puf > 0 || r.ops.fe > 0);
    let stale = flood
        .iter()
        .filter(|r| r.reason == GwnError::StaleTimestamp.to_string())
        .count();
    let mac = flood
        .iter()
        .filter(|r| r.reason == GwnError::MacMismatch.to_string())
        .count();
    let n = run.config.flood;
    run.verdict(
        "all_rejected",
        flood.len() == n && stale + mac == n,
        format!(
            "{} of {n} rejected: {stale} stale, {mac} MAC_1 mismatch",
            flood.len()
        ),
    );
    let emitted = run.world.emitted(MessageKind::Msg2) - before_msg2;
    run.verdict(
        "no_msg2_emitted",
        emitted == 0,
        format!("{emitted} MSG2 emitted"),
    );
    run.verdict(
        "bounded_work",
        max_hash <= 3 && !heavy,
        format!("at most {max_hash} hashes per rejected message"),
    );
    let s = run.session("alice", "uav-alpha")?;
    let ok = run.world.session(s)?.keys_agree();
    run.verdict(
        "service_continues",
        ok,
        "honest AKA completes after the flood",
    );
    Ok(())
}

fn side_channel(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice"], &["uav-alpha"])?;
    let s = run.session("alice", "uav-alpha")?;
    let uav = run.world.uav("uav-alpha")?.clone();
    let mem = uav.state.capture_memory();
    let r_j = run.secrets(s)?.r_j;
    let mut k = AdversaryKnowledge::new();
    learn_all(
        &mut k,
        "capture",
        &[
            ("ID_j", &mem.id),
            ("C_j", &mem.challenge),
            ("TC_IDj", mem.tc_id.bits()),
        ],
    );
    let rj = vec![("R_j".to_string(), r_j.clone())];
    run.secrecy("puf_response_not_derivable", &k, &rj);
    let image = serde_json::to_string(&mem).expect("memory image serializes");
    let seed_hex = uav.device.seed().to_hex();
    let r_hex = r_j.to_hex();
    run.verdict(
        "puf_secrets_absent_from_memory",
        !image.contains(&seed_hex) && !image.contains(&r_hex),
        "memory image holds neither the PUF seed nor R_j",
    );
    let sk = run.sk(s)?;
    run.secrecy("sk_not_derivable", &k, &vec![sk]);

    let mut with_traffic = k.clone();
    with_traffic.extend(&run.world.public_knowledge());
    run.exposure_note("response_derivable_with_transcripts", &with_traffic, &rj);
    Ok(())
}

fn contains_window(haystack: &BitString, needle: &BitString) -> bool {
    let w = needle.width();
    haystack.width() >= w && (0..=haystack.width() - w).any(|o| haystack.slice(o, w) == *needle)
}

fn crp_leakage(run: &mut Run) -> Result<(), WorldError> {
    run.deploy(&["alice", "bob"], &["uav-alpha", "uav-bravo"])?;
    run.world.add_uav_dynamic("uav-charlie")?;
    let sessions = [
        run.session("alice", "uav-alpha")?,
        run.session("bob", "uav-bravo")?,
        run.session("alice", "uav-charlie")?,
        run.session("bob", "uav-alpha")?,
    ];
    let responses: Targets = sessions
        .iter()
        .map(|&s| {
            let sec = run.secrets(s)?;
            Ok((format!("R_j#{s}"), sec.r_j))
        })
        .collect::<Result<_, WorldError>>()?;
    let public: Vec<BitString> = run
        .world
        .network
        .recorded()
        .iter()
        .filter(|e| !e.secure)
        .map(|e| e.payload.clone())
        .collect();
    let hits = responses
        .iter()
        .filter(|(_, r)| public.iter().any(|p| contains_window(p, r)))
        .count();
    run.verdict(
        "response_never_on_public_channel",
        hits == 0,
        format!(
            "{hits} of {} responses found at any bit offset in {} public payloads",
            responses.len(),
            public.len()
        ),
    );
    let k = run.world.public_knowledge();
    run.secrecy("response_not_derivable", &k, &responses);
    let sks: Targets = sessions
        .iter()
        .map(|&s| run.sk(s))
        .collect::<Result<_, _>>()?;
    run.secrecy("sk_not_derivable", &k, &sks);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ScenarioConfig {
        ScenarioConfig {
            forgeries: 4,
            flood: 200,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn unknown_scenario() {
        assert_eq!(
            run_scenario("teleport", &quick()).unwrap_err(),
            ScenarioError::UnknownScenario("teleport".into())
        );
    }

    #[test]
    fn mutual_auth_reports_bits_and_counts() {
        let r = run_scenario("mutual_auth", &quick()).unwrap();
        assert!(r.pass, "{:#?}", r.verdicts);
        assert_eq!(r.bit_counts.unwrap().total, 1856);
        assert_eq!(r.op_counts["total"].hash, 25);
    }

    #[test]
    fn replay_variants_rejected() {
        let r = run_scenario("replay", &quick()).unwrap();
        assert!(r.pass, "{:#?}", r.verdicts);
    }

    #[test]
    fn reports_are_reproducible() {
        let a = run_scenario("impersonation", &quick()).unwrap().to_json();
        let b = run_scenario("impersonation", &quick()).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn every_trace_in_every_report_replays() {
        for name in SCENARIOS {
            let r = run_scenario(name, &quick()).unwrap();
            assert!(r.derivations.iter().all(|d| d.verified), "{name}");
        }
    }

    #[test]
    fn substring_search_finds_unaligned_windows() {
        let mut hay = BitString::zeros(300);
        let needle = BitString::from_u32(0xdead_beef);
        for k in 0..32 {
            hay.set(37 + k, needle.get(k));
        }
        assert!(contains_window(&hay, &needle));
        assert!(!contains_window(&BitString::zeros(300), &needle));
    }
}
