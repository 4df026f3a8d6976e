//! The acceptance suite, runnable from tests and from the CLI.
//!
//! Results carry no timings, so the serialized report is a pure function
//! of the seed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::meter::OpCounter;
use crate::metrics::{count_session, overhead_report, TimingConstants, PROPOSED_REPORTED_MS};
use crate::par::Execution;
use crate::primitives::{fe_gen, fe_rep, random_bits, rng_from_seed, FuzzyExtractorParams};
use crate::simnet::world::{noisy_reading, World, WorldConfig};
use crate::simnet::{run_scenario, MessageKind, ScenarioConfig, Tamper};
use crate::user::UserError;
use crate::wire::{protocol_bits, ReplacementRequest};

pub const HONEST_SEEDS: u64 = 1000;
pub const FE_TRIALS: u64 = 500;
pub const FLOOD: usize = 10_000;

/// Scenarios whose adversary knowledge sets must not yield a session key.
pub const SECRECY_SCENARIOS: [&str; 7] = [
    "stolen_card",
    "privileged_insider",
    "anonymity_untraceability",
    "uav_capture",
    "esl",
    "side_channel",
    "crp_leakage",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u8, name: &str, pass: bool, detail: impl Into<String>) -> CriterionResult {
        CriterionResult {
            id,
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<28} {}  {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub seed: u64,
    pub pass: bool,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn world(seed: u64) -> World {
    let mut w = World::new(WorldConfig {
        seed,
        ..WorldConfig::default()
    });
    w.add_uav("uav-alpha").expect("fresh world");
    w.add_user("alice", "pw-alice").expect("fresh world");
    w
}

fn honest_transcript(seed: u64) -> crate::session::SessionTranscript {
    let mut w = world(seed);
    let s = w.run_aka("alice", "uav-alpha").expect("registered parties");
    w.session(s).expect("started").transcript.clone()
}

pub fn communication_overhead(seed: u64) -> CriterionResult {
    let t = honest_transcript(seed);
    let (pass, detail) = match protocol_bits(&t) {
        Ok(b) => (
            (b.msg1, b.msg2, b.msg3, b.total, b.message_count) == (672, 672, 512, 1856, 3),
            format!(
                "msg1={} msg2={} msg3={} total={} messages={}",
                b.msg1, b.msg2, b.msg3, b.total, b.message_count
            ),
        ),
        Err(e) => (false, e.to_string()),
    };
    CriterionResult::new(1, "communication_overhead", pass, detail)
}

fn triple(c: &OpCounter) -> (u32, u32, u32) {
    (c.fe, c.puf, c.hash)
}

pub fn computation_overhead(seed: u64) -> CriterionResult {
    let t = honest_transcript(seed);
    let (pass, detail) = match count_session(&t) {
        Ok(s) => (
            triple(&s.user) == (1, 0, 11)
                && triple(&s.gwn) == (0, 0, 6)
                && triple(&s.uav) == (0, 1, 8)
                && triple(&s.total) == (1, 1, 25),
            format!(
                "user fe={} h={}; gwn h={}; uav puf={} h={}; total fe={} puf={} h={}",
                s.user.fe,
                s.user.hash,
                s.gwn.hash,
                s.uav.puf,
                s.uav.hash,
                s.total.fe,
                s.total.puf,
                s.total.hash
            ),
        ),
        Err(e) => (false, e.to_string()),
    };
    CriterionResult::new(2, "computation_overhead", pass, detail)
}

pub fn timing_estimate(seed: u64) -> CriterionResult {
    let t = honest_transcript(seed);
    let ops = count_session(&t).ok();
    let report = overhead_report(ops.as_ref(), None, &TimingConstants::PRESET);
    let p = &report.rows[0];
    let got: Vec<Option<f64>> = [&p.user, &p.gateway, &p.device, &p.total]
        .iter()
        .map(|c| c.estimated_ms)
        .collect();
    let pass = got
        .iter()
        .zip(PROPOSED_REPORTED_MS)
        .all(|(g, want)| g.is_some_and(|g| (g - want).abs() <= 0.001 + 1e-9));
    let shown: Vec<String> = got
        .iter()
        .map(|g| g.map_or("-".into(), |x| format!("{x:.3}")))
        .collect();
    CriterionResult::new(
        3,
        "timing_estimate",
        pass,
        format!("{} ms", shown.join(" / ")),
    )
}

pub fn protocol_correctness(seed: u64, exec: Execution) -> CriterionResult {
    let base = seed.wrapping_mul(1_000_003);
    let ok = exec.map_range(0..HONEST_SEEDS, |i| {
        let mut w = world(base.wrapping_add(i));
        let s = w.run_aka("alice", "uav-alpha").expect("registered parties");
        let st = w.session(s).expect("started");
        st.keys_agree() && st.transcript.completed && w.rejections().is_empty()
    });
    let good = ok.iter().filter(|x| **x).count();
    CriterionResult::new(
        4,
        "protocol_correctness",
        good as u64 == HONEST_SEEDS,
        format!("{good} of {HONEST_SEEDS} seeds agree with every check passing"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TamperOutcome {
    Rejected,
    KeyMismatch,
    Stalled,
    Agreed,
}

fn flip_one(seed: u64, kind: MessageKind, bit: usize) -> TamperOutcome {
    let mut w = world(seed);
    let s = w
        .start_aka("alice", "uav-alpha")
        .expect("registered parties");
    let id = w.run_until(kind, s).expect("honest message in flight");
    w.network
        .tamper(id, Tamper::FlipBit(bit))
        .expect("bit in range");
    w.run_until_idle();
    let st = w.session(s).expect("started");
    if st.keys_agree() {
        TamperOutcome::Agreed
    } else if w.rejections_for(s).next().is_some() {
        TamperOutcome::Rejected
    } else if st.user_key.is_some() {
        TamperOutcome::KeyMismatch
    } else {
        TamperOutcome::Stalled
    }
}

pub fn tamper_exhaustion(seed: u64, exec: Execution) -> CriterionResult {
    let mut jobs = Vec::new();
    for (kind, width) in [
        (MessageKind::Msg1, 672),
        (MessageKind::Msg2, 672),
        (MessageKind::Msg3, 512),
    ] {
        jobs.extend((0..width).map(|b| (kind, b)));
    }
    let n = jobs.len();
    let out = exec.map(jobs, |(k, b)| flip_one(seed, k, b));
    let count = |o: TamperOutcome| out.iter().filter(|x| **x == o).count();
    let agreed = count(TamperOutcome::Agreed);
    CriterionResult::new(
        5,
        "tamper_exhaustion",
        agreed == 0 && n == 1856,
        format!(
            "{n} flips: {} rejected, {} key mismatch, {} stalled, {agreed} agreed",
            count(TamperOutcome::Rejected),
            count(TamperOutcome::KeyMismatch),
            count(TamperOutcome::Stalled)
        ),
    )
}

fn failing_claims(r: &crate::simnet::ScenarioReport) -> Vec<String> {
    r.verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("{}:{}", r.scenario, v.claim))
        .collect()
}

pub fn replay_suite(seed: u64) -> CriterionResult {
    let (pass, detail) = match run_scenario("replay", &ScenarioConfig::with_seed(seed)) {
        Ok(r) => {
            let failed = failing_claims(&r);
            let detail = if failed.is_empty() {
                format!(
                    "{} replay checks rejected at gateway, UAV and user",
                    r.verdicts.len()
                )
            } else {
                format!("failed: {}", failed.join(", "))
            };
            (r.pass, detail)
        }
        Err(e) => (false, e.to_string()),
    };
    CriterionResult::new(6, "replay_suite", pass, detail)
}

pub fn knowledge_closure(seed: u64) -> CriterionResult {
    let config = ScenarioConfig::with_seed(seed);
    let mut failed = Vec::new();
    let mut checked = 0;
    let mut control = false;
    for name in SECRECY_SCENARIOS {
        let r = match run_scenario(name, &config) {
            Ok(r) => r,
            Err(e) => {
                failed.push(format!("{name}: {e}"));
                continue;
            }
        };
        for v in r.verdicts.iter().filter(|v| v.claim.starts_with("sk_")) {
            checked += 1;
            if !v.pass {
                failed.push(format!("{name}:{}", v.claim));
            }
        }
        if name == "esl" {
            control = r
                .verdict("positive_control_derives_sk")
                .is_some_and(|v| v.pass);
        }
    }
    let pass = failed.is_empty() && control && checked > 0;
    let detail = format!(
        "{} of {checked} key-secrecy claims hold at depth {}; positive control {}{}",
        checked - failed.len().min(checked),
        config.depth,
        if control { "derives SK" } else { "FAILED" },
        if failed.is_empty() {
            String::new()
        } else {
            format!("; violated: {}", failed.join(", "))
        }
    );
    CriterionResult::new(7, "knowledge_closure", pass, detail)
}

pub fn fuzzy_tolerance(seed: u64, exec: Execution) -> CriterionResult {
    let params = FuzzyExtractorParams::default();
    let t = params.tolerance();
    let r = params.repetition;
    let results = exec.map_range(0..FE_TRIALS, |i| {
        let mut rng = rng_from_seed(seed ^ (0xfe00_0000_0000 + i));
        let bio = random_bits(&mut rng, params.bio_bits());
        let (sigma, tau) = fe_gen(&bio, &params, &mut rng).expect("valid params");
        let reading = noisy_reading(&bio, r, t, &mut rng);
        let within = fe_rep(&reading, &tau, &params).expect("width") == sigma;
        let block = rng.gen_range(0..params.key_bits);
        let mut beyond = bio.clone();
        for k in rand::seq::index::sample(&mut rng, r, t + 1) {
            beyond.flip(block * r + k);
        }
        let rejected = fe_rep(&beyond, &tau, &params).expect("width") != sigma;
        (within, rejected)
    });
    let recovered = results.iter().filter(|x| x.0).count() as u64;
    let refused = results.iter().filter(|x| x.1).count() as u64;
    CriterionResult::new(
        8,
        "fuzzy_tolerance",
        recovered == FE_TRIALS && refused == FE_TRIALS,
        format!(
            "{recovered}/{FE_TRIALS} recovered within t={t}; {refused}/{FE_TRIALS} t+1 patterns refused"
        ),
    )
}

pub fn lifecycle(seed: u64) -> CriterionResult {
    let mut w = world(seed);
    let mut notes = Vec::new();
    let mut agree = |w: &mut World, uav: &str, what: &str| -> bool {
        w.network.advance(w.config().protocol.delta_t + 1);
        let ok = w
            .run_aka("alice", uav)
            .ok()
            .and_then(|s| w.session(s).ok().map(|st| st.keys_agree()))
            .unwrap_or(false);
        notes.push(format!(
            "{what}: {}",
            if ok { "aka ok" } else { "aka FAILED" }
        ));
        ok
    };

    let old_pw = w.user("alice").expect("registered").password.clone();
    let updated = w.update_credentials("alice", "pw-alice-2", true).is_ok();
    let after_update = updated && agree(&mut w, "uav-alpha", "update");
    let reading = w.read_biometric("alice").expect("registered");
    let old_rejected = matches!(
        w.try_login("alice", &old_pw, &reading),
        Err(crate::simnet::WorldError::User(UserError::LoginFailed))
    );

    let replaced = w.replace_card("alice", "pw-alice-3").is_ok();
    let after_replace = replaced && agree(&mut w, "uav-alpha", "replace");
    let party = w.user("alice").expect("registered").clone();
    let reading = w.read_biometric("alice").expect("registered");
    let tid = w
        .try_login("alice", &party.password, &reading)
        .map(|ctx| ctx.tid().bits().clone());
    let old_tid_rejected = match tid {
        Ok(tid) => {
            let tpw = random_bits(w.rng(), 160);
            matches!(
                w.gateway_mut().process_replacement(
                    &ReplacementRequest { tid, tpw },
                    &mut crate::meter::Meter::new(),
                ),
                Err(crate::gwn::GwnError::TidAlreadyPresent)
            )
        }
        Err(_) => false,
    };

    let added = w.add_uav_dynamic("uav-bravo").is_ok();
    let after_add = added && agree(&mut w, "uav-bravo", "add-uav");

    let pass = after_update && old_rejected && after_replace && old_tid_rejected && after_add;
    notes.push(format!("old password rejected: {old_rejected}"));
    notes.push(format!(
        "known TID refused at replacement: {old_tid_rejected}"
    ));
    CriterionResult::new(9, "lifecycle", pass, notes.join("; "))
}

pub fn dos_bound(seed: u64) -> CriterionResult {
    let config = ScenarioConfig {
        flood: FLOOD,
        ..ScenarioConfig::with_seed(seed)
    };
    let (pass, detail) = match run_scenario("dos", &config) {
        Ok(r) => {
            let claims = ["all_rejected", "no_msg2_emitted", "bounded_work"];
            let pass = claims.iter().all(|c| r.verdict(c).is_some_and(|v| v.pass));
            let detail = claims
                .iter()
                .filter_map(|c| r.verdict(c))
                .map(|v| v.detail.clone())
                .collect::<Vec<_>>()
                .join("; ");
            (pass, detail)
        }
        Err(e) => (false, e.to_string()),
    };
    CriterionResult::new(10, "dos_bound", pass, detail)
}

/// Criteria 1 to 10.
pub fn run_all(seed: u64, exec: Execution) -> AcceptanceReport {
    let criteria = vec![
        communication_overhead(seed),
        computation_overhead(seed),
        timing_estimate(seed),
        protocol_correctness(seed, exec),
        tamper_exhaustion(seed, exec),
        replay_suite(seed),
        knowledge_closure(seed),
        fuzzy_tolerance(seed, exec),
        lifecycle(seed),
        dos_bound(seed),
    ];
    AcceptanceReport {
        seed,
        pass: criteria.iter().all(|c| c.pass),
        criteria,
    }
}

/// Criterion 11: two runs of criteria 1 to 10 serialize identically.
pub fn determinism(seed: u64, exec: Execution) -> (CriterionResult, AcceptanceReport) {
    let a = run_all(seed, exec);
    let b = run_all(seed, exec);
    let (ja, jb) = (a.to_json(), b.to_json());
    let pass = ja == jb;
    let detail = format!(
        "{} bytes, {}",
        ja.len(),
        if pass { "identical" } else { "differ" }
    );
    (CriterionResult::new(11, "determinism", pass, detail), a)
}

/// The complete suite: criteria 1 to 10, then the determinism check.
pub fn selftest(seed: u64, exec: Execution) -> AcceptanceReport {
    let (c11, mut report) = determinism(seed, exec);
    report.criteria.push(c11);
    report.pass = report.criteria.iter().all(|c| c.pass);
    report
}
