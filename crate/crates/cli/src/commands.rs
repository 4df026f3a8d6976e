use std::collections::BTreeMap;

use fanet_aka::acceptance;
use fanet_aka::gwn::Gateway;
use fanet_aka::metrics::{count_session, report_for, TimingConstants};
use fanet_aka::par::Execution;
use fanet_aka::primitives::{random_bits, BitString, PufDevice, SimRng};
use fanet_aka::simnet::world::noisy_reading;
use fanet_aka::simnet::{run_scenario, ScenarioConfig, ScenarioError, ScenarioReport, WorldConfig};
use fanet_aka::uav::UavState;
use fanet_aka::user::{self, credential, SmartCard};
use fanet_aka::wire::{protocol_bits, Timestamp, UavRegistrationRequest};
use fanet_aka::{Meter, OpCounter, SessionTranscript};
use serde_json::{json, Value};

use crate::config::{CliConfig, Format};
use crate::error::{protocol, CliError};
use crate::state::{Deployment, Store, UavSecret, UserFile, UserSecret};

pub const START_TICK: u32 = 1000;

/// Text for stdout and the process exit code.
pub struct Outcome {
    pub text: String,
    pub code: u8,
}

impl Outcome {
    fn ok(text: String) -> Outcome {
        Outcome { text, code: 0 }
    }
}

fn render(format: Format, value: &Value) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(value).expect("json value"),
        Format::Table => {
            let mut out = Vec::new();
            flatten("", value, &mut out);
            let width = out.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            out.iter()
                .map(|(k, v)| format!("{k:<width$}  {v}"))
                .collect::<Vec<_>>()
                .join("\n")
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push((prefix.to_string(), parts.join(", ")));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn ops_json(c: &OpCounter) -> Value {
    json!({ "fe": c.fe, "puf": c.puf, "hash": c.hash })
}

fn deployment(store: &Store) -> Result<Deployment, CliError> {
    store.deployment()
}

pub fn init_gwn(cfg: &CliConfig, store: &Store) -> Result<Outcome, CliError> {
    if store.has_deployment() {
        return Err(CliError::Usage(format!(
            "{} already holds a deployment",
            cfg.state_dir.display()
        )));
    }
    let mut d = Deployment {
        seed: cfg.seed,
        protocol: cfg.protocol()?,
        tick: START_TICK,
        invocations: 0,
    };
    let mut rng = d.next_rng();
    let g = Gateway::init(
        credential("gwn").map_err(protocol)?,
        d.protocol.delta_t,
        &mut rng,
    );
    store.save_gateway(&g)?;
    store.save_deployment(&d)?;
    Ok(Outcome::ok(render(
        cfg.format,
        &json!({
            "gateway": "gwn",
            "seed": d.seed,
            "delta_t": d.protocol.delta_t,
            "fe": { "k": d.protocol.fe.key_bits, "r": d.protocol.fe.repetition },
            "state_dir": cfg.state_dir.display().to_string(),
        }),
    )))
}

fn uav_directory(store: &Store) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for name in store.names("uavs")? {
        let (memory, _) = store.uav(&name)?;
        out.insert(name, memory.id.to_hex());
    }
    Ok(out)
}

pub fn register_user(
    cfg: &CliConfig,
    store: &Store,
    name: &str,
    password: &str,
) -> Result<Outcome, CliError> {
    let path = store.user_path(name)?;
    let mut d = deployment(store)?;
    let mut g = store.gateway()?;
    if store.exists(&path) {
        return Err(CliError::Protocol(format!(
            "user {name} is already registered"
        )));
    }
    let id = credential(name).map_err(protocol)?;
    let pw = credential(password).map_err(protocol)?;
    let mut rng = d.next_rng();
    let fe = d.protocol.fe;
    let biometric = random_bits(&mut rng, fe.bio_bits());
    let mut meter = Meter::new();
    let (req, pending) = user::register_begin(&id, &pw, &mut rng, &mut meter);
    let resp = g.register_user(&req, &mut meter).map_err(protocol)?;
    let card = user::register_complete(pending, &resp, &biometric, &fe, &mut rng, &mut meter)
        .map_err(protocol)?;
    let known_uavs = uav_directory(store)?;
    let file = UserFile {
        id,
        card,
        known_uavs,
    };
    store.save_user(
        name,
        &file,
        &UserSecret {
            simulation_only: true,
            biometric,
        },
    )?;
    store.save_gateway(&g)?;
    store.save_deployment(&d)?;
    Ok(Outcome::ok(render(
        cfg.format,
        &json!({
            "user": name,
            "registered": true,
            "known_uavs": file.known_uavs.keys().collect::<Vec<_>>(),
        }),
    )))
}

pub fn register_uav(
    cfg: &CliConfig,
    store: &Store,
    name: &str,
    dynamic: bool,
) -> Result<Outcome, CliError> {
    let path = store.uav_path(name)?;
    let mut d = deployment(store)?;
    let mut g = store.gateway()?;
    if store.exists(&path) {
        return Err(CliError::Protocol(format!(
            "UAV {name} is already registered"
        )));
    }
    let id = credential(name).map_err(protocol)?;
    let mut rng = d.next_rng();
    let device = PufDevice::manufacture(&mut rng, d.protocol.puf_noise);
    let mut meter = Meter::new();
    let req = UavRegistrationRequest { id: id.clone() };
    let resp = if dynamic {
        g.add_uav_dynamic(&req, &mut rng, &mut meter)
            .map_err(protocol)?
            .0
    } else {
        g.register_uav_begin(&req, &mut rng, &mut meter)
            .map_err(protocol)?
    };
    let (submission, state) = UavState::register(&device, id.clone(), &resp, &mut rng, &mut meter);
    g.register_uav_complete(&id, &submission)
        .map_err(protocol)?;
    store.save_uav(
        name,
        &state.capture_memory(),
        &UavSecret {
            simulation_only: true,
            device,
        },
    )?;
    let mut notified = Vec::new();
    for user_name in store.names("users")? {
        let (mut file, secret) = store.user(&user_name)?;
        file.known_uavs.insert(name.to_string(), id.to_hex());
        store.save_user(&user_name, &file, &secret)?;
        notified.push(user_name);
    }
    store.save_gateway(&g)?;
    store.save_deployment(&d)?;
    let mut out = json!({ "uav": name, "registered": true, "dynamic": dynamic });
    if dynamic {
        out["broadcast_to"] = json!(notified);
    }
    Ok(Outcome::ok(render(cfg.format, &out)))
}

fn reading(d: &Deployment, template: &BitString, rng: &mut SimRng) -> BitString {
    let fe = d.protocol.fe;
    noisy_reading(template, fe.repetition, fe.tolerance().min(1), rng)
}

pub fn run_aka(
    cfg: &CliConfig,
    store: &Store,
    name: &str,
    uav_name: &str,
    password: &str,
) -> Result<Outcome, CliError> {
    let user_path = store.user_path(name)?;
    store.uav_path(uav_name)?;
    let mut d = deployment(store)?;
    let g = store.gateway()?;
    let (file, secret) = store.user(name)?;
    let (memory, uav_secret) = store.uav(uav_name)?;
    let id_j = file.known_uavs.get(uav_name).ok_or_else(|| {
        CliError::Protocol(format!("user {name} has no identity for UAV {uav_name}"))
    })?;
    let id_j = BitString::from_hex(id_j, 160)
        .map_err(|e| CliError::MalformedState(user_path.clone(), e.to_string()))?;
    let pw = credential(password).map_err(protocol)?;
    let mut rng = d.next_rng();
    let bio = reading(&d, &secret.biometric, &mut rng);
    let now = Timestamp(d.tick);
    let delta_t = d.protocol.delta_t;
    d.tick += 1;
    store.save_deployment(&d)?;

    let (mut mu, mut mg, mut mv) = (Meter::new(), Meter::new(), Meter::new());
    let ctx = user::login(&file.card, &file.id, &pw, &bio, &mut mu).map_err(protocol)?;
    let (msg1, pending) = user::initiate(&ctx, &id_j, now, &mut mu);
    let (msg2, _) = g.relay_auth_routed(&msg1, now, &mut mg).map_err(protocol)?;
    let mut uav = UavState::from_memory(memory);
    let (msg3, uav_key) = uav
        .aka_respond(&uav_secret.device, &msg2, now, delta_t, &mut rng, &mut mv)
        .map_err(protocol)?;
    let user_key = user::finalize(pending, &msg3, now, delta_t, &mut mu).map_err(protocol)?;
    if user_key != uav_key {
        return Err(CliError::Protocol(
            "user and UAV derived different keys".into(),
        ));
    }
    let transcript = SessionTranscript {
        msg1: Some(msg1),
        msg2: Some(msg2),
        msg3: Some(msg3),
        user_ops: mu.counts(),
        gwn_ops: mg.counts(),
        uav_ops: mv.counts(),
        completed: true,
    };
    store.save_last_session(&transcript)?;
    let bits = protocol_bits(&transcript).map_err(protocol)?;
    let ops = count_session(&transcript).map_err(protocol)?;
    Ok(Outcome::ok(render(
        cfg.format,
        &json!({
            "user": name,
            "uav": uav_name,
            "tick": now.0,
            "session_key_fingerprint": user_key.fingerprint(),
            "bits": { "msg1": bits.msg1, "msg2": bits.msg2, "msg3": bits.msg3 },
            "total_bits": bits.total,
            "ops": {
                "user": ops_json(&ops.user),
                "gwn": ops_json(&ops.gwn),
                "uav": ops_json(&ops.uav),
                "total": ops_json(&ops.total),
            },
        }),
    )))
}

pub fn update_credentials(
    cfg: &CliConfig,
    store: &Store,
    name: &str,
    password: &str,
    new_password: &str,
    new_biometric: bool,
) -> Result<Outcome, CliError> {
    store.user_path(name)?;
    let mut d = deployment(store)?;
    let (file, secret) = store.user(name)?;
    let pw_old = credential(password).map_err(protocol)?;
    let pw_new = credential(new_password).map_err(protocol)?;
    let mut rng = d.next_rng();
    let bio = reading(&d, &secret.biometric, &mut rng);
    let bio_new = if new_biometric {
        random_bits(&mut rng, d.protocol.fe.bio_bits())
    } else {
        secret.biometric.clone()
    };
    let card: SmartCard = user::update_credentials(
        &file.card,
        &file.id,
        &pw_old,
        &bio,
        &pw_new,
        &bio_new,
        &mut rng,
        &mut Meter::new(),
    )
    .map_err(protocol)?;
    store.save_user(
        name,
        &UserFile { card, ..file },
        &UserSecret {
            simulation_only: true,
            biometric: bio_new,
        },
    )?;
    store.save_deployment(&d)?;
    Ok(Outcome::ok(render(
        cfg.format,
        &json!({ "user": name, "updated": true, "new_biometric": new_biometric }),
    )))
}

pub fn replace_card(
    cfg: &CliConfig,
    store: &Store,
    name: &str,
    new_password: &str,
) -> Result<Outcome, CliError> {
    store.user_path(name)?;
    let mut d = deployment(store)?;
    let mut g = store.gateway()?;
    let (file, secret) = store.user(name)?;
    let pw_new = credential(new_password).map_err(protocol)?;
    let mut rng = d.next_rng();
    let mut meter = Meter::new();
    let (req, pending) = user::replacement_request(&file.id, &pw_new, &mut rng, &mut meter);
    let resp = g.process_replacement(&req, &mut meter).map_err(protocol)?;
    let card = user::replacement_complete(
        pending,
        &resp,
        &secret.biometric,
        &d.protocol.fe,
        &mut rng,
        &mut meter,
    )
    .map_err(protocol)?;
    store.save_user(name, &UserFile { card, ..file }, &secret)?;
    store.save_gateway(&g)?;
    store.save_deployment(&d)?;
    Ok(Outcome::ok(render(
        cfg.format,
        &json!({ "user": name, "card_replaced": true }),
    )))
}

fn scenario_table(r: &ScenarioReport) -> String {
    let mut lines = vec![format!(
        "scenario {}  seed {}  depth {}  {}",
        r.scenario,
        r.seed,
        r.depth,
        if r.pass { "PASS" } else { "FAIL" }
    )];
    for v in &r.verdicts {
        lines.push(format!(
            "  {} {:<40} {}",
            if v.pass { "pass" } else { "FAIL" },
            v.claim,
            v.detail
        ));
    }
    for o in &r.observations {
        lines.push(format!("  note {:<40} {}", o.note, o.detail));
    }
    lines.join("\n")
}

pub fn attack(cfg: &CliConfig, name: &str) -> Result<Outcome, CliError> {
    let config = ScenarioConfig {
        world: WorldConfig {
            seed: cfg.seed,
            protocol: cfg.protocol()?,
            ..WorldConfig::default()
        },
        depth: cfg.depth,
        ..ScenarioConfig::default()
    };
    let report = run_scenario(name, &config).map_err(|e| match e {
        ScenarioError::UnknownScenario(_) => CliError::Usage(format!(
            "{e}; expected one of: {}",
            fanet_aka::simnet::SCENARIOS.join(", ")
        )),
        other => protocol(other),
    })?;
    let text = match cfg.format {
        Format::Json => report.to_json(),
        Format::Table => scenario_table(&report),
    };
    Ok(Outcome {
        text,
        code: if report.pass { 0 } else { 1 },
    })
}

pub fn report(cfg: &CliConfig, store: &Store) -> Result<Outcome, CliError> {
    let transcript = store.last_session()?;
    let r = report_for(&transcript, &TimingConstants::PRESET);
    let text = match cfg.format {
        Format::Json => r.to_json(),
        Format::Table => r.to_table(),
    };
    Ok(Outcome::ok(text))
}

pub fn selftest(cfg: &CliConfig) -> Result<Outcome, CliError> {
    let r = acceptance::selftest(cfg.seed, Execution::default());
    let text = match cfg.format {
        Format::Json => r.to_json(),
        Format::Table => {
            let mut lines: Vec<String> = r.criteria.iter().map(|c| c.line()).collect();
            lines.push(format!("selftest {}", if r.pass { "PASS" } else { "FAIL" }));
            lines.join("\n")
        }
    };
    Ok(Outcome {
        text,
        code: if r.pass { 0 } else { 1 },
    })
}
