use std::path::Path;
use std::process::{Command, Output};

fn cli(state: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fanet-aka"))
        .arg("--state-dir")
        .arg(state)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json stdout")
}

fn deploy(state: &Path) {
    for args in [
        &["init-gwn"][..],
        &["register-uav", "--uav", "uav-alpha"],
        &["register-user", "--user", "alice", "--password", "hunter2"],
    ] {
        let o = cli(state, args);
        assert_eq!(
            code(&o),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

fn aka(state: &Path, pw: &str) -> Output {
    cli(
        state,
        &[
            "run-aka",
            "--user",
            "alice",
            "--uav",
            "uav-alpha",
            "--password",
            pw,
        ],
    )
}

#[test]
fn run_aka_after_registration_reports_1856_bits() {
    let dir = tempfile::tempdir().unwrap();
    deploy(dir.path());
    let o = aka(dir.path(), "hunter2");
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["total_bits"], 1856);
    assert_eq!(v["ops"]["total"]["hash"], 25);
    assert_eq!(v["session_key_fingerprint"].as_str().unwrap().len(), 40);
}

#[test]
fn run_aka_without_registered_user_is_missing_state() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(dir.path(), &["init-gwn"])), 0);
    assert_eq!(
        code(&cli(dir.path(), &["register-uav", "--uav", "uav-alpha"])),
        0
    );
    assert_eq!(code(&aka(dir.path(), "hunter2")), 3);
}

#[test]
fn nothing_initialised_is_missing_state() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&cli(
            dir.path(),
            &["register-user", "--user", "a", "--password", "b"]
        )),
        3
    );
    assert_eq!(code(&cli(dir.path(), &["report"])), 3);
}

#[test]
fn wrong_password_is_a_protocol_error() {
    let dir = tempfile::tempdir().unwrap();
    deploy(dir.path());
    let o = aka(dir.path(), "not-it");
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("login failed"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(dir.path(), &["bogus"])), 2);
    assert_eq!(code(&cli(dir.path(), &["attack", "no_such_scenario"])), 2);
    assert_eq!(
        code(&cli(
            dir.path(),
            &["register-user", "--user", "../x", "--password", "p"]
        )),
        2
    );
}

#[test]
fn malformed_config_and_state_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(
        code(&cli(
            dir.path(),
            &["--config", cfg.to_str().unwrap(), "init-gwn"]
        )),
        4
    );
    std::fs::write(&cfg, "fe_r = 4\n").unwrap();
    assert_eq!(
        code(&cli(
            dir.path(),
            &["--config", cfg.to_str().unwrap(), "init-gwn"]
        )),
        4
    );

    let state = dir.path().join("state");
    deploy(&state);
    std::fs::write(state.join("users/alice.json"), "{ not json").unwrap();
    assert_eq!(code(&aka(&state, "hunter2")), 4);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"seed": 9, "delta_t": 4, "format": "table"}"#).unwrap();
    let o = cli(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--format",
            "json",
            "init-gwn",
        ],
    );
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(
        (v["seed"].as_u64(), v["delta_t"].as_u64()),
        (Some(9), Some(4))
    );
}

#[test]
fn attack_exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["attack", "replay"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["pass"], true);
    assert_eq!(code(&cli(dir.path(), &["attack", "uav_capture"])), 1);
}

#[test]
fn same_commands_same_bytes() {
    let run = |dir: &Path| {
        deploy(dir);
        let mut out = Vec::new();
        for args in [
            &["add-uav", "--uav", "uav-bravo"][..],
            &[
                "run-aka",
                "--user",
                "alice",
                "--uav",
                "uav-bravo",
                "--password",
                "hunter2",
            ],
            &[
                "update-credentials",
                "--user",
                "alice",
                "--password",
                "hunter2",
                "--new-password",
                "pw2",
                "--new-biometric",
            ],
            &["replace-card", "--user", "alice", "--new-password", "pw3"],
            &[
                "run-aka",
                "--user",
                "alice",
                "--uav",
                "uav-alpha",
                "--password",
                "pw3",
            ],
            &["report"],
        ] {
            let o = cli(dir, args);
            assert_eq!(
                code(&o),
                0,
                "{args:?}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            out.push(o.stdout);
        }
        let mut files = Vec::new();
        for sub in ["", "users", "uavs"] {
            let mut names: Vec<_> = std::fs::read_dir(dir.join(sub))
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.is_file())
                .collect();
            names.sort();
            for p in names {
                files.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
        (out, files)
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path()), run(b.path()));
}

#[test]
fn session_key_never_lands_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    deploy(dir.path());
    let fp = json(&aka(dir.path(), "hunter2"))["session_key_fingerprint"]
        .as_str()
        .unwrap()
        .to_string();
    let session = std::fs::read_to_string(dir.path().join("last_session.json")).unwrap();
    assert!(!session.contains(&fp));
    assert!(!session.to_lowercase().contains("sk"));
}

#[test]
fn selftest_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = cli(dir.path(), &["selftest"]);
    let b = cli(dir.path(), &["selftest"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
    let v = json(&a);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 11);
    assert_eq!(code(&a), if v["pass"] == true { 0 } else { 1 });
}
