use fanet_aka::simnet::{run_scenario, ScenarioConfig, SCENARIOS};

fn config(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        flood: 500,
        forgeries: 16,
        ..ScenarioConfig::with_seed(seed)
    }
}

#[test]
fn reports_are_reproducible() {
    for name in SCENARIOS {
        let a = run_scenario(name, &config(11)).unwrap().to_json();
        let b = run_scenario(name, &config(11)).unwrap().to_json();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn outcome_table_at_seed_zero() {
    let failing = ["uav_capture", "esl"];
    for name in SCENARIOS {
        let r = run_scenario(name, &config(0)).unwrap();
        assert_eq!(r.pass, !failing.contains(&name), "{name}: {:?}", r.verdicts);
    }
}

#[test]
fn uav_capture_exposes_sibling_sessions_of_the_same_user() {
    let r = run_scenario("uav_capture", &config(0)).unwrap();
    assert!(!r.verdict("sk_not_derivable_other_uavs").unwrap().pass);
    assert!(r.derivations.iter().all(|d| d.verified));
}

#[test]
fn esl_split() {
    let r = run_scenario("esl", &config(0)).unwrap();
    assert!(r.verdict("positive_control_derives_sk").unwrap().pass);
    assert!(!r.verdict("sk_not_derivable_given_nj").unwrap().pass);
}

#[test]
fn active_attacks_hold() {
    for name in ["replay", "mitm", "impersonation", "dos"] {
        let r = run_scenario(name, &config(2)).unwrap();
        assert!(r.pass, "{name}: {:?}", r.verdicts);
    }
}

#[test]
fn honest_run_accounting() {
    let r = run_scenario("mutual_auth", &config(0)).unwrap();
    assert_eq!(r.bit_counts.as_ref().map(|b| b.total), Some(1856));
}

/// Set `FANET_BLESS=1` to rewrite the fixtures after an intended change.
#[test]
fn golden_reports_match_fixtures() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let bless = std::env::var_os("FANET_BLESS").is_some();
    for name in SCENARIOS {
        let json = run_scenario(name, &config(0)).unwrap().to_json();
        let path = dir.join(format!("{name}.json"));
        if bless {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &json).unwrap();
        }
        let golden = std::fs::read_to_string(&path)
            .unwrap_or_else(|_| panic!("missing {}; run with FANET_BLESS=1", path.display()));
        assert_eq!(json, golden, "{name} drifted from its golden report");
    }
}
