use fanet_aka::primitives::BitString;
use fanet_aka::simnet::{World, WorldConfig, WorldError};
use fanet_aka::user::{credential, UserError};

fn world(seed: u64) -> World {
    let mut w = World::new(WorldConfig {
        seed,
        ..WorldConfig::default()
    });
    w.add_uav("uav-alpha").unwrap();
    w.add_user("alice", "pw-alice").unwrap();
    w
}

fn agrees(w: &mut World, user: &str, uav: &str) -> bool {
    let dt = w.config().protocol.delta_t;
    w.network.advance(dt);
    let s = w.run_aka(user, uav).unwrap();
    let st = w.session(s).unwrap();
    st.keys_agree() && st.transcript.completed
}

#[test]
fn wrong_password_is_refused_locally() {
    let mut w = world(1);
    let reading = w.read_biometric("alice").unwrap();
    let bad: BitString = credential("not-alice").unwrap();
    assert!(matches!(
        w.try_login("alice", &bad, &reading),
        Err(WorldError::User(UserError::LoginFailed))
    ));
    assert_eq!(w.emitted(fanet_aka::simnet::MessageKind::Msg1), 0);
}

#[test]
fn password_and_biometric_update_keeps_aka_working() {
    let mut w = world(2);
    assert!(agrees(&mut w, "alice", "uav-alpha"));
    w.update_credentials("alice", "pw-next", true).unwrap();
    assert!(agrees(&mut w, "alice", "uav-alpha"));
    let reading = w.read_biometric("alice").unwrap();
    let old = credential("pw-alice").unwrap();
    assert!(w.try_login("alice", &old, &reading).is_err());
}

#[test]
fn replaced_card_authenticates() {
    let mut w = world(3);
    w.replace_card("alice", "pw-replaced").unwrap();
    assert!(agrees(&mut w, "alice", "uav-alpha"));
    w.replace_card("alice", "pw-again").unwrap();
    assert!(agrees(&mut w, "alice", "uav-alpha"));
}

#[test]
fn dynamically_added_uav_is_reachable_by_existing_users() {
    let mut w = world(4);
    w.add_uav_dynamic("uav-bravo").unwrap();
    assert!(w
        .user("alice")
        .unwrap()
        .known_uavs
        .contains_key("uav-bravo"));
    assert!(agrees(&mut w, "alice", "uav-bravo"));
    assert!(agrees(&mut w, "alice", "uav-alpha"));
}

#[test]
fn many_users_many_uavs() {
    let mut w = world(5);
    w.add_user("bob", "pw-bob").unwrap();
    w.add_uav("uav-bravo").unwrap();
    for u in ["alice", "bob"] {
        for d in ["uav-alpha", "uav-bravo"] {
            assert!(agrees(&mut w, u, d), "{u} with {d}");
        }
    }
    assert!(w.rejections().is_empty());
}

#[test]
fn duplicate_names_are_refused() {
    let mut w = world(6);
    assert!(matches!(
        w.add_user("alice", "x"),
        Err(WorldError::Duplicate(_))
    ));
    assert!(matches!(
        w.add_uav("uav-alpha"),
        Err(WorldError::Duplicate(_))
    ));
}

#[test]
fn same_user_twice_in_one_tick_collides_on_mac1() {
    let mut w = world(7);
    w.add_uav("uav-bravo").unwrap();
    let a = w.run_aka("alice", "uav-alpha").unwrap();
    let b = w.run_aka("alice", "uav-bravo").unwrap();
    assert!(w.session(a).unwrap().keys_agree());
    assert!(!w.session(b).unwrap().keys_agree());
    let r: Vec<_> = w.rejections_for(b).collect();
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].reason, "replayed message");
}
