use fanet_aka::simnet::{MessageKind, Tamper, World, WorldConfig};

fn world(seed: u64) -> (World, u64) {
    let mut w = World::new(WorldConfig {
        seed,
        ..WorldConfig::default()
    });
    w.add_uav("uav-alpha").unwrap();
    w.add_user("alice", "pw-alice").unwrap();
    let s = w.start_aka("alice", "uav-alpha").unwrap();
    (w, s)
}

#[test]
fn flipped_timestamp_in_msg1_is_rejected_by_gateway() {
    let (mut w, s) = world(1);
    let id = w.run_until(MessageKind::Msg1, s).unwrap();
    let ts = MessageKind::Msg1.field_range("TS_1").unwrap();
    w.network.tamper(id, Tamper::FlipBit(ts.0 + 31)).unwrap();
    w.run_until_idle();
    assert!(!w.session(s).unwrap().keys_agree());
    assert_eq!(w.rejections_for(s).count(), 1);
    assert_eq!(w.emitted(MessageKind::Msg2), 0);
}

#[test]
fn delayed_msg3_goes_stale() {
    let (mut w, s) = world(2);
    let id = w.run_until(MessageKind::Msg3, s).unwrap();
    w.network.delay(id, 5).unwrap();
    w.run_until_idle();
    let st = w.session(s).unwrap();
    assert!(st.user_key.is_none());
    assert!(st.awaiting_msg3());
}

#[test]
fn dropped_msg2_stalls_without_keys() {
    let (mut w, s) = world(3);
    let id = w.run_until(MessageKind::Msg2, s).unwrap();
    w.network.drop_message(id).unwrap();
    w.run_until_idle();
    let st = w.session(s).unwrap();
    assert!(st.user_key.is_none() && st.uav_key.is_none());
}

#[test]
fn replayed_msg1_is_refused_after_honest_completion() {
    let (mut w, s) = world(4);
    w.run_until_idle();
    assert!(w.session(s).unwrap().keys_agree());
    let msg1 = w
        .network
        .recorded()
        .iter()
        .find(|e| e.kind == MessageKind::Msg1 && e.session == s)
        .unwrap()
        .id;
    w.network.replay(msg1).unwrap();
    w.run_until_idle();
    assert_eq!(w.emitted(MessageKind::Msg2), 1);
    assert!(w.rejections().iter().any(|r| r.kind == MessageKind::Msg1));
}

#[test]
fn secure_channel_cannot_be_tampered_without_insider_mode() {
    let mut w = World::new(WorldConfig::default());
    w.add_uav("uav-alpha").unwrap();
    let reg = w.network.recorded().iter().find(|e| e.secure).unwrap().id;
    assert!(w.network.tamper(reg, Tamper::FlipBit(0)).is_err());
}
