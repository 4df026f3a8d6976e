use fanet_aka::simnet::{closure, replay_skeleton, World, WorldConfig};

fn deployed(seed: u64) -> (World, u64) {
    let mut w = World::new(WorldConfig {
        seed,
        ..WorldConfig::default()
    });
    w.add_uav("uav-alpha").unwrap();
    w.add_user("alice", "pw-alice").unwrap();
    let s = w.run_aka("alice", "uav-alpha").unwrap();
    (w, s)
}

#[test]
fn eavesdropper_cannot_reach_session_key() {
    let (w, s) = deployed(3);
    let secrets = w.session_secrets(s).unwrap();
    let c = closure(&w.public_knowledge(), &w.algebra(), 4);
    assert!(!c.contains(&secrets.sk));
    assert!(!c.contains(&secrets.n_k));
    assert!(!c.contains(&secrets.tid_i));
}

#[test]
fn session_key_follows_from_nk_tid_and_rid_without_being_given_v3() {
    let (w, s) = deployed(4);
    let secrets = w.session_secrets(s).unwrap();
    let mut k = w.public_knowledge();
    k.learn("n_k", secrets.n_k.clone());
    k.learn("TID_i", secrets.tid_i.clone());
    k.learn("RID_j", secrets.rid_j.clone());
    let c = closure(&k, &w.algebra(), 4);
    let d = c.derive(&secrets.sk).expect("SK derivable");
    assert!(d.verify(&k));
    assert_eq!(
        replay_skeleton(&d.skeleton(), &k).as_ref(),
        Some(&secrets.sk)
    );
}

#[test]
fn session_key_follows_from_v3_with_the_others() {
    let (w, s) = deployed(5);
    let secrets = w.session_secrets(s).unwrap();
    let mut k = w.public_knowledge();
    for (l, v) in [
        ("n_k", &secrets.n_k),
        ("TID_i", &secrets.tid_i),
        ("RID_j", &secrets.rid_j),
        ("V_3", &secrets.v3),
    ] {
        k.learn(l, v.clone());
    }
    let c = closure(&k, &w.algebra(), 4);
    let d = c.derive(&secrets.sk).unwrap();
    assert!(d.hash_layers() >= 1);
    assert!(d.verify(&k));
}

#[test]
fn depth_zero_is_the_xor_span_only() {
    let (w, s) = deployed(6);
    let secrets = w.session_secrets(s).unwrap();
    let mut k = w.public_knowledge();
    k.learn("n_k", secrets.n_k.clone());
    k.learn("TID_i", secrets.tid_i.clone());
    k.learn("RID_j", secrets.rid_j.clone());
    assert!(!closure(&k, &w.algebra(), 0).contains(&secrets.sk));
}
