use nalgebra::{UnitQuaternion, Vector3};
use nuexo_core::control::{BindingForce, ControlSettings};
use nuexo_core::follower_sim::{joints, make_model, measure, FollowerState};
use nuexo_teleop::schema::FINGERS;
use nuexo_teleop::{Controller, FollowerStateMsg, MasterState, TeleopError, STALENESS_TICKS};

fn follower_at(angles: [f64; 13], velocities: [f64; 13]) -> FollowerStateMsg {
    let model = make_model("default").unwrap();
    let mut s = FollowerState::at_rest();
    s.config.angles = nalgebra::DVector::from_column_slice(&angles);
    s.config.velocities = nalgebra::DVector::from_column_slice(&velocities);
    FollowerStateMsg::from_measurement(&measure(&s, &model, None))
}

/// Master state reproducing a follower state exactly.
fn mirror(f: &FollowerStateMsg) -> MasterState {
    let model = make_model("default").unwrap();
    let js = model.shoulder_jacobian(&f.angles);
    let jw = model.wrist_jacobian(&f.angles);
    let qd = nalgebra::DVector::from_column_slice(&f.velocities);
    let ws = js * qd.rows(0, 3);
    let ww = jw * qd.rows(4, 3);
    MasterState {
        shoulder: f.shoulder,
        wrist: f.wrist,
        elbow: f.angles[joints::ELBOW],
        fingers: std::array::from_fn(|k| f.angles[joints::FINGERS[k]]),
        shoulder_rate: Vector3::new(ws[0], ws[1], ws[2]),
        wrist_rate: Vector3::new(ww[0], ww[1], ww[2]),
        elbow_rate: f.velocities[joints::ELBOW],
        finger_rates: std::array::from_fn(|k| f.velocities[joints::FINGERS[k]]),
        upper_arm_force: BindingForce::zero(),
        forearm_force: BindingForce::zero(),
    }
}

fn two_followers() -> Controller {
    let m = make_model("default").unwrap();
    Controller::new(ControlSettings::default(), vec![(1, m.clone()), (2, m)]).unwrap()
}

#[test]
fn master_equal_to_follower_gives_zero_torque() {
    let mut angles = [0.0; 13];
    angles[..7].copy_from_slice(&[0.3, -0.2, 0.4, 1.1, 0.2, -0.3, 0.1]);
    angles[7..].copy_from_slice(&[0.5; FINGERS]);
    let cases = [([0.0; 13], [0.0; 13]), (angles, [0.0; 13])];
    for (q, qd) in cases {
        let f = follower_at(q, qd);
        let mut c = two_followers();
        c.update_follower(1, f.clone());
        c.update_follower(2, f.clone());
        let out = c.tick(&mirror(&f), 0).unwrap();
        assert_eq!(out.commands.len(), 2);
        for cmd in &out.commands {
            assert!(cmd.torque.iter().all(|&t| t == 0.0), "{:?}", cmd.torque);
        }
    }
}

#[test]
fn moving_mirror_gives_zero_torque() {
    // Exercises the rate channels: master rates equal J q̇ of the follower.
    let mut qd = [0.0; 13];
    qd[..7].copy_from_slice(&[0.2, 0.1, -0.3, 0.4, 0.05, 0.1, -0.2]);
    let f = follower_at([0.1; 13], qd);
    let mut c = two_followers();
    c.update_follower(1, f.clone());
    c.update_follower(2, f.clone());
    for cmd in c.tick(&mirror(&f), 0).unwrap().commands {
        assert!(cmd.torque.iter().all(|t| t.abs() < 1e-12), "{:?}", cmd.torque);
    }
}

#[test]
fn identical_followers_receive_identical_payloads() {
    let mut c = two_followers();
    let f = follower_at([0.05; 13], [0.0; 13]);
    let mut m = MasterState::at_rest();
    for k in 0..200u64 {
        m.shoulder = UnitQuaternion::from_euler_angles(0.2 * (k as f64 * 0.01).sin(), 0.1, 0.0);
        m.elbow = 0.3;
        c.update_follower(1, f.clone());
        c.update_follower(2, f.clone());
        let out = c.tick(&m, k * 2000).unwrap();
        assert_eq!(out.commands.len(), 2);
        let (a, b) = (&out.commands[0], &out.commands[1]);
        assert_eq!((a.follower_id, b.follower_id), (1, 2));
        assert!(a.torque.iter().zip(&b.torque).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.torque.iter().any(|t| *t != 0.0));
    }
}

#[test]
fn silent_follower_is_withheld_after_five_ticks_with_one_event() {
    let mut c = two_followers();
    let f = follower_at([0.0; 13], [0.0; 13]);
    let m = MasterState::at_rest();
    c.update_follower(1, f.clone());
    c.update_follower(2, f.clone());
    c.tick(&m, 0).unwrap();
    // Follower 2 goes silent for 6 ticks.
    let mut events = Vec::new();
    let mut cmds2 = 0;
    for k in 1..=6u64 {
        c.update_follower(1, f.clone());
        let out = c.tick(&m, k).unwrap();
        cmds2 += out.commands.iter().filter(|c| c.follower_id == 2).count();
        assert!(out.commands.iter().any(|c| c.follower_id == 1));
        if k == 6 {
            assert!(out.commands.iter().all(|c| c.follower_id != 2), "tick 6 must withhold");
        }
        events.extend(out.events);
    }
    assert_eq!(cmds2, STALENESS_TICKS as usize);
    assert_eq!(events.len(), 1);
    assert_eq!((events[0].follower_id, events[0].tick, events[0].age), (2, 6, Some(6)));
    // Still silent: no repeated event. Back: commanded again.
    assert!(c.tick(&m, 7).unwrap().events.is_empty());
    c.update_follower(1, f.clone());
    c.update_follower(2, f);
    assert_eq!(c.tick(&m, 8).unwrap().commands.len(), 2);
}

#[test]
fn never_heard_follower_is_withheld() {
    let mut c = two_followers();
    c.update_follower(1, follower_at([0.0; 13], [0.0; 13]));
    let out = c.tick(&MasterState::at_rest(), 0).unwrap();
    assert_eq!(out.commands.len(), 1);
    assert_eq!(out.events.len(), 1);
    assert_eq!(out.events[0].age, None);
}

#[test]
fn controller_needs_a_follower() {
    assert!(matches!(
        Controller::new(ControlSettings::default(), vec![]),
        Err(TeleopError::NoFollowers)
    ));
}

#[test]
fn torques_respect_subsystem_limits() {
    let mut c = two_followers();
    c.update_follower(1, follower_at([0.0; 13], [0.0; 13]));
    c.update_follower(2, follower_at([0.0; 13], [0.0; 13]));
    let mut m = MasterState::at_rest();
    m.shoulder = UnitQuaternion::from_euler_angles(2.5, 0.0, 0.0);
    m.wrist = UnitQuaternion::from_euler_angles(0.0, 1.2, 0.0);
    m.elbow = 2.5;
    m.fingers = [1.5; FINGERS];
    let s = ControlSettings::default();
    let cmd = &c.tick(&m, 0).unwrap().commands[0];
    for j in joints::SHOULDER {
        assert!(cmd.torque[j].abs() <= s.shoulder.torque_limit);
    }
    assert_eq!(cmd.torque[joints::ELBOW], s.elbow.torque_limit);
    for j in joints::FINGERS {
        assert_eq!(cmd.torque[j], s.fingers.torque_limit);
    }
}

#[test]
fn tremor_below_deadband_does_not_reach_the_command() {
    let mut c = two_followers();
    let f = follower_at([0.0; 13], [0.0; 13]);
    let mut m = MasterState::at_rest();
    for k in 0..200u64 {
        // 0.01 rad elbow tremor around the follower's posture; rates are zero
        // so the elbow torque is the stiffness term on the filtered target.
        m.elbow = 0.01 * (k as f64 * 0.9).sin();
        c.update_follower(1, f.clone());
        c.update_follower(2, f.clone());
        assert_eq!(c.tick(&m, k).unwrap().commands[0].torque[joints::ELBOW], 0.0, "tick {k}");
    }
    // A deliberate 0.05 rad move passes.
    m.elbow = 0.05;
    c.update_follower(1, f);
    let tau = c.tick(&m, 200).unwrap().commands[0].torque[joints::ELBOW];
    assert!((tau - 20.0 * 0.05).abs() < 1e-12, "{tau}");
}
