use nalgebra::{DMatrix, DVector, UnitQuaternion, Vector3};
use nuexo_core::config::{ConfigError, ConfigFile};
use nuexo_core::control::{
    quat_error, rotation_vector, shoulder_impedance_torque, BindingForce, ImpedanceGains, PoseError,
};
use nuexo_core::follower_sim::*;
use proptest::prelude::*;

const DT: f64 = 0.001;

fn unit_model(gravity: bool) -> FollowerModel<f64> {
    let p = JointParams {
        inertia: 1.0,
        damping: 0.0,
        torque_limit: 30.0,
        min: -3.0,
        max: 3.0,
    };
    let geometry = ArmGeometry {
        upper_arm: 0.3,
        forearm: 0.25,
        hand: 0.1,
        upper_arm_mass: 1.0,
        forearm_mass: 1.0,
        hand_mass: 0.5,
    };
    FollowerModel::new("unit", vec![p; joints::COUNT], geometry, gravity).unwrap()
}

fn one_hot(j: usize, v: f64) -> DVector<f64> {
    let mut t = DVector::zeros(joints::COUNT);
    t[j] = v;
    t
}

#[test]
fn zero_torque_without_gravity_keeps_state() {
    let model = unit_model(false);
    let s0 = FollowerState::at_rest();
    let s1 = step(&s0, &DVector::zeros(joints::COUNT), DT, &model).unwrap();
    assert_eq!(s1.config, s0.config);
    assert_eq!(s1.time, DT);
}

#[test]
fn constant_torque_integrates_to_analytic_velocity() {
    let model = unit_model(false);
    let mut s = FollowerState::at_rest();
    for _ in 0..1000 {
        s = step(&s, &one_hot(3, 1.0), DT, &model).unwrap();
    }
    assert!((s.config.velocities[3] - 1.0).abs() < 1e-3);
    assert!((s.time - 1.0).abs() < 1e-9);
}

#[test]
fn torque_clamped_to_limit() {
    let model = unit_model(false);
    let s = step(&FollowerState::at_rest(), &one_hot(0, 100.0), DT, &model).unwrap();
    assert_eq!(s.applied_torque[0], 30.0);
    let s = step(&FollowerState::at_rest(), &one_hot(0, -100.0), DT, &model).unwrap();
    assert_eq!(s.applied_torque[0], -30.0);
}

#[test]
fn rejects_bad_inputs() {
    let model = unit_model(false);
    let s = FollowerState::at_rest();
    assert_eq!(
        step(&s, &one_hot(0, f64::NAN), DT, &model),
        Err(SimError::NonFiniteTorque)
    );
    assert!(matches!(
        step(&s, &DVector::zeros(joints::COUNT), 0.02, &model),
        Err(SimError::InvalidStep(_))
    ));
    assert!(matches!(
        step(&s, &DVector::zeros(3), DT, &model),
        Err(SimError::DimensionMismatch { .. })
    ));
}

#[test]
fn rest_pose_by_hand_composition() {
    let model = make_model("default").unwrap();
    let frames = model.chain().forward_kinematics(&[0.0; joints::ARM]).unwrap();
    // Arm hangs straight down: shoulder at the origin, each segment along -z.
    let elbow = frames[SHOULDER_FRAME].translation;
    let wrist = frames[FOREARM_FRAME].translation;
    let hand = frames[HAND_FRAME].translation;
    assert!((elbow - Vector3::new(0.0, 0.0, -0.28)).amax() < 1e-12);
    assert!((wrist - Vector3::new(0.0, 0.0, -0.53)).amax() < 1e-12);
    assert!((hand - Vector3::new(0.0, 0.0, -0.61)).amax() < 1e-12);
    let m = measure(&FollowerState::at_rest(), &model, None);
    assert!(m.shoulder.angle() < 1e-12 && m.wrist.angle() < 1e-12);
}

#[test]
fn noiseless_measure_is_exact() {
    let model = make_model("default").unwrap();
    let mut s = FollowerState::at_rest();
    s.config.angles[1] = 0.4;
    let a = measure(&s, &model, None);
    let b = measure(&s, &model, None);
    assert_eq!(a, b);
    assert_eq!(a.config, s.config);
    let mut zero = EncoderNoise::new(0.0, 1).unwrap();
    assert_eq!(measure(&s, &model, Some(&mut zero)), a);
}

#[test]
fn encoder_noise_statistics() {
    let model = make_model("default").unwrap();
    let s = FollowerState::at_rest();
    let mut noise = EncoderNoise::new(0.001, 42).unwrap();
    let samples: Vec<f64> = (0..10_000)
        .map(|_| measure(&s, &model, Some(&mut noise)).config.angles[3])
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    assert!((var.sqrt() - 0.001).abs() < 1e-4, "std {}", var.sqrt());
}

#[test]
fn presets_load_and_differ() {
    let default = make_model("default").unwrap();
    let heavy = make_model("heavy").unwrap();
    for j in joints::SHOULDER {
        assert_eq!(heavy.joints[j].inertia, 0.5);
        assert_eq!(default.joints[j].inertia, 0.05);
    }
    assert_ne!(default.geometry, heavy.geometry);
    assert!(matches!(make_model("nope"), Err(ConfigError::UnknownPreset(_))));
}

#[test]
fn missing_inertia_names_key() {
    let text: String = preset_text("default")
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("elbow.inertia"))
        .map(|l| format!("{l}\n"))
        .collect();
    let err = FollowerModel::from_config(&ConfigFile::parse(&text).unwrap()).unwrap_err();
    assert_eq!(
        err,
        ConfigError::Missing {
            key: "elbow.inertia".into()
        }
    );
    assert!(err.to_string().contains("elbow.inertia"));
}

#[test]
fn per_joint_override_and_line_numbers() {
    let text = format!("{}joint.finger_2.inertia = 0.02\n", preset_text("default").unwrap());
    let m = FollowerModel::from_config(&ConfigFile::parse(&text).unwrap()).unwrap();
    assert_eq!(m.joints[9].inertia, 0.02);
    assert_eq!(m.joints[8].inertia, 0.005);
    let text = format!("{}joint.elbow.damping = -1\n", preset_text("default").unwrap());
    let lines = text.lines().count();
    match FollowerModel::from_config(&ConfigFile::parse(&text).unwrap()) {
        Err(ConfigError::Invalid { line, key, .. }) => {
            assert_eq!(line, lines);
            assert_eq!(key, "joint.elbow.damping");
        }
        other => panic!("unexpected {other:?}"),
    }
}

/// Body-frame angular velocity of a pose map by central differences.
fn numeric_body_jacobian(f: impl Fn(&[f64]) -> UnitQuaternion<f64>, q: &[f64], cols: [usize; 3]) -> DMatrix<f64> {
    let h = 1e-6;
    let p0 = f(q);
    let mut j = DMatrix::zeros(3, 3);
    for (c, &idx) in cols.iter().enumerate() {
        let mut qp = q.to_vec();
        let mut qm = q.to_vec();
        qp[idx] += h;
        qm[idx] -= h;
        let d = (rotation_vector(&(p0.inverse() * f(&qp))) - rotation_vector(&(p0.inverse() * f(&qm)))) / (2.0 * h);
        j.set_column(c, &d);
    }
    j
}

#[test]
fn spherical_jacobians_match_finite_differences() {
    let model = make_model("default").unwrap();
    let q = [0.3, -0.4, 0.7, 1.1, -0.5, 0.2, 0.6];
    let js = model.shoulder_jacobian(&q);
    let ns = numeric_body_jacobian(|a| model.poses(a).shoulder, &q, joints::SHOULDER);
    assert!((js - ns).amax() < 1e-6);
    let jw = model.wrist_jacobian(&q);
    let nw = numeric_body_jacobian(|a| model.poses(a).wrist, &q, joints::WRIST);
    assert!((jw - nw).amax() < 1e-6);
    // Axes are orthonormal at rest, so the rest Jacobians are rotations.
    let j0 = model.shoulder_jacobian(&[0.0; 7]);
    assert!((&j0 * j0.transpose() - DMatrix::identity(3, 3)).amax() < 1e-12);
}

#[test]
fn gravity_matches_potential_gradient() {
    let model = make_model("heavy").unwrap();
    let potential = |q: &[f64]| {
        let f = model.chain().forward_kinematics(q).unwrap();
        let g = model.geometry;
        let mid = |a: Vector3<f64>, b: Vector3<f64>| (a[2] + b[2]) / 2.0;
        9.81 * (g.upper_arm_mass * mid(f[1].translation, f[2].translation)
            + g.forearm_mass * mid(f[2].translation, f[3].translation)
            + g.hand_mass * mid(f[5].translation, f[6].translation))
    };
    for q in [[0.0; 7], [0.4, -0.9, 0.3, 1.2, 0.5, -0.7, 0.2], [1.5, 0.2, -1.0, 0.3, 0.0, 1.0, -0.4]] {
        let mut full = q.to_vec();
        full.extend([0.0; 6]);
        let g = model.gravity_torque(&full);
        for j in 0..joints::ARM {
            let h = 1e-6;
            let mut qp = q;
            let mut qm = q;
            qp[j] += h;
            qm[j] -= h;
            let dv = (potential(&qp) - potential(&qm)) / (2.0 * h);
            assert!((g[j] - dv).abs() < 1e-6, "joint {j}: {} vs {}", g[j], dv);
        }
        assert!(g.rows(joints::ARM, 6).iter().all(|t| *t == 0.0));
    }
    assert_eq!(unit_model(false).gravity_torque(&[0.3; 13]), DVector::zeros(13));
}

/// Shoulder impedance loop with gravity compensation against a fixed target.
fn regulate(model: &FollowerModel<f64>, target: UnitQuaternion<f64>, seconds: f64) -> f64 {
    let gains = ImpedanceGains::uniform(3, 20.0, 2.0, 0.1).unwrap();
    let limits = DVector::from_element(3, 30.0);
    let mut s = FollowerState::at_rest();
    let mut t = 0.0;
    let mut err = f64::INFINITY;
    while t < seconds - 1e-9 {
        let m = measure(&s, model, None);
        let j = model.shoulder_jacobian(s.config.angles.as_slice());
        let qd = s.config.velocities.rows(0, 3).into_owned();
        let w = &j * qd;
        let pe = PoseError {
            q_t: quat_error(m.shoulder.quaternion(), target.quaternion()).unwrap(),
            qdot_t: -Vector3::new(w[0], w[1], w[2]),
        };
        err = pe.q_t.angle();
        let out = shoulder_impedance_torque(&pe, &j, &BindingForce::zero(), &gains, &limits).unwrap();
        let mut tau = model.gravity_torque(s.config.angles.as_slice());
        for k in 0..3 {
            tau[k] += out.torque[k];
        }
        // Controller at 500 Hz, simulator at 1 kHz.
        for _ in 0..2 {
            s = step(&s, &tau, DT, model).unwrap();
        }
        t += 2.0 * DT;
    }
    err
}

#[test]
fn shoulder_regulation_within_five_seconds() {
    let target = UnitQuaternion::from_euler_angles(0.3, -0.5, 0.4);
    for preset in PRESETS {
        let model = make_model(preset).unwrap();
        let err = regulate(&model, target, 5.0);
        assert!(err < 1e-3, "{preset}: residual {err}");
    }
}

proptest! {
    #[test]
    fn kinetic_energy_never_increases(v in proptest::collection::vec(-3.0f64..3.0, 13), steps in 1usize..200) {
        let model = make_model("default").unwrap();
        let mut m = model.clone();
        m.gravity = false;
        let mut s = FollowerState::at_rest();
        s.config.velocities = DVector::from_vec(v);
        let mut e = s.kinetic_energy(&m);
        for _ in 0..steps {
            s = step(&s, &DVector::zeros(13), DT, &m).unwrap();
            let e1 = s.kinetic_energy(&m);
            prop_assert!(e1 <= e + 1e-15);
            e = e1;
        }
    }

    #[test]
    fn deterministic_and_within_limits(
        taus in proptest::collection::vec(proptest::collection::vec(-40.0f64..40.0, 13), 1..100),
    ) {
        let model = make_model("heavy").unwrap();
        let mut a = FollowerState::at_rest();
        let mut b = FollowerState::at_rest();
        for t in &taus {
            let tau = DVector::from_vec(t.clone());
            a = step(&a, &tau, DT, &model).unwrap();
            b = step(&b, &tau, DT, &model).unwrap();
            prop_assert_eq!(&a, &b);
            for (q, p) in a.config.angles.iter().zip(model.joints.iter()) {
                prop_assert!(*q >= p.min && *q <= p.max);
            }
        }
    }
}

#[test]
fn json_snapshot_round_trips_values() {
    let s = FollowerState::<f64>::at_rest();
    let v: serde_json::Value = serde_json::from_str(&s.to_json_line()).unwrap();
    assert_eq!(v["q"].as_array().unwrap().len(), 13);
}
