//! Acceptance run: one PASS/FAIL line per primary criterion, with the
//! measured quantity and runtime. Exits non-zero if any criterion fails.
//! Thresholds live in `tolerances.rs`.

mod tolerances;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use nuexo_core::control::{
    joint_impedance_torque, rotation_exp, shoulder_impedance_torque, BindingForce, ControlSettings, ImpedanceGains,
    JointGains, PoseError, TremorFilterState,
};
use nuexo_core::datalog::{streams, LogFile};
use nuexo_core::drift_bench::{run_bench, summarize, BenchModels};
use nuexo_core::follower_sim::make_model;
use nuexo_core::kinematics::exo::{self, joints as exo_joints};
use nuexo_core::kinematics::{
    check_rom, coupled_linkage_angles, gh_center_displacement, ExoGeometry, JointConfig, RomAxis, RomLimits,
    ShoulderCoupling,
};
use nuexo_teleop::session::{write_log, DEFAULT_TICK_HZ};
use nuexo_teleop::{
    decode_message, encode_message, replay_commands, run_loopback, MsgType, ProtocolError, SessionConfig,
    SyntheticMaster, Trajectory, WireMessage,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tolerances::*;

/// Measured result of one criterion.
struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Runs `check`, enforces `budget` and prints the result line.
fn criterion(index: usize, name: &str, budget: Option<Duration>, check: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check));
    let elapsed = start.elapsed();
    let (mut pass, mut detail) = match result {
        Ok(v) => (v.pass, v.detail),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            (false, format!("panicked: {msg}"))
        }
    };
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            detail.push_str(&format!("; over the {:.0} s budget", b.as_secs_f64()));
        }
    }
    println!(
        "{} [{index:>2}] {name}: {detail} ({:.2} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn sweep((from, to, step): (f64, f64, f64)) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|k| from + k as f64 * step).collect()
}

fn coupling_law() -> Verdict {
    let coupling = ShoulderCoupling::default();
    let theta1 = sweep(COUPLING_SWEEP);
    let theta2: Vec<f64> = theta1
        .iter()
        .map(|&t| coupled_linkage_angles(t, &coupling).theta_2_1)
        .collect();
    let law = theta1
        .iter()
        .zip(&theta2)
        .map(|(t1, t2)| (t2 - (COUPLING_GAIN * t1 + COUPLING_OFFSET)).abs())
        .fold(0.0, f64::max);
    // Affine: differences depend on the motor difference only.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut affine: f64 = 0.0;
    for _ in 0..theta1.len() {
        let (i, j) = (rng.random_range(0..theta1.len()), rng.random_range(0..theta1.len()));
        affine = affine.max((theta2[i] - theta2[j] - COUPLING_GAIN * (theta1[i] - theta1[j])).abs());
    }
    Verdict::new(
        law <= COUPLING_ABS && affine <= COUPLING_ABS,
        format!(
            "max |theta2 - (1.444 theta1 + 0.938)| = {law:.1e} rad over {} samples, affine residual {affine:.1e} (<= {COUPLING_ABS:.0e})",
            theta1.len()
        ),
    )
}

fn random_in_rom(rng: &mut ChaCha8Rng) -> [f64; exo_joints::COUNT] {
    let limits = RomLimits::<f64>::shoulder_default();
    let mut q = [0.0; exo_joints::COUNT];
    for axis in RomAxis::ALL {
        let l = limits.get(axis).expect("default limits cover every axis");
        q[axis.joint()] = rng.random_range(l.min..=l.max);
    }
    for (j, v) in q.iter_mut().enumerate() {
        if let Some((lo, hi)) = exo::auxiliary_joint_range(j) {
            *v = rng.random_range(lo..=hi);
        }
    }
    q
}

fn kinematic_consistency() -> Verdict {
    let chain = ExoGeometry::default().chain();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = JACOBIAN_FD_STEP;
    let (mut worst_rel, mut worst_ortho): (f64, f64) = (0.0, 0.0);
    for _ in 0..JACOBIAN_CONFIGS {
        let q = random_in_rom(&mut rng);
        let jac = chain.jacobian(&q).expect("configuration has the chain's dimension");
        for c in 0..exo_joints::COUNT {
            let (mut plus, mut minus) = (q, q);
            plus[c] += h;
            minus[c] -= h;
            let fp = chain.end_frame(&plus).unwrap();
            let fm = chain.end_frame(&minus).unwrap();
            let omega = (fp.rotation * fm.rotation.inverse()).scaled_axis() / (2.0 * h);
            let v = (fp.translation - fm.translation) / (2.0 * h);
            for r in 0..3 {
                for (row, fd) in [(r, omega[r]), (r + 3, v[r])] {
                    let a = jac[(row, c)];
                    let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(JACOBIAN_REL_FLOOR);
                    worst_rel = worst_rel.max(rel);
                }
            }
        }
        for f in chain.forward_kinematics(&q).unwrap() {
            let r: Matrix3<f64> = f.rotation_matrix();
            worst_ortho = worst_ortho
                .max((r.transpose() * r - Matrix3::identity()).amax())
                .max((r.determinant() - 1.0).abs());
        }
    }
    Verdict::new(
        worst_rel < JACOBIAN_REL && worst_ortho <= ORTHONORMAL_ABS,
        format!(
            "Jacobian vs central differences worst rel err {worst_rel:.1e} (< {JACOBIAN_REL:.0e}) on {JACOBIAN_CONFIGS} configs; rotation orthonormality {worst_ortho:.1e} (<= {ORTHONORMAL_ABS:.0e})"
        ),
    )
}

fn gh_effect() -> Verdict {
    let theta1 = sweep(GH_SWEEP);
    let fwd = exo::forward_axis::<f64>();
    let coupled = gh_center_displacement(&theta1, &ExoGeometry::default()).unwrap();
    let along: Vec<f64> = coupled.iter().map(|d| d.dot(&fwd)).collect();
    let monotone = along.windows(2).all(|w| w[1] > w[0]);
    let span = along.last().unwrap() - along[0];
    let rigid = ExoGeometry::with_coupling(ShoulderCoupling::default().with_gain(0.0));
    let fixed = gh_center_displacement(&theta1, &rigid).unwrap();
    let fixed_max = fixed.iter().map(|d| d.amax()).fold(0.0, f64::max);
    Verdict::new(
        monotone && span > 0.0 && fixed_max == 0.0,
        format!(
            "gain 1.444: strictly monotone = {monotone}, forward travel {span:.6} m over theta1 in [0, 1]; gain 0: max |displacement| = {fixed_max:e} m"
        ),
    )
}

fn rom_coverage() -> Verdict {
    let limits = RomLimits::shoulder_default();
    let mut failures = Vec::new();
    for (name, deg) in ROM_EXTREMES_DEG {
        let axis = RomAxis::ALL.into_iter().find(|a| a.name() == name).expect("known axis");
        let verdict = |d: f64| {
            let mut q = [0.0; exo_joints::COUNT];
            q[axis.joint()] = d.to_radians();
            check_rom(&JointConfig::at_rest(&q).unwrap(), &limits).unwrap().all_within()
        };
        if !verdict(deg) {
            failures.push(format!("{name} {deg} deg rejected"));
        }
        let beyond = deg + ROM_BEYOND_DEG * deg.signum();
        if verdict(beyond) {
            failures.push(format!("{name} {beyond} deg accepted"));
        }
    }
    Verdict::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} extremes accepted, each +{ROM_BEYOND_DEG} deg rejected", ROM_EXTREMES_DEG.len())
        } else {
            failures.join(", ")
        },
    )
}

fn tracking_regulation() -> Verdict {
    let model = make_model("default").unwrap();
    let step_cfg = SessionConfig::new(vec![(1, model.clone())], STEP_SETTLE_S);
    let mut step = SyntheticMaster::new(Trajectory::Step {
        joint: exo_joints::SHOULDER_FLEXION,
        value: STEP_TARGET,
    });
    let r = run_loopback(&step_cfg, &mut step, None).unwrap();
    let residual = *r.traces[0].shoulder.last().unwrap();

    let sine_cfg = SessionConfig::new(vec![(1, model)], SINE_DURATION_S);
    let mut sine = SyntheticMaster::new(Trajectory::Sine {
        joint: exo_joints::SHOULDER_FLEXION,
        amplitude: SINE_AMPLITUDE,
        hz: SINE_HZ,
    });
    let r = run_loopback(&sine_cfg, &mut sine, None).unwrap();
    let e = &r.traces[0].shoulder;
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    let peak = e.iter().copied().fold(0.0, f64::max);
    Verdict::new(
        residual < STEP_RESIDUAL && mean <= SINE_MEAN && peak <= SINE_PEAK,
        format!(
            "step 0.3 rad residual at 5 s {residual:.2e} rad (< {STEP_RESIDUAL:.0e}); sine 0.5 Hz/0.4 rad mean {mean:.4} rad (<= {SINE_MEAN}), peak {peak:.4} rad (<= {SINE_PEAK})"
        ),
    )
}

/// Peak-to-peak output swing of the configured filter for a sinusoid of
/// `amplitude` around a held value.
fn tremor_swing(amplitude: f64) -> f64 {
    let s = ControlSettings::default();
    let mut f = TremorFilterState::new(s.deadband, s.hysteresis_exit).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..TREMOR_SAMPLES {
        let x = 0.2 + amplitude * (std::f64::consts::TAU * TREMOR_HZ * k as f64 * TREMOR_DT).sin();
        let y = f.apply(&DVector::from_element(1, x))[0];
        lo = lo.min(y);
        hi = hi.max(y);
    }
    hi - lo
}

fn tremor_filter() -> Verdict {
    let small = tremor_swing(TREMOR_SUPPRESSED);
    let large = tremor_swing(TREMOR_PASSED);
    let kept = large / (2.0 * TREMOR_PASSED);
    Verdict::new(
        small == 0.0 && kept >= TREMOR_PASS_FRACTION,
        format!(
            "amplitude {TREMOR_SUPPRESSED} rad output swing {small:e} rad (must be 0); amplitude {TREMOR_PASSED} rad keeps {:.1}% (>= {:.0}%)",
            kept * 100.0,
            TREMOR_PASS_FRACTION * 100.0
        ),
    )
}

fn drift_benchmark() -> Verdict {
    let seeds: Vec<u64> = (0..DRIFT_SEEDS).collect();
    let models = BenchModels::default();
    let runs = run_bench(&seeds, &models).unwrap();
    let s = summarize(&runs);
    let phase_bound = DRIFT_PHASE_SIGMAS * models.encoder.sigma;
    Verdict::new(
        s.exo_static_avg_worst < DRIFT_EXO_STATIC_AVG
            && s.imc_after_static_max_least >= DRIFT_IMC_AFTER_STATIC_MAX
            && s.exo_phase_shift_worst < phase_bound,
        format!(
            "{DRIFT_SEEDS} seeds: encoder worst static |avg| {:.4} rad (< {DRIFT_EXO_STATIC_AVG}); inertial least after-perturbation static |max| {:.4} rad (>= {DRIFT_IMC_AFTER_STATIC_MAX}); encoder phase shift {:.5} rad (< {phase_bound})",
            s.exo_static_avg_worst, s.imc_after_static_max_least, s.exo_phase_shift_worst
        ),
    )
}

fn unhex(s: &str) -> Vec<u8> {
    (0..s.len()).step_by(2).map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap()).collect()
}

fn busy_master() -> SyntheticMaster {
    let mut m = SyntheticMaster::sine();
    m.finger_amplitude = 0.3;
    m.forearm_force.torque[0] = 0.2;
    m.upper_arm_force.force[2] = 1.0;
    m
}

fn protocol() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lossless = 0;
    for _ in 0..PROTOCOL_ROUND_TRIPS {
        let ty = MsgType::ALL[rng.random_range(0..MsgType::ALL.len())];
        let n = rng.random_range(0..48);
        let payload = (0..n).map(|_| f64::from_bits(rng.random::<u64>())).collect();
        let m = WireMessage::new(ty, rng.random(), rng.random(), payload);
        let bytes = encode_message(&m).unwrap();
        if let Ok(Some((back, used))) = decode_message(&bytes) {
            if used == bytes.len() && back.bit_eq(&m) {
                lossless += 1;
            }
        }
    }

    let heartbeat = encode_message(&WireMessage::heartbeat(0, 0)).unwrap() == unhex(GOLDEN_HEARTBEAT);
    let torque =
        encode_message(&WireMessage::new(MsgType::TorqueCmd, 2, 1_234_567, vec![1.5, -0.25])).unwrap() == unhex(GOLDEN_TORQUE);

    let mut corrupt = unhex(GOLDEN_TORQUE);
    let last = corrupt.len() - 1;
    corrupt[last] ^= 0x01;
    let crc_rejected = matches!(decode_message(&corrupt), Err(ProtocolError::Crc { .. }));

    let m = make_model("default").unwrap();
    let cfg = SessionConfig::new(vec![(1, m.clone()), (2, m)], FAN_OUT_S);
    let r = run_loopback(&cfg, &mut busy_master(), None).unwrap();
    let payload_bytes = |id: u16| -> Vec<u8> {
        r.commands_for(id)
            .flat_map(|c| c.torque.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<_>>())
            .collect()
    };
    let (a, b) = (payload_bytes(1), payload_bytes(2));
    let fan_out = !a.is_empty() && a == b;

    Verdict::new(
        lossless == PROTOCOL_ROUND_TRIPS && heartbeat && torque && crc_rejected && fan_out,
        format!(
            "{lossless}/{PROTOCOL_ROUND_TRIPS} round trips lossless; golden heartbeat {heartbeat}, golden torque {torque}; corrupted crc rejected {crc_rejected}; fan-out payloads identical {fan_out} ({} commands each)",
            a.len() / (13 * 8)
        ),
    )
}

fn log_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let followers = vec![(1, make_model("default").unwrap())];
    let mut cfg = SessionConfig::new(followers.clone(), LOG_SESSION_S);
    cfg.encoder_noise = Some((0.002, 9));
    let session = dir.path().join("session.nxlg");
    run_loopback(&cfg, &mut busy_master(), Some(&session)).unwrap();
    let log = LogFile::open(&session).unwrap();
    let stats = log.stats();
    let populated = stats.iter().filter(|s| s.count > 0).count();

    let recorded: Vec<_> = log.records_of(streams::TELEOP_CMD).collect();
    let replayed = replay_commands(&log, followers, &ControlSettings::default(), &ExoGeometry::default(), DEFAULT_TICK_HZ)
        .unwrap();
    let (a, b) = (dir.path().join("recorded.nxlg"), dir.path().join("replayed.nxlg"));
    write_log(&a, recorded.iter().copied()).unwrap();
    write_log(&b, &replayed).unwrap();
    let identical = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();
    Verdict::new(
        stats.len() == LOG_STREAMS && populated == LOG_STREAMS && identical && !recorded.is_empty(),
        format!(
            "{populated}/{LOG_STREAMS} streams populated ({} records); replayed TorqueCmd log of {} records byte-identical {identical}",
            log.records.len(),
            recorded.len()
        ),
    )
}

fn impedance_contract() -> Verdict {
    let unlimited = DVector::from_element(3, f64::INFINITY);
    let identity = DMatrix::<f64>::identity(3, 3);
    let pose = |rv: Vector3<f64>, rate: Vector3<f64>| PoseError {
        q_t: rotation_exp(&rv),
        qdot_t: rate,
    };
    let shoulder = |err: &PoseError<f64>, j: &DMatrix<f64>, f: &BindingForce<f64>, (kp, kd, l): (f64, f64, f64)| {
        let g = ImpedanceGains::uniform(3, kp, kd, l).unwrap();
        shoulder_impedance_torque(err, j, f, &g, &unlimited).unwrap().torque
    };
    let mut worst: f64 = 0.0;
    let mut check = |got: &DVector<f64>, want: [f64; 3]| {
        worst = worst.max((got - DVector::from_row_slice(&want)).amax());
    };

    // k_p = 1, rotation vector (0.1, 0, 0), J = I.
    check(
        &shoulder(&pose(Vector3::new(0.1, 0.0, 0.0), Vector3::zeros()), &identity, &BindingForce::zero(), (1.0, 0.0, 0.0)),
        [0.1, 0.0, 0.0],
    );
    // lambda = 1, J = I, cuff torque (0, 0, 0.5).
    let cuff = BindingForce {
        torque: Vector3::new(0.0, 0.0, 0.5),
        force: Vector3::new(3.0, -2.0, 1.0),
    };
    check(&shoulder(&pose(Vector3::zeros(), Vector3::zeros()), &identity, &cuff, (0.0, 0.0, 1.0)), [0.0, 0.0, 0.5]);
    // All three terms through J = diag(2, 1, 4), k_p = 20, k_d = 2, lambda = 0.1:
    // 20 (0.05, -0.2, 0.0125) + 2 (0.15, 0, -0.025) + 0.1 (1, 0.2, -4) = (1.4, -3.98, -0.2).
    let diag = DMatrix::from_diagonal(&DVector::from_row_slice(&[2.0, 1.0, 4.0]));
    let cuff = BindingForce {
        torque: Vector3::new(0.5, 0.2, -1.0),
        force: Vector3::zeros(),
    };
    check(
        &shoulder(&pose(Vector3::new(0.1, -0.2, 0.05), Vector3::new(0.3, 0.0, -0.1)), &diag, &cuff, (20.0, 2.0, 0.1)),
        [1.4, -3.98, -0.2],
    );

    let joint = |dq: f64, dqd: f64, tau_ft: f64, (k_p, k_d, lambda): (f64, f64, f64)| {
        joint_impedance_torque(dq, 0.0, dqd, 0.0, tau_ft, &JointGains { k_p, k_d, lambda }, f64::INFINITY)
    };
    for (got, want) in [
        (joint(0.05, 0.0, 0.0, (2.0, 0.0, 0.0)), 0.1),
        (joint(0.1, -0.2, 0.05, (1.0, 0.5, 1.0)), 0.05),
    ] {
        worst = worst.max((got - want).abs());
    }

    // Zero error and zero force give exactly zero, for any Jacobian and gains.
    let j = DMatrix::from_row_slice(3, 3, &[0.3, -1.2, 0.5, 0.9, 0.1, -0.4, 0.2, 0.7, 1.1]);
    let zero_pose = shoulder(&pose(Vector3::zeros(), Vector3::zeros()), &j, &BindingForce::zero(), (20.0, 2.0, 0.1));
    let zero_joint = joint(0.0, 0.0, 0.0, (20.0, 2.0, 0.1));
    let zeros = zero_pose.iter().all(|&t| t == 0.0) && zero_joint == 0.0;

    Verdict::new(
        worst <= IMPEDANCE_ABS && zeros,
        format!("hand examples worst |error| {worst:.1e} N·m (<= {IMPEDANCE_ABS:.0e}); zero inputs give exactly zero torque {zeros}"),
    )
}

fn main() -> ExitCode {
    let results = [
        criterion(1, "Coupling law", Some(COUPLING_BUDGET), coupling_law),
        criterion(2, "Kinematic consistency", Some(KINEMATICS_BUDGET), kinematic_consistency),
        criterion(3, "GH compensation effect", None, gh_effect),
        criterion(4, "ROM coverage", None, rom_coverage),
        criterion(5, "Tracking regulation", Some(TRACKING_BUDGET), tracking_regulation),
        criterion(6, "Tremor filter", None, tremor_filter),
        criterion(7, "Drift benchmark", Some(DRIFT_BUDGET), drift_benchmark),
        criterion(8, "Protocol", None, protocol),
        criterion(9, "Log determinism", None, log_determinism),
        criterion(10, "Impedance unit contract", None, impedance_contract),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
