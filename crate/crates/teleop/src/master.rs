//! Master-side sources and the encoder turning exoskeleton readings into
//! [`MasterState`] messages.

use std::f64::consts::TAU;

use nalgebra::{DVector, UnitQuaternion, Vector3};
use nuexo_core::control::{AngularVelocityEstimator, BindingForce, VelocityEstimator};
use nuexo_core::datalog::{streams, LogFile, LogRecord, OdometryState};
use nuexo_core::kinematics::exo::{self, joints as exo_joints, ExoGeometry};
use nuexo_core::kinematics::Chain;

use crate::schema::{MasterState, FINGERS};
use crate::TeleopError;

/// Raw readings of the exoskeleton at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterSample {
    pub exo: [f64; exo_joints::COUNT],
    pub fingers: [f64; FINGERS],
    pub upper_arm_force: BindingForce<f64>,
    pub forearm_force: BindingForce<f64>,
}

impl MasterSample {
    pub fn at_rest() -> Self {
        Self {
            exo: [0.0; exo_joints::COUNT],
            fingers: [0.0; FINGERS],
            upper_arm_force: BindingForce::zero(),
            forearm_force: BindingForce::zero(),
        }
    }
}

/// Produces exoskeleton readings over time.
pub trait MasterSource: Send {
    /// Reading at `t` seconds since the start of the session; `None` ends the source.
    fn sample(&mut self, t: f64) -> Option<MasterSample>;
}

/// Shape of a synthetic exoskeleton trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    /// All joints at rest.
    Rest,
    /// Joint jumps to `value` at `t = 0` and stays there.
    Step { joint: usize, value: f64 },
    /// `amplitude * sin(2 pi hz t)` on one joint.
    Sine { joint: usize, amplitude: f64, hz: f64 },
}

/// Scripted exoskeleton motion; fingers optionally follow a slow sine.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMaster {
    pub trajectory: Trajectory,
    pub finger_amplitude: f64,
    pub finger_hz: f64,
    /// Constant binding wrenches reported by the cuffs.
    pub upper_arm_force: BindingForce<f64>,
    pub forearm_force: BindingForce<f64>,
}

impl SyntheticMaster {
    pub fn new(trajectory: Trajectory) -> Self {
        Self {
            trajectory,
            finger_amplitude: 0.0,
            finger_hz: 0.25,
            upper_arm_force: BindingForce::zero(),
            forearm_force: BindingForce::zero(),
        }
    }

    /// The default demonstration motion: shoulder flexion sine, 0.5 Hz, 0.4 rad.
    pub fn sine() -> Self {
        Self::new(Trajectory::Sine {
            joint: exo_joints::SHOULDER_FLEXION,
            amplitude: 0.4,
            hz: 0.5,
        })
    }
}

impl MasterSource for SyntheticMaster {
    fn sample(&mut self, t: f64) -> Option<MasterSample> {
        let mut s = MasterSample::at_rest();
        match self.trajectory {
            Trajectory::Rest => {}
            Trajectory::Step { joint, value } => s.exo[joint] = value,
            Trajectory::Sine { joint, amplitude, hz } => s.exo[joint] = amplitude * (TAU * hz * t).sin(),
        }
        // Fingers flex in [0, 2a] so they stay inside their range.
        let f = self.finger_amplitude * (1.0 - (TAU * self.finger_hz * t).cos());
        s.fingers = [f; FINGERS];
        s.upper_arm_force = self.upper_arm_force;
        s.forearm_force = self.forearm_force;
        Some(s)
    }
}

/// Replays the exoskeleton streams of a recorded log (zero-order hold
/// between records).
#[derive(Debug, Clone)]
pub struct LogMaster {
    samples: Vec<(f64, MasterSample)>,
    next: usize,
    current: Option<MasterSample>,
}

impl LogMaster {
    pub fn from_log(log: &LogFile) -> Result<Self, TeleopError> {
        let mut samples: Vec<(f64, MasterSample)> = Vec::new();
        let t0 = log.records.first().map_or(0, |r| r.timestamp_us);
        let mut fingers = [0.0; FINGERS];
        let mut forces = (BindingForce::zero(), BindingForce::zero());
        let mut pending: Option<(u64, [f64; exo_joints::COUNT])> = None;
        let flush = |pending: &mut Option<(u64, [f64; 6])>, fingers, forces: (BindingForce<f64>, BindingForce<f64>), out: &mut Vec<_>| {
            if let Some((ts, q)) = pending.take() {
                out.push((
                    (ts - t0) as f64 * 1e-6,
                    MasterSample {
                        exo: q,
                        fingers,
                        upper_arm_force: forces.0,
                        forearm_force: forces.1,
                    },
                ));
            }
        };
        for r in nuexo_core::datalog::replay_order(log) {
            if pending.is_some_and(|(ts, _)| ts != r.timestamp_us) {
                flush(&mut pending, fingers, forces, &mut samples);
            }
            match r.stream_id {
                streams::EXO_KINEMATICS => {
                    pending = Some((r.timestamp_us, r.payload[..exo_joints::COUNT].try_into().unwrap()));
                }
                streams::FINGER => fingers = r.payload[..FINGERS].try_into().unwrap(),
                streams::BINDING_FORCE => {
                    forces = (BindingForce::from_slice(&r.payload[..6]), BindingForce::from_slice(&r.payload[6..12]));
                }
                _ => {}
            }
        }
        flush(&mut pending, fingers, forces, &mut samples);
        if samples.is_empty() {
            return Err(TeleopError::Config("log holds no exo-kinematics records".into()));
        }
        Ok(Self {
            samples,
            next: 0,
            current: None,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.last().map_or(0.0, |(t, _)| *t)
    }
}

impl MasterSource for LogMaster {
    fn sample(&mut self, t: f64) -> Option<MasterSample> {
        if self.next >= self.samples.len() && t > self.duration_s() {
            return None;
        }
        while self.next < self.samples.len() && self.samples[self.next].0 <= t + 1e-9 {
            self.current = Some(self.samples[self.next].1.clone());
            self.next += 1;
        }
        Some(self.current.clone().unwrap_or_else(|| self.samples[0].1.clone()))
    }
}

/// Exoskeleton-side derived quantities logged alongside the master state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExoReading {
    pub angles: [f64; exo_joints::COUNT],
    pub rates: [f64; exo_joints::COUNT],
    pub humeral: UnitQuaternion<f64>,
}

/// Turns raw readings into [`MasterState`]: calibrated humeral pose from
/// forward kinematics (`P = R_h R_h,rest^T`), wrist pose from the forearm
/// joint, finite-difference rates.
#[derive(Debug, Clone)]
pub struct MasterEncoder {
    chain: Chain<f64>,
    rest: UnitQuaternion<f64>,
    joint_rates: VelocityEstimator<f64>,
    shoulder_rate: AngularVelocityEstimator<f64>,
    wrist_rate: AngularVelocityEstimator<f64>,
}

impl MasterEncoder {
    pub fn new(geometry: &ExoGeometry<f64>, dt: f64) -> Result<Self, TeleopError> {
        let chain = geometry.chain();
        let rest = exo::frame_pose(&chain, &[0.0; exo_joints::COUNT], exo::HUMERAL_FRAME)?.pose;
        Ok(Self {
            chain,
            rest,
            joint_rates: VelocityEstimator::new(dt),
            shoulder_rate: AngularVelocityEstimator::new(dt),
            wrist_rate: AngularVelocityEstimator::new(dt),
        })
    }

    pub fn encode(&mut self, s: &MasterSample) -> Result<(MasterState, ExoReading), TeleopError> {
        let raw = exo::frame_pose(&self.chain, &s.exo, exo::HUMERAL_FRAME)?.pose;
        let shoulder = UnitQuaternion::new_normalize((raw * self.rest.inverse()).into_inner());
        // The forearm joint pronates the hand about the forearm's long axis.
        let wrist = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), s.exo[exo_joints::FOREARM]);
        let mut joints = Vec::with_capacity(exo_joints::COUNT + FINGERS);
        joints.extend_from_slice(&s.exo);
        joints.extend_from_slice(&s.fingers);
        let rates = self.joint_rates.update(&DVector::from_vec(joints));
        let state = MasterState {
            shoulder,
            wrist,
            elbow: s.exo[exo_joints::ELBOW],
            fingers: s.fingers,
            shoulder_rate: self.shoulder_rate.update(&shoulder),
            wrist_rate: self.wrist_rate.update(&wrist),
            elbow_rate: rates[exo_joints::ELBOW],
            finger_rates: std::array::from_fn(|k| rates[exo_joints::COUNT + k]),
            upper_arm_force: s.upper_arm_force,
            forearm_force: s.forearm_force,
        };
        let reading = ExoReading {
            angles: s.exo,
            rates: std::array::from_fn(|k| rates[k]),
            humeral: shoulder,
        };
        Ok((state, reading))
    }
}

/// Log records of one master tick: exo kinematics, fingers, binding force.
pub fn master_records(timestamp_us: u64, reading: &ExoReading, state: &MasterState) -> [LogRecord; 3] {
    let mut exo = Vec::with_capacity(16);
    exo.extend_from_slice(&reading.angles);
    exo.extend_from_slice(&reading.rates);
    let h = reading.humeral;
    exo.extend_from_slice(&[h.w, h.i, h.j, h.k]);
    let mut finger = Vec::with_capacity(12);
    finger.extend_from_slice(&state.fingers);
    finger.extend_from_slice(&state.finger_rates);
    let mut force = Vec::with_capacity(12);
    force.extend_from_slice(state.upper_arm_force.wrench().as_slice());
    force.extend_from_slice(state.forearm_force.wrench().as_slice());
    [
        LogRecord::new(streams::EXO_KINEMATICS, timestamp_us, exo),
        LogRecord::new(streams::FINGER, timestamp_us, finger),
        LogRecord::new(streams::BINDING_FORCE, timestamp_us, force),
    ]
}

/// Dead-reckoned pose of the operator's base. The operator stands still in
/// these sessions, so the IMU reads gravity only.
#[derive(Debug, Clone, Default)]
pub struct BaseOdometry {
    state: OdometryState<f64>,
}

impl BaseOdometry {
    pub fn advance(&mut self, dt: f64, timestamp_us: u64) -> LogRecord {
        let sample = nuexo_core::datalog::ImuSample {
            accel: Vector3::new(0.0, 0.0, nuexo_core::control::GRAVITY),
            gyro: Vector3::zeros(),
        };
        self.state.advance(&sample, dt);
        LogRecord::new(streams::ODOMETRY, timestamp_us, self.state.payload().to_vec())
    }
}
