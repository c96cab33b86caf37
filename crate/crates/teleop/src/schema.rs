//! Float layouts of the message payloads.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use nuexo_core::control::{BindingForce, UNIT_NORM_TOLERANCE};
use nuexo_core::follower_sim::joints;

use crate::protocol::{MsgType, ProtocolError, WireMessage};

/// Fingers tracked on both sides.
pub const FINGERS: usize = 6;

fn quat_to(out: &mut Vec<f64>, q: &UnitQuaternion<f64>) {
    out.extend_from_slice(&[q.w, q.i, q.j, q.k]);
}

/// Bit-preserving: the quaternion is taken as transmitted. Messages are
/// checked for unit norm in [`check`].
fn quat_from(v: &[f64]) -> UnitQuaternion<f64> {
    UnitQuaternion::new_unchecked(Quaternion::new(v[0], v[1], v[2], v[3]))
}

fn check(msg: &WireMessage, ty: MsgType, len: usize, quat_offsets: &[usize]) -> Result<(), ProtocolError> {
    if msg.msg_type != ty || msg.payload.len() != len {
        return Err(ProtocolError::Schema {
            msg_type: ty,
            expected: len,
            got: msg.payload.len(),
        });
    }
    if msg.payload.iter().any(|v| !v.is_finite()) {
        return Err(ProtocolError::NonFinite(ty));
    }
    for &o in quat_offsets {
        let norm = msg.payload[o..o + 4].iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(ProtocolError::NotUnit { msg_type: ty, norm });
        }
    }
    Ok(())
}

/// Operator-side state published by the master node.
///
/// Payload (40 floats): shoulder quaternion wxyz, wrist quaternion wxyz,
/// elbow angle, 6 finger angles, shoulder angular velocity (3), wrist angular
/// velocity (3), elbow rate, 6 finger rates, upper-arm binding wrench
/// (torque 3, force 3), forearm binding wrench (torque 3, force 3).
#[derive(Debug, Clone, PartialEq)]
pub struct MasterState {
    pub shoulder: UnitQuaternion<f64>,
    pub wrist: UnitQuaternion<f64>,
    pub elbow: f64,
    pub fingers: [f64; FINGERS],
    pub shoulder_rate: Vector3<f64>,
    pub wrist_rate: Vector3<f64>,
    pub elbow_rate: f64,
    pub finger_rates: [f64; FINGERS],
    pub upper_arm_force: BindingForce<f64>,
    pub forearm_force: BindingForce<f64>,
}

impl MasterState {
    pub const LEN: usize = 40;

    pub fn at_rest() -> Self {
        Self {
            shoulder: UnitQuaternion::identity(),
            wrist: UnitQuaternion::identity(),
            elbow: 0.0,
            fingers: [0.0; FINGERS],
            shoulder_rate: Vector3::zeros(),
            wrist_rate: Vector3::zeros(),
            elbow_rate: 0.0,
            finger_rates: [0.0; FINGERS],
            upper_arm_force: BindingForce::zero(),
            forearm_force: BindingForce::zero(),
        }
    }

    pub fn to_payload(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::LEN);
        quat_to(&mut v, &self.shoulder);
        quat_to(&mut v, &self.wrist);
        v.push(self.elbow);
        v.extend_from_slice(&self.fingers);
        v.extend_from_slice(self.shoulder_rate.as_slice());
        v.extend_from_slice(self.wrist_rate.as_slice());
        v.push(self.elbow_rate);
        v.extend_from_slice(&self.finger_rates);
        v.extend_from_slice(self.upper_arm_force.wrench().as_slice());
        v.extend_from_slice(self.forearm_force.wrench().as_slice());
        v
    }

    pub fn from_payload(p: &[f64]) -> Self {
        let v3 = |i: usize| Vector3::new(p[i], p[i + 1], p[i + 2]);
        Self {
            shoulder: quat_from(&p[0..4]),
            wrist: quat_from(&p[4..8]),
            elbow: p[8],
            fingers: p[9..15].try_into().unwrap(),
            shoulder_rate: v3(15),
            wrist_rate: v3(18),
            elbow_rate: p[21],
            finger_rates: p[22..28].try_into().unwrap(),
            upper_arm_force: BindingForce::from_slice(&p[28..34]),
            forearm_force: BindingForce::from_slice(&p[34..40]),
        }
    }

    pub fn to_message(&self, stream_id: u16, timestamp_us: u64) -> WireMessage {
        WireMessage::new(MsgType::MasterState, stream_id, timestamp_us, self.to_payload())
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self, ProtocolError> {
        check(msg, MsgType::MasterState, Self::LEN, &[0, 4])?;
        Ok(Self::from_payload(&msg.payload))
    }
}

/// Follower readings. Payload (34 floats): 13 joint angles, 13 joint rates,
/// shoulder quaternion wxyz, wrist quaternion wxyz. `stream_id` is the follower id.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerStateMsg {
    pub angles: [f64; joints::COUNT],
    pub velocities: [f64; joints::COUNT],
    pub shoulder: UnitQuaternion<f64>,
    pub wrist: UnitQuaternion<f64>,
}

impl FollowerStateMsg {
    pub const LEN: usize = 2 * joints::COUNT + 8;

    pub fn to_payload(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::LEN);
        v.extend_from_slice(&self.angles);
        v.extend_from_slice(&self.velocities);
        quat_to(&mut v, &self.shoulder);
        quat_to(&mut v, &self.wrist);
        v
    }

    pub fn from_payload(p: &[f64]) -> Self {
        let n = joints::COUNT;
        Self {
            angles: p[..n].try_into().unwrap(),
            velocities: p[n..2 * n].try_into().unwrap(),
            shoulder: quat_from(&p[2 * n..2 * n + 4]),
            wrist: quat_from(&p[2 * n + 4..2 * n + 8]),
        }
    }

    pub fn to_message(&self, follower_id: u16, timestamp_us: u64) -> WireMessage {
        WireMessage::new(MsgType::FollowerState, follower_id, timestamp_us, self.to_payload())
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self, ProtocolError> {
        check(msg, MsgType::FollowerState, Self::LEN, &[2 * joints::COUNT, 2 * joints::COUNT + 4])?;
        Ok(Self::from_payload(&msg.payload))
    }
}

/// Joint torque command for one follower (13 floats, N·m). `stream_id` is the follower id.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueCmd {
    pub follower_id: u16,
    pub timestamp_us: u64,
    pub torque: [f64; joints::COUNT],
}

impl TorqueCmd {
    pub const LEN: usize = joints::COUNT;

    pub fn to_message(&self) -> WireMessage {
        WireMessage::new(MsgType::TorqueCmd, self.follower_id, self.timestamp_us, self.torque.to_vec())
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self, ProtocolError> {
        check(msg, MsgType::TorqueCmd, Self::LEN, &[])?;
        Ok(Self {
            follower_id: msg.stream_id,
            timestamp_us: msg.timestamp_us,
            torque: msg.payload[..].try_into().unwrap(),
        })
    }
}
