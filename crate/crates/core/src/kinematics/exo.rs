//! The exoskeleton arm: DH table, humeral pose extraction and the
//! glenohumeral (GH) center displacement produced by the shoulder linkage.

use nalgebra::{DMatrix, UnitQuaternion, Vector3};

use super::{Chain, DhLink, Frame, JointConfig, JointKind, KinematicsError, PassiveJoint, ShoulderCoupling};
use crate::config::{self, ConfigError, ConfigFile};
use crate::scalar::Real;

/// Active joint indices of the exoskeleton configuration vector.
pub mod joints {
    /// Row 0-1.
    pub const SHOULDER_ABDUCTION: usize = 0;
    /// Row 1-2.
    pub const SHOULDER_FLEXION: usize = 1;
    /// Linkage motor (motor 2); it has no DH row and drives rows 2-2_1, 2_1-2_2, 2_2-3.
    pub const HORIZONTAL_FLEXION: usize = 2;
    /// Row 3-4, the shoulder motor relocated to the elbow.
    pub const HUMERAL_ROTATION: usize = 3;
    /// Row 4-5.
    pub const ELBOW: usize = 4;
    /// Row 5-6.
    pub const FOREARM: usize = 5;
    pub const COUNT: usize = 6;
    pub const NAMES: [&str; COUNT] = [
        "shoulder_abduction",
        "shoulder_flexion",
        "horizontal_flexion",
        "humeral_rotation",
        "elbow",
        "forearm",
    ];
}

/// Index into the frame list of the frame at the end of the linkage (GH center).
pub const GH_CENTER_FRAME: usize = 4;
/// Index of the upper-arm (humerus) frame.
pub const HUMERAL_FRAME: usize = 5;
/// Index of the end frame.
pub const END_FRAME: usize = 7;

/// Geometry of the exoskeleton arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExoGeometry<T: Real> {
    pub coupling: ShoulderCoupling<T>,
    /// Upper-arm length along row 3-4.
    pub d4: T,
    /// Forearm length along row 4-5.
    pub d5: T,
    /// Hand offset along row 5-6.
    pub a6: T,
    /// Vertical offset of the GH center (stand-in for the elevation mechanism).
    pub vertical_offset: T,
}

impl<T: Real> ExoGeometry<T> {
    pub fn with_coupling(coupling: ShoulderCoupling<T>) -> Self {
        Self {
            coupling,
            d4: T::lit(0.28),
            d5: T::lit(0.25),
            a6: T::lit(0.08),
            vertical_offset: T::zero(),
        }
    }

    /// DH table of the exoskeleton.
    pub fn links(&self) -> Vec<DhLink<T>> {
        let half_pi = T::frac_pi_2();
        let zero = T::zero();
        let c = &self.coupling;
        vec![
            DhLink::new(-half_pi, zero, zero, -half_pi, JointKind::Active(joints::SHOULDER_ABDUCTION)),
            DhLink::new(zero, zero, zero, half_pi, JointKind::Active(joints::SHOULDER_FLEXION)),
            DhLink::new(zero, zero, c.l1, zero, JointKind::PassiveCoupled(PassiveJoint::Link21)),
            DhLink::new(zero, zero, c.l2, zero, JointKind::PassiveCoupled(PassiveJoint::Link22)),
            DhLink::new(
                zero,
                self.vertical_offset,
                zero,
                -half_pi,
                JointKind::PassiveCoupled(PassiveJoint::Link3),
            ),
            DhLink::new(zero, self.d4, zero, -half_pi, JointKind::Active(joints::HUMERAL_ROTATION)),
            DhLink::new(zero, self.d5, zero, half_pi, JointKind::Active(joints::ELBOW)),
            DhLink::new(zero, zero, self.a6, half_pi, JointKind::Active(joints::FOREARM)),
        ]
    }

    pub fn chain(&self) -> Chain<T> {
        Chain::with_coupling(self.links(), self.coupling, joints::HORIZONTAL_FLEXION)
            .expect("exoskeleton DH table is well formed")
    }
}

impl Default for ExoGeometry<f64> {
    fn default() -> Self {
        Self::with_coupling(ShoulderCoupling::default())
    }
}

impl ExoGeometry<f64> {
    /// Reads `coupling.*` and `chain.*` keys; absent keys keep their defaults.
    pub fn from_config(cfg: &ConfigFile) -> Result<Self, ConfigError> {
        let d = Self::default();
        let c = d.coupling;
        let l1 = cfg.real_checked("coupling.l1", Some(c.l1), config::positive)?;
        let l2 = cfg.real_checked("coupling.l2", Some(c.l2), config::positive)?;
        let theta_e = cfg.real_checked("coupling.theta_e", Some(c.theta_e), config::any)?;
        let gain = cfg.real_checked("coupling.gain", Some(c.gain), config::any)?;
        let offset = cfg.real_checked("coupling.offset", Some(c.offset), config::any)?;
        let coupling = ShoulderCoupling::new(l1, l2, theta_e, gain, offset)
            .map_err(|e| cfg.invalid("coupling", e.to_string()))?;
        Ok(Self {
            coupling,
            d4: cfg.real_checked("chain.d4", Some(d.d4), config::positive)?,
            d5: cfg.real_checked("chain.d5", Some(d.d5), config::positive)?,
            a6: cfg.real_checked("chain.a6", Some(d.a6), config::non_negative)?,
            vertical_offset: cfg.real_checked("chain.vertical_offset", Some(d.vertical_offset), config::any)?,
        })
    }
}

/// Humerus orientation with its intrinsic Z-Y-X decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumeralPose<T: Real> {
    pub pose: UnitQuaternion<T>,
    /// `(yaw, pitch, roll)` such that `pose = Rz(yaw) Ry(pitch) Rx(roll)`.
    pub euler: Vector3<T>,
    /// Set when `|pitch|` is within 1e-6 rad of `pi/2`; the euler triple is then not unique.
    pub gimbal_adjacent: bool,
}

/// Intrinsic Z-Y-X angles `(yaw, pitch, roll)` of `q`.
pub fn euler_zyx<T: Real>(q: &UnitQuaternion<T>) -> Vector3<T> {
    let (roll, pitch, yaw) = q.euler_angles();
    Vector3::new(yaw, pitch, roll)
}

/// Inverse of [`euler_zyx`].
pub fn from_euler_zyx<T: Real>(euler: &Vector3<T>) -> UnitQuaternion<T> {
    UnitQuaternion::from_euler_angles(euler[2], euler[1], euler[0])
}

pub fn is_gimbal_adjacent<T: Real>(pitch: T) -> bool {
    (pitch.abs() - T::frac_pi_2()).abs() < T::lit(1e-6)
}

/// Orientation of frame `frame_index` of `chain` as a [`HumeralPose`].
pub fn frame_pose<T: Real>(
    chain: &Chain<T>,
    angles: &[T],
    frame_index: usize,
) -> Result<HumeralPose<T>, KinematicsError> {
    let frames = chain.forward_kinematics(angles)?;
    let frame = frames
        .get(frame_index)
        .ok_or_else(|| KinematicsError::InvalidChain(format!("no frame {frame_index}")))?;
    let euler = euler_zyx(&frame.rotation);
    Ok(HumeralPose {
        pose: frame.rotation,
        euler,
        gimbal_adjacent: is_gimbal_adjacent(euler[1]),
    })
}

/// Humerus pose of the exoskeleton for `config`.
pub fn humeral_pose<T: Real>(
    config: &JointConfig<T>,
    chain: &Chain<T>,
) -> Result<HumeralPose<T>, KinematicsError> {
    frame_pose(chain, config.angles.as_slice(), HUMERAL_FRAME)
}

/// Base-to-link frames of `chain` for `config`.
pub fn forward_kinematics<T: Real>(
    config: &JointConfig<T>,
    chain: &Chain<T>,
) -> Result<Vec<Frame<T>>, KinematicsError> {
    chain.forward_kinematics(config.angles.as_slice())
}

/// End-frame Jacobian (angular rows first) of `chain` for `config`.
pub fn jacobian<T: Real>(config: &JointConfig<T>, chain: &Chain<T>) -> Result<DMatrix<T>, KinematicsError> {
    chain.jacobian(config.angles.as_slice())
}

/// Horizontal axis along which the linkage moves the GH center forward.
pub fn forward_axis<T: Real>() -> Vector3<T> {
    Vector3::y()
}

/// Base-frame GH-center position for each linkage motor angle, relative to
/// `theta1 = 0`, with every other joint at zero. The linkage is planar about
/// the vertical axis, so the vertical component is always zero.
pub fn gh_center_displacement<T: Real>(
    theta1_sweep: &[T],
    geometry: &ExoGeometry<T>,
) -> Result<Vec<Vector3<T>>, KinematicsError> {
    let chain = geometry.chain();
    let mut angles = vec![T::zero(); joints::COUNT];
    let center = |angles: &[T]| -> Result<Vector3<T>, KinematicsError> {
        Ok(chain.forward_kinematics(angles)?[GH_CENTER_FRAME].translation)
    };
    let reference = center(&angles)?;
    theta1_sweep
        .iter()
        .map(|&theta1| {
            angles[joints::HORIZONTAL_FLEXION] = theta1;
            let mut d = center(&angles)? - reference;
            d[2] = T::zero();
            Ok(d)
        })
        .collect()
}

/// Default sampling ranges (rad) for the joints outside the anatomical ROM axes.
pub fn auxiliary_joint_range(joint: usize) -> Option<(f64, f64)> {
    use std::f64::consts::FRAC_PI_2;
    match joint {
        joints::HUMERAL_ROTATION | joints::FOREARM => Some((-FRAC_PI_2, FRAC_PI_2)),
        joints::ELBOW => Some((0.0, 2.5)),
        _ => None,
    }
}
