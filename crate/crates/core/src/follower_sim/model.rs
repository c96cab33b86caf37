use nalgebra::{DMatrix, DVector, Matrix3, UnitQuaternion, Vector3};

use super::{joints, SimError};
use crate::config::{non_negative, positive, ConfigError, ConfigFile};
use crate::kinematics::{Chain, DhLink, Frame, JointKind};
use crate::scalar::Real;

/// Frame (index into the chain's frame list) carried by the shoulder joints.
pub const SHOULDER_FRAME: usize = 2;
/// Frame of the forearm, parent of the wrist joints.
pub const FOREARM_FRAME: usize = 3;
/// Frame of the hand, carried by the wrist joints.
pub const HAND_FRAME: usize = 6;

/// Dynamic parameters and limits of one follower joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointParams<T> {
    /// Inertia about the joint axis (kg·m²).
    pub inertia: T,
    /// Viscous damping (N·m·s/rad).
    pub damping: T,
    /// Symmetric torque limit (N·m).
    pub torque_limit: T,
    pub min: T,
    pub max: T,
}

/// Segment lengths (m) and point masses (kg, at mid-segment) of the arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmGeometry<T> {
    pub upper_arm: T,
    pub forearm: T,
    pub hand: T,
    pub upper_arm_mass: T,
    pub forearm_mass: T,
    pub hand_mass: T,
}

/// Simulated humanoid arm: 3-axis shoulder, elbow, 3-axis wrist and six
/// single-axis finger joints, each with diagonal inertia and viscous damping.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerModel<T: Real> {
    pub name: String,
    pub joints: Vec<JointParams<T>>,
    pub geometry: ArmGeometry<T>,
    pub gravity: bool,
    chain: Chain<T>,
    shoulder_rest: UnitQuaternion<T>,
    wrist_rest: UnitQuaternion<T>,
}

/// Calibrated follower orientations and readings.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerPoses<T: Real> {
    /// Upper-arm orientation relative to its rest orientation, base frame.
    pub shoulder: UnitQuaternion<T>,
    /// Hand orientation relative to the forearm, relative to rest.
    pub wrist: UnitQuaternion<T>,
}

fn arm_links<T: Real>(g: &ArmGeometry<T>) -> Vec<DhLink<T>> {
    let z = T::zero();
    let h = T::frac_pi_2();
    let pi = T::pi();
    let a = JointKind::Active;
    vec![
        DhLink::new(z, z, z, h, a(0)),
        DhLink::new(h, z, z, h, a(1)),
        DhLink::new(pi, z, g.upper_arm, z, a(2)),
        DhLink::new(z, z, g.forearm, z, a(3)),
        DhLink::new(z, z, z, h, a(4)),
        DhLink::new(h, z, z, h, a(5)),
        DhLink::new(z, g.hand, z, z, a(6)),
    ]
}

impl<T: Real> FollowerModel<T> {
    // Negated comparisons so that NaN parameters fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(
        name: impl Into<String>,
        joints_params: Vec<JointParams<T>>,
        geometry: ArmGeometry<T>,
        gravity: bool,
    ) -> Result<Self, SimError> {
        if joints_params.len() != joints::COUNT {
            return Err(SimError::DimensionMismatch {
                expected: joints::COUNT,
                got: joints_params.len(),
            });
        }
        for (i, p) in joints_params.iter().enumerate() {
            let name = joints::NAMES[i];
            let bad = |why: &str| Err(SimError::InvalidModel(format!("joint {name}: {why}")));
            if !(p.inertia > T::zero()) {
                return bad("inertia must be positive");
            }
            if !(p.damping >= T::zero()) {
                return bad("damping must be non-negative");
            }
            if !(p.torque_limit > T::zero()) {
                return bad("torque limit must be positive");
            }
            if !(p.min < p.max) {
                return bad("angle min must be below max");
            }
        }
        let lengths = [geometry.upper_arm, geometry.forearm, geometry.hand];
        let masses = [geometry.upper_arm_mass, geometry.forearm_mass, geometry.hand_mass];
        if lengths.iter().any(|l| !(*l > T::zero())) || masses.iter().any(|m| !(*m >= T::zero())) {
            return Err(SimError::InvalidModel(
                "segment lengths must be positive and masses non-negative".into(),
            ));
        }
        let chain = Chain::new(arm_links(&geometry)).map_err(|e| SimError::InvalidModel(e.to_string()))?;
        let rest = vec![T::zero(); joints::ARM];
        let frames = chain.forward_kinematics(&rest).expect("rest configuration is valid");
        let shoulder_rest = frames[SHOULDER_FRAME].rotation;
        let wrist_rest = frames[FOREARM_FRAME].rotation.inverse() * frames[HAND_FRAME].rotation;
        Ok(Self {
            name: name.into(),
            joints: joints_params,
            geometry,
            gravity,
            chain,
            shoulder_rest,
            wrist_rest,
        })
    }

    /// DH chain of the seven arm joints (fingers are not part of it).
    pub fn chain(&self) -> &Chain<T> {
        &self.chain
    }

    pub fn torque_limits(&self) -> DVector<T> {
        DVector::from_iterator(joints::COUNT, self.joints.iter().map(|p| p.torque_limit))
    }

    fn arm_frames(&self, angles: &[T]) -> Vec<Frame<T>> {
        self.chain
            .forward_kinematics(&angles[..joints::ARM])
            .expect("arm angles have the chain's dimension")
    }

    /// Calibrated shoulder and wrist orientations for the joint angles.
    pub fn poses(&self, angles: &[T]) -> FollowerPoses<T> {
        let frames = self.arm_frames(angles);
        let shoulder = frames[SHOULDER_FRAME].rotation * self.shoulder_rest.inverse();
        let local = frames[FOREARM_FRAME].rotation.inverse() * frames[HAND_FRAME].rotation;
        FollowerPoses {
            shoulder,
            wrist: local * self.wrist_rest.inverse(),
        }
    }

    /// Joint axes of a spherical group expressed in its parent frame.
    fn group_axes(&self, frames: &[Frame<T>], first: usize, parent: Option<usize>) -> Matrix3<T> {
        let parent_rot = parent.map(|p| frames[p].rotation).unwrap_or_else(UnitQuaternion::identity);
        let mut axes = Matrix3::zeros();
        for c in 0..3 {
            let row = first + c;
            let z = if row == 0 {
                Vector3::z()
            } else {
                frames[row - 1].z_axis()
            };
            axes.set_column(c, &(parent_rot.inverse() * z));
        }
        axes
    }

    /// Shoulder Jacobian mapping joint rates to the angular velocity of the
    /// calibrated shoulder pose, expressed in that pose's own frame.
    pub fn shoulder_jacobian(&self, angles: &[T]) -> DMatrix<T> {
        let frames = self.arm_frames(angles);
        let pose = self.poses(angles).shoulder;
        let axes = pose.inverse().to_rotation_matrix().matrix() * self.group_axes(&frames, 0, None);
        DMatrix::from_column_slice(3, 3, axes.as_slice())
    }

    /// Wrist Jacobian, analogous to [`Self::shoulder_jacobian`] with the forearm as parent.
    pub fn wrist_jacobian(&self, angles: &[T]) -> DMatrix<T> {
        let frames = self.arm_frames(angles);
        let pose = self.poses(angles).wrist;
        let axes = pose.inverse().to_rotation_matrix().matrix()
            * self.group_axes(&frames, joints::WRIST[0], Some(FOREARM_FRAME));
        DMatrix::from_column_slice(3, 3, axes.as_slice())
    }

    /// Torque each joint must supply to hold the arm still against gravity
    /// (zero for all joints when gravity is disabled).
    pub fn gravity_torque(&self, angles: &[T]) -> DVector<T> {
        let mut tau = DVector::zeros(joints::COUNT);
        if !self.gravity {
            return tau;
        }
        let frames = self.arm_frames(angles);
        let half = T::lit(0.5);
        let origin = |i: usize| frames[i].translation;
        // Point masses at the middle of each segment.
        let bodies = [
            (self.geometry.upper_arm_mass, (origin(1) + origin(SHOULDER_FRAME)) * half),
            (self.geometry.forearm_mass, (origin(SHOULDER_FRAME) + origin(FOREARM_FRAME)) * half),
            (self.geometry.hand_mass, (origin(5) + origin(HAND_FRAME)) * half),
        ];
        // Segment k is moved by every arm joint up to and including its last driver.
        let last_driver = [2, 3, 6];
        let weight = |m: T| Vector3::new(T::zero(), T::zero(), -T::lit(crate::control::GRAVITY) * m);
        for row in 0..joints::ARM {
            let (axis, o) = if row == 0 {
                (Vector3::z(), Vector3::zeros())
            } else {
                (frames[row - 1].z_axis(), frames[row - 1].translation)
            };
            let mut generalized = T::zero();
            for (k, (m, p)) in bodies.iter().enumerate() {
                if row <= last_driver[k] {
                    generalized += axis.dot(&(p - o).cross(&weight(*m)));
                }
            }
            tau[row] = -generalized;
        }
        tau
    }
}

fn group_of(joint: usize) -> &'static str {
    match joint {
        j if joints::SHOULDER.contains(&j) => "shoulder",
        joints::ELBOW => "elbow",
        j if joints::WRIST.contains(&j) => "wrist",
        _ => "fingers",
    }
}

impl FollowerModel<f64> {
    /// Builds a model from a preset file. Every joint field is read from
    /// `joint.<name>.<field>`, falling back to `<group>.<field>` (groups:
    /// shoulder, elbow, wrist, fingers); a field missing from both is an error
    /// naming the group key.
    pub fn from_config(cfg: &ConfigFile) -> Result<Self, ConfigError> {
        let mut params = Vec::with_capacity(joints::COUNT);
        for (j, name) in joints::NAMES.iter().enumerate() {
            let field = |f: &str, check: fn(f64) -> Result<(), String>| -> Result<f64, ConfigError> {
                let own = format!("joint.{name}.{f}");
                if cfg.contains(&own) {
                    cfg.real_checked(&own, None, check)
                } else {
                    cfg.real_checked(&format!("{}.{f}", group_of(j)), None, check)
                }
            };
            let p = JointParams {
                inertia: field("inertia", positive)?,
                damping: field("damping", non_negative)?,
                torque_limit: field("torque_limit", positive)?,
                min: field("min", crate::config::any)?,
                max: field("max", crate::config::any)?,
            };
            if p.min >= p.max {
                let key = if cfg.contains(&format!("joint.{name}.max")) {
                    format!("joint.{name}.max")
                } else {
                    format!("{}.max", group_of(j))
                };
                return Err(cfg.invalid(&key, "max must exceed min"));
            }
            params.push(p);
        }
        let geometry = ArmGeometry {
            upper_arm: cfg.real_checked("geometry.upper_arm", None, positive)?,
            forearm: cfg.real_checked("geometry.forearm", None, positive)?,
            hand: cfg.real_checked("geometry.hand", None, positive)?,
            upper_arm_mass: cfg.real_checked("mass.upper_arm", None, non_negative)?,
            forearm_mass: cfg.real_checked("mass.forearm", None, non_negative)?,
            hand_mass: cfg.real_checked("mass.hand", None, non_negative)?,
        };
        let gravity = cfg.get_or("gravity", true)?;
        let name = cfg.get_or("name", "custom".to_string())?;
        Self::new(name, params, geometry, gravity).map_err(|e| ConfigError::Invalid {
            line: 0,
            key: "model".into(),
            reason: e.to_string(),
        })
    }
}
