//! Forward kinematics of the exoskeleton chain.
//!
//! The shoulder carries a planar linkage whose three passive joints follow the
//! horizontal shoulder motor through an affine coupling; see
//! [`ShoulderCoupling`]. Chains are generic over the scalar type.

mod chain;
mod coupling;
pub mod exo;
mod frame;
mod rom;

use thiserror::Error;

pub use chain::{Chain, DhLink, JointConfig, JointKind, PassiveJoint};
pub use coupling::{coupled_linkage_angles, PassiveAngles, ShoulderCoupling};
pub use exo::{
    euler_zyx, forward_kinematics, from_euler_zyx, gh_center_displacement, humeral_pose, jacobian, ExoGeometry,
    HumeralPose,
};
pub use frame::Frame;
pub use rom::{check_rom, AxisLimit, AxisVerdict, RomAxis, RomLimits, RomVerdict};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KinematicsError {
    #[error("configuration has {got} joints, chain expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite joint value")]
    NonFinite,
    #[error("invalid shoulder coupling: {0}")]
    InvalidCoupling(String),
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
}
