//! Teleoperation controllers: quaternion pose impedance for the spherical
//! joints, scalar joint impedance for the elbow and fingers, the
//! exoskeleton-side compensation and assist terms, and the tremor filter.
//!
//! All functions are pure apart from the explicit filter and estimator state.

mod compensation;
mod estimator;
mod impedance;
mod quat;
mod settings;
mod tremor;

use thiserror::Error;

pub use compensation::{
    dynamics_compensation, exo_command, fcm_assist, CompensationModel, Friction, PlanarGravity, PointMassLink,
    COULOMB_SMOOTHING, GRAVITY,
};
pub use estimator::{AngularVelocityEstimator, VelocityEstimator, SMOOTHING_WINDOW};
pub use impedance::{
    damped_pseudoinverse, joint_impedance_torque, shoulder_impedance_torque, BindingForce, ImpedanceGains,
    JointGains, PoseError, TorqueOutput, PINV_DAMPING,
};
pub use quat::{canonical, quat_error, rotation_exp, rotation_vector, velocity_error, UNIT_NORM_TOLERANCE};
pub use settings::{ControlSettings, Subsystem, SubsystemGains};
pub use tremor::{tremor_filter, TremorFilterState, DEFAULT_DEADBAND};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ControlError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("configuration error: {0}")]
    Configuration(String),
}
