//! Torque-driven simulated humanoid arm that stands in for the teleoperated
//! robot, with bundled model presets.

mod model;
mod sim;

use thiserror::Error;

use crate::config::{ConfigError, ConfigFile};

pub use model::{ArmGeometry, FollowerModel, FollowerPoses, JointParams, FOREARM_FRAME, HAND_FRAME, SHOULDER_FRAME};
pub use sim::{measure, step, EncoderNoise, FollowerMeasurement, FollowerState, MAX_DT};

/// Joint layout of the follower arm.
pub mod joints {
    pub const SHOULDER: [usize; 3] = [0, 1, 2];
    pub const ELBOW: usize = 3;
    pub const WRIST: [usize; 3] = [4, 5, 6];
    pub const FINGERS: [usize; 6] = [7, 8, 9, 10, 11, 12];
    /// Joints that belong to the DH arm chain.
    pub const ARM: usize = 7;
    pub const COUNT: usize = 13;
    pub const NAMES: [&str; COUNT] = [
        "shoulder_0",
        "shoulder_1",
        "shoulder_2",
        "elbow",
        "wrist_0",
        "wrist_1",
        "wrist_2",
        "finger_0",
        "finger_1",
        "finger_2",
        "finger_3",
        "finger_4",
        "finger_5",
    ];
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("torque vector contains a non-finite value")]
    NonFiniteTorque,
    #[error("time step {0} s outside (0, 0.01]")]
    InvalidStep(f64),
    #[error("expected {expected} joints, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid follower model: {0}")]
    InvalidModel(String),
}

/// Names of the bundled presets.
pub const PRESETS: [&str; 2] = ["default", "heavy"];

/// Text of a bundled preset file.
pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "default" => Some(include_str!("../../../../presets/default.cfg")),
        "heavy" => Some(include_str!("../../../../presets/heavy.cfg")),
        _ => None,
    }
}

/// Loads a bundled preset by name.
pub fn make_model(preset: &str) -> Result<FollowerModel<f64>, ConfigError> {
    let text = preset_text(preset).ok_or_else(|| ConfigError::UnknownPreset(preset.to_string()))?;
    FollowerModel::from_config(&ConfigFile::parse(text)?)
}
