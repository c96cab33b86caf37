//! Kinematics, teleoperation control, follower simulation, multi-stream data
//! logging and drift benchmarking for a shoulder-compensating upper-limb
//! exoskeleton used as a teleoperation master.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root pin the common `f64` instantiations.

pub mod config;
pub mod control;
pub mod csvfmt;
pub mod datalog;
pub mod drift_bench;
pub mod follower_sim;
pub mod kinematics;
pub mod scalar;

pub use scalar::Real;

pub type Frame64 = kinematics::Frame<f64>;
pub type Chain64 = kinematics::Chain<f64>;
pub type JointConfig64 = kinematics::JointConfig<f64>;
pub type ShoulderCoupling64 = kinematics::ShoulderCoupling<f64>;
pub type ExoGeometry64 = kinematics::ExoGeometry<f64>;
pub type RomLimits64 = kinematics::RomLimits<f64>;
pub type ImpedanceGains64 = control::ImpedanceGains<f64>;
pub type PoseError64 = control::PoseError<f64>;
pub type BindingForce64 = control::BindingForce<f64>;
pub type CompensationModel64 = control::CompensationModel<f64>;
pub type TremorFilterState64 = control::TremorFilterState<f64>;
pub type FollowerModel64 = follower_sim::FollowerModel<f64>;
pub type FollowerState64 = follower_sim::FollowerState<f64>;
