//! Teleoperation bus: wire protocol, controller fan-out, transports and the
//! master, controller and follower nodes.

pub mod console;
pub mod controller;
pub mod master;
pub mod node;
pub mod protocol;
pub mod queue;
pub mod schema;
pub mod session;
pub mod transport;

use thiserror::Error;

pub use controller::{Controller, StalenessEvent, TickOutput, STALENESS_TICKS};
pub use master::{LogMaster, MasterEncoder, MasterSample, MasterSource, SyntheticMaster, Trajectory};
pub use node::{run_node, NodeConfig, NodeSummary, Role};
pub use protocol::{decode_message, encode_message, Decoder, MsgType, ProtocolError, TimestampGuard, WireMessage};
pub use queue::{MessageQueue, QUEUE_CAPACITY};
pub use schema::{FollowerStateMsg, MasterState, TorqueCmd};
pub use session::{run_loopback, replay_commands, SessionConfig, SessionReport};
pub use transport::{loopback_pair, Backoff, Link, LoopbackLink, TcpLink};

#[derive(Debug, Error)]
pub enum TeleopError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Control(#[from] nuexo_core::control::ControlError),
    #[error(transparent)]
    Kinematics(#[from] nuexo_core::kinematics::KinematicsError),
    #[error(transparent)]
    Sim(#[from] nuexo_core::follower_sim::SimError),
    #[error(transparent)]
    Log(#[from] nuexo_core::datalog::LogError),
    #[error(transparent)]
    ConfigFile(#[from] nuexo_core::config::ConfigError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("the controller needs at least one follower")]
    NoFollowers,
    #[error("configuration: {0}")]
    Config(String),
    #[error("endpoint {0}")]
    Endpoint(String),
}
