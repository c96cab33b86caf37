//! Multi-stream binary recorder and deterministic replayer, plus a strapdown
//! odometry integrator feeding the odometry stream.
//!
//! The on-disk layout is little-endian: a header with the stream directory,
//! length-prefixed records, and a footer holding the record count and a
//! CRC-32 of everything before it.

mod export;
mod format;
mod odometry;
mod reader;
mod replay;
mod writer;

use std::path::Path;

use thiserror::Error;

pub use export::export_csv;
pub use format::{LogRecord, StreamSpec, FOOTER_MARKER, MAGIC, VERSION};
pub use odometry::{odometry_integrate, ImuSample, OdometryState};
pub use reader::{LogFile, StreamStats};
pub use replay::{replay, replay_order, Pace};
pub use writer::{LogWriter, QueuedWriter, DEFAULT_FLUSH_INTERVAL};

/// Identifiers and layouts of the six standard streams.
pub mod streams {
    use super::StreamSpec;

    pub const TELEOP_CMD: u16 = 1;
    pub const EXO_KINEMATICS: u16 = 2;
    pub const FINGER: u16 = 3;
    pub const ODOMETRY: u16 = 4;
    pub const BINDING_FORCE: u16 = 5;
    pub const FOLLOWER_STATE: u16 = 6;

    /// Directory written by teleoperation sessions.
    pub fn standard() -> Vec<StreamSpec> {
        vec![
            StreamSpec::new(TELEOP_CMD, "teleop-cmd", 14, "follower id; N·m x13"),
            StreamSpec::new(EXO_KINEMATICS, "exo-kinematics", 16, "rad x6; rad/s x6; quat wxyz"),
            StreamSpec::new(FINGER, "finger", 12, "rad x6; rad/s x6"),
            StreamSpec::new(ODOMETRY, "odometry", 7, "m x3; quat wxyz"),
            StreamSpec::new(BINDING_FORCE, "binding-force", 12, "upper arm N·m x3, N x3; forearm N·m x3, N x3"),
            StreamSpec::new(FOLLOWER_STATE, "follower-state", 35, "follower id; rad x13; rad/s x13; quat x2"),
        ]
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad log header: {0}")]
    Header(String),
    #[error("stream {0} is not registered in the header")]
    UnregisteredStream(u16),
    #[error("stream {stream}: expected {expected} values, got {got}")]
    WrongDims { stream: u16, expected: usize, got: usize },
    #[error("stream {0}: payload contains a non-finite value")]
    NonFinite(u16),
    #[error("stream {stream}: timestamp {got} us precedes previous {last} us")]
    TimestampRegression { stream: u16, last: u64, got: u64 },
    #[error("corrupt log at byte {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
}

impl LogError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
