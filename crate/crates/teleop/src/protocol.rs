//! Framed binary wire format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "NUEX"
//! 4       1     version (1)
//! 5       1     msg_type
//! 6       2     stream_id      (u16 LE)
//! 8       8     timestamp_us   (u64 LE)
//! 16      2     payload_len    (u16 LE, bytes = 8 x float count)
//! 18      n     payload        (f64 LE)
//! 18+n    4     crc32          (u32 LE, IEEE, over bytes 0..18+n)
//! ```

use std::collections::HashMap;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"NUEX";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;
pub const CRC_LEN: usize = 4;
/// Largest payload in bytes.
pub const MAX_PAYLOAD: usize = u16::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum MsgType {
    MasterState = 1,
    FollowerState = 2,
    TorqueCmd = 3,
    Heartbeat = 4,
    LogMeta = 5,
}

impl MsgType {
    pub const ALL: [MsgType; 5] = [
        Self::MasterState,
        Self::FollowerState,
        Self::TorqueCmd,
        Self::Heartbeat,
        Self::LogMeta,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|t| *t as u8 == v)
    }

    /// State messages may be dropped under back-pressure; commands never.
    pub fn is_state(self) -> bool {
        !matches!(self, Self::TorqueCmd)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("payload length {0} is not a multiple of 8")]
    BadLength(usize),
    #[error("payload of {0} bytes exceeds 65535")]
    PayloadTooLarge(usize),
    #[error("crc mismatch: frame carries {stored:08x}, computed {computed:08x}")]
    Crc { stored: u32, computed: u32 },
    #[error("timestamp {got} us does not follow {last} us on stream {stream_id} ({msg_type:?})")]
    TimestampRegression {
        stream_id: u16,
        msg_type: MsgType,
        last: u64,
        got: u64,
    },
    #[error("{0:?} payload holds a non-finite value")]
    NonFinite(MsgType),
    #[error("{msg_type:?} payload carries a quaternion of norm {norm}")]
    NotUnit { msg_type: MsgType, norm: f64 },
    #[error("{msg_type:?} payload needs {expected} floats, got {got}")]
    Schema {
        msg_type: MsgType,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub msg_type: MsgType,
    pub stream_id: u16,
    pub timestamp_us: u64,
    pub payload: Vec<f64>,
}

impl WireMessage {
    pub fn new(msg_type: MsgType, stream_id: u16, timestamp_us: u64, payload: Vec<f64>) -> Self {
        Self {
            msg_type,
            stream_id,
            timestamp_us,
            payload,
        }
    }

    pub fn heartbeat(stream_id: u16, timestamp_us: u64) -> Self {
        Self::new(MsgType::Heartbeat, stream_id, timestamp_us, Vec::new())
    }

    /// Bit-level equality of all fields.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.msg_type == other.msg_type
            && self.stream_id == other.stream_id
            && self.timestamp_us == other.timestamp_us
            && self.payload.len() == other.payload.len()
            && self
                .payload
                .iter()
                .zip(&other.payload)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub fn encode_message(msg: &WireMessage) -> Result<Vec<u8>, ProtocolError> {
    let len = msg.payload.len() * 8;
    if len > MAX_PAYLOAD {
        return Err(ProtocolError::PayloadTooLarge(len));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + len + CRC_LEN);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(msg.msg_type as u8);
    out.extend_from_slice(&msg.stream_id.to_le_bytes());
    out.extend_from_slice(&msg.timestamp_us.to_le_bytes());
    out.extend_from_slice(&(len as u16).to_le_bytes());
    for v in &msg.payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Decodes one frame from the front of `bytes`.
///
/// Returns `Ok(None)` when more bytes are needed, otherwise the message and
/// the number of bytes consumed.
pub fn decode_message(bytes: &[u8]) -> Result<Option<(WireMessage, usize)>, ProtocolError> {
    // Validate what is available of the fixed header early so garbage is
    // rejected without waiting for a full frame.
    let avail = bytes.len().min(4);
    if bytes[..avail] != MAGIC[..avail] {
        let mut m = [0u8; 4];
        m[..avail].copy_from_slice(&bytes[..avail]);
        return Err(ProtocolError::BadMagic(m));
    }
    if bytes.len() > 4 && bytes[4] != VERSION {
        return Err(ProtocolError::UnsupportedVersion(bytes[4]));
    }
    if bytes.len() < HEADER_LEN {
        return Ok(None);
    }
    let msg_type = MsgType::from_u8(bytes[5]).ok_or(ProtocolError::UnknownType(bytes[5]))?;
    let stream_id = u16::from_le_bytes([bytes[6], bytes[7]]);
    let timestamp_us = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let len = u16::from_le_bytes([bytes[16], bytes[17]]) as usize;
    if !len.is_multiple_of(8) {
        return Err(ProtocolError::BadLength(len));
    }
    let total = HEADER_LEN + len + CRC_LEN;
    if bytes.len() < total {
        return Ok(None);
    }
    let stored = u32::from_le_bytes(bytes[HEADER_LEN + len..total].try_into().unwrap());
    let computed = crc32fast::hash(&bytes[..HEADER_LEN + len]);
    if stored != computed {
        return Err(ProtocolError::Crc { stored, computed });
    }
    let payload = bytes[HEADER_LEN..HEADER_LEN + len]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Some((
        WireMessage {
            msg_type,
            stream_id,
            timestamp_us,
            payload,
        },
        total,
    )))
}

/// Incremental decoder for a byte stream.
#[derive(Debug, Default)]
pub struct Decoder {
    buf: Vec<u8>,
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Next complete message, `Ok(None)` if more bytes are needed. After an
    /// error the buffer is cleared (the stream cannot be resynchronized).
    pub fn next_message(&mut self) -> Result<Option<WireMessage>, ProtocolError> {
        if self.buf.is_empty() {
            return Ok(None);
        }
        match decode_message(&self.buf) {
            Ok(Some((msg, used))) => {
                self.buf.drain(..used);
                Ok(Some(msg))
            }
            Ok(None) => Ok(None),
            Err(e) => {
                self.buf.clear();
                Err(e)
            }
        }
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }
}

/// Rejects messages whose timestamp does not strictly increase per
/// `(stream_id, msg_type)`.
#[derive(Debug, Default, Clone)]
pub struct TimestampGuard {
    last: HashMap<(u16, MsgType), u64>,
}

impl TimestampGuard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, msg: &WireMessage) -> Result<(), ProtocolError> {
        let key = (msg.stream_id, msg.msg_type);
        if let Some(&last) = self.last.get(&key) {
            if msg.timestamp_us <= last {
                return Err(ProtocolError::TimestampRegression {
                    stream_id: msg.stream_id,
                    msg_type: msg.msg_type,
                    last,
                    got: msg.timestamp_us,
                });
            }
        }
        self.last.insert(key, msg.timestamp_us);
        Ok(())
    }

    /// Forgets a sender, e.g. after it reconnects with a fresh clock.
    pub fn forget_stream(&mut self, stream_id: u16) {
        self.last.retain(|(s, _), _| *s != stream_id);
    }
}
