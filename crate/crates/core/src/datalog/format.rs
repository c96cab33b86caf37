use super::LogError;

pub const MAGIC: &[u8; 4] = b"NXLG";
pub const VERSION: u16 = 1;
/// Length-prefix value that introduces the footer instead of a record.
pub const FOOTER_MARKER: u32 = 0xFFFF_FFFF;
/// Bytes in a record body before the payload (stream id + timestamp).
pub const RECORD_FIXED: usize = 2 + 8;
/// Footer size: marker, record count, crc.
pub const FOOTER_LEN: usize = 4 + 8 + 4;

/// One entry of the header's stream directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSpec {
    pub id: u16,
    pub name: String,
    /// Number of `f64` values per record.
    pub dims: u16,
    pub units: String,
}

impl StreamSpec {
    pub fn new(id: u16, name: &str, dims: u16, units: &str) -> Self {
        Self {
            id,
            name: name.to_string(),
            dims,
            units: units.to_string(),
        }
    }
}

/// Timestamped sample on one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub stream_id: u16,
    pub timestamp_us: u64,
    pub payload: Vec<f64>,
}

impl LogRecord {
    pub fn new(stream_id: u16, timestamp_us: u64, payload: Vec<f64>) -> Self {
        Self {
            stream_id,
            timestamp_us,
            payload,
        }
    }

    /// Bit-level equality (distinguishes `-0.0` from `0.0`).
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.stream_id == other.stream_id
            && self.timestamp_us == other.timestamp_us
            && self.payload.len() == other.payload.len()
            && self
                .payload
                .iter()
                .zip(other.payload.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub(crate) fn encode_header(streams: &[StreamSpec]) -> Result<Vec<u8>, LogError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let count = u16::try_from(streams.len()).map_err(|_| LogError::Header("too many streams".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    for s in streams {
        out.extend_from_slice(&s.id.to_le_bytes());
        out.extend_from_slice(&s.dims.to_le_bytes());
        for text in [&s.name, &s.units] {
            let len = u8::try_from(text.len())
                .map_err(|_| LogError::Header(format!("stream {} label longer than 255 bytes", s.id)))?;
            out.push(len);
            out.extend_from_slice(text.as_bytes());
        }
    }
    Ok(out)
}

pub(crate) fn encode_record(record: &LogRecord) -> Vec<u8> {
    let body = RECORD_FIXED + 8 * record.payload.len();
    let mut out = Vec::with_capacity(4 + body);
    out.extend_from_slice(&(body as u32).to_le_bytes());
    out.extend_from_slice(&record.stream_id.to_le_bytes());
    out.extend_from_slice(&record.timestamp_us.to_le_bytes());
    for v in &record.payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Little-endian cursor over a byte slice that reports absolute offsets.
pub(crate) struct Cursor<'a> {
    bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let slice = self.bytes.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(slice)
    }

    pub fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    pub fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub(crate) fn decode_header(cur: &mut Cursor<'_>) -> Result<Vec<StreamSpec>, LogError> {
    let truncated = || LogError::Header("truncated header".into());
    if cur.take(4).ok_or_else(truncated)? != MAGIC {
        return Err(LogError::Header("bad magic (expected NXLG)".into()));
    }
    let version = cur.u16().ok_or_else(truncated)?;
    if version != VERSION {
        return Err(LogError::Header(format!("unsupported version {version}")));
    }
    let count = cur.u16().ok_or_else(truncated)?;
    let mut streams = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id = cur.u16().ok_or_else(truncated)?;
        let dims = cur.u16().ok_or_else(truncated)?;
        let mut text = || -> Result<String, LogError> {
            let len = cur.u8().ok_or_else(truncated)? as usize;
            let raw = cur.take(len).ok_or_else(truncated)?;
            String::from_utf8(raw.to_vec()).map_err(|_| LogError::Header("label is not UTF-8".into()))
        };
        let name = text()?;
        let units = text()?;
        if streams.iter().any(|s: &StreamSpec| s.id == id) {
            return Err(LogError::Header(format!("stream {id} listed twice")));
        }
        streams.push(StreamSpec { id, name, dims, units });
    }
    Ok(streams)
}
