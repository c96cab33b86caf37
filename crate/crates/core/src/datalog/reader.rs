use std::path::Path;

use super::format::{decode_header, Cursor, LogRecord, StreamSpec, FOOTER_LEN, FOOTER_MARKER, RECORD_FIXED};
use super::LogError;

/// A fully read and verified log file.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFile {
    pub streams: Vec<StreamSpec>,
    /// Records in file order.
    pub records: Vec<LogRecord>,
}

/// Per-stream statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamStats {
    pub spec: StreamSpec,
    pub count: u64,
    pub first_us: Option<u64>,
    pub last_us: Option<u64>,
}

impl LogFile {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| LogError::io(path, e))?;
        Self::parse(&bytes)
    }

    /// Parses and verifies a complete log image.
    pub fn parse(bytes: &[u8]) -> Result<Self, LogError> {
        let mut cur = Cursor::new(bytes);
        let streams = decode_header(&mut cur)?;
        let mut records = Vec::new();
        loop {
            let at = cur.pos as u64;
            let corrupt = |reason: &str| LogError::Corrupt {
                offset: at,
                reason: reason.to_string(),
            };
            let Some(len) = cur.u32() else {
                return Err(corrupt("missing footer (log not finalized)"));
            };
            if len == FOOTER_MARKER {
                let count = cur.u64().ok_or_else(|| corrupt("truncated footer"))?;
                let crc_end = cur.pos;
                let stored = cur.u32().ok_or_else(|| corrupt("truncated footer"))?;
                if cur.remaining() != 0 {
                    return Err(corrupt("trailing bytes after footer"));
                }
                if count != records.len() as u64 {
                    return Err(corrupt(&format!(
                        "footer counts {count} records, file holds {}",
                        records.len()
                    )));
                }
                let actual = crc32fast::hash(&bytes[..crc_end]);
                if actual != stored {
                    return Err(corrupt(&format!("crc mismatch: stored {stored:08x}, computed {actual:08x}")));
                }
                debug_assert_eq!(bytes.len() - at as usize, FOOTER_LEN);
                break;
            }
            let len = len as usize;
            if len < RECORD_FIXED || !(len - RECORD_FIXED).is_multiple_of(8) {
                return Err(corrupt(&format!("invalid record length {len}")));
            }
            let body = cur.take(len).ok_or_else(|| corrupt("truncated record"))?;
            let mut rc = Cursor::new(body);
            let stream_id = rc.u16().unwrap();
            let timestamp_us = rc.u64().unwrap();
            let payload: Vec<f64> = (0..(len - RECORD_FIXED) / 8).map(|_| rc.f64().unwrap()).collect();
            let Some(spec) = streams.iter().find(|s| s.id == stream_id) else {
                return Err(corrupt(&format!("record on unregistered stream {stream_id}")));
            };
            if payload.len() != spec.dims as usize {
                return Err(corrupt(&format!(
                    "stream {stream_id} record has {} values, header declares {}",
                    payload.len(),
                    spec.dims
                )));
            }
            records.push(LogRecord {
                stream_id,
                timestamp_us,
                payload,
            });
        }
        Ok(Self { streams, records })
    }

    pub fn stream(&self, id: u16) -> Option<&StreamSpec> {
        self.streams.iter().find(|s| s.id == id)
    }

    /// Records of one stream, in file order.
    pub fn records_of(&self, id: u16) -> impl Iterator<Item = &LogRecord> {
        self.records.iter().filter(move |r| r.stream_id == id)
    }

    pub fn stats(&self) -> Vec<StreamStats> {
        self.streams
            .iter()
            .map(|spec| {
                let mut it = self.records_of(spec.id).map(|r| r.timestamp_us);
                let first = it.next();
                let (count, last) = it.fold((first.map_or(0, |_| 1), first), |(c, _), t| (c + 1, Some(t)));
                StreamStats {
                    spec: spec.clone(),
                    count,
                    first_us: first,
                    last_us: last,
                }
            })
            .collect()
    }
}
