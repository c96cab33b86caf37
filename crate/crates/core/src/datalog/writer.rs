use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, SyncSender};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::format::{encode_header, encode_record, LogRecord, StreamSpec, FOOTER_MARKER};
use super::LogError;

/// Default interval between flushes of buffered records to disk.
pub const DEFAULT_FLUSH_INTERVAL: Duration = Duration::from_millis(100);

/// Append-only writer for one log file.
///
/// Records are validated before any byte is written, so a rejected append
/// leaves the file untouched. [`LogWriter::finish`] writes the footer.
pub struct LogWriter {
    path: PathBuf,
    out: BufWriter<File>,
    crc: crc32fast::Hasher,
    streams: HashMap<u16, StreamSpec>,
    last_timestamp: HashMap<u16, u64>,
    count: u64,
    flush_interval: Duration,
    last_flush: Instant,
}

impl LogWriter {
    pub fn create(path: impl AsRef<Path>, streams: &[StreamSpec]) -> Result<Self, LogError> {
        Self::with_flush_interval(path, streams, DEFAULT_FLUSH_INTERVAL)
    }

    /// `flush_interval` of zero flushes after every record.
    pub fn with_flush_interval(
        path: impl AsRef<Path>,
        streams: &[StreamSpec],
        flush_interval: Duration,
    ) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let header = encode_header(streams)?;
        let mut registry = HashMap::new();
        for s in streams {
            if registry.insert(s.id, s.clone()).is_some() {
                return Err(LogError::Header(format!("stream {} registered twice", s.id)));
            }
        }
        let file = File::create(&path).map_err(|e| LogError::io(&path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(&header).map_err(|e| LogError::io(&path, e))?;
        out.flush().map_err(|e| LogError::io(&path, e))?;
        let mut crc = crc32fast::Hasher::new();
        crc.update(&header);
        Ok(Self {
            path,
            out,
            crc,
            streams: registry,
            last_timestamp: HashMap::new(),
            count: 0,
            flush_interval,
            last_flush: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record_count(&self) -> u64 {
        self.count
    }

    fn validate(&self, record: &LogRecord) -> Result<(), LogError> {
        let spec = self
            .streams
            .get(&record.stream_id)
            .ok_or(LogError::UnregisteredStream(record.stream_id))?;
        if record.payload.len() != spec.dims as usize {
            return Err(LogError::WrongDims {
                stream: record.stream_id,
                expected: spec.dims as usize,
                got: record.payload.len(),
            });
        }
        if record.payload.iter().any(|v| !v.is_finite()) {
            return Err(LogError::NonFinite(record.stream_id));
        }
        if let Some(&last) = self.last_timestamp.get(&record.stream_id) {
            if record.timestamp_us < last {
                return Err(LogError::TimestampRegression {
                    stream: record.stream_id,
                    last,
                    got: record.timestamp_us,
                });
            }
        }
        Ok(())
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), LogError> {
        self.validate(record)?;
        let bytes = encode_record(record);
        self.out.write_all(&bytes).map_err(|e| LogError::io(&self.path, e))?;
        self.crc.update(&bytes);
        self.last_timestamp.insert(record.stream_id, record.timestamp_us);
        self.count += 1;
        if self.last_flush.elapsed() >= self.flush_interval {
            self.flush()?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), LogError> {
        self.out.flush().map_err(|e| LogError::io(&self.path, e))?;
        self.last_flush = Instant::now();
        Ok(())
    }

    /// Writes the footer and syncs the file. Returns the record count.
    pub fn finish(mut self) -> Result<u64, LogError> {
        let mut footer = Vec::with_capacity(16);
        footer.extend_from_slice(&FOOTER_MARKER.to_le_bytes());
        footer.extend_from_slice(&self.count.to_le_bytes());
        self.crc.update(&footer);
        let crc = self.crc.clone().finalize();
        footer.extend_from_slice(&crc.to_le_bytes());
        self.out.write_all(&footer).map_err(|e| LogError::io(&self.path, e))?;
        self.out.flush().map_err(|e| LogError::io(&self.path, e))?;
        self.out.get_ref().sync_all().map_err(|e| LogError::io(&self.path, e))?;
        Ok(self.count)
    }
}

/// Writer running on its own thread, fed by a bounded queue so several
/// producers can log concurrently.
pub struct QueuedWriter {
    sender: SyncSender<LogRecord>,
    handle: JoinHandle<Result<u64, LogError>>,
}

impl QueuedWriter {
    /// Moves `writer` onto a thread; `capacity` bounds the queue (producers block when full).
    pub fn spawn(mut writer: LogWriter, capacity: usize) -> Self {
        let (sender, receiver) = sync_channel::<LogRecord>(capacity);
        let handle = std::thread::spawn(move || {
            for record in receiver {
                writer.append(&record)?;
            }
            writer.finish()
        });
        Self { sender, handle }
    }

    pub fn sender(&self) -> SyncSender<LogRecord> {
        self.sender.clone()
    }

    /// Closes the queue, waits for the writer and returns its record count or first error.
    pub fn finish(self) -> Result<u64, LogError> {
        drop(self.sender);
        self.handle
            .join()
            .unwrap_or_else(|_| Err(LogError::Header("writer thread panicked".into())))
    }
}
