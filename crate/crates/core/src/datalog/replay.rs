use std::time::{Duration, Instant};

use super::format::LogRecord;
use super::reader::LogFile;

/// Replay pacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pace {
    /// Emit as fast as the sink accepts records.
    AsFastAsPossible,
    /// Follow the recorded timestamps, scaled by `speed` (1.0 = wall clock).
    WallClock { speed: f64 },
}

/// Records in global replay order: by timestamp, then stream id, then file order.
pub fn replay_order(log: &LogFile) -> Vec<&LogRecord> {
    let mut order: Vec<&LogRecord> = log.records.iter().collect();
    // Stable sort keeps file order for equal keys.
    order.sort_by_key(|r| (r.timestamp_us, r.stream_id));
    order
}

/// Feeds every record to `sink` in replay order. Stops at the first sink
/// error. Returns the number of records emitted.
pub fn replay<E>(log: &LogFile, pace: Pace, mut sink: impl FnMut(&LogRecord) -> Result<(), E>) -> Result<u64, E> {
    let order = replay_order(log);
    let start = Instant::now();
    let origin = order.first().map_or(0, |r| r.timestamp_us);
    let mut emitted = 0;
    for record in order {
        if let Pace::WallClock { speed } = pace {
            if speed > 0.0 {
                let due = Duration::from_secs_f64((record.timestamp_us - origin) as f64 * 1e-6 / speed);
                if let Some(wait) = due.checked_sub(start.elapsed()) {
                    std::thread::sleep(wait);
                }
            }
        }
        sink(record)?;
        emitted += 1;
    }
    Ok(emitted)
}
