use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::reader::LogFile;
use super::LogError;

/// Writes one CSV per stream into `dir` (`<id>_<name>.csv`, columns
/// `timestamp_us,v0,v1,...`). Values use the shortest representation that
/// round-trips exactly. Returns the files written.
pub fn export_csv(log: &LogFile, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, LogError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| LogError::io(dir, e))?;
    let mut written = Vec::new();
    for spec in &log.streams {
        let mut text = String::from("timestamp_us");
        for i in 0..spec.dims {
            let _ = write!(text, ",v{i}");
        }
        text.push('\n');
        for r in log.records_of(spec.id) {
            let _ = write!(text, "{}", r.timestamp_us);
            for v in &r.payload {
                let _ = write!(text, ",{v:?}");
            }
            text.push('\n');
        }
        let path = dir.join(format!("{}_{}.csv", spec.id, spec.name));
        std::fs::write(&path, text).map_err(|e| LogError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
