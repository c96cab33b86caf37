//! `nuexo log inspect|export`.

use std::io::Write;
use std::path::Path;

use nuexo_core::datalog::{export_csv, LogFile, VERSION};

pub fn inspect(file: &Path, out: &mut dyn Write) -> anyhow::Result<()> {
    let log = LogFile::open(file)?;
    let len = std::fs::metadata(file)?.len();
    writeln!(out, "file: {}", file.display())?;
    writeln!(out, "format version: {VERSION}")?;
    writeln!(out, "size: {len} bytes")?;
    writeln!(out, "streams: {}", log.streams.len())?;
    writeln!(out, "records: {}", log.records.len())?;
    let first = log.records.iter().map(|r| r.timestamp_us).min();
    let last = log.records.iter().map(|r| r.timestamp_us).max();
    if let (Some(a), Some(b)) = (first, last) {
        writeln!(out, "time span: {a} .. {b} us ({:.6} s)", (b - a) as f64 * 1e-6)?;
    }
    writeln!(out, "id,name,dims,count,first_us,last_us,rate_hz,units")?;
    for s in log.stats() {
        let opt = |v: Option<u64>| v.map_or_else(String::new, |v| v.to_string());
        let rate = match (s.first_us, s.last_us) {
            (Some(a), Some(b)) if b > a && s.count > 1 => format!("{:.3}", (s.count - 1) as f64 / ((b - a) as f64 * 1e-6)),
            _ => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.spec.id,
            s.spec.name,
            s.spec.dims,
            s.count,
            opt(s.first_us),
            opt(s.last_us),
            rate,
            s.spec.units
        )?;
    }
    Ok(())
}

pub fn export(file: &Path, dir: &Path, out: &mut dyn Write) -> anyhow::Result<()> {
    let log = LogFile::open(file)?;
    for path in export_csv(&log, dir)? {
        writeln!(out, "{}", path.display())?;
    }
    Ok(())
}
