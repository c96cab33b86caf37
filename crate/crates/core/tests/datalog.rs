use std::time::Duration;

use nalgebra::Vector3;
use nuexo_core::datalog::*;
use proptest::prelude::*;

const GOLDEN_HEX: &str = "4e584c47010002000100020003636d64024e6d04000100036f646f016d1a00000001000a00000000000000000000000000f83f00000000000000c01200000004000a00000000000000000000000000d03f1a0000000100140000000000000000000000000000000000000000000a40ffffffff030000000000000074ebd262";

fn golden_streams() -> Vec<StreamSpec> {
    vec![StreamSpec::new(1, "cmd", 2, "Nm"), StreamSpec::new(4, "odo", 1, "m")]
}

fn golden_records() -> Vec<LogRecord> {
    vec![
        LogRecord::new(1, 10, vec![1.5, -2.0]),
        LogRecord::new(4, 10, vec![0.25]),
        LogRecord::new(1, 20, vec![0.0, 3.25]),
    ]
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_log(path: &std::path::Path, streams: &[StreamSpec], records: &[LogRecord]) {
    let mut w = LogWriter::create(path, streams).unwrap();
    for r in records {
        w.append(r).unwrap();
    }
    w.finish().unwrap();
}

#[test]
fn byte_exact_golden_image() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("golden.nxlg");
    write_log(&path, &golden_streams(), &golden_records());
    assert_eq!(hex(&std::fs::read(&path).unwrap()), GOLDEN_HEX);
}

#[test]
fn round_trip_three_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rt.nxlg");
    write_log(&path, &golden_streams(), &golden_records());
    let log = LogFile::open(&path).unwrap();
    assert_eq!(log.streams, golden_streams());
    assert_eq!(log.records.len(), 3);
    for (a, b) in log.records.iter().zip(golden_records().iter()) {
        assert!(a.bit_eq(b));
    }
}

#[test]
fn regression_rejected_and_file_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reg.nxlg");
    let mut w = LogWriter::with_flush_interval(&path, &golden_streams(), Duration::ZERO).unwrap();
    w.append(&LogRecord::new(1, 100, vec![1.0, 2.0])).unwrap();
    let before = std::fs::read(&path).unwrap();
    assert!(matches!(
        w.append(&LogRecord::new(1, 99, vec![1.0, 2.0])),
        Err(LogError::TimestampRegression { stream: 1, last: 100, got: 99 })
    ));
    assert!(matches!(w.append(&LogRecord::new(9, 200, vec![])), Err(LogError::UnregisteredStream(9))));
    assert!(matches!(w.append(&LogRecord::new(1, 200, vec![1.0])), Err(LogError::WrongDims { .. })));
    assert!(matches!(w.append(&LogRecord::new(1, 200, vec![f64::NAN, 0.0])), Err(LogError::NonFinite(1))));
    w.flush().unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), before);
    // Other streams keep their own clocks.
    w.append(&LogRecord::new(4, 50, vec![0.0])).unwrap();
    assert_eq!(w.finish().unwrap(), 2);
}

#[test]
fn interleaved_streams_keep_per_stream_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mix.nxlg");
    let streams = streams::standard();
    let mut w = LogWriter::create(&path, &streams).unwrap();
    let mut expected: std::collections::BTreeMap<u16, Vec<u64>> = Default::default();
    for k in 0..600u64 {
        let spec = &streams[(k * 7 % 6) as usize];
        let ts = k * 1000 + (k % 3);
        w.append(&LogRecord::new(spec.id, ts, vec![k as f64; spec.dims as usize])).unwrap();
        expected.entry(spec.id).or_default().push(ts);
    }
    w.finish().unwrap();
    let log = LogFile::open(&path).unwrap();
    for (id, ts) in expected {
        let got: Vec<u64> = log.records_of(id).map(|r| r.timestamp_us).collect();
        assert_eq!(got, ts);
    }
    let stats = log.stats();
    assert!(stats.iter().all(|s| s.count == 100));
}

#[test]
fn corruption_reports_position() {
    let bytes: Vec<u8> = (0..GOLDEN_HEX.len() / 2)
        .map(|i| u8::from_str_radix(&GOLDEN_HEX[2 * i..2 * i + 2], 16).unwrap())
        .collect();
    assert!(LogFile::parse(&bytes).is_ok());
    // Flip a payload byte: crc fails, reported at the footer.
    let mut flipped = bytes.clone();
    flipped[50] ^= 0x01;
    match LogFile::parse(&flipped) {
        Err(LogError::Corrupt { offset, reason }) => {
            assert_eq!(offset as usize, bytes.len() - 16);
            assert!(reason.contains("crc"));
        }
        other => panic!("unexpected {other:?}"),
    }
    // Broken length prefix of the second record.
    let header_len = 4 + 2 + 2 + (4 + 1 + 3 + 1 + 2) + (4 + 1 + 3 + 1 + 1);
    let second = header_len + 4 + 26;
    let mut bad_len = bytes.clone();
    bad_len[second] = 0x05;
    match LogFile::parse(&bad_len) {
        Err(LogError::Corrupt { offset, .. }) => assert_eq!(offset as usize, second),
        other => panic!("unexpected {other:?}"),
    }
    // Truncated (not finalized).
    assert!(matches!(
        LogFile::parse(&bytes[..bytes.len() - 16]),
        Err(LogError::Corrupt { .. })
    ));
    assert!(matches!(LogFile::parse(b"XXXX"), Err(LogError::Header(_))));
}

#[test]
fn replay_order_and_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.nxlg");
    write_log(&path, &golden_streams(), &[]);
    let log = LogFile::open(&path).unwrap();
    let n = replay(&log, Pace::AsFastAsPossible, |_| Ok::<_, ()>(())).unwrap();
    assert_eq!(n, 0);

    let path = dir.path().join("ties.nxlg");
    let records = vec![
        LogRecord::new(4, 5, vec![1.0]),
        LogRecord::new(4, 10, vec![2.0]),
        LogRecord::new(1, 7, vec![5.0, 0.0]),
        LogRecord::new(1, 10, vec![3.0, 0.0]),
        LogRecord::new(4, 10, vec![4.0]),
    ];
    write_log(&path, &golden_streams(), &records);
    let log = LogFile::open(&path).unwrap();
    let mut seen = Vec::new();
    replay(&log, Pace::AsFastAsPossible, |r| {
        seen.push(r.payload[0]);
        Ok::<_, ()>(())
    })
    .unwrap();
    assert_eq!(seen, vec![1.0, 5.0, 3.0, 2.0, 4.0]);
    let mut again = Vec::new();
    replay(&log, Pace::AsFastAsPossible, |r| {
        again.push(r.payload[0]);
        Ok::<_, ()>(())
    })
    .unwrap();
    assert_eq!(seen, again);
}

#[test]
fn wall_clock_pacing_takes_recorded_time() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pace.nxlg");
    let records: Vec<_> = (0..5).map(|k| LogRecord::new(4, k * 20_000, vec![0.0])).collect();
    write_log(&path, &golden_streams(), &records);
    let log = LogFile::open(&path).unwrap();
    let start = std::time::Instant::now();
    replay(&log, Pace::WallClock { speed: 1.0 }, |_| Ok::<_, ()>(())).unwrap();
    assert!(start.elapsed() >= Duration::from_millis(80));
}

#[test]
fn queued_writer_from_many_producers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.nxlg");
    let streams = streams::standard();
    let writer = QueuedWriter::spawn(LogWriter::create(&path, &streams).unwrap(), 16);
    std::thread::scope(|scope| {
        for spec in &streams {
            let tx = writer.sender();
            scope.spawn(move || {
                for k in 0..50u64 {
                    tx.send(LogRecord::new(spec.id, k, vec![0.5; spec.dims as usize])).unwrap();
                }
            });
        }
    });
    assert_eq!(writer.finish().unwrap(), 300);
    assert_eq!(LogFile::open(&path).unwrap().records.len(), 300);
}

#[test]
fn csv_export_round_trips_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.nxlg");
    let records = vec![
        LogRecord::new(1, 1, vec![0.1, -1e-300]),
        LogRecord::new(1, 2, vec![1.0 / 3.0, 2.5e10]),
    ];
    write_log(&path, &golden_streams(), &records);
    let log = LogFile::open(&path).unwrap();
    let files = export_csv(&log, dir.path().join("csv")).unwrap();
    assert_eq!(files.len(), 2);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("timestamp_us,v0,v1"));
    for r in &records {
        let parts: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(parts[0].parse::<u64>().unwrap(), r.timestamp_us);
        for (s, v) in parts[1..].iter().zip(r.payload.iter()) {
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}

#[test]
fn odometry_constant_acceleration() {
    let sample: ImuSample<f64> = ImuSample {
        accel: Vector3::new(1.0, 0.0, 9.81),
        gyro: Vector3::zeros(),
    };
    let traj = odometry_integrate(&vec![sample; 1000], 0.001, OdometryState::default());
    let last = traj.last().unwrap();
    assert!((last.position[0] - 0.5).abs() < 1e-3);
    assert!(last.position[1].abs() < 1e-12 && last.position[2].abs() < 1e-9);
}

#[test]
fn odometry_yaw_integration() {
    let sample: ImuSample<f64> = ImuSample {
        accel: Vector3::new(0.0, 0.0, 9.81),
        gyro: Vector3::new(0.0, 0.0, 0.1),
    };
    let traj = odometry_integrate(&vec![sample; 10_000], 0.001, OdometryState::default());
    let last = traj.last().unwrap();
    let (_, _, yaw) = last.orientation.euler_angles();
    assert!((yaw - 1.0).abs() < 1e-6, "yaw {yaw}");
    assert!(last.position.norm() < 1e-9);
    let p = last.payload();
    assert_eq!(p.len(), 7);
}

proptest! {
    #[test]
    fn arbitrary_finite_payloads_round_trip(
        values in proptest::collection::vec(
            prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(-0.0), Just(f64::MIN_POSITIVE / 2.0)],
            1..40,
        ),
        step in 0u64..1000,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.nxlg");
        let dims = values.len() as u16;
        let spec = vec![StreamSpec::new(3, "finger", dims, "rad")];
        let records: Vec<_> = (0..5).map(|k| LogRecord::new(3, k * step, values.clone())).collect();
        write_log(&path, &spec, &records);
        let log = LogFile::open(&path).unwrap();
        for (a, b) in log.records.iter().zip(records.iter()) {
            prop_assert!(a.bit_eq(b));
        }
    }
}
