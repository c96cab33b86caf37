//! Long-running master, controller and follower nodes over stream sockets.
//!
//! Each node runs one paced tick loop. Socket I/O happens on pump threads
//! that hand decoded messages to the tick loop through a bounded
//! [`MessageQueue`]; outgoing bytes go through per-connection channels, so
//! the tick loop never blocks on the network.

use std::collections::HashMap;
use std::io::{ErrorKind, Read};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{channel, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use nuexo_core::config::ConfigFile;
use nuexo_core::control::{quat_error, ControlSettings};
use nuexo_core::datalog::{streams, LogFile, LogRecord, LogWriter};
use nuexo_core::follower_sim::{joints, make_model};
use nuexo_core::kinematics::exo::{joints as exo_joints, ExoGeometry};

use crate::console;
use crate::controller::{Controller, STALENESS_TICKS};
use crate::master::{master_records, BaseOdometry, LogMaster, MasterEncoder, MasterSource, SyntheticMaster, Trajectory};
use crate::protocol::{encode_message, Decoder, MsgType, TimestampGuard, WireMessage};
use crate::queue::MessageQueue;
use crate::schema::{FollowerStateMsg, MasterState, TorqueCmd};
use crate::session::{
    check_tick_hz, command_record, follower_record, SimFollower, CONTROLLER_STREAM_ID, DEFAULT_TICK_HZ,
    MASTER_STREAM_ID, SIM_SUBSTEPS,
};
use crate::transport::{resolve, Backoff, Link, TcpLink};
use crate::TeleopError;

/// Environment variable naming the log output directory.
pub const LOG_DIR_ENV: &str = "NUEXO_LOG_DIR";
/// Heartbeat period of every node.
pub const HEARTBEAT_PERIOD: Duration = Duration::from_secs(1);
/// A master state older than this stops all commands.
pub const MASTER_STALE_AFTER: Duration = Duration::from_millis(500);
/// Controller ticks between follower-state forwards to console clients.
pub const CONSOLE_DECIMATION: u64 = 10;
/// Shoulder errors recorded before this time are treated as start-up transient.
pub const TRACKING_SETTLE: Duration = Duration::from_secs(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Master,
    Controller,
    Follower,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Self::Master => "master",
            Self::Controller => "controller",
            Self::Follower => "follower",
        }
    }
}

impl FromStr for Role {
    type Err = TeleopError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "master" => Ok(Self::Master),
            "controller" => Ok(Self::Controller),
            "follower" => Ok(Self::Follower),
            other => Err(TeleopError::Config(format!("unknown role {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeConfig {
    pub role: Role,
    /// Listen address (controller) or controller address (master, follower).
    pub endpoint: String,
    pub tick_hz: f64,
    /// Followers served by a controller; all use `preset`.
    pub follower_ids: Vec<u16>,
    /// Id of a follower node.
    pub follower_id: u16,
    pub preset: String,
    pub duration: Option<Duration>,
    /// Master source: a recorded log instead of the synthetic trajectory.
    pub replay: Option<PathBuf>,
    pub trajectory: SyntheticMaster,
    pub console_port: Option<u16>,
    pub console_assets: Option<PathBuf>,
    /// Overrides `NUEXO_LOG_DIR`.
    pub log_dir: Option<PathBuf>,
    pub settings: ControlSettings,
    pub exo: ExoGeometry<f64>,
    pub substeps: usize,
}

impl NodeConfig {
    pub fn new(role: Role, endpoint: impl Into<String>) -> Self {
        Self {
            role,
            endpoint: endpoint.into(),
            tick_hz: DEFAULT_TICK_HZ,
            follower_ids: vec![1],
            follower_id: 1,
            preset: "default".into(),
            duration: None,
            replay: None,
            trajectory: SyntheticMaster::sine(),
            console_port: None,
            console_assets: None,
            log_dir: None,
            settings: ControlSettings::default(),
            exo: ExoGeometry::default(),
            substeps: SIM_SUBSTEPS,
        }
    }

    /// Reads the `node.*` and `master.*` keys plus the controller and
    /// exoskeleton settings; absent keys keep their defaults.
    pub fn from_config(role: Role, cfg: &ConfigFile) -> Result<Self, TeleopError> {
        let mut c = Self::new(role, cfg.get_or("node.endpoint", "127.0.0.1:7400".to_string())?);
        c.tick_hz = cfg.get_or("node.tick_hz", c.tick_hz)?;
        if let Some(list) = cfg.raw("node.followers") {
            c.follower_ids = list
                .split(',')
                .map(|s| s.trim().parse::<u16>())
                .collect::<Result<_, _>>()
                .map_err(|e| cfg.invalid("node.followers", e.to_string()))?;
        }
        c.follower_id = cfg.get_or("node.follower_id", c.follower_id)?;
        c.preset = cfg.get_or("node.preset", c.preset)?;
        if let Some(s) = cfg.get::<f64>("node.duration_s")? {
            c.duration = Some(Duration::from_secs_f64(s.max(0.0)));
        }
        c.console_port = cfg.get("node.console_port")?;
        c.console_assets = cfg.get::<String>("node.console_assets")?.map(PathBuf::from);
        c.replay = cfg.get::<String>("master.replay")?.map(PathBuf::from);
        let joint = cfg.get_or("master.joint", exo_joints::SHOULDER_FLEXION)?;
        if joint >= exo_joints::COUNT {
            return Err(cfg.invalid("master.joint", format!("must be below {}", exo_joints::COUNT)).into());
        }
        let amplitude = cfg.get_or("master.amplitude", 0.4)?;
        let kind = cfg.get_or("master.trajectory", "sine".to_string())?;
        c.trajectory = SyntheticMaster::new(match kind.as_str() {
            "sine" => Trajectory::Sine {
                joint,
                amplitude,
                hz: cfg.get_or("master.hz", 0.5)?,
            },
            "step" => Trajectory::Step { joint, value: amplitude },
            "rest" => Trajectory::Rest,
            other => return Err(cfg.invalid("master.trajectory", format!("unknown trajectory {other:?}")).into()),
        });
        c.trajectory.finger_amplitude = cfg.get_or("master.finger_amplitude", 0.0)?;
        c.settings = ControlSettings::from_config(cfg)?;
        c.exo = ExoGeometry::from_config(cfg)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), TeleopError> {
        check_tick_hz(self.tick_hz)?;
        if self.substeps == 0 {
            return Err(TeleopError::Config("substeps must be positive".into()));
        }
        if self.role == Role::Controller && self.follower_ids.is_empty() {
            return Err(TeleopError::NoFollowers);
        }
        make_model(&self.preset)?;
        Ok(())
    }

    fn log_dir(&self) -> Option<PathBuf> {
        self.log_dir
            .clone()
            .or_else(|| std::env::var_os(LOG_DIR_ENV).map(PathBuf::from))
    }

    fn log_name(&self) -> String {
        match self.role {
            Role::Follower => format!("follower-{}.nxlg", self.follower_id),
            r => format!("{}.nxlg", r.name()),
        }
    }
}

/// Shoulder tracking statistics of one follower, as seen by the controller.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrackingStats {
    pub samples: u64,
    pub mean: f64,
    pub max: f64,
}

impl TrackingStats {
    fn add(&mut self, e: f64) {
        self.samples += 1;
        self.mean += (e - self.mean) / self.samples as f64;
        self.max = self.max.max(e);
    }
}

#[derive(Debug, Clone, Default)]
pub struct NodeSummary {
    pub ticks: u64,
    pub sent: HashMap<MsgType, u64>,
    pub received: HashMap<MsgType, u64>,
    pub staleness_events: u64,
    pub master_stale_events: u64,
    /// Ticks on which a follower applied no command (none received recently).
    pub withheld_ticks: u64,
    pub connects: u64,
    pub protocol_errors: u64,
    pub dropped: u64,
    pub log_path: Option<PathBuf>,
    pub log_records: u64,
    pub tracking: Vec<(u16, TrackingStats)>,
    pub console_port: Option<u16>,
}

impl NodeSummary {
    pub fn sent_of(&self, t: MsgType) -> u64 {
        self.sent.get(&t).copied().unwrap_or(0)
    }

    pub fn received_of(&self, t: MsgType) -> u64 {
        self.received.get(&t).copied().unwrap_or(0)
    }

    fn count_sent(&mut self, t: MsgType) {
        *self.sent.entry(t).or_default() += 1;
    }

    fn count_received(&mut self, t: MsgType) {
        *self.received.entry(t).or_default() += 1;
    }
}

/// Paced tick schedule on the process's monotonic clock.
struct Clock {
    start: Instant,
    period: Duration,
    next: Instant,
    last_us: Option<u64>,
}

impl Clock {
    fn new(hz: f64) -> Self {
        let start = Instant::now();
        Self {
            start,
            period: Duration::from_secs_f64(1.0 / hz),
            next: start,
            last_us: None,
        }
    }

    /// Sleeps until the next tick; returns a strictly increasing timestamp.
    fn wait(&mut self) -> u64 {
        let now = Instant::now();
        if self.next > now {
            std::thread::sleep(self.next - now);
        } else if now - self.next > self.period {
            // Overran by more than a tick: skip ahead instead of bursting.
            self.next = now;
        }
        self.next += self.period;
        let mut us = self.start.elapsed().as_micros() as u64;
        if let Some(last) = self.last_us {
            us = us.max(last + 1);
        }
        self.last_us = Some(us);
        us
    }

    fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

fn should_stop(stop: &AtomicBool, clock: &Clock, duration: Option<Duration>) -> bool {
    stop.load(Ordering::SeqCst) || duration.is_some_and(|d| clock.elapsed() >= d)
}

fn open_log(cfg: &NodeConfig) -> Result<Option<LogWriter>, TeleopError> {
    let Some(dir) = cfg.log_dir() else {
        return Ok(None);
    };
    std::fs::create_dir_all(&dir).map_err(TeleopError::Io)?;
    Ok(Some(LogWriter::create(dir.join(cfg.log_name()), &streams::standard())?))
}

fn close_log(log: Option<LogWriter>, summary: &mut NodeSummary) -> Result<(), TeleopError> {
    if let Some(w) = log {
        summary.log_path = Some(w.path().to_path_buf());
        summary.log_records = w.record_count();
        w.finish()?;
    }
    Ok(())
}

fn append(log: &mut Option<LogWriter>, r: &LogRecord) -> Result<(), TeleopError> {
    if let Some(w) = log {
        w.append(r)?;
    }
    Ok(())
}

/// Runs a node until `stop` is raised or the configured duration elapses,
/// then flushes and finalizes its log.
pub fn run_node(cfg: &NodeConfig, stop: Arc<AtomicBool>) -> Result<NodeSummary, TeleopError> {
    cfg.validate()?;
    match cfg.role {
        Role::Master => run_master(cfg, &stop),
        Role::Controller => run_controller(cfg, &stop),
        Role::Follower => run_follower(cfg, &stop),
    }
}

/// Client-side link to the controller with bounded exponential reconnect.
struct Uplink {
    addr: SocketAddr,
    link: Option<TcpLink>,
    backoff: Backoff,
    next_attempt: Instant,
}

impl Uplink {
    fn new(endpoint: &str) -> Result<Self, TeleopError> {
        Ok(Self {
            addr: resolve(endpoint)?,
            link: None,
            backoff: Backoff::default(),
            next_attempt: Instant::now(),
        })
    }

    /// Connected link, attempting a (re)connect when one is due.
    fn get(&mut self, summary: &mut NodeSummary) -> Option<&mut TcpLink> {
        if self.link.as_ref().is_some_and(TcpLink::is_closed) {
            self.drop_link();
        }
        if self.link.is_none() && Instant::now() >= self.next_attempt {
            match TcpLink::connect(&self.addr) {
                Ok(l) => {
                    self.link = Some(l);
                    self.backoff.reset();
                    summary.connects += 1;
                }
                Err(_) => self.next_attempt = Instant::now() + self.backoff.next_delay(),
            }
        }
        self.link.as_mut()
    }

    fn drop_link(&mut self) {
        self.link = None;
        self.next_attempt = Instant::now() + self.backoff.next_delay();
    }

    fn send(&mut self, msg: &WireMessage, summary: &mut NodeSummary) -> bool {
        let Some(link) = self.get(summary) else {
            return false;
        };
        match link.send(msg) {
            Ok(()) => {
                summary.count_sent(msg.msg_type);
                true
            }
            Err(_) => {
                self.drop_link();
                false
            }
        }
    }

    /// Drains received messages into `out`.
    fn receive(&mut self, summary: &mut NodeSummary, out: &mut MessageQueue) {
        let Some(link) = self.link.as_mut() else {
            return;
        };
        loop {
            match link.try_recv() {
                Ok(Some(msg)) => {
                    summary.count_received(msg.msg_type);
                    out.push((), msg);
                }
                Ok(None) => break,
                Err(TeleopError::Protocol(_)) => summary.protocol_errors += 1,
                Err(_) => {
                    self.drop_link();
                    break;
                }
            }
        }
    }
}

fn run_master(cfg: &NodeConfig, stop: &AtomicBool) -> Result<NodeSummary, TeleopError> {
    let mut source: Box<dyn MasterSource> = match &cfg.replay {
        Some(path) => Box::new(LogMaster::from_log(&LogFile::open(path)?)?),
        None => Box::new(cfg.trajectory.clone()),
    };
    let mut clock = Clock::new(cfg.tick_hz);
    let period_s = clock.period.as_secs_f64();
    let mut encoder = MasterEncoder::new(&cfg.exo, period_s)?;
    let mut odometry = BaseOdometry::default();
    let mut uplink = Uplink::new(&cfg.endpoint)?;
    let mut log = open_log(cfg)?;
    let mut summary = NodeSummary::default();
    let mut inbox = MessageQueue::default();
    let mut last_heartbeat: Option<Instant> = None;
    while !should_stop(stop, &clock, cfg.duration) {
        let ts = clock.wait();
        let Some(sample) = source.sample(clock.elapsed().as_secs_f64()) else {
            break;
        };
        let (state, reading) = encoder.encode(&sample)?;
        for r in master_records(ts, &reading, &state) {
            append(&mut log, &r)?;
        }
        append(&mut log, &odometry.advance(period_s, ts))?;
        uplink.send(&state.to_message(MASTER_STREAM_ID, ts), &mut summary);
        if last_heartbeat.is_none_or(|t| t.elapsed() >= HEARTBEAT_PERIOD) && uplink.link.is_some() {
            uplink.send(&WireMessage::heartbeat(MASTER_STREAM_ID, ts), &mut summary);
            last_heartbeat = Some(Instant::now());
        }
        uplink.receive(&mut summary, &mut inbox);
        inbox.drain().for_each(drop);
        summary.ticks += 1;
    }
    close_log(log, &mut summary)?;
    Ok(summary)
}

fn run_follower(cfg: &NodeConfig, stop: &AtomicBool) -> Result<NodeSummary, TeleopError> {
    let id = cfg.follower_id;
    let mut sim = SimFollower::new(id, make_model(&cfg.preset)?, None);
    let mut clock = Clock::new(cfg.tick_hz);
    let period_s = clock.period.as_secs_f64();
    let mut uplink = Uplink::new(&cfg.endpoint)?;
    let mut log = open_log(cfg)?;
    let mut summary = NodeSummary::default();
    let mut inbox = MessageQueue::default();
    let mut last_cmd_tick: Option<u64> = None;
    let mut last_heartbeat: Option<Instant> = None;
    while !should_stop(stop, &clock, cfg.duration) {
        let ts = clock.wait();
        let tick = summary.ticks;
        uplink.receive(&mut summary, &mut inbox);
        for (_, msg) in inbox.drain() {
            if msg.msg_type == MsgType::TorqueCmd && msg.stream_id == id {
                if let Ok(cmd) = TorqueCmd::from_message(&msg) {
                    sim.command = cmd.torque;
                    last_cmd_tick = Some(tick);
                }
            }
        }
        // Without a recent command the driver only holds the arm against gravity.
        if last_cmd_tick.is_none_or(|t| tick - t > STALENESS_TICKS) {
            sim.command = [0.0; joints::COUNT];
            summary.withheld_ticks += 1;
        }
        let m = sim.measure();
        append(&mut log, &follower_record(id, ts, &m))?;
        uplink.send(&m.to_message(id, ts), &mut summary);
        if last_heartbeat.is_none_or(|t| t.elapsed() >= HEARTBEAT_PERIOD) && uplink.link.is_some() {
            uplink.send(&WireMessage::heartbeat(id, ts), &mut summary);
            last_heartbeat = Some(Instant::now());
        }
        sim.advance(period_s, cfg.substeps)?;
        summary.ticks += 1;
    }
    summary.dropped = inbox.dropped();
    close_log(log, &mut summary)?;
    Ok(summary)
}

/// Kind of a connection accepted by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PeerKind {
    Socket,
    Console,
}

pub(crate) struct Peer {
    pub kind: PeerKind,
    pub tx: Sender<Vec<u8>>,
}

/// State shared between the controller's tick loop and its pump threads.
#[derive(Clone)]
pub(crate) struct Hub {
    pub queue: Arc<Mutex<MessageQueue<u64>>>,
    pub peers: Arc<Mutex<HashMap<u64, Peer>>>,
    pub next_id: Arc<AtomicU64>,
    pub protocol_errors: Arc<AtomicU64>,
    pub stop: Arc<AtomicBool>,
}

impl Hub {
    fn new() -> Self {
        Self {
            queue: Arc::new(Mutex::new(MessageQueue::default())),
            peers: Arc::default(),
            next_id: Arc::new(AtomicU64::new(1)),
            protocol_errors: Arc::default(),
            stop: Arc::default(),
        }
    }

    pub fn register(&self, kind: PeerKind, tx: Sender<Vec<u8>>) -> u64 {
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        self.peers.lock().expect("peer table poisoned").insert(id, Peer { kind, tx });
        id
    }

    pub fn unregister(&self, id: u64) {
        self.peers.lock().expect("peer table poisoned").remove(&id);
    }

    /// Decodes `bytes` from peer `id` and queues the messages. Returns false
    /// when the stream is corrupt and the peer should be dropped.
    pub fn ingest(&self, id: u64, decoder: &mut Decoder, guard: &mut TimestampGuard, bytes: &[u8]) -> bool {
        decoder.push(bytes);
        loop {
            match decoder.next_message() {
                Ok(Some(msg)) => {
                    if guard.check(&msg).is_err() {
                        self.protocol_errors.fetch_add(1, Ordering::SeqCst);
                        continue;
                    }
                    self.queue.lock().expect("queue poisoned").push(id, msg);
                }
                Ok(None) => return true,
                Err(_) => {
                    self.protocol_errors.fetch_add(1, Ordering::SeqCst);
                    return false;
                }
            }
        }
    }

    fn send_to(&self, id: u64, bytes: &[u8]) -> bool {
        let peers = self.peers.lock().expect("peer table poisoned");
        peers.get(&id).is_some_and(|p| p.tx.send(bytes.to_vec()).is_ok())
    }

    fn broadcast(&self, kind: Option<PeerKind>, bytes: &[u8]) {
        let peers = self.peers.lock().expect("peer table poisoned");
        for p in peers.values().filter(|p| kind.is_none_or(|k| p.kind == k)) {
            let _ = p.tx.send(bytes.to_vec());
        }
    }
}

/// Serves one socket peer: a reader loop here, a writer thread fed by the
/// peer's channel.
fn serve_socket(hub: Hub, stream: TcpStream) {
    let _ = stream.set_nodelay(true);
    let _ = stream.set_read_timeout(Some(Duration::from_millis(20)));
    let Ok(mut writer) = stream.try_clone() else {
        return;
    };
    let (tx, rx) = channel::<Vec<u8>>();
    let id = hub.register(PeerKind::Socket, tx);
    let write_thread = std::thread::spawn(move || {
        use std::io::Write;
        while let Ok(bytes) = rx.recv() {
            if writer.write_all(&bytes).is_err() {
                break;
            }
        }
        let _ = writer.shutdown(std::net::Shutdown::Both);
    });
    let mut reader = stream;
    let mut decoder = Decoder::new();
    let mut guard = TimestampGuard::new();
    let mut buf = [0u8; 8192];
    while !hub.stop.load(Ordering::SeqCst) {
        match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => {
                if !hub.ingest(id, &mut decoder, &mut guard, &buf[..n]) {
                    break;
                }
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted) => {}
            Err(_) => break,
        }
    }
    hub.unregister(id);
    let _ = reader.shutdown(std::net::Shutdown::Both);
    let _ = write_thread.join();
}

fn spawn_acceptor(hub: Hub, listener: TcpListener) -> Result<JoinHandle<()>, TeleopError> {
    listener.set_nonblocking(true)?;
    Ok(std::thread::spawn(move || {
        let mut workers = Vec::new();
        while !hub.stop.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, _)) => {
                    let _ = stream.set_nonblocking(false);
                    let h = hub.clone();
                    workers.push(std::thread::spawn(move || serve_socket(h, stream)));
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(Duration::from_millis(5)),
                Err(_) => std::thread::sleep(Duration::from_millis(5)),
            }
        }
        for w in workers {
            let _ = w.join();
        }
    }))
}

fn run_controller(cfg: &NodeConfig, stop: &AtomicBool) -> Result<NodeSummary, TeleopError> {
    let model = make_model(&cfg.preset)?;
    let mut controller = Controller::new(
        cfg.settings.clone(),
        cfg.follower_ids.iter().map(|&id| (id, model.clone())).collect(),
    )?;
    let listener = TcpListener::bind(resolve(&cfg.endpoint)?)?;
    let hub = Hub::new();
    let mut threads = vec![spawn_acceptor(hub.clone(), listener)?];
    let mut summary = NodeSummary::default();
    if let Some(port) = cfg.console_port {
        let host = resolve(&cfg.endpoint)?.ip();
        let (handle, bound) = console::spawn(hub.clone(), SocketAddr::new(host, port), cfg.console_assets.clone())?;
        summary.console_port = Some(bound.port());
        threads.push(handle);
    }

    let mut log = open_log(cfg)?;
    let mut clock = Clock::new(cfg.tick_hz);
    let mut master: Option<(MasterState, Instant)> = None;
    let mut master_stale = true;
    let mut routes: HashMap<u16, u64> = HashMap::new();
    let mut latest_states: HashMap<u16, (FollowerStateMsg, u64)> = HashMap::new();
    let mut tracking: HashMap<u16, TrackingStats> = HashMap::new();
    let mut last_heartbeat: Option<Instant> = None;
    let result = (|| -> Result<(), TeleopError> {
        while !should_stop(stop, &clock, cfg.duration) {
            let ts = clock.wait();
            let tick = summary.ticks;
            let inbox: Vec<(u64, WireMessage)> = hub.queue.lock().expect("queue poisoned").drain().collect();
            for (peer, msg) in inbox {
                summary.count_received(msg.msg_type);
                match msg.msg_type {
                    MsgType::MasterState => match MasterState::from_message(&msg) {
                        Ok(s) => master = Some((s, Instant::now())),
                        Err(_) => summary.protocol_errors += 1,
                    },
                    MsgType::FollowerState => match FollowerStateMsg::from_message(&msg) {
                        Ok(s) => {
                            if controller.update_follower(msg.stream_id, s.clone()) {
                                routes.insert(msg.stream_id, peer);
                                latest_states.insert(msg.stream_id, (s, msg.timestamp_us));
                            }
                        }
                        Err(_) => summary.protocol_errors += 1,
                    },
                    _ => {}
                }
            }

            let fresh = master.as_ref().filter(|(_, at)| at.elapsed() <= MASTER_STALE_AFTER);
            match fresh {
                Some((m, _)) => {
                    master_stale = false;
                    let out = controller.tick(m, ts)?;
                    summary.staleness_events += out.events.len() as u64;
                    for cmd in &out.commands {
                        append(&mut log, &command_record(cmd))?;
                        let bytes = encode_message(&cmd.to_message())?;
                        if routes.get(&cmd.follower_id).is_some_and(|&p| hub.send_to(p, &bytes)) {
                            summary.count_sent(MsgType::TorqueCmd);
                        }
                        if let Some((s, _)) = latest_states.get(&cmd.follower_id) {
                            if clock.elapsed() >= TRACKING_SETTLE {
                                let e = quat_error(s.shoulder.quaternion(), m.shoulder.quaternion())?.angle();
                                tracking.entry(cmd.follower_id).or_default().add(e);
                            }
                        }
                    }
                }
                None => {
                    if !master_stale {
                        summary.master_stale_events += 1;
                        master_stale = true;
                    }
                    controller.skip_tick();
                }
            }

            if tick % CONSOLE_DECIMATION == 0 {
                for (id, (s, stamp)) in &latest_states {
                    let bytes = encode_message(&s.to_message(*id, *stamp))?;
                    hub.broadcast(Some(PeerKind::Console), &bytes);
                }
            }
            if last_heartbeat.is_none_or(|t| t.elapsed() >= HEARTBEAT_PERIOD) {
                hub.broadcast(None, &encode_message(&WireMessage::heartbeat(CONTROLLER_STREAM_ID, ts))?);
                summary.count_sent(MsgType::Heartbeat);
                last_heartbeat = Some(Instant::now());
            }
            summary.ticks += 1;
        }
        Ok(())
    })();
    hub.stop.store(true, Ordering::SeqCst);
    for t in threads {
        let _ = t.join();
    }
    summary.protocol_errors += hub.protocol_errors.load(Ordering::SeqCst);
    summary.dropped = hub.queue.lock().expect("queue poisoned").dropped();
    let mut ids: Vec<_> = tracking.into_iter().collect();
    ids.sort_by_key(|(id, _)| *id);
    summary.tracking = ids;
    close_log(log, &mut summary)?;
    result.map(|()| summary)
}

/// Log file a node with `cfg` writes into its log directory.
pub fn log_file_name(cfg: &NodeConfig) -> String {
    cfg.log_name()
}
