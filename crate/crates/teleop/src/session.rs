//! Single-process teleoperation session over loopback links: master,
//! controller and followers share one clock and run in a fixed order each
//! tick, so identical inputs produce identical logs.

use std::path::Path;

use nalgebra::DVector;
use nuexo_core::control::{quat_error, ControlSettings};
use nuexo_core::datalog::{replay_order, streams, LogFile, LogRecord, LogWriter};
use nuexo_core::follower_sim::{self, joints, EncoderNoise, FollowerModel, FollowerState};
use nuexo_core::kinematics::exo::ExoGeometry;

use crate::controller::{Controller, StalenessEvent};
use crate::master::{master_records, BaseOdometry, MasterEncoder, MasterSample, MasterSource};
use crate::protocol::{MsgType, WireMessage};
use crate::schema::{FollowerStateMsg, MasterState, TorqueCmd};
use crate::transport::{loopback_pair, Link, LoopbackLink};
use crate::TeleopError;

/// Stream id of the master node's messages.
pub const MASTER_STREAM_ID: u16 = 0;
/// Stream id of the controller node's heartbeats.
pub const CONTROLLER_STREAM_ID: u16 = 0xFFFF;
pub const DEFAULT_TICK_HZ: f64 = 500.0;
/// Simulator steps per control tick (1 kHz integration at the default rate).
pub const SIM_SUBSTEPS: usize = 2;
pub const MIN_TICK_HZ: f64 = 50.0;
pub const MAX_TICK_HZ: f64 = 1000.0;

pub fn check_tick_hz(hz: f64) -> Result<(), TeleopError> {
    if (MIN_TICK_HZ..=MAX_TICK_HZ).contains(&hz) {
        Ok(())
    } else {
        Err(TeleopError::Config(format!("tick rate {hz} Hz outside [{MIN_TICK_HZ}, {MAX_TICK_HZ}]")))
    }
}

/// Tick period in whole microseconds.
pub fn tick_period_us(hz: f64) -> u64 {
    (1e6 / hz).round() as u64
}

/// Torque applied by the low-level driver: the command plus the follower's
/// own gravity holding torque.
pub fn driver_torque(cmd: &[f64; joints::COUNT], model: &FollowerModel<f64>, angles: &[f64]) -> DVector<f64> {
    model.gravity_torque(angles) + DVector::from_column_slice(cmd)
}

/// One simulated follower behind the driver shim.
#[derive(Debug, Clone)]
pub struct SimFollower {
    pub id: u16,
    pub model: FollowerModel<f64>,
    pub state: FollowerState<f64>,
    pub command: [f64; joints::COUNT],
    noise: Option<EncoderNoise>,
}

impl SimFollower {
    pub fn new(id: u16, model: FollowerModel<f64>, noise: Option<EncoderNoise>) -> Self {
        Self {
            id,
            model,
            state: FollowerState::at_rest(),
            command: [0.0; joints::COUNT],
            noise,
        }
    }

    pub fn measure(&mut self) -> FollowerStateMsg {
        let m = follower_sim::measure(&self.state, &self.model, self.noise.as_mut());
        FollowerStateMsg::from_measurement(&m)
    }

    /// Integrates one control period with the held command.
    pub fn advance(&mut self, period_s: f64, substeps: usize) -> Result<(), TeleopError> {
        let dt = period_s / substeps as f64;
        for _ in 0..substeps {
            let tau = driver_torque(&self.command, &self.model, self.state.config.angles.as_slice());
            self.state = follower_sim::step(&self.state, &tau, dt, &self.model)?;
        }
        Ok(())
    }
}

/// Log record of a follower state: id followed by the 34-float payload.
pub fn follower_record(id: u16, timestamp_us: u64, state: &FollowerStateMsg) -> LogRecord {
    let mut p = Vec::with_capacity(1 + FollowerStateMsg::LEN);
    p.push(f64::from(id));
    p.extend(state.to_payload());
    LogRecord::new(streams::FOLLOWER_STATE, timestamp_us, p)
}

/// Log record of a torque command: follower id followed by 13 torques.
pub fn command_record(cmd: &TorqueCmd) -> LogRecord {
    let mut p = Vec::with_capacity(1 + TorqueCmd::LEN);
    p.push(f64::from(cmd.follower_id));
    p.extend_from_slice(&cmd.torque);
    LogRecord::new(streams::TELEOP_CMD, cmd.timestamp_us, p)
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub tick_hz: f64,
    pub substeps: usize,
    pub duration_s: f64,
    pub followers: Vec<(u16, FollowerModel<f64>)>,
    pub settings: ControlSettings,
    pub exo: ExoGeometry<f64>,
    /// Encoder noise `(sigma, seed)`; follower `i` uses `seed + i`.
    pub encoder_noise: Option<(f64, u64)>,
    /// Follower ids whose state messages are suppressed over a tick range
    /// `[from, to)`, to exercise the staleness rule.
    pub silences: Vec<(u16, u64, u64)>,
}

impl SessionConfig {
    pub fn new(followers: Vec<(u16, FollowerModel<f64>)>, duration_s: f64) -> Self {
        Self {
            tick_hz: DEFAULT_TICK_HZ,
            substeps: SIM_SUBSTEPS,
            duration_s,
            followers,
            settings: ControlSettings::default(),
            exo: ExoGeometry::default(),
            encoder_noise: None,
            silences: Vec::new(),
        }
    }
}

/// Per-tick tracking of one follower, sampled at the start of each tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FollowerTrace {
    pub id: u16,
    /// Shoulder orientation error angle (rad).
    pub shoulder: Vec<f64>,
    /// Absolute elbow error (rad).
    pub elbow: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SessionReport {
    pub ticks: u64,
    pub commands: Vec<TorqueCmd>,
    pub events: Vec<StalenessEvent>,
    pub traces: Vec<FollowerTrace>,
    pub log_records: u64,
}

impl SessionReport {
    pub fn commands_for(&self, id: u16) -> impl Iterator<Item = &TorqueCmd> {
        self.commands.iter().filter(move |c| c.follower_id == id)
    }
}

struct Endpoint {
    sim: SimFollower,
    link: LoopbackLink,
    trace: FollowerTrace,
}

fn log_append(log: &mut Option<LogWriter>, record: &LogRecord) -> Result<(), TeleopError> {
    if let Some(w) = log {
        w.append(record)?;
    }
    Ok(())
}

/// Runs a loopback session, optionally logging all six streams to `log_path`.
pub fn run_loopback(
    cfg: &SessionConfig,
    source: &mut dyn MasterSource,
    log_path: Option<&Path>,
) -> Result<SessionReport, TeleopError> {
    check_tick_hz(cfg.tick_hz)?;
    if cfg.substeps == 0 {
        return Err(TeleopError::Config("substeps must be positive".into()));
    }
    let period_us = tick_period_us(cfg.tick_hz);
    let period_s = period_us as f64 * 1e-6;
    let mut controller = Controller::new(cfg.settings.clone(), cfg.followers.clone())?;
    let mut encoder = MasterEncoder::new(&cfg.exo, period_s)?;
    let mut odometry = BaseOdometry::default();
    let (mut master_tx, mut ctrl_from_master) = loopback_pair();
    let mut endpoints = Vec::with_capacity(cfg.followers.len());
    let mut ctrl_links = Vec::with_capacity(cfg.followers.len());
    for (i, (id, model)) in cfg.followers.iter().enumerate() {
        let noise = match cfg.encoder_noise {
            Some((sigma, seed)) => Some(EncoderNoise::new(sigma, seed + i as u64)?),
            None => None,
        };
        let (a, b) = loopback_pair();
        endpoints.push(Endpoint {
            sim: SimFollower::new(*id, model.clone(), noise),
            link: a,
            trace: FollowerTrace {
                id: *id,
                ..Default::default()
            },
        });
        ctrl_links.push(b);
    }
    let mut log = match log_path {
        Some(p) => Some(LogWriter::create(p, &streams::standard())?),
        None => None,
    };

    let n_ticks = (cfg.duration_s * cfg.tick_hz).round() as u64;
    let mut report = SessionReport::default();
    let mut latest_master: Option<MasterState> = None;
    for k in 0..n_ticks {
        let t_us = k * period_us;
        let t = t_us as f64 * 1e-6;

        // Followers publish their state.
        let mut measured = Vec::with_capacity(endpoints.len());
        for ep in &mut endpoints {
            let m = ep.sim.measure();
            let silent = cfg.silences.iter().any(|&(id, from, to)| id == ep.sim.id && (from..to).contains(&k));
            if !silent {
                log_append(&mut log, &follower_record(ep.sim.id, t_us, &m))?;
                ep.link.send(&m.to_message(ep.sim.id, t_us))?;
            }
            measured.push(m);
        }

        // Master samples the exoskeleton.
        let Some(sample): Option<MasterSample> = source.sample(t) else {
            break;
        };
        let (state, reading) = encoder.encode(&sample)?;
        for r in master_records(t_us, &reading, &state) {
            log_append(&mut log, &r)?;
        }
        log_append(&mut log, &odometry.advance(period_s, t_us))?;
        master_tx.send(&state.to_message(MASTER_STREAM_ID, t_us))?;
        for (ep, m) in endpoints.iter_mut().zip(&measured) {
            ep.trace.shoulder.push(quat_error(m.shoulder.quaternion(), state.shoulder.quaternion())?.angle());
            ep.trace.elbow.push((state.elbow - m.angles[joints::ELBOW]).abs());
        }

        // Controller.
        while let Some(msg) = ctrl_from_master.try_recv()? {
            if msg.msg_type == MsgType::MasterState {
                latest_master = Some(MasterState::from_message(&msg)?);
            }
        }
        for link in &mut ctrl_links {
            while let Some(msg) = link.try_recv()? {
                if msg.msg_type == MsgType::FollowerState {
                    controller.update_follower(msg.stream_id, FollowerStateMsg::from_message(&msg)?);
                }
            }
        }
        if let Some(master) = &latest_master {
            let out = controller.tick(master, t_us)?;
            for cmd in &out.commands {
                log_append(&mut log, &command_record(cmd))?;
                let i = cfg.followers.iter().position(|(id, _)| *id == cmd.follower_id).expect("registered");
                ctrl_links[i].send(&cmd.to_message())?;
            }
            report.commands.extend(out.commands);
            report.events.extend(out.events);
        }

        // Driver shims apply the newest command and the simulators advance.
        for ep in &mut endpoints {
            while let Some(msg) = ep.link.try_recv()? {
                if msg.msg_type == MsgType::TorqueCmd {
                    ep.sim.command = TorqueCmd::from_message(&msg)?.torque;
                }
            }
            ep.sim.advance(period_s, cfg.substeps)?;
        }
        report.ticks += 1;
    }
    report.traces = endpoints.into_iter().map(|e| e.trace).collect();
    if let Some(w) = log {
        report.log_records = w.record_count();
        w.finish()?;
    }
    Ok(report)
}

/// Feeds the recorded master and follower streams of `log` through a fresh
/// controller and returns the torque command records it produces.
pub fn replay_commands(
    log: &LogFile,
    followers: Vec<(u16, FollowerModel<f64>)>,
    settings: &ControlSettings,
    exo: &ExoGeometry<f64>,
    tick_hz: f64,
) -> Result<Vec<LogRecord>, TeleopError> {
    check_tick_hz(tick_hz)?;
    let period_s = tick_period_us(tick_hz) as f64 * 1e-6;
    let mut controller = Controller::new(settings.clone(), followers)?;
    let mut encoder = MasterEncoder::new(exo, period_s)?;
    let mut out = Vec::new();
    let mut sample = MasterSample::at_rest();
    let mut master: Option<MasterState> = None;
    let order = replay_order(log);
    let mut i = 0;
    while i < order.len() {
        let ts = order[i].timestamp_us;
        let mut have_master = false;
        while i < order.len() && order[i].timestamp_us == ts {
            let r = order[i];
            match r.stream_id {
                streams::FOLLOWER_STATE => {
                    let msg = WireMessage::new(MsgType::FollowerState, r.payload[0] as u16, ts, r.payload[1..].to_vec());
                    controller.update_follower(msg.stream_id, FollowerStateMsg::from_message(&msg)?);
                }
                streams::EXO_KINEMATICS => {
                    sample.exo = r.payload[..6].try_into().expect("exo angles");
                    have_master = true;
                }
                streams::FINGER => sample.fingers = r.payload[..6].try_into().expect("finger angles"),
                streams::BINDING_FORCE => {
                    sample.upper_arm_force = nuexo_core::control::BindingForce::from_slice(&r.payload[..6]);
                    sample.forearm_force = nuexo_core::control::BindingForce::from_slice(&r.payload[6..]);
                }
                _ => {}
            }
            i += 1;
        }
        if have_master {
            master = Some(encoder.encode(&sample)?.0);
        }
        if let Some(m) = &master {
            out.extend(controller.tick(m, ts)?.commands.iter().map(command_record));
        }
    }
    Ok(out)
}

/// Writes `records` to a log with the standard stream directory.
pub fn write_log<'a>(path: &Path, records: impl IntoIterator<Item = &'a LogRecord>) -> Result<u64, TeleopError> {
    let mut w = LogWriter::create(path, &streams::standard())?;
    for r in records {
        w.append(r)?;
    }
    Ok(w.finish()?)
}
