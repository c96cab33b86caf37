//! `nuexo ctl step`: feeds JSON-lines tick descriptions through a
//! [`Controller`] and prints one JSON line per tick.
//!
//! Input line:
//!
//! ```json
//! {"timestamp_us": 2000,
//!  "master": {"shoulder": [1,0,0,0], "elbow": 0.3},
//!  "followers": [{"id": 1, "angles": [0,0,0,0,0,0,0,0,0,0,0,0,0]}]}
//! ```
//!
//! Every field except `followers[].id` and `followers[].angles` is optional
//! and defaults to rest. Follower poses default to the model's forward
//! kinematics of `angles`. The controller persists across lines, so the
//! tremor filter and staleness tracking see the whole sequence.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use nuexo_core::control::ControlSettings;
use nuexo_core::follower_sim::{joints, make_model, FollowerModel};
use nuexo_teleop::schema::FINGERS;
use nuexo_teleop::{Controller, FollowerStateMsg, MasterState, MsgType, WireMessage};
use serde::{Deserialize, Serialize};

#[derive(Debug, Args)]
pub struct StepArgs {
    /// Controller configuration (control.*, tremor.* keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Follower model preset.
    #[arg(long, default_value = "default")]
    pub preset: String,
    /// Follower ids registered with the controller (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub followers: Vec<u16>,
    /// Read ticks from this file instead of standard input.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MasterInput {
    pub shoulder: Option<[f64; 4]>,
    pub wrist: Option<[f64; 4]>,
    pub elbow: f64,
    pub fingers: [f64; FINGERS],
    pub shoulder_rate: [f64; 3],
    pub wrist_rate: [f64; 3],
    pub elbow_rate: f64,
    pub finger_rates: [f64; FINGERS],
    /// Upper-arm cuff wrench: torque xyz then force xyz.
    pub upper_arm_force: [f64; 6],
    pub forearm_force: [f64; 6],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowerInput {
    pub id: u16,
    pub angles: Vec<f64>,
    #[serde(default)]
    pub velocities: Option<Vec<f64>>,
    #[serde(default)]
    pub shoulder: Option<[f64; 4]>,
    #[serde(default)]
    pub wrist: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TickInput {
    #[serde(default)]
    pub timestamp_us: u64,
    #[serde(default)]
    pub master: MasterInput,
    #[serde(default)]
    pub followers: Vec<FollowerInput>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CommandOutput {
    pub follower_id: u16,
    pub torque: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct EventOutput {
    pub follower_id: u16,
    /// Ticks since the last state; `null` if none was ever received.
    pub age: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TickResult {
    pub tick: u64,
    pub timestamp_us: u64,
    pub commands: Vec<CommandOutput>,
    pub stale: Vec<EventOutput>,
}

const IDENTITY: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

/// Builds the master state through the wire schema so the same validation
/// (finite values, unit quaternions) applies as on the network.
pub fn master_state(m: &MasterInput, timestamp_us: u64) -> anyhow::Result<MasterState> {
    let mut p = Vec::with_capacity(MasterState::LEN);
    p.extend_from_slice(&m.shoulder.unwrap_or(IDENTITY));
    p.extend_from_slice(&m.wrist.unwrap_or(IDENTITY));
    p.push(m.elbow);
    p.extend_from_slice(&m.fingers);
    p.extend_from_slice(&m.shoulder_rate);
    p.extend_from_slice(&m.wrist_rate);
    p.push(m.elbow_rate);
    p.extend_from_slice(&m.finger_rates);
    p.extend_from_slice(&m.upper_arm_force);
    p.extend_from_slice(&m.forearm_force);
    Ok(MasterState::from_message(&WireMessage::new(MsgType::MasterState, 0, timestamp_us, p))?)
}

pub fn follower_state(f: &FollowerInput, model: &FollowerModel<f64>) -> anyhow::Result<FollowerStateMsg> {
    if f.angles.len() != joints::COUNT {
        bail!("follower {}: expected {} angles, got {}", f.id, joints::COUNT, f.angles.len());
    }
    let velocities = f.velocities.clone().unwrap_or_else(|| vec![0.0; joints::COUNT]);
    if velocities.len() != joints::COUNT {
        bail!("follower {}: expected {} velocities, got {}", f.id, joints::COUNT, velocities.len());
    }
    let poses = model.poses(&f.angles);
    let wxyz = |q: &nuexo_core::follower_sim::FollowerPoses<f64>, shoulder: bool| {
        let q = if shoulder { q.shoulder } else { q.wrist };
        [q.w, q.i, q.j, q.k]
    };
    let mut p = Vec::with_capacity(34);
    p.extend_from_slice(&f.angles);
    p.extend_from_slice(&velocities);
    p.extend_from_slice(&f.shoulder.unwrap_or_else(|| wxyz(&poses, true)));
    p.extend_from_slice(&f.wrist.unwrap_or_else(|| wxyz(&poses, false)));
    Ok(FollowerStateMsg::from_message(&WireMessage::new(MsgType::FollowerState, f.id, 0, p))?)
}

/// Applies one parsed tick to `controller`.
pub fn apply_tick(
    controller: &mut Controller,
    model: &FollowerModel<f64>,
    input: &TickInput,
) -> anyhow::Result<TickResult> {
    let master = master_state(&input.master, input.timestamp_us)?;
    for f in &input.followers {
        let state = follower_state(f, model)?;
        if !controller.update_follower(f.id, state) {
            bail!("follower {} is not registered (use --followers)", f.id);
        }
    }
    let tick = controller.tick_index();
    let out = controller.tick(&master, input.timestamp_us)?;
    Ok(TickResult {
        tick,
        timestamp_us: input.timestamp_us,
        commands: out
            .commands
            .iter()
            .map(|c| CommandOutput {
                follower_id: c.follower_id,
                torque: c.torque.to_vec(),
            })
            .collect(),
        stale: out
            .events
            .iter()
            .map(|e| EventOutput {
                follower_id: e.follower_id,
                age: e.age,
            })
            .collect(),
    })
}

pub fn step(args: &StepArgs, stdin: &mut dyn BufRead, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = crate::load_config(args.config.as_deref())?;
    let settings = ControlSettings::from_config(&cfg)?;
    let model = make_model(&args.preset)?;
    let mut controller = Controller::new(settings, args.followers.iter().map(|&id| (id, model.clone())).collect())?;
    let mut file;
    let reader: &mut dyn BufRead = match &args.input {
        Some(path) => {
            let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            file = std::io::BufReader::new(f);
            &mut file
        }
        None => stdin,
    };
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let input: TickInput = serde_json::from_str(&line).with_context(|| format!("line {}", n + 1))?;
        let result = apply_tick(&mut controller, &model, &input).with_context(|| format!("line {}", n + 1))?;
        serde_json::to_writer(&mut *out, &result)?;
        writeln!(out)?;
    }
    Ok(())
}
