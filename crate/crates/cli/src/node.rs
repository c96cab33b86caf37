//! `nuexo master|controller|follower`: builds a [`NodeConfig`] from the
//! configuration file and flags, runs the node until it stops and prints a
//! summary.

use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use clap::Args;
use nuexo_teleop::{run_node, MsgType, NodeConfig, NodeSummary, Role};

#[derive(Debug, Clone, Default, Args)]
pub struct NodeArgs {
    /// Configuration file (node.*, master.*, control.*, tremor.*, coupling.*, chain.* keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Controller address: listen address for the controller, peer address otherwise.
    #[arg(long, value_name = "ADDR")]
    pub endpoint: Option<String>,
    /// Master: replay the exoskeleton streams of a recorded log.
    #[arg(long, value_name = "LOGFILE")]
    pub replay: Option<PathBuf>,
    /// Follower model preset.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Stop after this many seconds.
    #[arg(long, value_name = "SECONDS")]
    pub duration: Option<f64>,
    /// Control tick rate (Hz).
    #[arg(long)]
    pub tick_hz: Option<f64>,
    /// Follower: id of this follower.
    #[arg(long)]
    pub id: Option<u16>,
    /// Controller: follower ids served (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub followers: Option<Vec<u16>>,
    /// Controller: serve the operator console on this port.
    #[arg(long, value_name = "P")]
    pub console_port: Option<u16>,
    /// Controller: directory of console assets.
    #[arg(long, value_name = "DIR")]
    pub console_assets: Option<PathBuf>,
    /// Log directory (overrides NUEXO_LOG_DIR).
    #[arg(long, value_name = "DIR")]
    pub log_dir: Option<PathBuf>,
}

/// Node configuration: file values first, then flag overrides.
pub fn node_config(role: Role, args: &NodeArgs) -> anyhow::Result<NodeConfig> {
    let cfg = crate::load_config(args.config.as_deref())?;
    let mut c = NodeConfig::from_config(role, &cfg)?;
    if let Some(e) = &args.endpoint {
        c.endpoint = e.clone();
    }
    if let Some(p) = &args.replay {
        c.replay = Some(p.clone());
    }
    if let Some(p) = &args.preset {
        c.preset = p.clone();
    }
    if let Some(d) = args.duration {
        anyhow::ensure!(d.is_finite() && d >= 0.0, "--duration must be a non-negative number of seconds");
        c.duration = Some(Duration::from_secs_f64(d));
    }
    if let Some(hz) = args.tick_hz {
        c.tick_hz = hz;
    }
    if let Some(id) = args.id {
        c.follower_id = id;
    }
    if let Some(ids) = &args.followers {
        c.follower_ids = ids.clone();
    }
    if let Some(p) = args.console_port {
        c.console_port = Some(p);
    }
    if let Some(d) = &args.console_assets {
        c.console_assets = Some(d.clone());
    }
    if let Some(d) = &args.log_dir {
        c.log_dir = Some(d.clone());
    }
    c.validate()?;
    Ok(c)
}

pub fn print_summary(role: Role, s: &NodeSummary, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "role: {}", role.name())?;
    writeln!(out, "ticks: {}", s.ticks)?;
    for t in MsgType::ALL {
        let (tx, rx) = (s.sent_of(t), s.received_of(t));
        if tx + rx > 0 {
            writeln!(out, "messages {t:?}: sent {tx}, received {rx}")?;
        }
    }
    writeln!(out, "connects: {}", s.connects)?;
    writeln!(out, "protocol errors: {}", s.protocol_errors)?;
    writeln!(out, "dropped: {}", s.dropped)?;
    match role {
        Role::Controller => {
            writeln!(out, "staleness events: {}", s.staleness_events)?;
            writeln!(out, "master stale events: {}", s.master_stale_events)?;
            for (id, t) in &s.tracking {
                writeln!(
                    out,
                    "follower {id} shoulder error: mean {:.6} rad, max {:.6} rad over {} ticks",
                    t.mean, t.max, t.samples
                )?;
            }
            if let Some(p) = s.console_port {
                writeln!(out, "console port: {p}")?;
            }
        }
        Role::Follower => writeln!(out, "withheld ticks: {}", s.withheld_ticks)?,
        Role::Master => {}
    }
    match &s.log_path {
        Some(p) => writeln!(out, "log: {} ({} records)", p.display(), s.log_records)?,
        None => writeln!(out, "log: disabled (set NUEXO_LOG_DIR or --log-dir)")?,
    }
    Ok(())
}

pub fn run(role: Role, args: &NodeArgs, out: &mut dyn Write, stop: Arc<AtomicBool>) -> anyhow::Result<()> {
    let cfg = node_config(role, args)?;
    let summary = run_node(&cfg, stop)?;
    print_summary(role, &summary, out)?;
    Ok(())
}
