//! The `nuexo` command line: kinematic sweeps, golden controller steps,
//! teleoperation nodes, log inspection/export and the drift benchmark.

pub mod bench;
pub mod ctl;
pub mod kin;
pub mod log;
pub mod node;

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use nuexo_core::config::ConfigFile;

#[derive(Debug, Parser)]
#[command(name = "nuexo", version, about = "Exoskeleton teleoperation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kinematics tools.
    Kin {
        #[command(subcommand)]
        command: KinCommand,
    },
    /// Controller tools.
    Ctl {
        #[command(subcommand)]
        command: CtlCommand,
    },
    /// Run the master node (publishes exoskeleton state).
    Master(node::NodeArgs),
    /// Run the controller node (listens for master and followers).
    Controller(node::NodeArgs),
    /// Run a simulated follower node.
    Follower(node::NodeArgs),
    /// Session log tools.
    Log {
        #[command(subcommand)]
        command: LogCommand,
    },
    /// Benchmarks.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum KinCommand {
    /// GH-center displacement and ROM sweep tables as CSV.
    Sweep(kin::SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum CtlCommand {
    /// Evaluate controller ticks from JSON lines (one tick per line).
    Step(ctl::StepArgs),
}

#[derive(Debug, Subcommand)]
pub enum LogCommand {
    /// Print header and per-stream statistics.
    Inspect {
        file: PathBuf,
    },
    /// Write one CSV per stream.
    Export {
        file: PathBuf,
        /// Output directory.
        #[arg(long = "csv", value_name = "DIR")]
        csv: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Encoder vs. inertial drift benchmark over several seeds.
    Drift(bench::DriftArgs),
}

/// Loads `path` if given, otherwise an empty configuration (all defaults).
pub fn load_config(path: Option<&std::path::Path>) -> anyhow::Result<ConfigFile> {
    Ok(match path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::parse("")?,
    })
}

/// Runs one command. `input` feeds `ctl step` when it reads standard input;
/// `stop` ends long-running nodes.
pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write, stop: Arc<AtomicBool>) -> anyhow::Result<()> {
    match cli.command {
        Command::Kin {
            command: KinCommand::Sweep(args),
        } => kin::sweep(&args, out),
        Command::Ctl {
            command: CtlCommand::Step(args),
        } => ctl::step(&args, input, out),
        Command::Master(args) => node::run(nuexo_teleop::Role::Master, &args, out, stop),
        Command::Controller(args) => node::run(nuexo_teleop::Role::Controller, &args, out, stop),
        Command::Follower(args) => node::run(nuexo_teleop::Role::Follower, &args, out, stop),
        Command::Log {
            command: LogCommand::Inspect { file },
        } => log::inspect(&file, out),
        Command::Log {
            command: LogCommand::Export { file, csv },
        } => log::export(&file, &csv, out),
        Command::Bench {
            command: BenchCommand::Drift(args),
        } => bench::drift(&args, out),
    }
}
