//! `nuexo kin sweep`: GH-center displacement over the linkage motor angle
//! and a per-axis ROM acceptance sweep.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use nuexo_core::csvfmt::fmt6;
use nuexo_core::kinematics::{check_rom, gh_center_displacement, ExoGeometry, JointConfig, RomLimits};

pub const GH_HEADER: &str = "theta1_rad,theta2_rad,dx_m,dy_m,dz_m";
pub const ROM_HEADER: &str = "axis,angle_deg,angle_rad,within";
pub const GH_FILE: &str = "gh_displacement.csv";
pub const ROM_FILE: &str = "rom_sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Gh,
    Rom,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Kinematics configuration (coupling.*, chain.*, rom.* keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Table printed to standard output when --out is not given.
    #[arg(long, value_enum, default_value = "gh")]
    pub table: Table,
    /// Write both tables into this directory instead.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// First linkage motor angle (rad).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub from: f64,
    /// Last linkage motor angle (rad).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub to: f64,
    /// Motor angle increment (rad).
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// ROM sweep increment (degrees).
    #[arg(long, default_value_t = 1.0)]
    pub rom_step_deg: f64,
    /// ROM sweep margin beyond each limit (degrees).
    #[arg(long, default_value_t = 5.0)]
    pub rom_margin_deg: f64,
}

/// Evenly spaced samples from `from` to `to` inclusive (by index, so the
/// end point does not drift with accumulated rounding).
pub fn samples(from: f64, to: f64, step: f64) -> anyhow::Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || step <= 0.0 || to < from {
        bail!("sweep needs finite bounds with from <= to and a positive step");
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| from + k as f64 * step).collect())
}

pub fn gh_table(geometry: &ExoGeometry<f64>, theta1: &[f64]) -> anyhow::Result<String> {
    let d = gh_center_displacement(theta1, geometry)?;
    let mut text = format!("{GH_HEADER}\n");
    for (t, d) in theta1.iter().zip(&d) {
        let theta2 = geometry.coupling.linkage_angle(*t);
        let _ = writeln!(text, "{},{},{},{},{}", fmt6(*t), fmt6(theta2), fmt6(d[0]), fmt6(d[1]), fmt6(d[2]));
    }
    Ok(text)
}

/// Sweeps each axis alone (other joints at zero) across its range plus a
/// margin and records whether the configuration is accepted.
pub fn rom_table(limits: &RomLimits<f64>, step_deg: f64, margin_deg: f64) -> anyhow::Result<String> {
    let mut text = format!("{ROM_HEADER}\n");
    for l in limits.limits() {
        let lo = l.min.to_degrees().floor() - margin_deg;
        let hi = l.max.to_degrees().ceil() + margin_deg;
        for deg in samples(lo, hi, step_deg)? {
            let mut q = [0.0; nuexo_core::kinematics::exo::joints::COUNT];
            let rad = deg.to_radians();
            q[l.axis.joint()] = rad;
            let verdict = check_rom(&JointConfig::at_rest(&q)?, limits)?;
            let _ = writeln!(
                text,
                "{},{},{},{}",
                l.axis.name(),
                fmt6(deg),
                fmt6(rad),
                u8::from(verdict.all_within())
            );
        }
    }
    Ok(text)
}

pub fn sweep(args: &SweepArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = crate::load_config(args.config.as_deref())?;
    let geometry = ExoGeometry::from_config(&cfg)?;
    let limits = RomLimits::from_config(&cfg)?;
    let theta1 = samples(args.from, args.to, args.step)?;
    let gh = || gh_table(&geometry, &theta1);
    let rom = || rom_table(&limits, args.rom_step_deg, args.rom_margin_deg);
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, text) in [(GH_FILE, gh()?), (ROM_FILE, rom()?)] {
                let path = dir.join(name);
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                writeln!(out, "{}", path.display())?;
            }
        }
        None => {
            let text = match args.table {
                Table::Gh => gh()?,
                Table::Rom => rom()?,
            };
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
