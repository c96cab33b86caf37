//! `nuexo bench drift`.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use nuexo_core::drift_bench::{mean_report, run_bench, summarize, table_rows, write_outputs, BenchModels, Phase, TABLE_HEADER};

#[derive(Debug, Args)]
pub struct DriftArgs {
    /// Number of seeds (consecutive, starting at --first-seed).
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Output directory for table.csv, runs.csv and spectrum.csv.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn drift(args: &DriftArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    anyhow::ensure!(args.seeds > 0, "--seeds must be positive");
    let seeds: Vec<u64> = (args.first_seed..args.first_seed + args.seeds).collect();
    let runs = run_bench(&seeds, &BenchModels::default())?;
    let written = write_outputs(&runs, &args.out)?;
    writeln!(out, "{TABLE_HEADER}")?;
    for phase in [Phase::Start, Phase::AfterPerturbation] {
        if let Some(report) = mean_report(&runs, phase) {
            for row in table_rows(&report) {
                writeln!(out, "{row}")?;
            }
        }
    }
    let s = summarize(&runs);
    writeln!(out, "seeds: {}", runs.len())?;
    writeln!(out, "encoder worst static |avg|: {:.6} rad", s.exo_static_avg_worst)?;
    writeln!(out, "inertial least after-perturbation static |max|: {:.6} rad", s.imc_after_static_max_least)?;
    writeln!(out, "encoder worst start/after static-avg shift: {:.6} rad", s.exo_phase_shift_worst)?;
    for p in written {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}
