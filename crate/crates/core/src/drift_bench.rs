//! Encoder-versus-inertial drift benchmark.
//!
//! A scripted shoulder-abduction task is measured by two simulated sensing
//! paths: joint encoders (quantization plus white noise) and strap-mounted
//! inertial motion capture (white noise plus a strap-slip bias that appears
//! after a high-intensity perturbation phase). The slip is a parameter, not
//! a physical IMU model: the benchmark checks the reporting pipeline and the
//! qualitative behaviour (encoders stay put, straps drift).
//!
//! Each run follows four phases: calibration at rest, baseline abduction,
//! dynamic perturbation, and a repeat of the abduction. Deviations are
//! `estimate - truth` per axis; "static" statistics cover the final hold.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use thiserror::Error;

use crate::csvfmt::fmt6;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("empty trajectory")]
    Empty,
    #[error("estimate has {got} samples, truth has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("static window {start}..{end} outside a trajectory of {len} samples")]
    BadWindow { start: usize, end: usize, len: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Strap-mounted inertial motion capture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImcModel {
    /// White noise per axis (rad).
    pub sigma: f64,
    /// Nominal slip bias after the perturbation phase (rad).
    pub slip_bias: Vector3<f64>,
    /// Range of the per-run multiplicative factor on the slip bias.
    pub slip_range: (f64, f64),
}

impl Default for ImcModel {
    fn default() -> Self {
        Self {
            sigma: 0.01,
            slip_bias: Vector3::new(0.17, -0.37, 0.26),
            slip_range: (0.9, 1.1),
        }
    }
}

impl ImcModel {
    pub fn ideal() -> Self {
        Self {
            sigma: 0.0,
            slip_bias: Vector3::zeros(),
            slip_range: (1.0, 1.0),
        }
    }
}

/// Joint encoders of the exoskeleton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderModel {
    /// Quantization step (rad); zero disables quantization.
    pub step: f64,
    /// White noise per axis (rad).
    pub sigma: f64,
}

impl Default for EncoderModel {
    fn default() -> Self {
        Self {
            step: 0.0015,
            sigma: 0.002,
        }
    }
}

impl EncoderModel {
    pub fn ideal() -> Self {
        Self { step: 0.0, sigma: 0.0 }
    }
}

/// Sensor models plus protocol timing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchModels {
    pub imc: ImcModel,
    pub encoder: EncoderModel,
    /// Sample rate (Hz).
    pub rate_hz: f64,
    /// Length of the final static hold (s).
    pub hold_s: f64,
}

impl Default for BenchModels {
    fn default() -> Self {
        Self {
            imc: ImcModel::default(),
            encoder: EncoderModel::default(),
            rate_hz: 100.0,
            hold_s: 2.0,
        }
    }
}

impl BenchModels {
    pub fn ideal() -> Self {
        Self {
            imc: ImcModel::ideal(),
            encoder: EncoderModel::ideal(),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        let ok = self.imc.sigma >= 0.0
            && self.encoder.sigma >= 0.0
            && self.encoder.step >= 0.0
            && self.imc.slip_range.0 <= self.imc.slip_range.1
            && self.rate_hz > 0.0
            && self.hold_s > 0.0;
        if ok {
            Ok(())
        } else {
            Err(BenchError::InvalidModel(format!("{self:?}")))
        }
    }
}

/// Protocol phase in which a report was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Start,
    AfterPerturbation,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Start => "start",
            Phase::AfterPerturbation => "after-perturbation",
        }
    }
}

/// Signed deviation statistics of one sensing path, per axis (x, y, z).
/// "max" is the signed deviation of largest magnitude, "avg" the signed mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationStats {
    pub max: Vector3<f64>,
    pub avg: Vector3<f64>,
    pub static_max: Vector3<f64>,
    pub static_avg: Vector3<f64>,
}

/// Both sensing paths for one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReport {
    pub phase: Phase,
    pub exo: DeviationStats,
    pub imc: DeviationStats,
}

fn signed_max_and_mean(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut best, mut sum, mut n) = (0.0f64, 0.0, 0usize);
    for v in values {
        if v.abs() > best.abs() {
            best = v;
        }
        sum += v;
        n += 1;
    }
    (best, sum / n as f64)
}

/// Deviation statistics of `estimate` against `truth`; the static columns
/// cover `static_window`.
pub fn deviation_stats(
    estimate: &[Vector3<f64>],
    truth: &[Vector3<f64>],
    static_window: std::ops::Range<usize>,
) -> Result<DeviationStats, BenchError> {
    if truth.is_empty() {
        return Err(BenchError::Empty);
    }
    if estimate.len() != truth.len() {
        return Err(BenchError::LengthMismatch {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    if static_window.is_empty() || static_window.end > truth.len() {
        return Err(BenchError::BadWindow {
            start: static_window.start,
            end: static_window.end,
            len: truth.len(),
        });
    }
    let dev: Vec<Vector3<f64>> = estimate.iter().zip(truth).map(|(e, t)| e - t).collect();
    let mut out = DeviationStats {
        max: Vector3::zeros(),
        avg: Vector3::zeros(),
        static_max: Vector3::zeros(),
        static_avg: Vector3::zeros(),
    };
    for axis in 0..3 {
        (out.max[axis], out.avg[axis]) = signed_max_and_mean(dev.iter().map(|d| d[axis]));
        (out.static_max[axis], out.static_avg[axis]) =
            signed_max_and_mean(dev[static_window.clone()].iter().map(|d| d[axis]));
    }
    Ok(out)
}

/// Scripted abduction: rest, a smooth 1.2 rad raise with small coupled
/// motion on the other axes, then a hold. Returns samples and the static window.
pub fn abduction_trajectory(models: &BenchModels) -> (Vec<Vector3<f64>>, std::ops::Range<usize>) {
    let dt = 1.0 / models.rate_hz;
    let rest = (1.0 * models.rate_hz).round() as usize;
    let raise = (3.0 * models.rate_hz).round() as usize;
    let hold = (models.hold_s * models.rate_hz).round() as usize;
    let target = Vector3::new(1.2, 0.1, -0.05);
    let mut out = Vec::with_capacity(rest + raise + hold);
    out.extend(std::iter::repeat_n(Vector3::zeros(), rest));
    for k in 0..raise {
        let s = 0.5 * (1.0 - (std::f64::consts::PI * (k as f64 * dt) / 3.0).cos());
        out.push(target * s);
    }
    out.extend(std::iter::repeat_n(target, hold));
    let n = out.len();
    (out, n - hold..n)
}

/// High-intensity multi-axis swinging used to provoke strap slip.
pub fn perturbation_trajectory(models: &BenchModels) -> Vec<Vector3<f64>> {
    let n = (10.0 * models.rate_hz).round() as usize;
    (0..n)
        .map(|k| {
            let t = k as f64 / models.rate_hz;
            let tau = std::f64::consts::TAU;
            Vector3::new(
                0.8 * (tau * 1.5 * t).sin(),
                0.5 * (tau * 2.0 * t + 0.3).sin(),
                0.6 * (tau * 1.2 * t + 1.1).sin(),
            )
        })
        .collect()
}

/// Sensor estimates of `truth` for both paths. `imc_bias` is the strap
/// offset in effect (zero before any slip).
pub fn simulate_sensors(
    truth: &[Vector3<f64>],
    models: &BenchModels,
    imc_bias: &Vector3<f64>,
    rng: &mut ChaCha8Rng,
) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let imc_noise = Normal::new(0.0, models.imc.sigma).expect("sigma validated");
    let enc_noise = Normal::new(0.0, models.encoder.sigma).expect("sigma validated");
    let step = models.encoder.step;
    let mut imc = Vec::with_capacity(truth.len());
    let mut enc = Vec::with_capacity(truth.len());
    for t in truth {
        let i = t + imc_bias + Vector3::from_fn(|_, _| imc_noise.sample(rng));
        let e = t.map(|v| if step > 0.0 { (v / step).round() * step } else { v })
            + Vector3::from_fn(|_, _| enc_noise.sample(rng));
        imc.push(i);
        enc.push(e);
    }
    (imc, enc)
}

/// Outcome of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub seed: u64,
    /// Slip bias drawn for this run.
    pub slip: Vector3<f64>,
    pub start: DeviationReport,
    pub after: DeviationReport,
    /// One-sided amplitude spectrum of the baseline deviations, averaged
    /// over axes: `(frequency Hz, encoder, imc)`.
    pub spectrum: Vec<(f64, f64, f64)>,
}

fn mean_offset(est: &[Vector3<f64>], truth: &[Vector3<f64>]) -> Vector3<f64> {
    est.iter().zip(truth).map(|(e, t)| e - t).sum::<Vector3<f64>>() / truth.len() as f64
}

fn amplitude_spectrum(dev: &[Vector3<f64>], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = dev.len();
    let fft = planner.plan_fft_forward(n);
    let mut total = vec![0.0; n / 2 + 1];
    for axis in 0..3 {
        let mean = dev.iter().map(|d| d[axis]).sum::<f64>() / n as f64;
        let mut buf: Vec<Complex<f64>> = dev.iter().map(|d| Complex::new(d[axis] - mean, 0.0)).collect();
        fft.process(&mut buf);
        for (k, slot) in total.iter_mut().enumerate() {
            let scale = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
            *slot += scale * buf[k].norm() / n as f64 / 3.0;
        }
    }
    total
}

/// Runs calibration, baseline, perturbation and post-perturbation phases
/// with a deterministic generator seeded from `seed`.
pub fn run_protocol(seed: u64, models: &BenchModels) -> Result<ProtocolRun, BenchError> {
    models.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = Vector3::zeros();

    // Calibration: 1 s at rest; each path's mean offset is removed afterwards.
    let calib_truth = vec![zero; models.rate_hz.round() as usize];
    let (imc_cal, enc_cal) = simulate_sensors(&calib_truth, models, &zero, &mut rng);
    let imc_offset = mean_offset(&imc_cal, &calib_truth);
    let enc_offset = mean_offset(&enc_cal, &calib_truth);
    let calibrate = |v: Vec<Vector3<f64>>, off: &Vector3<f64>| v.into_iter().map(|x| x - off).collect::<Vec<_>>();

    let (truth, window) = abduction_trajectory(models);
    let report = |phase, imc: Vec<Vector3<f64>>, enc: Vec<Vector3<f64>>| -> Result<DeviationReport, BenchError> {
        Ok(DeviationReport {
            phase,
            exo: deviation_stats(&calibrate(enc, &enc_offset), &truth, window.clone())?,
            imc: deviation_stats(&calibrate(imc, &imc_offset), &truth, window.clone())?,
        })
    };

    // Baseline.
    let (imc, enc) = simulate_sensors(&truth, models, &zero, &mut rng);
    let mut planner = FftPlanner::new();
    let enc_spec = amplitude_spectrum(
        &enc.iter().zip(&truth).map(|(e, t)| e - t - enc_offset).collect::<Vec<_>>(),
        &mut planner,
    );
    let imc_spec = amplitude_spectrum(
        &imc.iter().zip(&truth).map(|(e, t)| e - t - imc_offset).collect::<Vec<_>>(),
        &mut planner,
    );
    let start = report(Phase::Start, imc, enc)?;

    // Perturbation: the strap slips progressively towards the drawn bias.
    let (lo, hi) = models.imc.slip_range;
    let factor = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let slip = models.imc.slip_bias * factor;
    let perturb = perturbation_trajectory(models);
    let n = perturb.len() as f64;
    for (k, t) in perturb.iter().enumerate() {
        let bias = slip * ((k + 1) as f64 / n);
        simulate_sensors(std::slice::from_ref(t), models, &bias, &mut rng);
    }

    // Post-perturbation repeat of the same task.
    let (imc, enc) = simulate_sensors(&truth, models, &slip, &mut rng);
    let after = report(Phase::AfterPerturbation, imc, enc)?;

    let samples = truth.len() as f64;
    let spectrum = enc_spec
        .iter()
        .zip(imc_spec.iter())
        .enumerate()
        .map(|(k, (e, i))| (k as f64 * models.rate_hz / samples, *e, *i))
        .collect();
    Ok(ProtocolRun {
        seed,
        slip,
        start,
        after,
        spectrum,
    })
}

/// Runs every seed in parallel; results are in seed order.
pub fn run_bench(seeds: &[u64], models: &BenchModels) -> Result<Vec<ProtocolRun>, BenchError> {
    seeds.par_iter().map(|&s| run_protocol(s, models)).collect()
}

/// Field-wise mean of reports for one phase.
pub fn mean_report(runs: &[ProtocolRun], phase: Phase) -> Option<DeviationReport> {
    let pick = |r: &ProtocolRun| match phase {
        Phase::Start => r.start,
        Phase::AfterPerturbation => r.after,
    };
    let n = runs.len() as f64;
    if runs.is_empty() {
        return None;
    }
    let avg = |f: &dyn Fn(&DeviationReport) -> DeviationStats| {
        let sum = |g: &dyn Fn(&DeviationStats) -> Vector3<f64>| {
            runs.iter().map(|r| g(&f(&pick(r)))).sum::<Vector3<f64>>() / n
        };
        DeviationStats {
            max: sum(&|s| s.max),
            avg: sum(&|s| s.avg),
            static_max: sum(&|s| s.static_max),
            static_avg: sum(&|s| s.static_avg),
        }
    };
    Some(DeviationReport {
        phase,
        exo: avg(&|r| r.exo),
        imc: avg(&|r| r.imc),
    })
}

/// Header of the table CSV.
pub const TABLE_HEADER: &str =
    "phase,axis,max_exo,max_imc,avg_exo,avg_imc,static_max_exo,static_max_imc,static_avg_exo,static_avg_imc";

/// Table rows (one per axis) for a report, without header.
pub fn table_rows(report: &DeviationReport) -> Vec<String> {
    ["x", "y", "z"]
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let cols = [
                report.exo.max[a],
                report.imc.max[a],
                report.exo.avg[a],
                report.imc.avg[a],
                report.exo.static_max[a],
                report.imc.static_max[a],
                report.exo.static_avg[a],
                report.imc.static_avg[a],
            ];
            let mut line = format!("{},{name}", report.phase.name());
            for c in cols {
                let _ = write!(line, ",{}", fmt6(c));
            }
            line
        })
        .collect()
}

/// Acceptance-style verdicts over a set of runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSummary {
    /// Largest encoder static |avg| over runs, phases and axes.
    pub exo_static_avg_worst: f64,
    /// Smallest (over runs) of the largest IMC after-perturbation static |max|.
    pub imc_after_static_max_least: f64,
    /// Largest encoder start/after static-avg difference over runs and axes.
    pub exo_phase_shift_worst: f64,
}

pub fn summarize(runs: &[ProtocolRun]) -> BenchSummary {
    let mut s = BenchSummary {
        exo_static_avg_worst: 0.0,
        imc_after_static_max_least: f64::INFINITY,
        exo_phase_shift_worst: 0.0,
    };
    for r in runs {
        for rep in [&r.start, &r.after] {
            s.exo_static_avg_worst = s.exo_static_avg_worst.max(rep.exo.static_avg.amax());
        }
        s.imc_after_static_max_least = s.imc_after_static_max_least.min(r.after.imc.static_max.amax());
        s.exo_phase_shift_worst = s
            .exo_phase_shift_worst
            .max((r.start.exo.static_avg - r.after.exo.static_avg).amax());
    }
    s
}

/// Writes `table.csv` (seed-averaged), `runs.csv` (per seed) and
/// `spectrum.csv` (seed-averaged amplitude spectrum) into `dir`.
pub fn write_outputs(runs: &[ProtocolRun], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, BenchError> {
    let dir = dir.as_ref();
    let io = |path: &Path, source| BenchError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;

    let mut table = format!("{TABLE_HEADER}\n");
    for phase in [Phase::Start, Phase::AfterPerturbation] {
        if let Some(rep) = mean_report(runs, phase) {
            for row in table_rows(&rep) {
                table.push_str(&row);
                table.push('\n');
            }
        }
    }
    let mut per_run = format!("seed,{TABLE_HEADER}\n");
    for r in runs {
        for rep in [&r.start, &r.after] {
            for row in table_rows(rep) {
                let _ = writeln!(per_run, "{},{row}", r.seed);
            }
        }
    }
    let mut spectrum = String::from("frequency_hz,exo_amplitude,imc_amplitude\n");
    if let Some(first) = runs.first() {
        let n = runs.len() as f64;
        for (k, (f, _, _)) in first.spectrum.iter().enumerate() {
            let e = runs.iter().map(|r| r.spectrum[k].1).sum::<f64>() / n;
            let i = runs.iter().map(|r| r.spectrum[k].2).sum::<f64>() / n;
            let _ = writeln!(spectrum, "{},{},{}", fmt6(*f), fmt6(e), fmt6(i));
        }
    }
    let mut written = Vec::new();
    for (name, text) in [("table.csv", table), ("runs.csv", per_run), ("spectrum.csv", spectrum)] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
