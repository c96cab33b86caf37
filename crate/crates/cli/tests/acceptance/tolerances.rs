//! Acceptance thresholds, each with the reason for its value. The checks in
//! `main.rs` use only these constants; no ad-hoc numbers.
//!
//! | Category | Basis | Example |
//! |----------|-------|---------|
//! | Machine precision | IEEE 754 f64 | 1e-12 for closed-form arithmetic |
//! | Numerical method | Truncation error of the method | 1e-5 for central differences |
//! | Plant envelope | Simulated follower with default gains | 0.015 rad mean tracking error |
//! | Statistical | Noise model of the benchmark | 2σ phase shift |
//! | Runtime | Desk-scale budget per criterion | 30 s closed loop |

use std::time::Duration;

// ═══════════════════════════════════════════════════════════════════
// Kinematics
// ═══════════════════════════════════════════════════════════════════

/// Linkage law `theta2 = gain * theta1 + offset`: one multiply and one add,
/// so the error is a few ulps of |theta2| <= 4 rad (~1e-15). 1e-12 leaves
/// three orders of margin without admitting any modelling error.
pub const COUPLING_ABS: f64 = 1e-12;

/// Coupling sweep: theta1 from -1 to 2 rad at 1e-3 rad.
pub const COUPLING_SWEEP: (f64, f64, f64) = (-1.0, 2.0, 1e-3);

/// Gain of the linkage (motor-to-linkage transmission ratio).
pub const COUPLING_GAIN: f64 = 1.444;

/// Linkage angle at theta1 = 0 (rad).
pub const COUPLING_OFFSET: f64 = 0.938;

pub const COUPLING_BUDGET: Duration = Duration::from_secs(1);

/// Central differences with step h have truncation error O(h^2) and
/// rounding error O(eps / h); h = 1e-6 balances them near 1e-10, so a
/// relative error of 1e-5 only fails on a wrong Jacobian column.
pub const JACOBIAN_REL: f64 = 1e-5;

/// Finite-difference step (rad).
pub const JACOBIAN_FD_STEP: f64 = 1e-6;

/// Denominator floor of the relative error: entries smaller than this
/// (structurally zero or nearly so) are compared absolutely at
/// `JACOBIAN_REL * JACOBIAN_REL_FLOOR`.
pub const JACOBIAN_REL_FLOOR: f64 = 1e-3;

/// Random in-ROM configurations checked.
pub const JACOBIAN_CONFIGS: usize = 100;

/// Rotation blocks of forward kinematics: `R^T R = I` and det = 1. Eight
/// chained rotations accumulate ~1e-15; 1e-9 only catches real shearing.
pub const ORTHONORMAL_ABS: f64 = 1e-9;

pub const KINEMATICS_BUDGET: Duration = Duration::from_secs(5);

/// GH-center sweep over theta1 in [0, 1] rad at 1e-3 rad.
pub const GH_SWEEP: (f64, f64, f64) = (0.0, 1.0, 1e-3);

/// ROM extremes in degrees (axis name, value). One degree beyond each
/// must be rejected.
pub const ROM_EXTREMES_DEG: [(&str, f64); 6] = [
    ("flexion", 180.0),
    ("flexion", -60.0),
    ("abduction", -30.0),
    ("abduction", 150.0),
    ("horizontal", -30.0),
    ("horizontal", 135.0),
];

/// Step beyond each extreme that must be rejected (degrees).
pub const ROM_BEYOND_DEG: f64 = 1.0;

// ═══════════════════════════════════════════════════════════════════
// Closed-loop tracking (simulated follower, default gains)
// ═══════════════════════════════════════════════════════════════════

/// Constant master step on shoulder flexion (rad).
pub const STEP_TARGET: f64 = 0.3;

/// Time at which the step response is judged (s).
pub const STEP_SETTLE_S: f64 = 5.0;

/// Shoulder pose error after `STEP_SETTLE_S` (rad).
pub const STEP_RESIDUAL: f64 = 1e-3;

/// Sinusoidal master on shoulder flexion: amplitude (rad), frequency (Hz)
/// and length of the run (s).
pub const SINE_AMPLITUDE: f64 = 0.4;
pub const SINE_HZ: f64 = 0.5;
pub const SINE_DURATION_S: f64 = 10.0;

/// Mean tracking error of the sinusoid (rad): the reported average angular
/// error of the physical system, adopted as the target for the simulated plant.
pub const SINE_MEAN: f64 = 0.015;

/// Peak tracking error of the sinusoid (rad): upper end of the reported
/// 0.05-0.08 rad peaks.
pub const SINE_PEAK: f64 = 0.08;

pub const TRACKING_BUDGET: Duration = Duration::from_secs(30);

// ═══════════════════════════════════════════════════════════════════
// Tremor filter
// ═══════════════════════════════════════════════════════════════════

/// Tremor amplitude that must be suppressed entirely (rad), just under the
/// 0.015 rad suppression level.
pub const TREMOR_SUPPRESSED: f64 = 0.014;

/// Voluntary motion amplitude that must pass (rad).
pub const TREMOR_PASSED: f64 = 0.05;

/// Fraction of the peak-to-peak input swing the passed motion must keep.
pub const TREMOR_PASS_FRACTION: f64 = 0.9;

/// Tremor frequency (Hz) and control sample period (s); 10 s of samples.
pub const TREMOR_HZ: f64 = 8.0;
pub const TREMOR_DT: f64 = 0.002;
pub const TREMOR_SAMPLES: usize = 5000;

// ═══════════════════════════════════════════════════════════════════
// Drift benchmark
// ═══════════════════════════════════════════════════════════════════

pub const DRIFT_SEEDS: u64 = 20;

/// Encoder static |avg| error bound in both phases (rad).
pub const DRIFT_EXO_STATIC_AVG: f64 = 0.14;

/// Minimum inertial after-perturbation static |max| error (rad).
pub const DRIFT_IMC_AFTER_STATIC_MAX: f64 = 0.3;

/// Phase invariance of the encoder path: start vs. after-perturbation
/// static averages differ by less than this many encoder sigmas.
pub const DRIFT_PHASE_SIGMAS: f64 = 2.0;

pub const DRIFT_BUDGET: Duration = Duration::from_secs(60);

// ═══════════════════════════════════════════════════════════════════
// Protocol and logging
// ═══════════════════════════════════════════════════════════════════

pub const PROTOCOL_ROUND_TRIPS: usize = 100_000;

/// Heartbeat, stream 0, timestamp 0, empty payload; assembled with Python
/// `struct.pack('<4sBBHQH', ...)` and `zlib.crc32` from the field layout.
pub const GOLDEN_HEARTBEAT: &str = "4e554558010400000000000000000000000018358332";

/// TorqueCmd, stream 2, timestamp 1234567 us, payload [1.5, -0.25].
pub const GOLDEN_TORQUE: &str = "4e5545580103020087d61200000000001000000000000000f83f000000000000d0bfe1815ee0";

/// Fan-out run length (s).
pub const FAN_OUT_S: f64 = 2.0;

/// Recorded loopback session length (s).
pub const LOG_SESSION_S: f64 = 10.0;

/// Streams every session log must carry.
pub const LOG_STREAMS: usize = 6;

// ═══════════════════════════════════════════════════════════════════
// Impedance laws
// ═══════════════════════════════════════════════════════════════════

/// Hand-evaluated torque examples: a handful of products and sums, or a
/// 3x3 solve with well-separated singular values; 1e-12 is machine precision
/// with margin.
pub const IMPEDANCE_ABS: f64 = 1e-12;
