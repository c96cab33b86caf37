use nalgebra::DVector;

use super::ControlError;
use crate::scalar::Real;

/// Default deadband (rad).
pub const DEFAULT_DEADBAND: f64 = 0.015;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Output frozen at `held`; `last_dir` is the direction of the most
    /// recent tracked motion (0 before any).
    Hold { last_dir: i8 },
    /// Output follows the input while it keeps moving in direction `dir`.
    Track { dir: i8 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Axis<T> {
    held: T,
    mode: Mode,
}

/// Per-axis hold filter that pauses output during small movements.
///
/// Each axis holds its output until the input leaves a deadband around the
/// held value, then tracks the input while it keeps moving the same way.
/// When the input turns back, the output is held at the turning point;
/// leaving that hold in the reverse direction needs `hysteresis_exit`,
/// continuing in the original direction needs `deadband`.
#[derive(Debug, Clone, PartialEq)]
pub struct TremorFilterState<T: Real> {
    deadband: T,
    hysteresis_exit: T,
    axes: Vec<Axis<T>>,
}

impl<T: Real> TremorFilterState<T> {
    pub fn new(deadband: T, hysteresis_exit: T) -> Result<Self, ControlError> {
        if !(deadband.is_finite() && deadband > T::zero()) {
            return Err(ControlError::Configuration("deadband must be positive".into()));
        }
        if !(hysteresis_exit.is_finite() && hysteresis_exit >= deadband) {
            return Err(ControlError::Configuration(
                "hysteresis exit must be at least the deadband".into(),
            ));
        }
        Ok(Self {
            deadband,
            hysteresis_exit,
            axes: Vec::new(),
        })
    }

    /// Symmetric filter with `hysteresis_exit = deadband`.
    pub fn symmetric(deadband: T) -> Result<Self, ControlError> {
        Self::new(deadband, deadband)
    }

    pub fn deadband(&self) -> T {
        self.deadband
    }

    pub fn hysteresis_exit(&self) -> T {
        self.hysteresis_exit
    }

    /// Held output per axis (empty before the first sample).
    pub fn held_output(&self) -> DVector<T> {
        DVector::from_iterator(self.axes.len(), self.axes.iter().map(|a| a.held))
    }

    /// Forgets all axis history; the next sample re-initializes.
    pub fn reset(&mut self) {
        self.axes.clear();
    }

    /// Filters one sample in place. The first sample (or a change in the
    /// number of axes) initializes the held values to the input.
    pub fn apply(&mut self, input: &DVector<T>) -> DVector<T> {
        if self.axes.len() != input.len() {
            self.axes = input
                .iter()
                .map(|&held| Axis {
                    held,
                    mode: Mode::Hold { last_dir: 0 },
                })
                .collect();
            return input.clone();
        }
        let (deadband, exit) = (self.deadband, self.hysteresis_exit);
        DVector::from_iterator(
            input.len(),
            self.axes
                .iter_mut()
                .zip(input.iter())
                .map(|(axis, &x)| step(axis, x, deadband, exit)),
        )
    }
}

fn direction<T: Real>(v: T) -> i8 {
    if v > T::zero() {
        1
    } else if v < T::zero() {
        -1
    } else {
        0
    }
}

fn step<T: Real>(axis: &mut Axis<T>, x: T, deadband: T, exit: T) -> T {
    let diff = x - axis.held;
    if let Mode::Track { dir } = axis.mode {
        if direction(diff) != -dir {
            axis.held = x;
            return x;
        }
        // Turned back: hold at the extreme reached so far.
        axis.mode = Mode::Hold { last_dir: dir };
    }
    let Mode::Hold { last_dir } = axis.mode else {
        unreachable!()
    };
    let dir = direction(diff);
    let threshold = if last_dir == 0 || dir == last_dir {
        deadband
    } else {
        exit
    };
    if dir != 0 && diff.abs() >= threshold {
        axis.mode = Mode::Track { dir };
        axis.held = x;
        x
    } else {
        axis.held
    }
}

/// Functional form: filters `input` and returns the output with the updated state.
pub fn tremor_filter<T: Real>(
    input: &DVector<T>,
    mut state: TremorFilterState<T>,
) -> (DVector<T>, TremorFilterState<T>) {
    let out = state.apply(input);
    (out, state)
}
