//! Scalar abstraction shared by the numeric modules.
//!
//! Everything that does geometry or dynamics is written against [`Real`] so
//! the same code runs in `f64` (the default used by the binaries and the wire
//! format) and in `f32` for embedded-style consumers.

use nalgebra::RealField;
use num_traits::{NumCast, ToPrimitive};

/// Floating point scalar usable by the kinematics, control and simulation code.
pub trait Real: RealField + Copy + NumCast + ToPrimitive {
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        num_traits::cast(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: RealField + Copy + NumCast + ToPrimitive {}
