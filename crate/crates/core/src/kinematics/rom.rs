use super::{exo::joints, JointConfig, KinematicsError};
use crate::config::{ConfigError, ConfigFile};
use crate::scalar::Real;

/// Anatomical shoulder motion axes. Positive directions: flexion (forward),
/// abduction (lateral) and horizontal extension; the opposite motions are negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RomAxis {
    FlexionExtension,
    AbductionAdduction,
    HorizontalFlexionExtension,
}

impl RomAxis {
    pub const ALL: [RomAxis; 3] = [
        RomAxis::FlexionExtension,
        RomAxis::AbductionAdduction,
        RomAxis::HorizontalFlexionExtension,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RomAxis::FlexionExtension => "flexion",
            RomAxis::AbductionAdduction => "abduction",
            RomAxis::HorizontalFlexionExtension => "horizontal",
        }
    }

    /// Active exoskeleton joint measuring this axis.
    pub fn joint(self) -> usize {
        match self {
            RomAxis::FlexionExtension => joints::SHOULDER_FLEXION,
            RomAxis::AbductionAdduction => joints::SHOULDER_ABDUCTION,
            RomAxis::HorizontalFlexionExtension => joints::HORIZONTAL_FLEXION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisLimit<T> {
    pub axis: RomAxis,
    pub min: T,
    pub max: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RomLimits<T> {
    limits: Vec<AxisLimit<T>>,
}

impl<T: Real> RomLimits<T> {
    pub fn new(limits: Vec<AxisLimit<T>>) -> Result<Self, KinematicsError> {
        for l in &limits {
            if !(l.min.is_finite() && l.max.is_finite()) || l.min >= l.max {
                return Err(KinematicsError::InvalidLimits(format!(
                    "{}: min must be < max",
                    l.axis.name()
                )));
            }
        }
        Ok(Self { limits })
    }

    /// Shoulder ranges in radians: flexion [-60, 180] deg, abduction
    /// [-30, 150] deg, horizontal [-30, 135] deg.
    pub fn shoulder_default() -> Self {
        let deg = |d: f64| T::lit(d.to_radians());
        Self {
            limits: vec![
                AxisLimit {
                    axis: RomAxis::FlexionExtension,
                    min: deg(-60.0),
                    max: deg(180.0),
                },
                AxisLimit {
                    axis: RomAxis::AbductionAdduction,
                    min: deg(-30.0),
                    max: deg(150.0),
                },
                AxisLimit {
                    axis: RomAxis::HorizontalFlexionExtension,
                    min: deg(-30.0),
                    max: deg(135.0),
                },
            ],
        }
    }

    pub fn limits(&self) -> &[AxisLimit<T>] {
        &self.limits
    }

    pub fn get(&self, axis: RomAxis) -> Option<&AxisLimit<T>> {
        self.limits.iter().find(|l| l.axis == axis)
    }
}

impl RomLimits<f64> {
    /// Reads `rom.<axis>.min` / `rom.<axis>.max` (radians), defaulting per axis.
    pub fn from_config(cfg: &ConfigFile) -> Result<Self, ConfigError> {
        let defaults = Self::shoulder_default();
        let mut limits = Vec::new();
        for d in defaults.limits() {
            let min_key = format!("rom.{}.min", d.axis.name());
            let max_key = format!("rom.{}.max", d.axis.name());
            let min = cfg.real_checked(&min_key, Some(d.min), crate::config::any)?;
            let max = cfg.real_checked(&max_key, Some(d.max), crate::config::any)?;
            if min >= max {
                return Err(cfg.invalid(&max_key, "max must exceed min"));
            }
            limits.push(AxisLimit { axis: d.axis, min, max });
        }
        Ok(Self { limits })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisVerdict<T> {
    pub axis: RomAxis,
    pub value: T,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RomVerdict<T> {
    pub axes: Vec<AxisVerdict<T>>,
}

impl<T> RomVerdict<T> {
    pub fn all_within(&self) -> bool {
        self.axes.iter().all(|a| a.within)
    }

    pub fn axis(&self, axis: RomAxis) -> Option<&AxisVerdict<T>> {
        self.axes.iter().find(|a| a.axis == axis)
    }
}

/// Checks each configured axis against its inclusive range.
pub fn check_rom<T: Real>(config: &JointConfig<T>, limits: &RomLimits<T>) -> Result<RomVerdict<T>, KinematicsError> {
    let axes = limits
        .limits()
        .iter()
        .map(|l| {
            let joint = l.axis.joint();
            let value = *config.angles.get(joint).ok_or(KinematicsError::DimensionMismatch {
                expected: joints::COUNT,
                got: config.len(),
            })?;
            Ok(AxisVerdict {
                axis: l.axis,
                value,
                within: value >= l.min && value <= l.max,
            })
        })
        .collect::<Result<Vec<_>, KinematicsError>>()?;
    Ok(RomVerdict { axes })
}
