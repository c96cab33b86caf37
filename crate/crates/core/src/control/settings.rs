use crate::config::{non_negative, positive, ConfigError, ConfigFile};

use super::tremor::DEFAULT_DEADBAND;

/// Gains and torque limit of one tracked subsystem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsystemGains {
    pub k_p: f64,
    pub k_d: f64,
    pub lambda: f64,
    pub torque_limit: f64,
}

impl SubsystemGains {
    const fn with_limit(torque_limit: f64) -> Self {
        Self {
            k_p: 20.0,
            k_d: 2.0,
            lambda: 0.1,
            torque_limit,
        }
    }
}

/// Tracked subsystems of the teleoperation controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Shoulder,
    Elbow,
    Wrist,
    Fingers,
}

impl Subsystem {
    pub const ALL: [Subsystem; 4] = [Self::Shoulder, Self::Elbow, Self::Wrist, Self::Fingers];

    pub fn name(self) -> &'static str {
        match self {
            Self::Shoulder => "shoulder",
            Self::Elbow => "elbow",
            Self::Wrist => "wrist",
            Self::Fingers => "fingers",
        }
    }
}

/// Controller configuration read from the `control.*` and `tremor.*` keys.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSettings {
    pub shoulder: SubsystemGains,
    pub elbow: SubsystemGains,
    pub wrist: SubsystemGains,
    pub fingers: SubsystemGains,
    pub deadband: f64,
    pub hysteresis_exit: f64,
    /// Scale of the exoskeleton assist torque.
    pub assist_scale: f64,
    /// Exoskeleton motor torque limit (N·m).
    pub exo_torque_limit: f64,
}

impl Default for ControlSettings {
    fn default() -> Self {
        Self {
            shoulder: SubsystemGains::with_limit(30.0),
            elbow: SubsystemGains::with_limit(15.0),
            wrist: SubsystemGains::with_limit(15.0),
            fingers: SubsystemGains::with_limit(1.0),
            deadband: DEFAULT_DEADBAND,
            hysteresis_exit: DEFAULT_DEADBAND,
            assist_scale: 1.0,
            exo_torque_limit: 30.0,
        }
    }
}

impl ControlSettings {
    pub fn gains(&self, s: Subsystem) -> &SubsystemGains {
        match s {
            Subsystem::Shoulder => &self.shoulder,
            Subsystem::Elbow => &self.elbow,
            Subsystem::Wrist => &self.wrist,
            Subsystem::Fingers => &self.fingers,
        }
    }

    fn gains_mut(&mut self, s: Subsystem) -> &mut SubsystemGains {
        match s {
            Subsystem::Shoulder => &mut self.shoulder,
            Subsystem::Elbow => &mut self.elbow,
            Subsystem::Wrist => &mut self.wrist,
            Subsystem::Fingers => &mut self.fingers,
        }
    }

    pub fn from_config(cfg: &ConfigFile) -> Result<Self, ConfigError> {
        let mut out = Self::default();
        for s in Subsystem::ALL {
            let g = *out.gains(s);
            let key = |field: &str| format!("control.{}.{field}", s.name());
            let parsed = SubsystemGains {
                k_p: cfg.real_checked(&key("kp"), Some(g.k_p), non_negative)?,
                k_d: cfg.real_checked(&key("kd"), Some(g.k_d), non_negative)?,
                lambda: cfg.real_checked(&key("lambda"), Some(g.lambda), non_negative)?,
                torque_limit: cfg.real_checked(&key("torque_limit"), Some(g.torque_limit), positive)?,
            };
            *out.gains_mut(s) = parsed;
        }
        out.deadband = cfg.real_checked("tremor.deadband", Some(out.deadband), positive)?;
        out.hysteresis_exit = cfg.real_checked("tremor.hysteresis_exit", Some(out.deadband), positive)?;
        if out.hysteresis_exit < out.deadband {
            return Err(cfg.invalid("tremor.hysteresis_exit", "must be at least tremor.deadband"));
        }
        out.assist_scale = cfg.real_checked("control.assist_scale", Some(out.assist_scale), non_negative)?;
        out.exo_torque_limit = cfg.real_checked("control.exo_torque_limit", Some(out.exo_torque_limit), positive)?;
        Ok(out)
    }
}
