use nalgebra::{DVector, UnitQuaternion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::model::FollowerModel;
use super::{joints, SimError};
use crate::kinematics::JointConfig;
use crate::scalar::Real;

/// Largest accepted integration step (s).
pub const MAX_DT: f64 = 0.01;

/// Joint state, last applied (clamped) torque and simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerState<T: Real> {
    pub config: JointConfig<T>,
    pub applied_torque: DVector<T>,
    pub time: T,
}

impl<T: Real> FollowerState<T> {
    /// All joints at zero, at rest, at time zero.
    pub fn at_rest() -> Self {
        Self {
            config: JointConfig::zeros(joints::COUNT),
            applied_torque: DVector::zeros(joints::COUNT),
            time: T::zero(),
        }
    }

    pub fn kinetic_energy(&self, model: &FollowerModel<T>) -> T {
        let half = T::lit(0.5);
        self.config
            .velocities
            .iter()
            .zip(model.joints.iter())
            .fold(T::zero(), |e, (&v, p)| e + half * p.inertia * v * v)
    }

    /// One JSON object describing the state, for debugging dumps.
    pub fn to_json_line(&self) -> String {
        let v = |x: &DVector<T>| x.iter().map(|a| a.to_f64_lossy()).collect::<Vec<_>>();
        serde_json::json!({
            "t": self.time.to_f64_lossy(),
            "q": v(&self.config.angles),
            "qd": v(&self.config.velocities),
            "tau": v(&self.applied_torque),
        })
        .to_string()
    }
}

/// Advances the arm by `dt` under joint torques `tau`.
///
/// Semi-implicit Euler on `I qdd = clamp(tau) - b qd - g(q)`, with the
/// viscous term taken implicitly so damping never injects energy. A joint
/// that would pass a limit stops at it with zero velocity.
pub fn step<T: Real>(
    state: &FollowerState<T>,
    tau: &DVector<T>,
    dt: T,
    model: &FollowerModel<T>,
) -> Result<FollowerState<T>, SimError> {
    if !(dt > T::zero() && dt <= T::lit(MAX_DT)) {
        return Err(SimError::InvalidStep(dt.to_f64_lossy()));
    }
    if tau.len() != joints::COUNT {
        return Err(SimError::DimensionMismatch {
            expected: joints::COUNT,
            got: tau.len(),
        });
    }
    if tau.iter().any(|t| !t.is_finite()) {
        return Err(SimError::NonFiniteTorque);
    }
    let gravity = model.gravity_torque(state.config.angles.as_slice());
    let mut applied = tau.clone();
    let mut angles = state.config.angles.clone();
    let mut velocities = state.config.velocities.clone();
    for (j, p) in model.joints.iter().enumerate() {
        let t = applied[j].max(-p.torque_limit).min(p.torque_limit);
        applied[j] = t;
        let v = (velocities[j] + dt * (t - gravity[j]) / p.inertia) / (T::one() + dt * p.damping / p.inertia);
        let mut q = angles[j] + dt * v;
        let mut v = v;
        if q > p.max {
            q = p.max;
            v = T::zero();
        } else if q < p.min {
            q = p.min;
            v = T::zero();
        }
        angles[j] = q;
        velocities[j] = v;
    }
    Ok(FollowerState {
        config: JointConfig::new(angles, velocities).map_err(|_| SimError::NonFiniteTorque)?,
        applied_torque: applied,
        time: state.time + dt,
    })
}

/// Zero-mean Gaussian noise added to encoder readings.
#[derive(Debug, Clone)]
pub struct EncoderNoise {
    normal: Normal<f64>,
    rng: ChaCha8Rng,
}

impl EncoderNoise {
    pub fn new(sigma: f64, seed: u64) -> Result<Self, SimError> {
        let normal = Normal::new(0.0, sigma).map_err(|e| SimError::InvalidModel(format!("encoder noise: {e}")))?;
        Ok(Self {
            normal,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn sample(&mut self) -> f64 {
        self.normal.sample(&mut self.rng)
    }
}

/// Joint readings and calibrated poses as reported by the follower.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerMeasurement<T: Real> {
    pub config: JointConfig<T>,
    pub shoulder: UnitQuaternion<T>,
    pub wrist: UnitQuaternion<T>,
}

/// Reads the follower's encoders (optionally noisy) and derives the
/// calibrated shoulder and wrist poses from the readings.
pub fn measure<T: Real>(
    state: &FollowerState<T>,
    model: &FollowerModel<T>,
    noise: Option<&mut EncoderNoise>,
) -> FollowerMeasurement<T> {
    let mut config = state.config.clone();
    if let Some(noise) = noise {
        for q in config.angles.iter_mut() {
            *q += T::lit(noise.sample());
        }
    }
    let poses = model.poses(config.angles.as_slice());
    FollowerMeasurement {
        config,
        shoulder: poses.shoulder,
        wrist: poses.wrist,
    }
}
