use nalgebra::{UnitQuaternion, Vector3};

use crate::control::{rotation_exp, GRAVITY};
use crate::scalar::Real;

/// One inertial sample: specific force (m/s², body frame; reads +g upward
/// at rest) and angular rate (rad/s, body frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample<T: Real> {
    pub accel: Vector3<T>,
    pub gyro: Vector3<T>,
}

/// Dead-reckoned pose and velocity in the world frame (z up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryState<T: Real> {
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
}

impl<T: Real> Default for OdometryState<T> {
    fn default() -> Self {
        Self {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }
}

impl<T: Real> OdometryState<T> {
    /// Payload of the odometry stream: position then quaternion `(w, x, y, z)`.
    pub fn payload(&self) -> [T; 7] {
        let p = self.position;
        let q = self.orientation;
        [p[0], p[1], p[2], q.w, q.i, q.j, q.k]
    }

    /// Advances the state by one sample: the specific force is rotated into
    /// the world with the orientation at the start of the step, gravity is
    /// removed, position and velocity integrate the constant acceleration
    /// exactly, then the orientation integrates the body rate.
    pub fn advance(&mut self, sample: &ImuSample<T>, dt: T) {
        let accel = self.orientation * sample.accel - Vector3::new(T::zero(), T::zero(), T::lit(GRAVITY));
        self.position += self.velocity * dt + accel * (T::lit(0.5) * dt * dt);
        self.velocity += accel * dt;
        self.orientation = UnitQuaternion::new_normalize((self.orientation * rotation_exp(&(sample.gyro * dt))).into_inner());
    }
}

/// Strapdown integration of `samples` from `initial`; returns the state
/// after every sample.
pub fn odometry_integrate<T: Real>(samples: &[ImuSample<T>], dt: T, initial: OdometryState<T>) -> Vec<OdometryState<T>> {
    let mut state = initial;
    samples
        .iter()
        .map(|s| {
            state.advance(s, dt);
            state
        })
        .collect()
}
