use std::collections::VecDeque;

use nalgebra::{DVector, UnitQuaternion, Vector3};

use super::quat::rotation_vector;
use crate::scalar::Real;

/// Number of backward differences averaged by the estimators.
pub const SMOOTHING_WINDOW: usize = 3;

/// Joint-velocity estimate from positions: the average of the last three
/// backward differences, `(x_k - x_{k-3}) / (3 dt)`. Fewer samples shorten
/// the window; the first sample yields zero.
#[derive(Debug, Clone)]
pub struct VelocityEstimator<T: Real> {
    dt: T,
    history: VecDeque<DVector<T>>,
}

impl<T: Real> VelocityEstimator<T> {
    pub fn new(dt: T) -> Self {
        Self {
            dt,
            history: VecDeque::with_capacity(SMOOTHING_WINDOW + 1),
        }
    }

    pub fn update(&mut self, x: &DVector<T>) -> DVector<T> {
        if self.history.front().is_some_and(|h| h.len() != x.len()) {
            self.history.clear();
        }
        self.history.push_back(x.clone());
        if self.history.len() > SMOOTHING_WINDOW + 1 {
            self.history.pop_front();
        }
        let span = self.history.len() - 1;
        if span == 0 {
            return DVector::zeros(x.len());
        }
        (x - &self.history[0]) / (self.dt * T::lit(span as f64))
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }
}

/// Body-frame angular-velocity estimate from orientations:
/// `log(q_{k-3}⁻¹ q_k) / (3 dt)`, window shortened at start-up.
#[derive(Debug, Clone)]
pub struct AngularVelocityEstimator<T: Real> {
    dt: T,
    history: VecDeque<UnitQuaternion<T>>,
}

impl<T: Real> AngularVelocityEstimator<T> {
    pub fn new(dt: T) -> Self {
        Self {
            dt,
            history: VecDeque::with_capacity(SMOOTHING_WINDOW + 1),
        }
    }

    pub fn update(&mut self, q: &UnitQuaternion<T>) -> Vector3<T> {
        self.history.push_back(*q);
        if self.history.len() > SMOOTHING_WINDOW + 1 {
            self.history.pop_front();
        }
        let span = self.history.len() - 1;
        if span == 0 {
            return Vector3::zeros();
        }
        let delta = self.history[0].inverse() * q;
        rotation_vector(&delta) / (self.dt * T::lit(span as f64))
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_ramp_exact() {
        let mut est = VelocityEstimator::new(0.002);
        assert_eq!(est.update(&DVector::from_element(2, 0.0)), DVector::zeros(2));
        for k in 1..10 {
            let x = DVector::from_vec(vec![0.5 * 0.002 * k as f64, -0.002 * k as f64]);
            let v = est.update(&x);
            assert!((v[0] - 0.5).abs() < 1e-9 && (v[1] + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_rotation_rate() {
        let dt = 0.002;
        let omega = Vector3::new(0.3, -0.2, 0.5);
        let mut est = AngularVelocityEstimator::new(dt);
        let mut q = UnitQuaternion::from_euler_angles(0.2, 0.1, -0.4);
        est.update(&q);
        for _ in 0..10 {
            q *= UnitQuaternion::from_scaled_axis(omega * dt);
            let w = est.update(&q);
            assert!((w - omega).amax() < 1e-9);
        }
    }
}
