use super::{KinematicsError, PassiveJoint};
use crate::scalar::Real;

/// Linkage and timing-belt coupling between the horizontal shoulder motor and
/// the passive linkage joints.
///
/// The linkage angle follows the motor through the affine law
/// `theta2 = gain * theta1 + offset`. Defaults: `L1 = 0.150 m`,
/// `L2 = 0.187 m`, `theta_E = 2.508 rad`, `gain = 1.444`, `offset = 0.938 rad`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShoulderCoupling<T: Real> {
    pub l1: T,
    pub l2: T,
    pub theta_e: T,
    pub gain: T,
    pub offset: T,
}

/// Angles of the three passive linkage joints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveAngles<T> {
    pub theta_2_1: T,
    pub theta_2_2: T,
    pub theta_3: T,
}

impl<T: Copy> PassiveAngles<T> {
    pub fn get(&self, joint: PassiveJoint) -> T {
        match joint {
            PassiveJoint::Link21 => self.theta_2_1,
            PassiveJoint::Link22 => self.theta_2_2,
            PassiveJoint::Link3 => self.theta_3,
        }
    }
}

impl<T: Real> ShoulderCoupling<T> {
    pub fn new(l1: T, l2: T, theta_e: T, gain: T, offset: T) -> Result<Self, KinematicsError> {
        let all_finite = [l1, l2, theta_e, gain, offset].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(KinematicsError::InvalidCoupling("non-finite parameter".into()));
        }
        if l1 <= T::zero() || l2 <= T::zero() {
            return Err(KinematicsError::InvalidCoupling(
                "link lengths must be positive".into(),
            ));
        }
        Ok(Self {
            l1,
            l2,
            theta_e,
            gain,
            offset,
        })
    }

    /// Same linkage with a different gain; `gain = 0` models a rigid, fixed-center shoulder.
    pub fn with_gain(mut self, gain: T) -> Self {
        self.gain = gain;
        self
    }

    /// `theta2 = gain * theta1 + offset`.
    #[inline]
    pub fn linkage_angle(&self, theta1: T) -> T {
        self.gain * theta1 + self.offset
    }

    /// Passive joint angles for motor angle `theta1`.
    ///
    /// Link 2_1 carries the linkage angle, link 2_2 holds the fixed linkage
    /// elbow `theta_E - pi`, and joint 3 closes the loop so the three parallel
    /// axes sum to `theta1`: the humerus heading follows the motor while the
    /// rotation center translates with the linkage.
    pub fn coupled_linkage_angles(&self, theta1: T) -> PassiveAngles<T> {
        let theta_2_1 = self.linkage_angle(theta1);
        let theta_2_2 = self.theta_e - T::pi();
        PassiveAngles {
            theta_2_1,
            theta_2_2,
            theta_3: theta1 - theta_2_1 - theta_2_2,
        }
    }

    /// Derivatives of the passive angles with respect to `theta1`.
    pub fn linkage_partials(&self) -> PassiveAngles<T> {
        PassiveAngles {
            theta_2_1: self.gain,
            theta_2_2: T::zero(),
            theta_3: T::one() - self.gain,
        }
    }
}

impl Default for ShoulderCoupling<f64> {
    fn default() -> Self {
        Self {
            l1: 0.150,
            l2: 0.187,
            theta_e: 2.508,
            gain: 1.444,
            offset: 0.938,
        }
    }
}

impl Default for ShoulderCoupling<f32> {
    fn default() -> Self {
        Self {
            l1: 0.150,
            l2: 0.187,
            theta_e: 2.508,
            gain: 1.444,
            offset: 0.938,
        }
    }
}

/// Free-function form of [`ShoulderCoupling::coupled_linkage_angles`].
pub fn coupled_linkage_angles<T: Real>(theta1: T, coupling: &ShoulderCoupling<T>) -> PassiveAngles<T> {
    coupling.coupled_linkage_angles(theta1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linkage_law_examples() {
        let c = ShoulderCoupling::<f64>::default();
        assert_eq!(c.linkage_angle(0.0), 0.938);
        assert!((c.linkage_angle(0.5) - 1.660).abs() < 1e-12);
        assert!(c.linkage_angle(-0.938 / 1.444).abs() < 1e-12);
    }

    #[test]
    fn passive_angles_sum_to_motor_angle() {
        let c = ShoulderCoupling::<f64>::default();
        for theta1 in [-1.0, -0.2, 0.0, 0.4, 1.7] {
            let p = c.coupled_linkage_angles(theta1);
            assert!((p.theta_2_1 + p.theta_2_2 + p.theta_3 - theta1).abs() < 1e-12);
            assert_eq!(p.theta_2_1, c.linkage_angle(theta1));
        }
    }

    #[test]
    fn rejects_degenerate_links() {
        assert!(ShoulderCoupling::new(0.0, 0.187, 2.508, 1.444, 0.938).is_err());
        assert!(ShoulderCoupling::new(0.15, 0.187, f64::NAN, 1.444, 0.938).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let c = ShoulderCoupling::<f32>::default();
        assert!((c.linkage_angle(0.5) - 1.660).abs() < 1e-6);
    }
}
