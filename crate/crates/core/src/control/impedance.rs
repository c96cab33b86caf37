use nalgebra::{DMatrix, DVector, UnitQuaternion, Vector3, Vector6};

use super::quat::rotation_vector;
use super::ControlError;
use crate::scalar::Real;

/// Default damping of the pseudoinverse.
pub const PINV_DAMPING: f64 = 1e-4;

/// Stiffness and damping (diagonal, one entry per joint) and force-injection scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceGains<T: Real> {
    pub k_p: DVector<T>,
    pub k_d: DVector<T>,
    pub lambda: T,
}

impl<T: Real> ImpedanceGains<T> {
    pub fn new(k_p: DVector<T>, k_d: DVector<T>, lambda: T) -> Result<Self, ControlError> {
        if k_p.len() != k_d.len() {
            return Err(ControlError::DimensionMismatch {
                what: "k_d",
                expected: k_p.len(),
                got: k_d.len(),
            });
        }
        let ok = |v: &T| v.is_finite() && *v >= T::zero();
        if !k_p.iter().all(ok) || !k_d.iter().all(ok) || !ok(&lambda) {
            return Err(ControlError::Validation(
                "gains must be finite and non-negative".into(),
            ));
        }
        Ok(Self { k_p, k_d, lambda })
    }

    pub fn uniform(n: usize, k_p: T, k_d: T, lambda: T) -> Result<Self, ControlError> {
        Self::new(DVector::from_element(n, k_p), DVector::from_element(n, k_d), lambda)
    }

    pub fn len(&self) -> usize {
        self.k_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_p.is_empty()
    }
}

/// Scalar gains for a single joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointGains<T> {
    pub k_p: T,
    pub k_d: T,
    pub lambda: T,
}

/// Orientation and angular-velocity error between master and follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseError<T: Real> {
    pub q_t: UnitQuaternion<T>,
    pub qdot_t: Vector3<T>,
}

/// Interaction wrench at a binding cuff, torque first so it pairs with
/// `(angular, linear)` twists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BindingForce<T: Real> {
    pub torque: Vector3<T>,
    pub force: Vector3<T>,
}

impl<T: Real> BindingForce<T> {
    pub fn zero() -> Self {
        Self {
            torque: Vector3::zeros(),
            force: Vector3::zeros(),
        }
    }

    pub fn wrench(&self) -> Vector6<T> {
        Vector6::new(
            self.torque[0],
            self.torque[1],
            self.torque[2],
            self.force[0],
            self.force[1],
            self.force[2],
        )
    }

    pub fn from_slice(values: &[T]) -> Self {
        Self {
            torque: Vector3::new(values[0], values[1], values[2]),
            force: Vector3::new(values[3], values[4], values[5]),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            torque: self.torque * s,
            force: self.force * s,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.torque.iter().chain(self.force.iter()).all(|v| v.is_finite())
    }
}

/// Torque command plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueOutput<T: Real> {
    pub torque: DVector<T>,
    /// The Jacobian was closer to singular than the damping floor allows.
    pub singular: bool,
    /// At least one component hit its torque limit.
    pub clamped: bool,
}

/// Damped least-squares pseudoinverse with damping active only near
/// singularity: when the smallest singular value drops below
/// `sqrt(damping)` the squared damping ramps from 0 up to `damping`.
/// Returns the pseudoinverse and whether damping engaged.
pub fn damped_pseudoinverse<T: Real>(j: &DMatrix<T>, damping: T) -> (DMatrix<T>, bool) {
    let (m, n) = j.shape();
    let threshold = damping.sqrt();
    let sigma_min = j
        .clone()
        .singular_values()
        .iter()
        .copied()
        .fold(T::max_value().unwrap_or_else(T::one), |a, b| if b < a { b } else { a });
    let (lambda_sq, singular) = if sigma_min >= threshold {
        (T::zero(), false)
    } else {
        let r = sigma_min / threshold;
        (damping * (T::one() - r * r), true)
    };
    let jt = j.transpose();
    let pinv = if m <= n {
        let gram = j * &jt + DMatrix::identity(m, m) * lambda_sq;
        solve_spd(gram, &jt.transpose()).transpose()
    } else {
        let gram = &jt * j + DMatrix::identity(n, n) * lambda_sq;
        solve_spd(gram, &jt)
    };
    (pinv, singular)
}

fn solve_spd<T: Real>(a: DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    match a.clone().cholesky() {
        Some(ch) => ch.solve(b),
        None => a
            .lu()
            .solve(b)
            .unwrap_or_else(|| DMatrix::zeros(b.nrows(), b.ncols())),
    }
}

pub(crate) fn clamp_symmetric<T: Real>(torque: &mut DVector<T>, limits: &DVector<T>) -> bool {
    let mut clamped = false;
    for (t, &limit) in torque.iter_mut().zip(limits.iter()) {
        if *t > limit {
            *t = limit;
            clamped = true;
        } else if *t < -limit {
            *t = -limit;
            clamped = true;
        }
    }
    clamped
}

/// Pose impedance law for a spherical subsystem (shoulder or wrist):
///
/// `tau = K_p J⁺ log(q_t) + K_d J⁺ qdot_t + lambda Jᵀ tau_ft`
///
/// `jacobian` is the 3×n angular Jacobian expressed in the same frame as the
/// pose error; `force.torque` must be resolved into that frame too. The
/// orientation error is mapped to joint space through the same damped
/// pseudoinverse as the velocity error; with `J = I` this is the plain
/// rotation vector.
pub fn shoulder_impedance_torque<T: Real>(
    err: &PoseError<T>,
    jacobian: &DMatrix<T>,
    force: &BindingForce<T>,
    gains: &ImpedanceGains<T>,
    torque_limits: &DVector<T>,
) -> Result<TorqueOutput<T>, ControlError> {
    let n = jacobian.ncols();
    if jacobian.nrows() != 3 {
        return Err(ControlError::DimensionMismatch {
            what: "jacobian rows",
            expected: 3,
            got: jacobian.nrows(),
        });
    }
    if gains.len() != n {
        return Err(ControlError::DimensionMismatch {
            what: "gains",
            expected: n,
            got: gains.len(),
        });
    }
    if torque_limits.len() != n {
        return Err(ControlError::DimensionMismatch {
            what: "torque limits",
            expected: n,
            got: torque_limits.len(),
        });
    }
    let (pinv, singular) = damped_pseudoinverse(jacobian, T::lit(PINV_DAMPING));
    let rotvec = rotation_vector(&err.q_t);
    let stiffness = (&pinv * DVector::from_column_slice(rotvec.as_slice())).component_mul(&gains.k_p);
    let damping = (&pinv * DVector::from_column_slice(err.qdot_t.as_slice())).component_mul(&gains.k_d);
    let injected = jacobian.transpose() * DVector::from_column_slice(force.torque.as_slice()) * gains.lambda;
    let mut torque = stiffness + damping + injected;
    let clamped = clamp_symmetric(&mut torque, torque_limits);
    Ok(TorqueOutput {
        torque,
        singular,
        clamped,
    })
}

/// Scalar joint impedance law (elbow, fingers), clamped to `±limit`:
/// `tau = k_p (q_m - q_s) + k_d (qd_m - qd_s) + lambda tau_ft`.
#[allow(clippy::too_many_arguments)]
pub fn joint_impedance_torque<T: Real>(
    q_m: T,
    q_s: T,
    qd_m: T,
    qd_s: T,
    tau_ft: T,
    gains: &JointGains<T>,
    limit: T,
) -> T {
    let tau = gains.k_p * (q_m - q_s) + gains.k_d * (qd_m - qd_s) + gains.lambda * tau_ft;
    if tau > limit {
        limit
    } else if tau < -limit {
        -limit
    } else {
        tau
    }
}
