use nalgebra::{DMatrix, DVector};

use super::impedance::{clamp_symmetric, BindingForce};
use super::ControlError;
use crate::kinematics::JointConfig;
use crate::scalar::Real;

/// Velocity scale of the smooth Coulomb friction term (rad/s).
pub const COULOMB_SMOOTHING: f64 = 0.01;
/// Standard gravity (m/s²).
pub const GRAVITY: f64 = 9.81;

/// One point-mass link of a planar gravity chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMassLink<T> {
    /// Joint index in the full joint vector that drives this link.
    pub joint: usize,
    /// Distance from this joint to the next one along the chain (m).
    pub length: T,
    /// Link mass (kg).
    pub mass: T,
    /// Distance from this joint to the link's centre of mass (m).
    pub lever: T,
}

/// Point-mass-per-link gravity model for a serial chain moving in a vertical
/// plane, angles measured from the horizontal and accumulated along the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarGravity<T> {
    pub links: Vec<PointMassLink<T>>,
    pub g: T,
}

impl<T: Real> PlanarGravity<T> {
    pub fn none() -> Self {
        Self {
            links: Vec::new(),
            g: T::lit(GRAVITY),
        }
    }

    /// Gravity torque on every joint of an `n`-joint vector.
    pub fn torque(&self, q: &DVector<T>) -> DVector<T> {
        let n = q.len();
        let mut tau = DVector::zeros(n);
        // Horizontal coordinate of each joint and of each link's centre of mass.
        let mut joint_x = Vec::with_capacity(self.links.len());
        let mut com_x = Vec::with_capacity(self.links.len());
        let mut phi = T::zero();
        let mut x = T::zero();
        for link in &self.links {
            phi += q[link.joint];
            joint_x.push(x);
            com_x.push(x + link.lever * phi.cos());
            x += link.length * phi.cos();
        }
        for (i, link) in self.links.iter().enumerate() {
            let mut t = T::zero();
            for (j, other) in self.links.iter().enumerate().skip(i) {
                t += other.mass * (com_x[j] - joint_x[i]);
            }
            tau[link.joint] += self.g * t;
        }
        tau
    }
}

/// Viscous plus smooth-Coulomb friction coefficients of one joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Friction<T> {
    pub viscous: T,
    pub coulomb: T,
}

/// Model-based compensation `tau = M a + h(q, qd) + g(q) + f(qd)`.
///
/// The Coriolis surrogate is the velocity-product term
/// `h_i = qd_i * sum_j C_ij qd_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensationModel<T: Real> {
    inertia: DMatrix<T>,
    coriolis: DMatrix<T>,
    gravity: PlanarGravity<T>,
    friction: Vec<Friction<T>>,
}

impl<T: Real> CompensationModel<T> {
    pub fn new(
        inertia: DMatrix<T>,
        coriolis: DMatrix<T>,
        gravity: PlanarGravity<T>,
        friction: Vec<Friction<T>>,
    ) -> Result<Self, ControlError> {
        let model = Self {
            inertia,
            coriolis,
            gravity,
            friction,
        };
        model.validate()?;
        Ok(model)
    }

    /// Diagonal inertia, no Coriolis, gravity or friction.
    pub fn inertia_only(diagonal: &[T]) -> Result<Self, ControlError> {
        let n = diagonal.len();
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(diagonal)),
            DMatrix::zeros(n, n),
            PlanarGravity::none(),
            vec![
                Friction {
                    viscous: T::zero(),
                    coulomb: T::zero()
                };
                n
            ],
        )
    }

    /// Desk-scale model of the six active exoskeleton joints: light diagonal
    /// inertia, an upper-arm/forearm point-mass gravity chain on the flexion
    /// and elbow joints, and small friction.
    pub fn exo_default() -> Self {
        use crate::kinematics::exo::joints;
        let inertia = [0.02, 0.02, 0.01, 0.01, 0.01, 0.002].map(T::lit);
        let gravity = PlanarGravity {
            links: vec![
                PointMassLink {
                    joint: joints::SHOULDER_FLEXION,
                    length: T::lit(0.28),
                    mass: T::lit(1.2),
                    lever: T::lit(0.14),
                },
                PointMassLink {
                    joint: joints::ELBOW,
                    length: T::lit(0.25),
                    mass: T::lit(0.8),
                    lever: T::lit(0.12),
                },
            ],
            g: T::lit(GRAVITY),
        };
        let friction = vec![
            Friction {
                viscous: T::lit(0.05),
                coulomb: T::lit(0.02),
            };
            joints::COUNT
        ];
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(&inertia)),
            DMatrix::zeros(joints::COUNT, joints::COUNT),
            gravity,
            friction,
        )
        .expect("default compensation model is valid")
    }

    pub fn len(&self) -> usize {
        self.inertia.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inertia(&self) -> &DMatrix<T> {
        &self.inertia
    }

    pub fn gravity(&self) -> &PlanarGravity<T> {
        &self.gravity
    }

    fn validate(&self) -> Result<(), ControlError> {
        let n = self.inertia.nrows();
        let config = |msg: String| Err(ControlError::Configuration(msg));
        if self.inertia.ncols() != n {
            return config("inertia matrix must be square".into());
        }
        if self.coriolis.shape() != (n, n) {
            return config(format!("coriolis matrix must be {n}x{n}"));
        }
        if self.friction.len() != n {
            return config(format!("expected {n} friction entries, got {}", self.friction.len()));
        }
        let scale = self.inertia.amax().max(T::one());
        if (&self.inertia - self.inertia.transpose()).amax() > T::lit(1e-12) * scale {
            return config("inertia matrix is not symmetric".into());
        }
        if self.inertia.clone().cholesky().is_none() {
            return config("inertia matrix is not positive definite".into());
        }
        if self
            .friction
            .iter()
            .any(|f| !(f.viscous >= T::zero() && f.coulomb >= T::zero()))
        {
            return config("friction coefficients must be non-negative".into());
        }
        if let Some(bad) = self.gravity.links.iter().find(|l| l.joint >= n) {
            return config(format!("gravity link refers to joint {} of {n}", bad.joint));
        }
        Ok(())
    }
}

/// `tau_com = M a + h(q, qd) + g(q) + f(qd)`.
pub fn dynamics_compensation<T: Real>(
    state: &JointConfig<T>,
    accel_ref: &DVector<T>,
    model: &CompensationModel<T>,
) -> Result<DVector<T>, ControlError> {
    model.validate()?;
    let n = model.len();
    for (what, got) in [("joint state", state.len()), ("reference acceleration", accel_ref.len())] {
        if got != n {
            return Err(ControlError::DimensionMismatch {
                what,
                expected: n,
                got,
            });
        }
    }
    let qd = &state.velocities;
    let inertial = &model.inertia * accel_ref;
    let coriolis = qd.component_mul(&(&model.coriolis * qd));
    let gravity = model.gravity.torque(&state.angles);
    let eps = T::lit(COULOMB_SMOOTHING);
    let friction = DVector::from_iterator(
        n,
        model
            .friction
            .iter()
            .zip(qd.iter())
            .map(|(f, &v)| f.viscous * v + f.coulomb * (v / eps).tanh()),
    );
    Ok(inertial + coriolis + gravity + friction)
}

/// Full-arm coordination assist surrogate: `tau_h = scale * sum_k J_kᵀ w_k`.
///
/// Each Jacobian has 6 rows `(angular, linear)` paired with the wrench
/// `(torque, force)`, or 3 angular rows paired with the torque part only.
pub fn fcm_assist<T: Real>(
    bindings: &[(&DMatrix<T>, &BindingForce<T>)],
    scale: T,
) -> Result<DVector<T>, ControlError> {
    let Some((first, _)) = bindings.first() else {
        return Err(ControlError::Validation("no bindings supplied".into()));
    };
    let n = first.ncols();
    let mut tau = DVector::zeros(n);
    for (j, force) in bindings {
        if !force.is_finite() {
            return Err(ControlError::Validation("binding wrench is not finite".into()));
        }
        if j.ncols() != n {
            return Err(ControlError::DimensionMismatch {
                what: "binding jacobian columns",
                expected: n,
                got: j.ncols(),
            });
        }
        let w = match j.nrows() {
            6 => DVector::from_column_slice(force.wrench().as_slice()),
            3 => DVector::from_column_slice(force.torque.as_slice()),
            got => {
                return Err(ControlError::DimensionMismatch {
                    what: "binding jacobian rows",
                    expected: 6,
                    got,
                })
            }
        };
        tau += j.transpose() * w;
    }
    Ok(tau * scale)
}

/// Exoskeleton motor command `tau_com + tau_h`, clamped to `±limits`.
pub fn exo_command<T: Real>(
    tau_com: &DVector<T>,
    tau_h: &DVector<T>,
    limits: &DVector<T>,
) -> Result<DVector<T>, ControlError> {
    let n = tau_com.len();
    for (what, got) in [("assist torque", tau_h.len()), ("torque limits", limits.len())] {
        if got != n {
            return Err(ControlError::DimensionMismatch {
                what,
                expected: n,
                got,
            });
        }
    }
    let mut sum = tau_com + tau_h;
    clamp_symmetric(&mut sum, limits);
    Ok(sum)
}
