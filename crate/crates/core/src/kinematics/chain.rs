//! Generic serial DH chains whose rows may be driven by an active joint, by
//! the shoulder linkage coupling, or held fixed.

use nalgebra::{DMatrix, DVector, Vector3};

use super::{Frame, KinematicsError, ShoulderCoupling};
use crate::scalar::Real;

/// The three passive joints of the shoulder linkage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassiveJoint {
    /// Joint 2-2_1.
    Link21,
    /// Joint 2_1-2_2.
    Link22,
    /// Joint 2_2-3.
    Link3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    /// Driven by active joint `index` of the configuration vector.
    Active(usize),
    /// Slaved to the linkage driver through the shoulder coupling.
    PassiveCoupled(PassiveJoint),
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhLink<T: Real> {
    pub theta_offset: T,
    pub d: T,
    pub a: T,
    pub alpha: T,
    pub kind: JointKind,
}

impl<T: Real> DhLink<T> {
    pub fn new(theta_offset: T, d: T, a: T, alpha: T, kind: JointKind) -> Self {
        Self {
            theta_offset,
            d,
            a,
            alpha,
            kind,
        }
    }

    fn is_finite(&self) -> bool {
        [self.theta_offset, self.d, self.a, self.alpha]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Joint angles (rad) and velocities (rad/s) of the active joints.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig<T: Real> {
    pub angles: DVector<T>,
    pub velocities: DVector<T>,
}

impl<T: Real> JointConfig<T> {
    pub fn new(angles: DVector<T>, velocities: DVector<T>) -> Result<Self, KinematicsError> {
        if angles.len() != velocities.len() {
            return Err(KinematicsError::DimensionMismatch {
                expected: angles.len(),
                got: velocities.len(),
            });
        }
        if angles.iter().chain(velocities.iter()).any(|v| !v.is_finite()) {
            return Err(KinematicsError::NonFinite);
        }
        Ok(Self { angles, velocities })
    }

    /// Configuration at rest velocity.
    pub fn at_rest(angles: &[T]) -> Result<Self, KinematicsError> {
        Self::new(
            DVector::from_column_slice(angles),
            DVector::zeros(angles.len()),
        )
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            angles: DVector::zeros(n),
            velocities: DVector::zeros(n),
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Coupled<T: Real> {
    params: ShoulderCoupling<T>,
    driver: usize,
}

/// Serial chain of DH rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<T: Real> {
    links: Vec<DhLink<T>>,
    coupling: Option<Coupled<T>>,
    n_active: usize,
}

impl<T: Real> Chain<T> {
    /// Builds a chain with no coupled rows.
    pub fn new(links: Vec<DhLink<T>>) -> Result<Self, KinematicsError> {
        Self::build(links, None)
    }

    /// Builds a chain whose passive rows follow active joint `driver` through `coupling`.
    pub fn with_coupling(
        links: Vec<DhLink<T>>,
        coupling: ShoulderCoupling<T>,
        driver: usize,
    ) -> Result<Self, KinematicsError> {
        Self::build(
            links,
            Some(Coupled {
                params: coupling,
                driver,
            }),
        )
    }

    fn build(links: Vec<DhLink<T>>, coupling: Option<Coupled<T>>) -> Result<Self, KinematicsError> {
        if links.iter().any(|l| !l.is_finite()) {
            return Err(KinematicsError::InvalidChain("non-finite DH parameter".into()));
        }
        let mut active: Vec<usize> = links
            .iter()
            .filter_map(|l| match l.kind {
                JointKind::Active(i) => Some(i),
                _ => None,
            })
            .collect();
        if let Some(c) = &coupling {
            active.push(c.driver);
        }
        active.sort_unstable();
        let n_active = active.len();
        active.dedup();
        if active.len() != n_active || active.iter().enumerate().any(|(i, &j)| i != j) {
            return Err(KinematicsError::InvalidChain(
                "active joint indices must be unique and contiguous from 0".into(),
            ));
        }
        let has_passive = links
            .iter()
            .any(|l| matches!(l.kind, JointKind::PassiveCoupled(_)));
        if has_passive && coupling.is_none() {
            return Err(KinematicsError::InvalidChain(
                "passive-coupled rows require a shoulder coupling".into(),
            ));
        }
        Ok(Self {
            links,
            coupling,
            n_active,
        })
    }

    pub fn links(&self) -> &[DhLink<T>] {
        &self.links
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn coupling(&self) -> Option<&ShoulderCoupling<T>> {
        self.coupling.as_ref().map(|c| &c.params)
    }

    /// Index of the active joint that drives the linkage, if any.
    pub fn coupling_driver(&self) -> Option<usize> {
        self.coupling.as_ref().map(|c| c.driver)
    }

    fn check_len(&self, angles: &[T]) -> Result<(), KinematicsError> {
        if angles.len() != self.n_active {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.n_active,
                got: angles.len(),
            });
        }
        if angles.iter().any(|v| !v.is_finite()) {
            return Err(KinematicsError::NonFinite);
        }
        Ok(())
    }

    /// Joint variable of each row plus `d(theta_row)/d(active joint)` as (joint, weight).
    fn row_angles(&self, angles: &[T]) -> Vec<(T, Option<(usize, T)>)> {
        let passive = self.coupling.as_ref().map(|c| {
            let theta1 = angles[c.driver];
            (
                c.params.coupled_linkage_angles(theta1),
                c.params.linkage_partials(),
                c.driver,
            )
        });
        self.links
            .iter()
            .map(|link| match link.kind {
                JointKind::Active(j) => (link.theta_offset + angles[j], Some((j, T::one()))),
                JointKind::Fixed => (link.theta_offset, None),
                JointKind::PassiveCoupled(p) => {
                    let (values, partials, driver) =
                        passive.as_ref().expect("validated at construction");
                    (
                        link.theta_offset + values.get(p),
                        Some((*driver, partials.get(p))),
                    )
                }
            })
            .collect()
    }

    /// Base-to-link frames for every row (`frames[k]` is the frame after row `k`).
    pub fn forward_kinematics(&self, angles: &[T]) -> Result<Vec<Frame<T>>, KinematicsError> {
        self.check_len(angles)?;
        let mut current = Frame::identity();
        let frames = self
            .links
            .iter()
            .zip(self.row_angles(angles))
            .map(|(link, (theta, _))| {
                current = current.compose(&Frame::from_dh(theta, link.d, link.a, link.alpha));
                current
            })
            .collect();
        Ok(frames)
    }

    pub fn end_frame(&self, angles: &[T]) -> Result<Frame<T>, KinematicsError> {
        Ok(self
            .forward_kinematics(angles)?
            .last()
            .copied()
            .unwrap_or_else(Frame::identity))
    }

    /// Geometric Jacobian (angular rows, then linear rows) of the frame after
    /// row `frame_index`, expressed in the base frame. Coupled passive rows fold
    /// into the driver column weighted by the coupling partials.
    pub fn jacobian_to(&self, angles: &[T], frame_index: usize) -> Result<DMatrix<T>, KinematicsError> {
        if frame_index >= self.links.len() {
            return Err(KinematicsError::InvalidChain(format!(
                "frame index {frame_index} out of range for {} rows",
                self.links.len()
            )));
        }
        let frames = self.forward_kinematics(angles)?;
        let rows = self.row_angles(angles);
        let target = frames[frame_index].translation;
        let mut jac = DMatrix::zeros(6, self.n_active);
        for (k, (_, dependence)) in rows.iter().enumerate().take(frame_index + 1) {
            let Some((joint, weight)) = *dependence else {
                continue;
            };
            let (axis, origin) = if k == 0 {
                (Vector3::z(), Vector3::zeros())
            } else {
                (frames[k - 1].z_axis(), frames[k - 1].translation)
            };
            let linear = axis.cross(&(target - origin));
            for r in 0..3 {
                jac[(r, joint)] += weight * axis[r];
                jac[(r + 3, joint)] += weight * linear[r];
            }
        }
        Ok(jac)
    }

    /// Jacobian of the last frame.
    pub fn jacobian(&self, angles: &[T]) -> Result<DMatrix<T>, KinematicsError> {
        let last = self.links.len().saturating_sub(1);
        self.jacobian_to(angles, last)
    }
}
