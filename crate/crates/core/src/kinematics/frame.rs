use nalgebra::{Matrix3, Point3, UnitQuaternion, Vector3};

use crate::scalar::Real;

/// Rigid-body pose: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<T: Real> {
    pub rotation: UnitQuaternion<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> Frame<T> {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Standard Denavit-Hartenberg link transform `Rz(theta) Tz(d) Tx(a) Rx(alpha)`.
    pub fn from_dh(theta: T, d: T, a: T, alpha: T) -> Self {
        let rz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta);
        let rx = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), alpha);
        let translation = Vector3::new(a * theta.cos(), a * theta.sin(), d);
        Self {
            rotation: rz * rx,
            translation,
        }
    }

    /// `self * other`: express `other` (given in this frame) in this frame's parent.
    pub fn compose(&self, other: &Frame<T>) -> Frame<T> {
        let mut rotation = self.rotation * other.rotation;
        rotation.renormalize_fast();
        Frame {
            rotation,
            translation: self.translation + self.rotation * other.translation,
        }
    }

    pub fn inverse(&self) -> Frame<T> {
        let inv = self.rotation.inverse();
        Frame {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Point3<T>) -> Point3<T> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn rotation_matrix(&self) -> Matrix3<T> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// Local z axis expressed in the parent frame.
    pub fn z_axis(&self) -> Vector3<T> {
        self.rotation * Vector3::z()
    }

    /// True when `R Rᵀ = I` and `det R = +1` within `tol`.
    pub fn is_orthonormal(&self, tol: T) -> bool {
        let r = self.rotation_matrix();
        let err = (r * r.transpose() - Matrix3::identity()).amax();
        err <= tol && (r.determinant() - T::one()).abs() <= tol
    }
}

impl<T: Real> Default for Frame<T> {
    fn default() -> Self {
        Self::identity()
    }
}
