use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::ControlError;
use crate::scalar::Real;

/// Maximum accepted deviation of an input quaternion's norm from one.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;
const SMALL_ANGLE: f64 = 1e-6;

fn check_unit<T: Real>(q: &Quaternion<T>, which: &str) -> Result<(), ControlError> {
    let norm = q.norm();
    if !norm.is_finite() || (norm - T::one()).abs() > T::lit(UNIT_NORM_TOLERANCE) {
        return Err(ControlError::Validation(format!(
            "{which} is not a unit quaternion (norm {})",
            norm.to_f64_lossy()
        )));
    }
    Ok(())
}

/// Flips `q` onto the hemisphere with non-negative scalar part.
pub fn canonical<T: Real>(q: UnitQuaternion<T>) -> UnitQuaternion<T> {
    if q.w < T::zero() {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

/// Orientation error `q_t = conj(q_s) * q_m`, renormalized and canonical.
pub fn quat_error<T: Real>(q_s: &Quaternion<T>, q_m: &Quaternion<T>) -> Result<UnitQuaternion<T>, ControlError> {
    check_unit(q_s, "follower orientation")?;
    check_unit(q_m, "master orientation")?;
    // Hamilton product written out with its terms paired so that equal
    // inputs cancel exactly and yield the identity.
    let (ws, xs, ys, zs) = (q_s.w, q_s.i, q_s.j, q_s.k);
    let (wm, xm, ym, zm) = (q_m.w, q_m.i, q_m.j, q_m.k);
    let product = Quaternion::new(
        ws * wm + xs * xm + ys * ym + zs * zm,
        (ws * xm - xs * wm) + (zs * ym - ys * zm),
        (ws * ym - ys * wm) + (xs * zm - zs * xm),
        (ws * zm - zs * wm) + (ys * xm - xs * ym),
    );
    Ok(canonical(UnitQuaternion::new_normalize(product)))
}

/// Angular velocity error `qdot_m - qdot_s`.
pub fn velocity_error<T: Real>(qdot_m: &Vector3<T>, qdot_s: &Vector3<T>) -> Vector3<T> {
    qdot_m - qdot_s
}

/// Logarithm map: rotation axis scaled by angle, on the canonical cover
/// (angle in `[0, pi]`). Uses a series expansion near the identity.
pub fn rotation_vector<T: Real>(q: &UnitQuaternion<T>) -> Vector3<T> {
    let q = canonical(*q);
    let v = q.imag();
    let w = q.w;
    let s = v.norm();
    if s < T::lit(SMALL_ANGLE) {
        // 2 atan(s / w) / s ~ (2 / w) (1 - s^2 / (3 w^2))
        let ratio = s / w;
        let two = T::lit(2.0);
        v * (two / w * (T::one() - ratio * ratio / T::lit(3.0)))
    } else {
        v * (T::lit(2.0) * s.atan2(w) / s)
    }
}

/// Exponential map, inverse of [`rotation_vector`].
pub fn rotation_exp<T: Real>(v: &Vector3<T>) -> UnitQuaternion<T> {
    let theta = v.norm();
    let half = T::lit(0.5);
    if theta < T::lit(SMALL_ANGLE) {
        let t2 = theta * theta;
        let w = T::one() - t2 / T::lit(8.0);
        let xyz = v * (half * (T::one() - t2 / T::lit(24.0)));
        UnitQuaternion::new_normalize(Quaternion::new(w, xyz[0], xyz[1], xyz[2]))
    } else {
        let axis = v / theta;
        let (s, c) = (theta * half).sin_cos();
        UnitQuaternion::new_unchecked(Quaternion::new(c, axis[0] * s, axis[1] * s, axis[2] * s))
    }
}
