//! Poses and SO(3) exp/log primitives shared by kinematics and dynamics.

use crate::error::{CoreError, CoreResult};
use crate::fmath;
use alloc::format;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Rigid-body pose: world-from-local rotation plus translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub translation: Vec3,
    pub rotation: Mat3,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            translation: Vec3::zeros(),
            rotation: Mat3::identity(),
        }
    }

    pub fn new(translation: Vec3, rotation: Mat3) -> Self {
        Pose {
            translation,
            rotation,
        }
    }

    /// Compose: `self` then `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            translation: self.translation + self.rotation * other.translation,
            rotation: self.rotation * other.rotation,
        }
    }

    /// Map a point from local to world coordinates.
    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.translation + self.rotation * p
    }

    /// Orthonormality / right-handedness check used by type invariants.
    pub fn is_valid(&self, tol: f64) -> bool {
        rotation_defect(&self.rotation) <= tol && self.translation.iter().all(|x| x.is_finite())
    }
}

/// Max-abs entry of RᵀR − I plus |det R − 1|.
pub fn rotation_defect(r: &Mat3) -> f64 {
    let e = r.transpose() * r - Mat3::identity();
    let mut d: f64 = 0.0;
    for v in e.iter() {
        d = d.max(v.abs());
    }
    d.max((r.determinant() - 1.0).abs())
}

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues formula: rotation matrix from a rotation vector θ·axis.
pub fn rotation_from_vector(w: &Vec3) -> Mat3 {
    let theta = w.norm();
    if theta < 1e-12 {
        let k = skew(w);
        return Mat3::identity() + k + 0.5 * k * k;
    }
    let axis = w / theta;
    let k = skew(&axis);
    Mat3::identity() + fmath::sin(theta) * k + (1.0 - fmath::cos(theta)) * (k * k)
}

/// Rotation about an arbitrary unit axis by angle `q`.
pub fn rotation_about_axis(axis: &Vec3, q: f64) -> Mat3 {
    rotation_from_vector(&(axis * q))
}

/// Matrix logarithm on SO(3): returns θ·axis with θ ∈ [0, π].
///
/// Inputs failing orthonormality beyond `1e-6` are rejected. Near θ = π
/// the axis sign is fixed by requiring the largest-magnitude component
/// to be nonnegative.
pub fn rotation_to_vector(r: &Mat3) -> CoreResult<Vec3> {
    let defect = rotation_defect(r);
    if defect > 1e-6 {
        return Err(CoreError::Validation(format!(
            "matrix is not a rotation (defect {defect:.3e})"
        )));
    }
    let trace = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
    let c = ((trace - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = fmath::acos(c);

    // Antisymmetric part carries sin(θ)·axis.
    let v = Vec3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );

    if theta < 1e-10 {
        return Ok(v * 0.5);
    }
    if theta < core::f64::consts::PI - 1e-4 {
        return Ok(v * (theta / (2.0 * fmath::sin(theta))));
    }

    // Near π: recover |axis_i| from the symmetric part, signs from the
    // off-diagonals relative to the largest component.
    let ax = fmath::sqrt(((r[(0, 0)] + 1.0) * 0.5).max(0.0));
    let ay = fmath::sqrt(((r[(1, 1)] + 1.0) * 0.5).max(0.0));
    let az = fmath::sqrt(((r[(2, 2)] + 1.0) * 0.5).max(0.0));
    let mut axis = Vec3::new(ax, ay, az);
    let (i, _) = axis
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (k, &x)| if x > acc.1 { (k, x) } else { acc });
    // Off-diagonal products a_i a_j = (R_ij + R_ji)/4 fix relative signs.
    let sym = |p: usize, q: usize| (r[(p, q)] + r[(q, p)]) * 0.25;
    for j in 0..3 {
        if j != i && sym(i, j) < 0.0 {
            axis[j] = -axis[j];
        }
    }
    let n = axis.norm();
    if n > 1e-12 {
        axis /= n;
    }
    // Just below π the antisymmetric part still carries the sign.
    let sin_part = v.dot(&axis);
    if sin_part.abs() > 1e-8 {
        if sin_part < 0.0 {
            axis = -axis;
        }
    } else {
        // True π ambiguity: largest-magnitude component made nonnegative.
        let (mi, _) = axis.iter().enumerate().fold((0, -1.0), |acc, (k, &x)| {
            if x.abs() > acc.1 {
                (k, x.abs())
            } else {
                acc
            }
        });
        if axis[mi] < 0.0 {
            axis = -axis;
        }
    }
    Ok(axis * theta)
}

/// Smallest rotation carrying the local z-axis onto `dir` (unit).
pub fn minimal_rotation_z_to(dir: &Vec3) -> Mat3 {
    let z = Vec3::new(0.0, 0.0, 1.0);
    let d = dir.dot(&z).clamp(-1.0, 1.0);
    if d > 1.0 - 1e-12 {
        return Mat3::identity();
    }
    if d < -1.0 + 1e-12 {
        // π about x
        return rotation_from_vector(&Vec3::new(core::f64::consts::PI, 0.0, 0.0));
    }
    let axis = z.cross(dir).normalize();
    rotation_about_axis(&axis, fmath::acos(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use approx::assert_abs_diff_eq;

    fn random_rotation(rng: &mut Rng) -> Mat3 {
        let w = Vec3::new(rng.normal(), rng.normal(), rng.normal());
        rotation_from_vector(&w)
    }

    #[test]
    fn log_of_identity_is_zero() {
        let w = rotation_to_vector(&Mat3::identity()).unwrap();
        assert_eq!(w, Vec3::zeros());
    }

    #[test]
    fn log_of_z_quarter_turn() {
        let r = rotation_about_axis(&Vec3::new(0.0, 0.0, 1.0), core::f64::consts::FRAC_PI_2);
        let w = rotation_to_vector(&r).unwrap();
        assert_abs_diff_eq!(w.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.z, core::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = Rng::new(5);
        for _ in 0..500 {
            let r = random_rotation(&mut rng);
            let w = rotation_to_vector(&r).unwrap();
            assert!(w.norm() <= core::f64::consts::PI + 1e-9);
            let r2 = rotation_from_vector(&w);
            let err = (r - r2).norm();
            assert!(err < 1e-8, "round-trip error {err}");
        }
    }

    #[test]
    fn exp_log_near_pi_degraded_tolerance() {
        let mut rng = Rng::new(9);
        for _ in 0..200 {
            let axis = {
                let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
                v / v.norm()
            };
            let theta = core::f64::consts::PI - rng.uniform(0.0, 1e-4);
            let r = rotation_about_axis(&axis, theta);
            let w = rotation_to_vector(&r).unwrap();
            let r2 = rotation_from_vector(&w);
            assert!((r - r2).norm() < 1e-5, "near-pi round trip");
        }
    }

    #[test]
    fn log_rejects_non_rotation() {
        let mut m = Mat3::identity();
        m[(0, 0)] = 1.5;
        assert!(rotation_to_vector(&m).is_err());
    }

    #[test]
    fn minimal_rotation_sends_z_to_dir() {
        let mut rng = Rng::new(1);
        for _ in 0..200 {
            let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
            let dir = v / v.norm();
            let r = minimal_rotation_z_to(&dir);
            let img = r * Vec3::new(0.0, 0.0, 1.0);
            assert!((img - dir).norm() < 1e-9);
            assert!(rotation_defect(&r) < 1e-9);
        }
    }
}
