//! Forward kinematics and the explicit hardware encoding.
//!
//! The encoding concatenates relative poses of consecutive joint frames
//! evaluated at a canonical reference configuration (all angles zero):
//! base→J0 first, then each joint-to-joint block, then the tool point,
//! zero-padded to the fixed block budget. Translations are world-frame
//! difference vectors; rotations are axis-angle (log-map) vectors.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::math::{rotation_about_axis, rotation_from_vector, Mat3, Pose, Vec3};
use crate::robot::{RobotSpec, TypeTag, MAX_ARM_DOF};

/// Relative pose between consecutive frames: world-frame translation
/// difference plus the axis-angle vector of the relative rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePose {
    pub d: Vec3,
    pub e: Vec3,
}

/// Fixed-length hardware description vector.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareVector {
    pub values: Vec<f64>,
    pub layout: EncodingLayout,
    pub n_active_blocks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingLayout {
    /// Relative-pose blocks of 6, `6*(n_max+1)` entries total.
    Explicit { n_max: usize },
    /// Learned row of the given dimension.
    Implicit { dim: usize },
}

impl HardwareVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> CoreResult<()> {
        match self.layout {
            EncodingLayout::Explicit { n_max } => {
                let want = 6 * (n_max + 1);
                if self.values.len() != want {
                    return Err(CoreError::Dimension(format!(
                        "explicit encoding must have {want} entries, got {}",
                        self.values.len()
                    )));
                }
                for (i, v) in self.values.iter().enumerate().skip(6 * self.n_active_blocks) {
                    if *v != 0.0 {
                        return Err(CoreError::Validation(format!(
                            "padding entry {i} is {v}, expected exact zero"
                        )));
                    }
                }
            }
            EncodingLayout::Implicit { dim } => {
                if self.values.len() != dim {
                    return Err(CoreError::Dimension(format!(
                        "implicit encoding must have {dim} entries, got {}",
                        self.values.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rotation matrix → axis-angle vector (θ ∈ [0, π], validated input).
pub fn rotation_to_vector(r: &Mat3) -> CoreResult<Vec3> {
    crate::math::rotation_to_vector(r)
}

/// Axis-angle vector → rotation matrix (Rodrigues).
pub fn vector_to_rotation(w: &Vec3) -> Mat3 {
    rotation_from_vector(w)
}

/// Relative pose of `child` with respect to `parent`: the translation is
/// the world-frame difference of origins, the rotation is
/// log(R_parentᵀ · R_child).
pub fn relative_pose(parent: &Pose, child: &Pose) -> CoreResult<RelativePose> {
    let rel = parent.rotation.transpose() * child.rotation;
    Ok(RelativePose {
        d: child.translation - parent.translation,
        e: crate::math::rotation_to_vector(&rel)?,
    })
}

/// Chain-recursive forward kinematics.
///
/// Returns one pose per joint frame (after the joint rotation) plus the
/// tool-point pose last, so the result has `dof + 1` entries.
pub fn forward_kinematics(spec: &RobotSpec, q: &[f64]) -> CoreResult<Vec<Pose>> {
    if q.len() != spec.dof() {
        return Err(CoreError::Dimension(format!(
            "expected {} joint angles, got {}",
            spec.dof(),
            q.len()
        )));
    }
    let mut poses = Vec::with_capacity(spec.dof() + 1);
    let mut cur = Pose::identity();
    for (joint, &angle) in spec.joints.iter().zip(q) {
        let mount = Pose::new(
            joint.translation(),
            rotation_from_vector(&joint.rotation_vec()),
        );
        let spin = Pose::new(Vec3::zeros(), rotation_about_axis(&joint.axis(), angle));
        cur = cur.compose(&mount).compose(&spin);
        poses.push(cur);
    }
    let ee = Pose::new(
        spec.ee_offset.translation_vec(),
        rotation_from_vector(&spec.ee_offset.rotation_vec()),
    );
    poses.push(cur.compose(&ee));
    Ok(poses)
}

/// Block budget of the explicit encoding for a robot class.
pub fn explicit_n_max(tag: TypeTag) -> usize {
    if tag.is_manipulator() {
        MAX_ARM_DOF
    } else {
        3
    }
}

/// Explicit hardware encoding evaluated at `reference_q` (normally all
/// zeros, making the vector a configuration-independent property of the
/// mount geometry).
pub fn explicit_encoding(spec: &RobotSpec, reference_q: &[f64]) -> CoreResult<HardwareVector> {
    let n = spec.dof();
    let n_max = explicit_n_max(spec.type_tag);
    if n > n_max {
        return Err(CoreError::Config(format!(
            "robot has {n} joints, encoding supports at most {n_max}"
        )));
    }
    let frames = forward_kinematics(spec, reference_q)?;
    let base = Pose::identity();

    let mut values = Vec::with_capacity(6 * (n_max + 1));
    let mut push_block = |rel: RelativePose| {
        values.extend_from_slice(&[rel.d.x, rel.d.y, rel.d.z, rel.e.x, rel.e.y, rel.e.z]);
    };
    push_block(relative_pose(&base, &frames[0])?);
    for i in 0..n {
        push_block(relative_pose(&frames[i], &frames[i + 1])?);
    }
    values.resize(6 * (n_max + 1), 0.0);

    let hv = HardwareVector {
        values,
        layout: EncodingLayout::Explicit { n_max },
        n_active_blocks: n + 1,
    };
    hv.validate()?;
    Ok(hv)
}

/// Ground-truth dynamics parameters normalized into [0, 1) by their
/// sampling ranges: per-joint damping/friction/armature groups (padded
/// to the block budget) followed by link-mass multipliers.
pub fn dynamics_encoding(
    spec: &RobotSpec,
    ranges: &crate::robot::SamplingRanges,
) -> CoreResult<Vec<f64>> {
    let n_max = explicit_n_max(spec.type_tag);
    let norm = |x: f64, r: [f64; 2]| {
        if r[1] > r[0] {
            ((x - r[0]) / (r[1] - r[0])).clamp(0.0, 0.999_999)
        } else {
            0.0
        }
    };
    let mut out = Vec::new();
    for field in 0..3 {
        for k in 0..n_max {
            out.push(match spec.joints.get(k) {
                Some(j) => match field {
                    0 => norm(j.damping, ranges.damping),
                    1 => norm(j.friction, ranges.friction),
                    _ => norm(j.armature, ranges.armature),
                },
                None => 0.0,
            });
        }
    }
    let defaults = default_link_masses(spec)?;
    let mass_slots = if spec.type_tag.is_manipulator() {
        n_max
    } else {
        n_max + 1
    };
    for k in 0..mass_slots {
        out.push(match (spec.link_masses.get(k), defaults.get(k)) {
            (Some(m), Some(d)) if *d > 0.0 => norm(m / d, ranges.mass_mult),
            _ => 0.0,
        });
    }
    Ok(out)
}

/// Dimension of [`dynamics_encoding`] for a robot class.
pub fn dynamics_encoding_dim(tag: TypeTag) -> usize {
    let n_max = explicit_n_max(tag);
    if tag.is_manipulator() {
        4 * n_max
    } else {
        3 * n_max + n_max + 1
    }
}

/// Default (unscaled) link masses for the robot's type, merged the same
/// way sampling merges them.
fn default_link_masses(spec: &RobotSpec) -> CoreResult<Vec<f64>> {
    if spec.type_tag.is_manipulator() {
        let (present, _) = crate::robot::type_joint_layout(spec.type_tag)?;
        let tpl = crate::robot::ChainTemplate::manipulator()?;
        let mut merged: Vec<f64> = Vec::new();
        let mut pending = 0.0;
        for (k, keep) in present.iter().enumerate() {
            if *keep {
                if let Some(last) = merged.last_mut() {
                    *last += pending;
                }
                pending = 0.0;
                merged.push(tpl.joints[k].default_mass);
            } else {
                pending += tpl.joints[k].default_mass;
            }
        }
        if let Some(last) = merged.last_mut() {
            *last += pending;
        }
        Ok(merged)
    } else {
        Ok(crate::robot::hopper_template().default_masses.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{sample_robot, JointDef, MountPose, SamplingRanges};
    use crate::rng::Rng;

    fn plain_joint(offset: [f64; 3]) -> JointDef {
        JointDef {
            axis_direction: [0.0, 0.0, 1.0],
            offset_translation: offset,
            offset_rotation: [0.0; 3],
            damping: 0.0,
            friction: 0.0,
            armature: 0.1,
            torque_limit: 1.0,
            angle_limits: [-3.0, 3.0],
        }
    }

    fn single_joint_spec() -> RobotSpec {
        RobotSpec {
            robot_id: "test".into(),
            type_tag: TypeTag::I,
            joints: alloc::vec![plain_joint([0.0, 0.0, 0.29])],
            ee_offset: MountPose {
                translation: [0.1, 0.0, 0.0],
                rotation: [0.0; 3],
            },
            link_masses: alloc::vec![1.0],
        }
    }

    #[test]
    fn single_joint_zero_angle() {
        let spec = single_joint_spec();
        let frames = forward_kinematics(&spec, &[0.0]).unwrap();
        assert_eq!(frames.len(), 2);
        assert!((frames[0].translation - Vec3::new(0.0, 0.0, 0.29)).norm() < 1e-15);
        assert!((frames[1].translation - Vec3::new(0.1, 0.0, 0.29)).norm() < 1e-15);
    }

    #[test]
    fn zero_config_equals_mount_composition() {
        let ranges = SamplingRanges::manipulator();
        let spec = sample_robot(TypeTag::I, &ranges, 3).unwrap();
        let frames = forward_kinematics(&spec, &[0.0; 7]).unwrap();
        // Compose mounts by hand.
        let mut cur = Pose::identity();
        for j in &spec.joints {
            cur = cur.compose(&Pose::new(
                j.translation(),
                rotation_from_vector(&j.rotation_vec()),
            ));
        }
        assert!((frames[6].translation - cur.translation).norm() < 1e-12);
        assert!((frames[6].rotation - cur.rotation).norm() < 1e-12);
    }

    #[test]
    fn wrong_angle_count_is_dimension_error() {
        let spec = single_joint_spec();
        assert!(matches!(
            forward_kinematics(&spec, &[0.0, 0.0]),
            Err(CoreError::Dimension(_))
        ));
    }

    /// Independent oracle: naive 4x4 homogeneous-matrix products built
    /// with nalgebra's own axis-angle rotation.
    fn fk_oracle(spec: &RobotSpec, q: &[f64]) -> Vec<nalgebra::Matrix4<f64>> {
        use nalgebra::{Matrix4, Rotation3};
        let hom = |r: nalgebra::Matrix3<f64>, t: Vec3| {
            let mut m = Matrix4::identity();
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
            m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
            m
        };
        let mut out = Vec::new();
        let mut t = Matrix4::identity();
        for (j, &angle) in spec.joints.iter().zip(q) {
            let mount = hom(
                Rotation3::from_scaled_axis(j.rotation_vec()).into_inner(),
                j.translation(),
            );
            let spin = hom(
                Rotation3::from_scaled_axis(j.axis() * angle).into_inner(),
                Vec3::zeros(),
            );
            t = t * mount * spin;
            out.push(t);
        }
        let ee = hom(
            Rotation3::from_scaled_axis(spec.ee_offset.rotation_vec()).into_inner(),
            spec.ee_offset.translation_vec(),
        );
        out.push(t * ee);
        out
    }

    #[test]
    fn fk_matches_homogeneous_product_oracle() {
        let ranges = SamplingRanges::manipulator();
        let mut rng = Rng::new(17);
        for seed in 0..100 {
            let spec = sample_robot(TypeTag::I, &ranges, seed).unwrap();
            let q: Vec<f64> = (0..7).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let frames = forward_kinematics(&spec, &q).unwrap();
            let oracle = fk_oracle(&spec, &q);
            for (f, o) in frames.iter().zip(&oracle) {
                for r in 0..3 {
                    for c in 0..3 {
                        assert!((f.rotation[(r, c)] - o[(r, c)]).abs() < 1e-9);
                    }
                    assert!((f.translation[r] - o[(r, 3)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn relative_pose_identities() {
        let p = Pose::new(
            Vec3::new(0.3, -0.2, 0.9),
            rotation_about_axis(&Vec3::new(0.0, 1.0, 0.0), 0.7),
        );
        let rel = relative_pose(&p, &p).unwrap();
        assert!(rel.d.norm() < 1e-15);
        assert!(rel.e.norm() < 1e-12);

        let child = Pose::new(Vec3::new(1.0, 2.0, 3.0), Mat3::identity());
        let rel = relative_pose(&Pose::identity(), &child).unwrap();
        assert_eq!(rel.d, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(rel.e, Vec3::zeros());
    }

    #[test]
    fn relative_pose_reconstructs_child() {
        let mut rng = Rng::new(23);
        for _ in 0..100 {
            let rv = Vec3::new(rng.normal(), rng.normal(), rng.normal());
            let rw = Vec3::new(rng.normal(), rng.normal(), rng.normal());
            let parent = Pose::new(
                Vec3::new(rng.normal(), rng.normal(), rng.normal()),
                rotation_from_vector(&rv),
            );
            let child = Pose::new(
                Vec3::new(rng.normal(), rng.normal(), rng.normal()),
                rotation_from_vector(&rw),
            );
            let rel = relative_pose(&parent, &child).unwrap();
            let rec_t = parent.translation + rel.d;
            let rec_r = parent.rotation * vector_to_rotation(&rel.e);
            assert!((rec_t - child.translation).norm() < 1e-12);
            assert!((rec_r - child.rotation).norm() < 1e-8);
        }
    }

    #[test]
    fn encoding_lengths_and_padding() {
        let ranges = SamplingRanges::manipulator();
        let seven = sample_robot(TypeTag::I, &ranges, 1).unwrap();
        let hv = explicit_encoding(&seven, &[0.0; 7]).unwrap();
        assert_eq!(hv.len(), 48);
        assert_eq!(hv.n_active_blocks, 8);

        let five = sample_robot(TypeTag::A, &ranges, 1).unwrap();
        let hv5 = explicit_encoding(&five, &[0.0; 5]).unwrap();
        assert_eq!(hv5.len(), 48);
        assert_eq!(hv5.n_active_blocks, 6);
        assert!(hv5.values[36..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_chain_encodes_to_zero_blocks() {
        let spec = RobotSpec {
            robot_id: "flat".into(),
            type_tag: TypeTag::I,
            joints: (0..7).map(|_| plain_joint([0.0; 3])).collect(),
            ee_offset: MountPose::identity(),
            link_masses: alloc::vec![1.0; 7],
        };
        let hv = explicit_encoding(&spec, &[0.0; 7]).unwrap();
        assert!(hv.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn base_translation_touches_only_first_block() {
        let ranges = SamplingRanges::manipulator();
        let spec = sample_robot(TypeTag::I, &ranges, 9).unwrap();
        let hv = explicit_encoding(&spec, &[0.0; 7]).unwrap();
        let mut moved = spec.clone();
        moved.joints[0].offset_translation[0] += 0.5;
        moved.joints[0].offset_translation[2] -= 0.25;
        let hv2 = explicit_encoding(&moved, &[0.0; 7]).unwrap();
        assert_ne!(&hv.values[..6], &hv2.values[..6]);
        for (a, b) in hv.values[6..].iter().zip(&hv2.values[6..]) {
            assert!((a - b).abs() < 1e-12, "joint-to-joint block changed: {a} vs {b}");
        }
    }

    #[test]
    fn hopper_encoding_has_four_blocks() {
        let spec = sample_robot(TypeTag::Hopper, &SamplingRanges::hopper(), 2).unwrap();
        let hv = explicit_encoding(&spec, &[0.0; 3]).unwrap();
        assert_eq!(hv.len(), 24);
        assert_eq!(hv.n_active_blocks, 4);
        let dyn_enc = dynamics_encoding(&spec, &SamplingRanges::hopper()).unwrap();
        assert_eq!(dyn_enc.len(), dynamics_encoding_dim(TypeTag::Hopper));
        assert!(dyn_enc.iter().all(|&v| (0.0..1.0).contains(&v)));
    }
}
