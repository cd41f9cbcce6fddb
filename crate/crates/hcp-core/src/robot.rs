//! Procedural generation of serial-chain robots.
//!
//! A checked-in chain template (`data/manipulator_template.txt`) defines
//! the canonical 7-DOF arm and the nine subset types A-I; the planar
//! hopper template is defined in [`hopper_template`]. Sampling varies
//! segment lengths, joint dynamics and link masses inside configured
//! ranges, deterministically from a seed.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::math::{minimal_rotation_z_to, rotation_to_vector, Mat3, Vec3};
use crate::rng::Rng;

/// Text of the checked-in manipulator template.
pub const MANIPULATOR_TEMPLATE: &str = include_str!("../data/manipulator_template.txt");

pub const MAX_ARM_DOF: usize = 7;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TypeTag {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    Hopper,
}

impl TypeTag {
    pub const MANIPULATORS: [TypeTag; 9] = [
        TypeTag::A,
        TypeTag::B,
        TypeTag::C,
        TypeTag::D,
        TypeTag::E,
        TypeTag::F,
        TypeTag::G,
        TypeTag::H,
        TypeTag::I,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TypeTag::A => "A",
            TypeTag::B => "B",
            TypeTag::C => "C",
            TypeTag::D => "D",
            TypeTag::E => "E",
            TypeTag::F => "F",
            TypeTag::G => "G",
            TypeTag::H => "H",
            TypeTag::I => "I",
            TypeTag::Hopper => "HOPPER",
        }
    }

    pub fn parse(s: &str) -> CoreResult<TypeTag> {
        match s {
            "A" => Ok(TypeTag::A),
            "B" => Ok(TypeTag::B),
            "C" => Ok(TypeTag::C),
            "D" => Ok(TypeTag::D),
            "E" => Ok(TypeTag::E),
            "F" => Ok(TypeTag::F),
            "G" => Ok(TypeTag::G),
            "H" => Ok(TypeTag::H),
            "I" => Ok(TypeTag::I),
            "HOPPER" => Ok(TypeTag::Hopper),
            other => Err(CoreError::Config(format!("unknown robot type `{other}`"))),
        }
    }

    /// Stable index used to derive per-type random streams.
    pub fn canonical_index(&self) -> u64 {
        match self {
            TypeTag::A => 0,
            TypeTag::B => 1,
            TypeTag::C => 2,
            TypeTag::D => 3,
            TypeTag::E => 4,
            TypeTag::F => 5,
            TypeTag::G => 6,
            TypeTag::H => 7,
            TypeTag::I => 8,
            TypeTag::Hopper => 9,
        }
    }

    pub fn dof(&self) -> usize {
        match self {
            TypeTag::A | TypeTag::B | TypeTag::C | TypeTag::D => 5,
            TypeTag::E | TypeTag::F | TypeTag::G | TypeTag::H => 6,
            TypeTag::I => 7,
            TypeTag::Hopper => 3,
        }
    }

    pub fn is_manipulator(&self) -> bool {
        !matches!(self, TypeTag::Hopper)
    }
}

impl core::fmt::Display for TypeTag {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One revolute joint: fixed mount relative to the previous joint frame,
/// rotation about the mounted frame's `axis_direction`, plus dynamics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointDef {
    /// Rotation axis in the joint's local (mounted) frame; unit length.
    pub axis_direction: [f64; 3],
    /// Mount translation from the parent frame origin, in the parent frame (m).
    pub offset_translation: [f64; 3],
    /// Mount rotation as a rotation vector (rad).
    pub offset_rotation: [f64; 3],
    /// Viscous damping (N·m·s/rad).
    pub damping: f64,
    /// Coulomb friction magnitude (N·m).
    pub friction: f64,
    /// Rotor inertia added to the joint-space diagonal (kg·m²).
    pub armature: f64,
    /// Actuator torque limit (N·m), > 0.
    pub torque_limit: f64,
    /// [lo, hi] joint angle limits (rad), lo < hi.
    pub angle_limits: [f64; 2],
}

impl JointDef {
    pub fn axis(&self) -> Vec3 {
        Vec3::from(self.axis_direction)
    }

    pub fn translation(&self) -> Vec3 {
        Vec3::from(self.offset_translation)
    }

    pub fn rotation_vec(&self) -> Vec3 {
        Vec3::from(self.offset_rotation)
    }

    pub fn validate(&self) -> CoreResult<()> {
        let an = self.axis().norm();
        if (an - 1.0).abs() > 1e-9 {
            return Err(CoreError::Validation(format!("joint axis norm {an} != 1")));
        }
        if self.damping < 0.0 || self.friction < 0.0 || self.armature < 0.0 {
            return Err(CoreError::Validation(
                "damping/friction/armature must be nonnegative".to_string(),
            ));
        }
        if self.torque_limit <= 0.0 {
            return Err(CoreError::Validation("torque limit must be > 0".to_string()));
        }
        if self.angle_limits[0] >= self.angle_limits[1] {
            return Err(CoreError::Validation("angle limits must satisfy lo < hi".to_string()));
        }
        Ok(())
    }
}

/// Fixed relative pose (translation + rotation vector), used for the
/// tool-point mount.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MountPose {
    pub translation: [f64; 3],
    pub rotation: [f64; 3],
}

impl MountPose {
    pub fn identity() -> Self {
        MountPose {
            translation: [0.0; 3],
            rotation: [0.0; 3],
        }
    }

    pub fn translation_vec(&self) -> Vec3 {
        Vec3::from(self.translation)
    }

    pub fn rotation_vec(&self) -> Vec3 {
        Vec3::from(self.rotation)
    }
}

/// Full kinematic + dynamic description of one sampled robot.
///
/// Link `i` is the rigid body downstream of joint `i`; for manipulators
/// its mass is concentrated at the link's distal frame origin (the next
/// joint, or the tool point for the last link). The hopper additionally
/// carries the torso as link 0 (mass list length DOF+1) with masses at
/// segment midpoints.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RobotSpec {
    pub robot_id: String,
    pub type_tag: TypeTag,
    pub joints: Vec<JointDef>,
    pub ee_offset: MountPose,
    pub link_masses: Vec<f64>,
}

impl RobotSpec {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn validate(&self) -> CoreResult<()> {
        if self.joints.is_empty() {
            return Err(CoreError::Validation("robot has no joints".to_string()));
        }
        if self.type_tag.dof() != self.joints.len() {
            return Err(CoreError::Validation(format!(
                "type {} expects {} joints, got {}",
                self.type_tag,
                self.type_tag.dof(),
                self.joints.len()
            )));
        }
        let expected_masses = if self.type_tag.is_manipulator() {
            self.joints.len()
        } else {
            self.joints.len() + 1
        };
        if self.link_masses.len() != expected_masses {
            return Err(CoreError::Validation(format!(
                "expected {expected_masses} link masses, got {}",
                self.link_masses.len()
            )));
        }
        if self.link_masses.iter().any(|&m| m <= 0.0) {
            return Err(CoreError::Validation("link masses must be > 0".to_string()));
        }
        for j in &self.joints {
            j.validate()?;
        }
        Ok(())
    }

    /// Sum of per-joint torque limits' joint index order.
    pub fn torque_limits(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.torque_limit).collect()
    }
}

/// Sampling ranges for robot variation (defaults follow the shipped
/// parameter tables; lengths default to the template's nominal ± half).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingRanges {
    /// Optional per-segment (name, (mean, halfwidth)) overrides in meters.
    pub length_overrides: Vec<(String, (f64, f64))>,
    /// Joint damping range (N·m·s/rad).
    pub damping: [f64; 2],
    /// Fraction of damping draws taken below 1.0 when the range spans it.
    pub damping_below_one: f64,
    /// Coulomb friction range (N·m).
    pub friction: [f64; 2],
    /// Armature range (kg·m²).
    pub armature: [f64; 2],
    /// Multiplier range applied to default link masses.
    pub mass_mult: [f64; 2],
}

impl SamplingRanges {
    /// Manipulator defaults: damping [0.01, 30] with a 50/50 under/over-1
    /// split, friction [0, 10], armature [0.01, 4], mass ×[0.25, 4].
    pub fn manipulator() -> Self {
        SamplingRanges {
            length_overrides: Vec::new(),
            damping: [0.01, 30.0],
            damping_below_one: 0.5,
            friction: [0.0, 10.0],
            armature: [0.01, 4.0],
            mass_mult: [0.25, 4.0],
        }
    }

    /// Hopper defaults: damping [0.01, 5], friction [0, 2], armature
    /// [0.1, 2], mass ×[0.25, 2].
    pub fn hopper() -> Self {
        SamplingRanges {
            length_overrides: Vec::new(),
            damping: [0.01, 5.0],
            damping_below_one: 0.5,
            friction: [0.0, 2.0],
            armature: [0.1, 2.0],
            mass_mult: [0.25, 2.0],
        }
    }

    /// Zero-width ranges pinned at each low bound; handy in tests.
    pub fn degenerate() -> Self {
        SamplingRanges {
            length_overrides: Vec::new(),
            damping: [0.1, 0.1],
            damping_below_one: 0.5,
            friction: [0.0, 0.0],
            armature: [0.1, 0.1],
            mass_mult: [1.0, 1.0],
        }
    }

    pub fn validate(&self) -> CoreResult<()> {
        for (name, (mean, half)) in &self.length_overrides {
            if *half < 0.0 || *mean - *half < 0.0 {
                return Err(CoreError::Config(format!("bad length range for `{name}`")));
            }
        }
        for (label, r) in [
            ("damping", self.damping),
            ("friction", self.friction),
            ("armature", self.armature),
            ("mass_mult", self.mass_mult),
        ] {
            if r[0] > r[1] {
                return Err(CoreError::Config(format!("{label} range low > high")));
            }
        }
        if !(0.0..=1.0).contains(&self.damping_below_one) {
            return Err(CoreError::Config("damping split must be in [0,1]".to_string()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Chain template
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SegmentDef {
    pub name: String,
    pub gap: usize,
    pub dir: Vec3,
    pub nominal: f64,
    pub halfwidth: f64,
}

#[derive(Debug, Clone)]
pub struct TemplateJoint {
    pub name: String,
    pub gap: usize,
    pub axis_world: Vec3,
    pub default_mass: f64,
    pub torque_limit: f64,
    pub angle_limits: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct ChainTemplate {
    pub segments: Vec<SegmentDef>,
    pub joints: Vec<TemplateJoint>,
    pub ee_gap: usize,
    /// tag -> indices of removed joints
    pub types: Vec<(TypeTag, Vec<usize>)>,
}

impl ChainTemplate {
    pub fn manipulator() -> CoreResult<ChainTemplate> {
        parse_template(MANIPULATOR_TEMPLATE)
    }

    pub fn removed_joints(&self, tag: TypeTag) -> CoreResult<&[usize]> {
        self.types
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, r)| r.as_slice())
            .ok_or_else(|| CoreError::Config(format!("type {tag} not in template")))
    }
}

pub fn parse_template(text: &str) -> CoreResult<ChainTemplate> {
    let mut segments = Vec::new();
    let mut joints: Vec<TemplateJoint> = Vec::new();
    let mut ee_gap = None;
    let mut types = Vec::new();

    let bad = |line: usize, what: &str| CoreError::Config(format!("template line {line}: {what}"));

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let kind = it.next().unwrap();
        let rest: Vec<&str> = it.collect();
        let f = |s: &str| -> CoreResult<f64> {
            s.parse::<f64>()
                .map_err(|_| bad(ln + 1, "expected a number"))
        };
        match kind {
            "segment" => {
                if rest.len() != 7 {
                    return Err(bad(ln + 1, "segment needs 7 fields"));
                }
                segments.push(SegmentDef {
                    name: rest[0].to_string(),
                    gap: rest[1].parse().map_err(|_| bad(ln + 1, "bad gap"))?,
                    dir: Vec3::new(f(rest[2])?, f(rest[3])?, f(rest[4])?),
                    nominal: f(rest[5])?,
                    halfwidth: f(rest[6])?,
                });
            }
            "joint" => {
                if rest.len() != 9 {
                    return Err(bad(ln + 1, "joint needs 9 fields"));
                }
                joints.push(TemplateJoint {
                    name: rest[0].to_string(),
                    gap: rest[1].parse().map_err(|_| bad(ln + 1, "bad gap"))?,
                    axis_world: Vec3::new(f(rest[2])?, f(rest[3])?, f(rest[4])?).normalize(),
                    default_mass: f(rest[5])?,
                    torque_limit: f(rest[6])?,
                    angle_limits: [f(rest[7])?, f(rest[8])?],
                });
            }
            "ee" => {
                if rest.len() != 1 {
                    return Err(bad(ln + 1, "ee needs 1 field"));
                }
                ee_gap = Some(rest[0].parse().map_err(|_| bad(ln + 1, "bad gap"))?);
            }
            "type" => {
                if rest.is_empty() {
                    return Err(bad(ln + 1, "type needs a tag"));
                }
                let tag = TypeTag::parse(rest[0])?;
                let mut removed = Vec::new();
                for name in &rest[1..] {
                    let idx = joints
                        .iter()
                        .position(|j| j.name == *name)
                        .ok_or_else(|| bad(ln + 1, "removed joint not defined"))?;
                    removed.push(idx);
                }
                types.push((tag, removed));
            }
            other => return Err(bad(ln + 1, &format!("unknown record `{other}`"))),
        }
    }

    let ee_gap = ee_gap.ok_or_else(|| CoreError::Config("template lacks ee record".to_string()))?;
    if joints.is_empty() {
        return Err(CoreError::Config("template has no joints".to_string()));
    }
    Ok(ChainTemplate {
        segments,
        joints,
        ee_gap,
        types,
    })
}

// ---------------------------------------------------------------------------
// Chain resolution and sampling
// ---------------------------------------------------------------------------

fn gap_vector(segments: &[SegmentDef], lengths: &[f64], gap: usize) -> Vec3 {
    let mut v = Vec3::zeros();
    for (s, &len) in segments.iter().zip(lengths) {
        if s.gap == gap {
            v += s.dir * len;
        }
    }
    v
}

/// World positions of every joint frame and the tool point for given
/// segment lengths (zero configuration).
fn chain_positions(tpl: &ChainTemplate, lengths: &[f64]) -> (Vec<Vec3>, Vec3) {
    let mut pos = Vec::with_capacity(tpl.joints.len());
    let mut p = Vec3::zeros();
    for j in &tpl.joints {
        p += gap_vector(&tpl.segments, lengths, j.gap);
        pos.push(p);
    }
    let ee = p + gap_vector(&tpl.segments, lengths, tpl.ee_gap);
    (pos, ee)
}

struct ResolvedChain {
    joints: Vec<JointDef>,
    ee_offset: MountPose,
    /// default mass per merged link (same length as `joints`)
    default_masses: Vec<f64>,
    present: Vec<bool>,
}

/// Fold the full chain down to the subset type: removed joints become
/// fixed mounts composed into the next present joint, and their link
/// masses merge into the following link.
fn resolve_chain(
    tpl: &ChainTemplate,
    lengths: &[f64],
    mass_defaults: &[f64],
    tag: TypeTag,
) -> CoreResult<ResolvedChain> {
    let removed = tpl.removed_joints(tag)?;
    let n = tpl.joints.len();
    let mut present = alloc::vec![true; n];
    for &r in removed {
        present[r] = false;
    }

    let (pos, ee_pos) = chain_positions(tpl, lengths);

    let mut joints = Vec::new();
    let mut default_masses = Vec::new();
    let mut prev_pos = Vec3::zeros();
    let mut prev_rot = Mat3::identity();
    let mut pending_mass = 0.0;

    for (k, tj) in tpl.joints.iter().enumerate() {
        if !present[k] {
            pending_mass += mass_defaults[k];
            continue;
        }
        let rot_world = minimal_rotation_z_to(&tj.axis_world);
        let local_t = prev_rot.transpose() * (pos[k] - prev_pos);
        let local_r = rotation_to_vector(&(prev_rot.transpose() * rot_world))?;
        // Mass of the link that FOLLOWS this joint, plus anything merged
        // from removed joints upstream of the next present joint.
        joints.push(JointDef {
            axis_direction: [0.0, 0.0, 1.0],
            offset_translation: local_t.into(),
            offset_rotation: local_r.into(),
            damping: 0.0,
            friction: 0.0,
            armature: 0.0,
            torque_limit: tj.torque_limit,
            angle_limits: tj.angle_limits,
        });
        if let Some(last) = default_masses.last_mut() {
            *last += pending_mass;
        }
        pending_mass = 0.0;
        default_masses.push(mass_defaults[k]);
        prev_pos = pos[k];
        prev_rot = rot_world;
    }
    if let Some(last) = default_masses.last_mut() {
        *last += pending_mass;
    }

    let ee_t = prev_rot.transpose() * (ee_pos - prev_pos);
    let ee_offset = MountPose {
        translation: ee_t.into(),
        rotation: [0.0; 3],
    };

    Ok(ResolvedChain {
        joints,
        ee_offset,
        default_masses,
        present,
    })
}

/// The nominal joint template of a manipulator type: which of the seven
/// joints are present and their mount poses at nominal lengths.
pub fn type_joint_layout(tag: TypeTag) -> CoreResult<(Vec<bool>, Vec<JointDef>)> {
    if !tag.is_manipulator() {
        return Err(CoreError::NotApplicable(
            "joint layout is defined for manipulator types A-I only".to_string(),
        ));
    }
    let tpl = ChainTemplate::manipulator()?;
    let lengths: Vec<f64> = tpl.segments.iter().map(|s| s.nominal).collect();
    let masses: Vec<f64> = tpl.joints.iter().map(|j| j.default_mass).collect();
    let resolved = resolve_chain(&tpl, &lengths, &masses, tag)?;
    Ok((resolved.present, resolved.joints))
}

fn length_range(ranges: &SamplingRanges, seg: &SegmentDef) -> (f64, f64) {
    for (name, (mean, half)) in &ranges.length_overrides {
        if name == &seg.name {
            return (*mean, *half);
        }
    }
    (seg.nominal, seg.halfwidth)
}

fn sample_damping(rng: &mut Rng, ranges: &SamplingRanges) -> f64 {
    let [lo, hi] = ranges.damping;
    let below = rng.next_f64();
    if lo < 1.0 && hi > 1.0 {
        if below < ranges.damping_below_one {
            rng.uniform(lo, 1.0)
        } else {
            rng.uniform(1.0, hi)
        }
    } else {
        rng.uniform(lo, hi)
    }
}

const SAMPLE_STREAM: u64 = 0x5a3c_1e99;

/// Sample one robot of the given type. Deterministic in (tag, ranges, seed).
pub fn sample_robot(tag: TypeTag, ranges: &SamplingRanges, seed: u64) -> CoreResult<RobotSpec> {
    ranges.validate()?;
    let mut rng = Rng::derive(seed, &[SAMPLE_STREAM, tag.canonical_index()]);
    if tag.is_manipulator() {
        sample_manipulator(tag, ranges, &mut rng, format!("{tag}-{seed:016x}"))
    } else {
        sample_hopper(ranges, &mut rng, format!("HOPPER-{seed:016x}"))
    }
}

fn sample_manipulator(
    tag: TypeTag,
    ranges: &SamplingRanges,
    rng: &mut Rng,
    robot_id: String,
) -> CoreResult<RobotSpec> {
    let tpl = ChainTemplate::manipulator()?;
    // Fixed draw order: segment lengths, per-joint dynamics, mass factors.
    let lengths: Vec<f64> = tpl
        .segments
        .iter()
        .map(|s| {
            let (mean, half) = length_range(ranges, s);
            rng.uniform(mean - half, mean + half)
        })
        .collect();
    let dynamics: Vec<(f64, f64, f64)> = (0..tpl.joints.len())
        .map(|_| {
            (
                sample_damping(rng, ranges),
                rng.uniform(ranges.friction[0], ranges.friction[1]),
                rng.uniform(ranges.armature[0], ranges.armature[1]),
            )
        })
        .collect();
    let masses: Vec<f64> = tpl
        .joints
        .iter()
        .map(|j| j.default_mass * rng.uniform(ranges.mass_mult[0], ranges.mass_mult[1]))
        .collect();

    let resolved = resolve_chain(&tpl, &lengths, &masses, tag)?;
    let mut joints = resolved.joints;
    let mut link_masses = Vec::with_capacity(joints.len());
    {
        // Dynamics follow the surviving joints; merged link masses were
        // accumulated during resolution.
        let mut ji = 0;
        for (k, keep) in resolved.present.iter().enumerate() {
            if *keep {
                let (d, f, a) = dynamics[k];
                joints[ji].damping = d;
                joints[ji].friction = f;
                joints[ji].armature = a;
                ji += 1;
            }
        }
        link_masses.extend_from_slice(&resolved.default_masses);
    }

    let spec = RobotSpec {
        robot_id,
        type_tag: tag,
        joints,
        ee_offset: resolved.ee_offset,
        link_masses,
    };
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Hopper template
// ---------------------------------------------------------------------------

/// Planar hopper template: torso/thigh/leg vertical at rest, foot
/// horizontal with the contact point at its tip.
pub struct HopperTemplate {
    /// (name, nominal, halfwidth) for torso, thigh, leg, foot.
    pub lengths: [(&'static str, f64, f64); 4],
    pub default_masses: [f64; 4],
    pub torque_limits: [f64; 3],
    pub angle_limits: [[f64; 2]; 3],
}

pub fn hopper_template() -> HopperTemplate {
    HopperTemplate {
        lengths: [
            ("torso", 0.40, 0.10),
            ("thigh", 0.45, 0.10),
            ("leg", 0.50, 0.15),
            ("foot", 0.39, 0.10),
        ],
        default_masses: [4.0, 2.5, 1.8, 1.0],
        torque_limits: [90.0, 90.0, 60.0],
        angle_limits: [[-1.0, 1.0], [-1.6, 0.3], [-0.9, 0.9]],
    }
}

fn sample_hopper(ranges: &SamplingRanges, rng: &mut Rng, robot_id: String) -> CoreResult<RobotSpec> {
    let tpl = hopper_template();
    let lengths: Vec<f64> = tpl
        .lengths
        .iter()
        .map(|(name, mean, half)| {
            let (m, h) = ranges
                .length_overrides
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, r)| *r)
                .unwrap_or((*mean, *half));
            rng.uniform(m - h, m + h)
        })
        .collect();
    let dynamics: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                sample_damping(rng, ranges),
                rng.uniform(ranges.friction[0], ranges.friction[1]),
                rng.uniform(ranges.armature[0], ranges.armature[1]),
            )
        })
        .collect();
    let masses: Vec<f64> = tpl
        .default_masses
        .iter()
        .map(|m| m * rng.uniform(ranges.mass_mult[0], ranges.mass_mult[1]))
        .collect();

    // All joints rotate about world y (pitch in the x-z plane); the
    // chain hangs along -z from the torso (base) frame.
    let axis_world = Vec3::new(0.0, 1.0, 0.0);
    let rot_world = minimal_rotation_z_to(&axis_world);
    let mut joints = Vec::with_capacity(3);
    let mut prev_rot = Mat3::identity();
    for (k, seg_len) in lengths[..3].iter().enumerate() {
        let world_t = Vec3::new(0.0, 0.0, -seg_len);
        let local_t = prev_rot.transpose() * world_t;
        let local_r = rotation_to_vector(&(prev_rot.transpose() * rot_world))?;
        let (d, f, a) = dynamics[k];
        joints.push(JointDef {
            axis_direction: [0.0, 0.0, 1.0],
            offset_translation: local_t.into(),
            offset_rotation: local_r.into(),
            damping: d,
            friction: f,
            armature: a,
            torque_limit: tpl.torque_limits[k],
            angle_limits: tpl.angle_limits[k],
        });
        prev_rot = rot_world;
    }
    // Foot: horizontal, tip forward (+x) at rest.
    let ee_t = prev_rot.transpose() * Vec3::new(lengths[3], 0.0, 0.0);
    let spec = RobotSpec {
        robot_id,
        type_tag: TypeTag::Hopper,
        joints,
        ee_offset: MountPose {
            translation: ee_t.into(),
            rotation: [0.0; 3],
        },
        link_masses: masses,
    };
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Pools
// ---------------------------------------------------------------------------

const POOL_STREAM: u64 = 0x9d0f_4b17;

/// Build a pool of `count_per_type` robots for each listed type.
/// Robot ids are `{tag}-{index:05}`; content is a pure function of
/// (type list, count, ranges, seed), and a given (type, index) pair maps
/// to the same robot regardless of which other types are requested.
pub fn build_pool(
    type_tags: &[TypeTag],
    count_per_type: usize,
    ranges: &SamplingRanges,
    seed: u64,
) -> CoreResult<Vec<RobotSpec>> {
    if type_tags.is_empty() {
        return Err(CoreError::Config("empty type list for pool".to_string()));
    }
    if count_per_type == 0 {
        return Err(CoreError::Config("count_per_type must be >= 1".to_string()));
    }
    let mut pool = Vec::with_capacity(type_tags.len() * count_per_type);
    for tag in type_tags {
        for i in 0..count_per_type {
            let child = Rng::derive(seed, &[POOL_STREAM, tag.canonical_index(), i as u64])
                .state();
            let mut spec = sample_robot(*tag, ranges, child)?;
            spec.robot_id = format!("{tag}-{i:05}");
            pool.push(spec);
        }
    }
    Ok(pool)
}
