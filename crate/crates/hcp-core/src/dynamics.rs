//! Rigid multibody dynamics for serial chains.
//!
//! Links are point masses (manipulators: at the link's distal frame
//! origin; hopper: at segment midpoints). Forward dynamics is the
//! articulated-body algorithm in body-frame spatial coordinates; inverse
//! dynamics is an independently formulated world-frame recursive
//! Newton-Euler pass, which doubles as the oracle for the ABA and as the
//! column probe for mass-matrix assembly.
//!
//! Time stepping is semi-implicit Euler at a fixed substep. Joint
//! damping and the local slope of the smoothed Coulomb friction are
//! folded into the joint-space diagonal scaled by the substep, which
//! keeps heavily damped joints stable at any damping magnitude.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::fmath;
use crate::math::{rotation_about_axis, rotation_from_vector, skew, Mat3, Pose, Vec3};
use crate::robot::{RobotSpec, TypeTag};

pub type Mat6 = nalgebra::Matrix6<f64>;
pub type Vec6 = nalgebra::Vector6<f64>;

pub const GRAVITY: f64 = 9.81;
/// Velocity scale of the smoothed joint Coulomb friction (rad/s).
pub const JOINT_FRICTION_VEL: f64 = 0.05;
/// Soft joint-limit stop stiffness (N·m/rad) and damping (N·m·s/rad).
const LIMIT_STIFFNESS: f64 = 200.0;
const LIMIT_DAMPING: f64 = 5.0;

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Debug, Clone)]
pub struct ChainJoint {
    pub kind: JointKind,
    /// Mount translation in the parent body frame.
    pub mount_translation: Vec3,
    /// Mount rotation (parent-from-mounted).
    pub mount_rotation: Mat3,
    /// Motion axis in the mounted frame, unit.
    pub axis: Vec3,
    pub damping: f64,
    pub friction: f64,
    pub armature: f64,
    /// Torque limit for actuated joints.
    pub torque_limit: f64,
    pub actuated: bool,
    pub angle_limits: Option<[f64; 2]>,
}

/// Rigid body downstream of one joint: a point mass in the body frame.
#[derive(Debug, Clone)]
pub struct ChainBody {
    pub mass: f64,
    pub com: Vec3,
}

/// Contact sphere attached to a body.
#[derive(Debug, Clone)]
pub struct ContactPoint {
    pub body: usize,
    pub local: Vec3,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct ChainModel {
    pub joints: Vec<ChainJoint>,
    pub bodies: Vec<ChainBody>,
    pub gravity: Vec3,
    pub contact_points: Vec<ContactPoint>,
    /// Pose of the tool point in the last body frame.
    pub ee_local: Pose,
}

impl ChainModel {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn actuated_indices(&self) -> Vec<usize> {
        self.joints
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.actuated.then_some(i))
            .collect()
    }

    /// Fixed-base manipulator: one revolute chain joint per spec joint,
    /// link mass at the distal frame origin.
    pub fn from_manipulator(spec: &RobotSpec) -> CoreResult<ChainModel> {
        if !spec.type_tag.is_manipulator() {
            return Err(CoreError::Config(String::from("expected a manipulator spec")));
        }
        spec.validate()?;
        let n = spec.dof();
        let mut joints = Vec::with_capacity(n);
        let mut bodies = Vec::with_capacity(n);
        for (i, j) in spec.joints.iter().enumerate() {
            joints.push(ChainJoint {
                kind: JointKind::Revolute,
                mount_translation: j.translation(),
                mount_rotation: rotation_from_vector(&j.rotation_vec()),
                axis: j.axis(),
                damping: j.damping,
                friction: j.friction,
                armature: j.armature,
                torque_limit: j.torque_limit,
                actuated: true,
                angle_limits: Some(j.angle_limits),
            });
            let com = if i + 1 < n {
                spec.joints[i + 1].translation()
            } else {
                spec.ee_offset.translation_vec()
            };
            bodies.push(ChainBody {
                mass: spec.link_masses[i],
                com,
            });
        }
        Ok(ChainModel {
            joints,
            bodies,
            gravity: Vec3::new(0.0, 0.0, -GRAVITY),
            contact_points: Vec::new(),
            ee_local: Pose::new(
                spec.ee_offset.translation_vec(),
                rotation_from_vector(&spec.ee_offset.rotation_vec()),
            ),
        })
    }

    /// Planar floating-base hopper: two passive prismatic joints (x, z)
    /// and a passive pitch joint carry the torso; hip/knee/ankle follow.
    /// Link masses sit at segment midpoints; the contact point is the
    /// foot tip.
    pub fn from_hopper(spec: &RobotSpec) -> CoreResult<ChainModel> {
        if spec.type_tag != TypeTag::Hopper {
            return Err(CoreError::Config(String::from("expected a hopper spec")));
        }
        spec.validate()?;
        let passive = |kind: JointKind, axis: Vec3| ChainJoint {
            kind,
            mount_translation: Vec3::zeros(),
            mount_rotation: Mat3::identity(),
            axis,
            damping: 0.0,
            friction: 0.0,
            armature: 0.0,
            torque_limit: f64::INFINITY,
            actuated: false,
            angle_limits: None,
        };
        let mut joints = vec![
            passive(JointKind::Prismatic, Vec3::new(1.0, 0.0, 0.0)),
            passive(JointKind::Prismatic, Vec3::new(0.0, 0.0, 1.0)),
            passive(JointKind::Revolute, Vec3::new(0.0, 1.0, 0.0)),
        ];
        for j in &spec.joints {
            joints.push(ChainJoint {
                kind: JointKind::Revolute,
                mount_translation: j.translation(),
                mount_rotation: rotation_from_vector(&j.rotation_vec()),
                axis: j.axis(),
                damping: j.damping,
                friction: j.friction,
                armature: j.armature,
                torque_limit: j.torque_limit,
                actuated: true,
                angle_limits: Some(j.angle_limits),
            });
        }
        // Bodies: x-slide and z-slide are massless carriers; the pitch
        // body is the torso; then thigh, leg, foot.
        let massless = ChainBody {
            mass: 0.0,
            com: Vec3::zeros(),
        };
        let bodies = vec![
            massless.clone(),
            massless,
            ChainBody {
                mass: spec.link_masses[0],
                com: spec.joints[0].translation() * 0.5,
            },
            ChainBody {
                mass: spec.link_masses[1],
                com: spec.joints[1].translation() * 0.5,
            },
            ChainBody {
                mass: spec.link_masses[2],
                com: spec.joints[2].translation() * 0.5,
            },
            ChainBody {
                mass: spec.link_masses[3],
                com: spec.ee_offset.translation_vec() * 0.5,
            },
        ];
        let foot_tip = spec.ee_offset.translation_vec();
        Ok(ChainModel {
            joints,
            bodies,
            gravity: Vec3::new(0.0, 0.0, -GRAVITY),
            contact_points: vec![ContactPoint {
                body: 5,
                local: foot_tip,
                radius: 0.02,
            }],
            ee_local: Pose::new(foot_tip, Mat3::identity()),
        })
    }
}

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub t: f64,
    pub contact_flags: Vec<bool>,
}

impl SimState {
    pub fn zeros(model: &ChainModel) -> SimState {
        SimState {
            q: vec![0.0; model.dof()],
            qd: vec![0.0; model.dof()],
            t: 0.0,
            contact_flags: vec![false; model.contact_points.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qd.iter()).all(|x| x.is_finite())
    }
}

/// World-frame pose and velocity of one body.
#[derive(Debug, Clone)]
pub struct BodyKinematics {
    pub pose: Pose,
    pub omega: Vec3,
    /// Velocity of the body-frame origin.
    pub v_origin: Vec3,
}

impl BodyKinematics {
    pub fn point_position(&self, local: &Vec3) -> Vec3 {
        self.pose.transform_point(local)
    }

    pub fn point_velocity(&self, local: &Vec3) -> Vec3 {
        let r = self.pose.rotation * local;
        self.v_origin + self.omega.cross(&r)
    }
}

/// World-frame force applied to a body at a world point.
#[derive(Debug, Clone)]
pub struct ExternalForce {
    pub body: usize,
    pub point: Vec3,
    pub force: Vec3,
}

/// Per-joint pose of the child body in its parent frame.
fn joint_child_pose(j: &ChainJoint, q: f64) -> (Mat3, Vec3) {
    match j.kind {
        JointKind::Revolute => (
            j.mount_rotation * rotation_about_axis(&j.axis, q),
            j.mount_translation,
        ),
        JointKind::Prismatic => (
            j.mount_rotation,
            j.mount_translation + j.mount_rotation * (j.axis * q),
        ),
    }
}

/// World poses and velocities of every body.
pub fn world_kinematics(model: &ChainModel, q: &[f64], qd: &[f64]) -> Vec<BodyKinematics> {
    let n = model.dof();
    debug_assert_eq!(q.len(), n);
    debug_assert_eq!(qd.len(), n);
    let mut out: Vec<BodyKinematics> = Vec::with_capacity(n);
    for i in 0..n {
        let j = &model.joints[i];
        let (r_pi, p_pi) = joint_child_pose(j, q[i]);
        let (parent_pose, parent_omega, parent_v) = if i == 0 {
            (Pose::identity(), Vec3::zeros(), Vec3::zeros())
        } else {
            let p = &out[i - 1];
            (p.pose, p.omega, p.v_origin)
        };
        let pose = parent_pose.compose(&Pose::new(p_pi, r_pi));
        let r_world = pose.translation - parent_pose.translation;
        let axis_world = pose.rotation * j.axis;
        let (omega, v_origin) = match j.kind {
            JointKind::Revolute => (
                parent_omega + axis_world * qd[i],
                parent_v + parent_omega.cross(&r_world),
            ),
            JointKind::Prismatic => (
                parent_omega,
                parent_v + parent_omega.cross(&r_world) + axis_world * qd[i],
            ),
        };
        out.push(BodyKinematics {
            pose,
            omega,
            v_origin,
        });
    }
    out
}

/// Tool-point pose for a configuration.
pub fn tool_pose(model: &ChainModel, q: &[f64]) -> Pose {
    let kin = world_kinematics(model, q, &vec![0.0; q.len()]);
    kin.last().unwrap().pose.compose(&model.ee_local)
}

// ---------------------------------------------------------------------------
// Spatial algebra helpers (angular block first)
// ---------------------------------------------------------------------------

fn sp(ang: Vec3, lin: Vec3) -> Vec6 {
    Vec6::new(ang.x, ang.y, ang.z, lin.x, lin.y, lin.z)
}

fn ang(v: &Vec6) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

fn lin(v: &Vec6) -> Vec3 {
    Vec3::new(v[3], v[4], v[5])
}

/// Motion cross product v ×m u.
fn cross_motion(v: &Vec6, u: &Vec6) -> Vec6 {
    let (w, vl) = (ang(v), lin(v));
    let (uw, ul) = (ang(u), lin(u));
    sp(w.cross(&uw), w.cross(&ul) + vl.cross(&uw))
}

/// Force cross product v ×f f.
fn cross_force(v: &Vec6, f: &Vec6) -> Vec6 {
    let (w, vl) = (ang(v), lin(v));
    let (n, fl) = (ang(f), lin(f));
    sp(w.cross(&n) + vl.cross(&fl), w.cross(&fl))
}

/// Motion transform parent→child for a child at (`e` = child-from-parent
/// rotation, origin `r` in parent coordinates).
fn xform_motion(e: &Mat3, r: &Vec3) -> Mat6 {
    let mut x = Mat6::zeros();
    let er = -e * skew(r);
    x.fixed_view_mut::<3, 3>(0, 0).copy_from(e);
    x.fixed_view_mut::<3, 3>(3, 0).copy_from(&er);
    x.fixed_view_mut::<3, 3>(3, 3).copy_from(e);
    x
}

/// Spatial inertia of a point mass at `c` in the body frame.
fn point_mass_inertia(mass: f64, c: &Vec3) -> Mat6 {
    let cx = skew(c);
    let mut i = Mat6::zeros();
    i.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-mass * cx * cx));
    i.fixed_view_mut::<3, 3>(0, 3).copy_from(&(mass * cx));
    i.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-mass * cx));
    i.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(mass * Mat3::identity()));
    i
}

fn motion_subspace(j: &ChainJoint) -> Vec6 {
    match j.kind {
        JointKind::Revolute => sp(j.axis, Vec3::zeros()),
        JointKind::Prismatic => sp(Vec3::zeros(), j.axis),
    }
}

/// External world forces folded into per-body spatial forces (body frame,
/// about the body origin).
fn external_spatial_forces(
    model: &ChainModel,
    kin: &[BodyKinematics],
    f_ext: &[ExternalForce],
) -> Vec<Vec6> {
    let mut out = vec![Vec6::zeros(); model.dof()];
    for f in f_ext {
        let bk = &kin[f.body];
        let rt = bk.pose.rotation.transpose();
        let arm = f.point - bk.pose.translation;
        out[f.body] += sp(rt * arm.cross(&f.force), rt * f.force);
    }
    out
}

// ---------------------------------------------------------------------------
// Articulated-body forward dynamics
// ---------------------------------------------------------------------------

/// O(n) articulated-body algorithm.
///
/// `tau` is the applied generalized force per joint (all explicit terms
/// already assembled); `extra_diag` adds to the joint-space diagonal on
/// top of armature (used for implicit damping during stepping).
pub fn aba(
    model: &ChainModel,
    q: &[f64],
    qd: &[f64],
    tau: &[f64],
    extra_diag: Option<&[f64]>,
    f_ext: &[ExternalForce],
) -> Vec<f64> {
    let n = model.dof();
    let kin = world_kinematics(model, q, qd);
    let f_sp = external_spatial_forces(model, &kin, f_ext);

    let mut x = Vec::with_capacity(n); // parent→child motion transforms
    let mut s = Vec::with_capacity(n);
    let mut v = vec![Vec6::zeros(); n];
    let mut c_bias = vec![Vec6::zeros(); n];
    let mut i_a = Vec::with_capacity(n);
    let mut p_a = vec![Vec6::zeros(); n];

    for i in 0..n {
        let j = &model.joints[i];
        let (r_pi, p_pi) = joint_child_pose(j, q[i]);
        let xi = xform_motion(&r_pi.transpose(), &p_pi);
        let si = motion_subspace(j);
        let v_parent = if i == 0 { Vec6::zeros() } else { xi * v[i - 1] };
        let vi = v_parent + si * qd[i];
        let ci = cross_motion(&vi, &(si * qd[i]));
        let ii = point_mass_inertia(model.bodies[i].mass, &model.bodies[i].com);
        p_a[i] = cross_force(&vi, &(ii * vi)) - f_sp[i];
        v[i] = vi;
        c_bias[i] = ci;
        x.push(xi);
        s.push(si);
        i_a.push(ii);
    }

    let diag =
        |i: usize| model.joints[i].armature + extra_diag.map(|d| d[i]).unwrap_or(0.0);

    let mut u_vec = vec![Vec6::zeros(); n];
    let mut d = vec![0.0; n];
    let mut u_sc = vec![0.0; n];
    for i in (0..n).rev() {
        let ui = i_a[i] * s[i];
        let di = s[i].dot(&ui) + diag(i);
        let usc = tau[i] - s[i].dot(&p_a[i]);
        u_vec[i] = ui;
        d[i] = di;
        u_sc[i] = usc;
        if i > 0 {
            let ia_art = i_a[i] - (ui * ui.transpose()) / di;
            let pa_art = p_a[i] + ia_art * c_bias[i] + ui * (usc / di);
            let xt = x[i].transpose();
            i_a[i - 1] += xt * ia_art * x[i];
            p_a[i - 1] += xt * pa_art;
        }
    }

    let mut qdd = vec![0.0; n];
    let mut a_prev = Vec6::zeros();
    let a_base = sp(Vec3::zeros(), -model.gravity);
    for i in 0..n {
        let a_parent = if i == 0 { x[i] * a_base } else { x[i] * a_prev };
        let a_free = a_parent + c_bias[i];
        qdd[i] = (u_sc[i] - u_vec[i].dot(&a_free)) / d[i];
        a_prev = a_free + s[i] * qdd[i];
    }
    qdd
}

// ---------------------------------------------------------------------------
// World-frame recursive Newton-Euler inverse dynamics
// ---------------------------------------------------------------------------

/// Required applied generalized forces for a desired acceleration.
///
/// Formulated entirely in world-frame 3-vectors (no spatial algebra), so
/// it is an independent route from [`aba`]. Includes gravity, armature
/// and external forces, but not damping/friction (those belong to the
/// applied-torque assembly).
pub fn rnea(
    model: &ChainModel,
    q: &[f64],
    qd: &[f64],
    qdd: &[f64],
    f_ext: &[ExternalForce],
    with_gravity: bool,
) -> Vec<f64> {
    let n = model.dof();
    let kin = world_kinematics(model, q, qd);

    // Forward pass: world angular/linear accelerations.
    let mut alpha = vec![Vec3::zeros(); n];
    let mut a_origin = vec![Vec3::zeros(); n];
    for i in 0..n {
        let j = &model.joints[i];
        let axis_world = kin[i].pose.rotation * j.axis;
        let (p_alpha, p_acc, p_omega, p_pos) = if i == 0 {
            (Vec3::zeros(), Vec3::zeros(), Vec3::zeros(), Vec3::zeros())
        } else {
            (
                alpha[i - 1],
                a_origin[i - 1],
                kin[i - 1].omega,
                kin[i - 1].pose.translation,
            )
        };
        let r = kin[i].pose.translation - p_pos;
        let a_carried = p_acc + p_alpha.cross(&r) + p_omega.cross(&p_omega.cross(&r));
        match j.kind {
            JointKind::Revolute => {
                alpha[i] = p_alpha + axis_world * qdd[i] + p_omega.cross(&(axis_world * qd[i]));
                a_origin[i] = a_carried;
            }
            JointKind::Prismatic => {
                alpha[i] = p_alpha;
                a_origin[i] =
                    a_carried + axis_world * qdd[i] + 2.0 * p_omega.cross(&(axis_world * qd[i]));
            }
        }
    }

    // Backward pass: net forces/moments about each body origin.
    let gravity = if with_gravity {
        model.gravity
    } else {
        Vec3::zeros()
    };
    let mut force = vec![Vec3::zeros(); n];
    let mut moment = vec![Vec3::zeros(); n];
    let mut tau = vec![0.0; n];
    for i in (0..n).rev() {
        let body = &model.bodies[i];
        let c_world = kin[i].pose.rotation * body.com;
        let a_c = a_origin[i]
            + alpha[i].cross(&c_world)
            + kin[i].omega.cross(&kin[i].omega.cross(&c_world));
        let f_inertial = body.mass * (a_c - gravity);
        let mut f_i = f_inertial;
        let mut n_i = c_world.cross(&f_inertial);
        // External forces acting on this body.
        for fe in f_ext.iter().filter(|fe| fe.body == i) {
            f_i -= fe.force;
            n_i -= (fe.point - kin[i].pose.translation).cross(&fe.force);
        }
        // Child contribution.
        if i + 1 < n {
            let r_child = kin[i + 1].pose.translation - kin[i].pose.translation;
            f_i += force[i + 1];
            n_i += moment[i + 1] + r_child.cross(&force[i + 1]);
        }
        force[i] = f_i;
        moment[i] = n_i;
        let axis_world = kin[i].pose.rotation * model.joints[i].axis;
        tau[i] = match model.joints[i].kind {
            JointKind::Revolute => axis_world.dot(&n_i),
            JointKind::Prismatic => axis_world.dot(&f_i),
        } + model.joints[i].armature * qdd[i];
    }
    tau
}

/// Joint-space mass matrix assembled from RNEA column probes.
pub fn mass_matrix(model: &ChainModel, q: &[f64]) -> nalgebra::DMatrix<f64> {
    let n = model.dof();
    let zero = vec![0.0; n];
    let mut m = nalgebra::DMatrix::zeros(n, n);
    let mut probe = vec![0.0; n];
    for col in 0..n {
        probe[col] = 1.0;
        let tau = rnea(model, q, &zero, &probe, &[], false);
        for row in 0..n {
            m[(row, col)] = tau[row];
        }
        probe[col] = 0.0;
    }
    m
}

// ---------------------------------------------------------------------------
// Torque assembly and the spec-level forward dynamics
// ---------------------------------------------------------------------------

/// Smoothed Coulomb friction torque and its velocity slope.
#[inline]
fn friction_torque(friction: f64, qd: f64) -> (f64, f64) {
    let th = fmath::tanh(qd / JOINT_FRICTION_VEL);
    let torque = -friction * th;
    let slope = friction * (1.0 - th * th) / JOINT_FRICTION_VEL;
    (torque, slope)
}

/// Soft joint-limit stop torque.
#[inline]
fn limit_torque(j: &ChainJoint, q: f64, qd: f64) -> f64 {
    match j.angle_limits {
        Some([lo, hi]) => {
            if q > hi {
                -LIMIT_STIFFNESS * (q - hi) - LIMIT_DAMPING * qd
            } else if q < lo {
                -LIMIT_STIFFNESS * (q - lo) - LIMIT_DAMPING * qd
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

/// Clamp a commanded torque vector (actuated joints only) into the
/// per-joint limits and scatter it over the full joint space.
pub fn scatter_commands(model: &ChainModel, cmd: &[f64]) -> CoreResult<Vec<f64>> {
    let actuated = model.actuated_indices();
    if cmd.len() != actuated.len() {
        return Err(CoreError::Dimension(format!(
            "expected {} commands, got {}",
            actuated.len(),
            cmd.len()
        )));
    }
    let mut tau = vec![0.0; model.dof()];
    for (&idx, &c) in actuated.iter().zip(cmd) {
        let lim = model.joints[idx].torque_limit;
        let clamped = c.clamp(-lim, lim);
        debug_assert!(clamped.abs() <= lim + 1e-12);
        tau[idx] = clamped;
    }
    Ok(tau)
}

/// Explicit applied torque: clamped command minus damping and smoothed
/// Coulomb friction, plus soft limit stops.
pub fn net_torque(model: &ChainModel, q: &[f64], qd: &[f64], cmd: &[f64]) -> CoreResult<Vec<f64>> {
    let mut tau = scatter_commands(model, cmd)?;
    for (i, j) in model.joints.iter().enumerate() {
        let (fric, _) = friction_torque(j.friction, qd[i]);
        tau[i] += -j.damping * qd[i] + fric + limit_torque(j, q[i], qd[i]);
    }
    Ok(tau)
}

/// Forward dynamics under the explicit torque model:
/// τ_net = clamp(tau) − damping·qd − friction·tanh(qd/v_s) + limit stops.
///
/// `tau` has one entry per actuated joint. Gravity and Coriolis terms
/// are handled inside the articulated-body pass.
pub fn forward_dynamics(
    model: &ChainModel,
    state: &SimState,
    tau: &[f64],
    f_ext: &[ExternalForce],
) -> CoreResult<Vec<f64>> {
    let applied = net_torque(model, &state.q, &state.qd, tau)?;
    Ok(aba(model, &state.q, &state.qd, &applied, None, f_ext))
}

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub control_dt: f64,
    pub substep_dt: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            control_dt: 0.02,
            substep_dt: 0.002,
        }
    }
}

impl SimOptions {
    pub fn substeps(&self) -> usize {
        let n = (self.control_dt / self.substep_dt + 0.5) as usize;
        n.max(1)
    }
}

/// Advance one control tick with the torque command held constant.
///
/// Contact forces are recomputed every substep via `contacts`, which
/// receives the world kinematics of all bodies and returns one optional
/// world force per model contact point.
pub fn step<F>(
    model: &ChainModel,
    state: &SimState,
    cmd: &[f64],
    opts: &SimOptions,
    mut contacts: F,
) -> CoreResult<SimState>
where
    F: FnMut(&ChainModel, &[BodyKinematics]) -> Vec<Option<Vec3>>,
{
    let n = model.dof();
    let mut q = state.q.clone();
    let mut qd = state.qd.clone();
    let mut flags = vec![false; model.contact_points.len()];
    let dt = opts.substep_dt;

    for _ in 0..opts.substeps() {
        let mut tau = scatter_commands(model, cmd)?;
        let mut diag = vec![0.0; n];
        for (i, j) in model.joints.iter().enumerate() {
            let (fric, slope) = friction_torque(j.friction, qd[i]);
            tau[i] += -j.damping * qd[i] + fric + limit_torque(j, q[i], qd[i]);
            // Implicit first-order treatment of velocity-coupled terms.
            diag[i] = dt * (j.damping + slope);
        }

        let kin = world_kinematics(model, &q, &qd);
        let forces = contacts(model, &kin);
        let mut f_ext = Vec::new();
        for (k, (cp, f)) in model.contact_points.iter().zip(&forces).enumerate() {
            if let Some(force) = f {
                flags[k] = true;
                f_ext.push(ExternalForce {
                    body: cp.body,
                    point: kin[cp.body].point_position(&cp.local),
                    force: *force,
                });
            } else {
                flags[k] = false;
            }
        }

        let qdd = aba(model, &q, &qd, &tau, Some(&diag), &f_ext);
        for i in 0..n {
            qd[i] += dt * qdd[i];
            q[i] += dt * qd[i];
        }
        if !q.iter().chain(qd.iter()).all(|x| x.is_finite()) {
            return Err(CoreError::SimDiverged {
                t: state.t,
                what: String::from("non-finite joint state"),
            });
        }
    }

    Ok(SimState {
        q,
        qd,
        t: state.t + opts.control_dt,
        contact_flags: flags,
    })
}

/// Total mechanical energy: point-mass kinetic + potential energy plus
/// rotor (armature) kinetic energy.
pub fn mechanical_energy(model: &ChainModel, q: &[f64], qd: &[f64]) -> f64 {
    let kin = world_kinematics(model, q, qd);
    let mut e = 0.0;
    for (i, body) in model.bodies.iter().enumerate() {
        let v = kin[i].point_velocity(&body.com);
        let z = kin[i].point_position(&body.com).z;
        e += 0.5 * body.mass * v.dot(&v) + body.mass * (-model.gravity.z) * z;
    }
    for (i, j) in model.joints.iter().enumerate() {
        e += 0.5 * j.armature * qd[i] * qd[i];
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{sample_robot, SamplingRanges};
    use crate::rng::Rng;

    /// Point-mass pendulum: revolute about world y, mass at distance l
    /// along world -z at q = 0 (hanging).
    fn pendulum(mass: f64, length: f64, armature: f64, damping: f64) -> ChainModel {
        let mount_rotation = crate::math::minimal_rotation_z_to(&Vec3::new(0.0, 1.0, 0.0));
        let local_down = mount_rotation.transpose() * Vec3::new(0.0, 0.0, -length);
        ChainModel {
            joints: vec![ChainJoint {
                kind: JointKind::Revolute,
                mount_translation: Vec3::zeros(),
                mount_rotation,
                axis: Vec3::new(0.0, 0.0, 1.0),
                damping,
                friction: 0.0,
                armature,
                torque_limit: 100.0,
                actuated: true,
                angle_limits: None,
            }],
            bodies: vec![ChainBody {
                mass,
                com: local_down,
            }],
            gravity: Vec3::new(0.0, 0.0, -GRAVITY),
            contact_points: Vec::new(),
            ee_local: Pose::new(local_down, Mat3::identity()),
        }
    }

    #[test]
    fn pendulum_equilibrium() {
        let model = pendulum(1.3, 0.7, 0.05, 0.0);
        let state = SimState::zeros(&model);
        let qdd = forward_dynamics(&model, &state, &[0.0], &[]).unwrap();
        assert!(qdd[0].abs() < 1e-12, "qdd at equilibrium: {}", qdd[0]);
    }

    #[test]
    fn pendulum_horizontal_closed_form() {
        let (m, l, a) = (1.7, 0.9, 0.3);
        let model = pendulum(m, l, a, 0.0);
        let mut state = SimState::zeros(&model);
        state.q[0] = core::f64::consts::FRAC_PI_2;
        let qdd = forward_dynamics(&model, &state, &[0.0], &[]).unwrap();
        let expected = -m * GRAVITY * l / (m * l * l + a);
        assert!(
            (qdd[0] - expected).abs() < 1e-10 * expected.abs(),
            "qdd {} vs closed form {}",
            qdd[0],
            expected
        );
    }

    fn random_arm_state(seed: u64) -> (ChainModel, Vec<f64>, Vec<f64>, Vec<f64>) {
        let ranges = SamplingRanges::manipulator();
        let spec = sample_robot(TypeTag::I, &ranges, seed).unwrap();
        let model = ChainModel::from_manipulator(&spec).unwrap();
        let mut rng = Rng::derive(seed, &[77]);
        let q: Vec<f64> = (0..7).map(|_| rng.uniform(-1.5, 1.5)).collect();
        let qd: Vec<f64> = (0..7).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let tau: Vec<f64> = (0..7).map(|_| rng.uniform(-20.0, 20.0)).collect();
        (model, q, qd, tau)
    }

    #[test]
    fn aba_rnea_duality_random_arms() {
        for seed in 0..50 {
            let (model, q, qd, tau) = random_arm_state(seed);
            let qdd = aba(&model, &q, &qd, &tau, None, &[]);
            let rec = rnea(&model, &q, &qd, &qdd, &[], true);
            let tnorm: f64 = tau.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dev: f64 = tau
                .iter()
                .zip(&rec)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(
                dev <= 1e-6 * (1.0 + tnorm),
                "seed {seed}: |tau - rnea(aba(tau))| = {dev:.3e}"
            );
        }
    }

    #[test]
    fn aba_matches_mass_matrix_solve() {
        // Third route: qdd = M^{-1} (tau - bias).
        for seed in 0..10 {
            let (model, q, qd, tau) = random_arm_state(seed);
            let qdd_aba = aba(&model, &q, &qd, &tau, None, &[]);
            let m = mass_matrix(&model, &q);
            let bias = rnea(&model, &q, &qd, &vec![0.0; 7], &[], true);
            let rhs =
                nalgebra::DVector::from_iterator(7, tau.iter().zip(&bias).map(|(t, b)| t - b));
            let qdd_solve = m.clone().cholesky().expect("SPD mass matrix").solve(&rhs);
            for i in 0..7 {
                assert!(
                    (qdd_aba[i] - qdd_solve[i]).abs() < 1e-8 * (1.0 + qdd_solve[i].abs()),
                    "seed {seed} joint {i}: {} vs {}",
                    qdd_aba[i],
                    qdd_solve[i]
                );
            }
        }
    }

    #[test]
    fn mass_matrix_symmetric_positive_definite() {
        for seed in 0..10 {
            let (model, q, _, _) = random_arm_state(seed);
            let m = mass_matrix(&model, &q);
            for r in 0..7 {
                for c in 0..7 {
                    assert!(
                        (m[(r, c)] - m[(c, r)]).abs() < 1e-8,
                        "asymmetry at ({r},{c})"
                    );
                }
            }
            let eig = m.symmetric_eigenvalues();
            assert!(eig.iter().all(|&l| l > 0.0), "non-positive eigenvalue");
        }
    }

    #[test]
    fn external_force_consistency() {
        // A force on the tool body enters ABA and RNEA identically.
        let (model, q, qd, tau) = random_arm_state(4);
        let kin = world_kinematics(&model, &q, &qd);
        let point = kin[6].point_position(&model.ee_local.translation);
        let f = ExternalForce {
            body: 6,
            point,
            force: Vec3::new(5.0, -3.0, 8.0),
        };
        let qdd = aba(&model, &q, &qd, &tau, None, core::slice::from_ref(&f));
        let rec = rnea(&model, &q, &qd, &qdd, core::slice::from_ref(&f), true);
        for i in 0..7 {
            assert!((rec[i] - tau[i]).abs() < 1e-8 * (1.0 + tau[i].abs()));
        }
    }

    #[test]
    fn free_link_constant_torque_velocity_ramp() {
        // No gravity, no damping: qd(T) = tau*T/(m l^2 + armature).
        let (m, l, a) = (2.0, 0.5, 0.1);
        let mut model = pendulum(m, l, a, 0.0);
        model.gravity = Vec3::zeros();
        let opts = SimOptions::default();
        let mut state = SimState::zeros(&model);
        let tau = 0.8;
        for _ in 0..50 {
            state = step(&model, &state, &[tau], &opts, |_, _| vec![]).unwrap();
        }
        let expected = tau * 1.0 / (m * l * l + a);
        assert!(
            (state.qd[0] - expected).abs() < 1e-4 * expected.abs(),
            "qd {} vs {}",
            state.qd[0],
            expected
        );
    }

    #[test]
    fn stable_equilibrium_stays_put() {
        let model = pendulum(1.0, 0.5, 0.01, 0.0);
        let opts = SimOptions::default();
        let mut state = SimState::zeros(&model);
        for _ in 0..50 {
            state = step(&model, &state, &[0.0], &opts, |_, _| vec![]).unwrap();
        }
        assert!(state.q[0].abs() < 1e-9);
        assert!(state.qd[0].abs() < 1e-9);
    }

    /// Canonical energy-audit chain: nominal template lengths and
    /// masses, mid-range armature, all dissipation off.
    pub(crate) fn energy_audit_arm() -> ChainModel {
        let tpl = crate::robot::ChainTemplate::manipulator().unwrap();
        let mut ranges = SamplingRanges::degenerate();
        ranges.armature = [1.0, 1.0];
        ranges.length_overrides = tpl
            .segments
            .iter()
            .map(|s| (s.name.clone(), (s.nominal, 0.0)))
            .collect();
        let mut spec = sample_robot(TypeTag::I, &ranges, 0).unwrap();
        for j in &mut spec.joints {
            j.damping = 0.0;
            j.friction = 0.0;
            j.angle_limits = [-20.0, 20.0]; // keep limit stops out of play
        }
        ChainModel::from_manipulator(&spec).unwrap()
    }

    #[test]
    fn energy_conservation_frictionless_chain() {
        let model = energy_audit_arm();
        let opts = SimOptions::default();
        let mut state = SimState::zeros(&model);
        // Bent start, released from rest.
        state.q = vec![-0.4, 0.6, 0.3, 0.7, -0.2, -0.4, 0.2];
        let e0 = mechanical_energy(&model, &state.q, &state.qd);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            state = step(&model, &state, &[0.0; 7], &opts, |_, _| vec![]).unwrap();
            let e = mechanical_energy(&model, &state.q, &state.qd);
            worst = worst.max((e - e0).abs());
        }
        let scale = e0.abs().max(1.0);
        assert!(
            worst / scale < 0.005,
            "energy drift {:.4}% over 1 s",
            100.0 * worst / scale
        );
    }

    #[test]
    fn heavily_damped_joints_remain_stable() {
        let ranges = SamplingRanges::manipulator();
        let mut spec = sample_robot(TypeTag::I, &ranges, 3).unwrap();
        for j in &mut spec.joints {
            j.damping = 50.0;
            j.friction = 10.0;
        }
        let model = ChainModel::from_manipulator(&spec).unwrap();
        let opts = SimOptions::default();
        let mut state = SimState::zeros(&model);
        state.q[1] = 1.0;
        for _ in 0..100 {
            state = step(&model, &state, &[10.0; 7], &opts, |_, _| vec![]).unwrap();
            assert!(state.qd.iter().all(|v| v.abs() < 50.0), "runaway velocity");
        }
    }

    #[test]
    fn divergence_is_reported() {
        let mut model = pendulum(1.0, 0.5, 0.0, 0.0);
        model.joints[0].armature = 0.0;
        model.bodies[0].mass = f64::NAN;
        let state = SimState::zeros(&model);
        let r = step(&model, &state, &[0.0], &SimOptions::default(), |_, _| vec![]);
        assert!(matches!(r, Err(CoreError::SimDiverged { .. })));
    }

    #[test]
    fn deterministic_stepping() {
        let (model, q, qd, tau) = random_arm_state(8);
        let opts = SimOptions::default();
        let mk = || SimState {
            q: q.clone(),
            qd: qd.clone(),
            t: 0.0,
            contact_flags: vec![],
        };
        let mut a = mk();
        let mut b = mk();
        for _ in 0..20 {
            a = step(&model, &a, &tau, &opts, |_, _| vec![]).unwrap();
            b = step(&model, &b, &tau, &opts, |_, _| vec![]).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn hopper_model_shape() {
        let spec = sample_robot(TypeTag::Hopper, &SamplingRanges::hopper(), 1).unwrap();
        let model = ChainModel::from_hopper(&spec).unwrap();
        assert_eq!(model.dof(), 6);
        assert_eq!(model.actuated_indices(), vec![3, 4, 5]);
        assert_eq!(model.contact_points.len(), 1);
        // Gravity pulls the floating base down when unsupported.
        let state = SimState::zeros(&model);
        let qdd = forward_dynamics(&model, &state, &[0.0; 3], &[]).unwrap();
        assert!(qdd[1] < -9.0, "vertical acceleration {}", qdd[1]);
    }

    #[test]
    fn manipulator_model_rejects_hopper_spec() {
        let spec = sample_robot(TypeTag::Hopper, &SamplingRanges::hopper(), 1).unwrap();
        assert!(ChainModel::from_manipulator(&spec).is_err());
    }

    /// Velocity pass cross-check: finite difference of FK positions.
    #[test]
    fn point_velocities_match_fk_differences() {
        let (model, q, qd, _) = random_arm_state(15);
        let kin = world_kinematics(&model, &q, &qd);
        let h = 1e-7;
        let q2: Vec<f64> = q.iter().zip(&qd).map(|(a, b)| a + h * b).collect();
        let kin2 = world_kinematics(&model, &q2, &qd);
        for i in 0..model.dof() {
            let p = kin[i].point_position(&model.bodies[i].com);
            let p2 = kin2[i].point_position(&model.bodies[i].com);
            let v_fd = (p2 - p) / h;
            let v = kin[i].point_velocity(&model.bodies[i].com);
            assert!(
                (v - v_fd).norm() < 1e-5 * (1.0 + v.norm()),
                "body {i}: {v:?} vs fd {v_fd:?}"
            );
        }
    }
}
