//! Reacher and peg-insertion environments for serial manipulators.
//!
//! World layout: the arm is mounted at the origin with z up and extends
//! along +x at the zero configuration. The reacher samples the initial
//! pose by rejection inside a box of end-effector positions and the goal
//! uniformly inside a larger box below it. Peg insertion starts from the
//! horizontal fully-expanded pose; the goal is a point 0.05 m below the
//! table surface on the hole axis, so success implies more than 0.03 m
//! of insertion depth.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{Observation, StepInfo, StepOutcome, TaskConfig, TaskKind};
use crate::contact::{contact_force, RectHole, Surface};
use crate::dynamics::{step, ChainModel, ContactPoint, SimState};
use crate::error::{CoreError, CoreResult};
use crate::math::Vec3;
use crate::rng::Rng;
use crate::robot::{RobotSpec, MAX_ARM_DOF};

/// Reacher initial end-effector box: center and half-extents (m).
pub const INIT_BOX_CENTER: [f64; 3] = [0.45, 0.0, 0.45];
pub const INIT_BOX_HALF: [f64; 3] = [0.15, 0.20, 0.10];
/// Reacher goal box, located 0.2 m below the initial box.
pub const GOAL_BOX_CENTER: [f64; 3] = [0.45, 0.0, 0.25];
pub const GOAL_BOX_HALF: [f64; 3] = [0.15, 0.30, 0.20];

/// Peg geometry: capsule along the tool z-axis.
pub const PEG_LENGTH: f64 = 0.12;
pub const PEG_RADIUS: f64 = 0.015;
pub const PEG_SAMPLES: usize = 5;

/// Canonical table: top surface height and hole center.
pub const TABLE_CENTER: [f64; 2] = [0.55, 0.0];
pub const TABLE_TOP: f64 = 0.15;
/// Square hole half-side.
pub const HOLE_HALF: f64 = 0.03;
/// Goal depth below the table surface.
pub const GOAL_DEPTH: f64 = 0.05;
/// Random-goal table displacement half-range per axis.
pub const TABLE_RANGE: f64 = 0.1;

const RESET_ATTEMPTS: usize = 1000;
const REACH_PROBE_TOL: f64 = 0.08;

#[derive(Debug)]
pub struct ArmEnv {
    pub cfg: TaskConfig,
    state: Option<ArmState>,
}

#[derive(Debug)]
struct ArmState {
    robot: RobotSpec,
    model: ChainModel,
    sim: SimState,
    goal: Vec3,
    surface: Option<Surface>,
    steps: u32,
    success_ever: bool,
    done: bool,
    reachable: bool,
    noise_rng: Rng,
}

impl ArmEnv {
    pub fn new(cfg: TaskConfig) -> ArmEnv {
        ArmEnv { cfg, state: None }
    }

    pub fn robot_id(&self) -> Option<&String> {
        self.state.as_ref().map(|s| &s.robot.robot_id)
    }

    pub fn goal(&self) -> Option<Vec3> {
        self.state.as_ref().map(|s| s.goal)
    }

    /// Point of interest in the last body frame: the end effector for
    /// the reacher, the peg bottom for insertion tasks.
    fn poi_local(&self, model: &ChainModel) -> Vec3 {
        match self.cfg.task {
            TaskKind::Reacher => model.ee_local.translation,
            _ => model
                .ee_local
                .transform_point(&Vec3::new(0.0, 0.0, PEG_LENGTH)),
        }
    }

    fn poi_world(&self, model: &ChainModel, q: &[f64], qd: &[f64]) -> Vec3 {
        let kin = crate::dynamics::world_kinematics(model, q, qd);
        kin.last().unwrap().point_position(&self.poi_local(model))
    }

    pub fn reset(&mut self, robot: &RobotSpec, seed: u64) -> CoreResult<Observation> {
        if !robot.type_tag.is_manipulator() {
            return Err(CoreError::Config("arm task needs a manipulator".into()));
        }
        let mut model = ChainModel::from_manipulator(robot)?;
        let mut rng = Rng::derive(seed, &[0xa51, robot.type_tag.canonical_index()]);
        let n = robot.dof();

        let (q0, goal, surface, reachable) = match self.cfg.task {
            TaskKind::Reacher => {
                // Rejection-sample a start pose with the end effector in
                // the initial box.
                let mut q0 = None;
                for _ in 0..RESET_ATTEMPTS {
                    let q: Vec<f64> = robot
                        .joints
                        .iter()
                        .map(|j| rng.uniform(j.angle_limits[0], j.angle_limits[1]))
                        .collect();
                    let ee = self.poi_world(&model, &q, &vec![0.0; n]);
                    if inside_box(&ee, &INIT_BOX_CENTER, &INIT_BOX_HALF) {
                        q0 = Some(q);
                        break;
                    }
                }
                let goal = sample_box(&mut rng, &GOAL_BOX_CENTER, &GOAL_BOX_HALF);
                let mut reachable = q0.is_some();
                if reachable {
                    reachable = goal_within_reach(robot, &goal);
                }
                (q0.unwrap_or_else(|| vec![0.0; n]), goal, None, reachable)
            }
            TaskKind::PegFixed | TaskKind::PegRandom => {
                // Horizontal fully-expanded start pose.
                let q0 = vec![0.0; n];
                let (cx, cy, top) = if self.cfg.task == TaskKind::PegRandom {
                    (
                        TABLE_CENTER[0] + rng.uniform(-TABLE_RANGE, TABLE_RANGE),
                        TABLE_CENTER[1] + rng.uniform(-TABLE_RANGE, TABLE_RANGE),
                        TABLE_TOP + rng.uniform(-TABLE_RANGE, TABLE_RANGE),
                    )
                } else {
                    (TABLE_CENTER[0], TABLE_CENTER[1], TABLE_TOP)
                };
                let goal = Vec3::new(cx, cy, top - GOAL_DEPTH);
                let surface = Surface::with_hole(
                    top,
                    RectHole {
                        center_x: cx,
                        center_y: cy,
                        half_x: HOLE_HALF,
                        half_y: HOLE_HALF,
                    },
                    self.cfg.contact,
                );
                // Attach peg contact spheres along the capsule axis.
                let last = model.dof() - 1;
                model.contact_points = (0..PEG_SAMPLES)
                    .map(|k| {
                        let s = PEG_LENGTH * k as f64 / (PEG_SAMPLES - 1) as f64;
                        ContactPoint {
                            body: last,
                            local: model.ee_local.transform_point(&Vec3::new(0.0, 0.0, s)),
                            radius: PEG_RADIUS,
                        }
                    })
                    .collect();
                let reachable = peg_goal_reachable(self, &model, robot, &goal, &mut rng);
                (q0, goal, Some(surface), reachable)
            }
            TaskKind::Hopper => unreachable!("hopper handled by HopperEnv"),
        };

        let sim = SimState {
            q: q0,
            qd: vec![0.0; n],
            t: 0.0,
            contact_flags: vec![false; model.contact_points.len()],
        };
        let noise_rng = rng.split(1);
        let st = ArmState {
            robot: robot.clone(),
            model,
            sim,
            goal,
            surface,
            steps: 0,
            success_ever: false,
            done: false,
            reachable,
            noise_rng,
        };
        self.state = Some(st);
        Ok(self.observe())
    }

    fn observe(&mut self) -> Observation {
        let st = self.state.as_mut().expect("reset first");
        let n = st.robot.dof();
        let noise = self.cfg.obs_noise;
        let mut q_padded = vec![0.0; MAX_ARM_DOF];
        let mut qd_padded = vec![0.0; MAX_ARM_DOF];
        for i in 0..n {
            q_padded[i] = st.sim.q[i] + st.noise_rng.uniform(-noise, noise);
            qd_padded[i] = st.sim.qd[i] + st.noise_rng.uniform(-noise, noise);
        }
        let poi = {
            let kin = crate::dynamics::world_kinematics(&st.model, &st.sim.q, &st.sim.qd);
            let local = match self.cfg.task {
                TaskKind::Reacher => st.model.ee_local.translation,
                _ => st
                    .model
                    .ee_local
                    .transform_point(&Vec3::new(0.0, 0.0, PEG_LENGTH)),
            };
            kin.last().unwrap().point_position(&local)
        };
        Observation {
            q_padded,
            qd_padded,
            goal: Some(st.goal),
            achieved: Some(poi),
            reachable: st.reachable,
        }
    }

    pub fn step(&mut self, action: &[f64]) -> CoreResult<StepOutcome> {
        if self.state.is_none() {
            return Err(CoreError::State("step before reset".into()));
        }
        if action.len() != MAX_ARM_DOF {
            return Err(CoreError::Dimension(alloc::format!(
                "expected {MAX_ARM_DOF}-dim action, got {}",
                action.len()
            )));
        }
        if !action.iter().all(|a| a.is_finite()) {
            return Err(CoreError::Validation("non-finite action".into()));
        }
        {
            let st = self.state.as_ref().unwrap();
            if st.done {
                return Err(CoreError::State("episode already done".into()));
            }
        }

        // Split borrows: gather what we need, then step.
        let (cmd, used): (Vec<f64>, Vec<f64>) = {
            let st = self.state.as_ref().unwrap();
            let n = st.robot.dof();
            let used: Vec<f64> = action[..n].iter().map(|a| a.clamp(-1.0, 1.0)).collect();
            let cmd = used
                .iter()
                .zip(&st.robot.joints)
                .map(|(a, j)| a * j.torque_limit)
                .collect();
            (cmd, used)
        };

        let outcome = {
            let st = self.state.as_mut().unwrap();
            let surface = st.surface;
            let opts = self.cfg.sim.to_options();
            let next = step(&st.model, &st.sim, &cmd, &opts, |model, kin| {
                match &surface {
                    Some(surf) => model
                        .contact_points
                        .iter()
                        .map(|cp| {
                            let p = kin[cp.body].point_position(&cp.local);
                            let v = kin[cp.body].point_velocity(&cp.local);
                            contact_force(&p, &v, surf, cp.radius)
                        })
                        .collect(),
                    None => vec![None; model.contact_points.len()],
                }
            })?;
            st.sim = next;
            st.steps += 1;
            st.sim.t
        };
        let _ = outcome;

        let (reward, distance, success_now) = {
            let st = self.state.as_ref().unwrap();
            let poi = self.poi_world(&st.model, &st.sim.q, &st.sim.qd);
            let d = (poi - st.goal).norm();
            let r = super::compute_reward(&poi, &st.goal, &used, self.cfg.epsilon, self.cfg.beta);
            (r, d, d < self.cfg.epsilon)
        };

        let (done, info) = {
            let st = self.state.as_mut().unwrap();
            st.success_ever |= success_now;
            let done = success_now || st.steps >= self.cfg.max_steps;
            st.done = done;
            (
                done,
                StepInfo {
                    success_now,
                    success: st.success_ever,
                    distance,
                    terminal: success_now,
                    steps: st.steps,
                },
            )
        };

        let obs = self.observe();
        Ok(StepOutcome {
            obs,
            reward,
            done,
            info,
        })
    }

    /// True joint state (test/diagnostic access).
    pub fn sim_state(&self) -> Option<&SimState> {
        self.state.as_ref().map(|s| &s.sim)
    }
}

fn inside_box(p: &Vec3, center: &[f64; 3], half: &[f64; 3]) -> bool {
    (p.x - center[0]).abs() <= half[0]
        && (p.y - center[1]).abs() <= half[1]
        && (p.z - center[2]).abs() <= half[2]
}

fn sample_box(rng: &mut Rng, center: &[f64; 3], half: &[f64; 3]) -> Vec3 {
    Vec3::new(
        center[0] + rng.uniform(-half[0], half[0]),
        center[1] + rng.uniform(-half[1], half[1]),
        center[2] + rng.uniform(-half[2], half[2]),
    )
}

/// Conservative reacher reach test: the goal must lie within the chain's
/// total length of the first joint.
fn goal_within_reach(robot: &RobotSpec, goal: &Vec3) -> bool {
    let base = robot.joints[0].translation();
    let mut reach = 0.0;
    for j in robot.joints.iter().skip(1) {
        reach += j.translation().norm();
    }
    reach += robot.ee_offset.translation_vec().norm();
    (goal - base).norm() <= reach
}

/// Randomized reach probe for the peg goal: accept if any of the sampled
/// configurations brings the peg bottom close to the goal.
fn peg_goal_reachable(
    env: &ArmEnv,
    model: &ChainModel,
    robot: &RobotSpec,
    goal: &Vec3,
    rng: &mut Rng,
) -> bool {
    let n = robot.dof();
    let zeros = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut q = vec![0.0; n];
    for _ in 0..RESET_ATTEMPTS {
        for (qi, j) in q.iter_mut().zip(&robot.joints) {
            *qi = rng.uniform(j.angle_limits[0], j.angle_limits[1]);
        }
        let poi = {
            let kin = crate::dynamics::world_kinematics(model, &q, &zeros);
            kin.last().unwrap().point_position(&env.poi_local(model))
        };
        best = best.min((poi - goal).norm());
        if best < REACH_PROBE_TOL {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{build_pool, sample_robot, SamplingRanges, TypeTag};

    fn reacher() -> ArmEnv {
        ArmEnv::new(TaskConfig::manipulator(TaskKind::Reacher))
    }

    #[test]
    fn reset_is_deterministic() {
        let spec = sample_robot(TypeTag::I, &SamplingRanges::manipulator(), 3).unwrap();
        let mut env = reacher();
        let a = env.reset(&spec, 42).unwrap();
        let mut env2 = reacher();
        let b = env2.reset(&spec, 42).unwrap();
        assert_eq!(a, b);
        let c = env.reset(&spec, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn goals_inside_declared_box() {
        let spec = sample_robot(TypeTag::I, &SamplingRanges::manipulator(), 3).unwrap();
        let mut env = reacher();
        for seed in 0..2000 {
            env.reset(&spec, seed).unwrap();
            let g = env.goal().unwrap();
            assert!(
                inside_box(&g, &GOAL_BOX_CENTER, &GOAL_BOX_HALF),
                "goal {g:?} outside box"
            );
        }
    }

    #[test]
    fn initial_pose_lands_in_init_box() {
        let spec = sample_robot(TypeTag::I, &SamplingRanges::manipulator(), 5).unwrap();
        let mut env = reacher();
        let mut hits = 0;
        for seed in 0..50 {
            let obs = env.reset(&spec, seed).unwrap();
            if obs.reachable {
                let st = env.state.as_ref().unwrap();
                let poi = env.poi_world(&st.model, &st.sim.q, &st.sim.qd);
                assert!(inside_box(&poi, &INIT_BOX_CENTER, &INIT_BOX_HALF));
                hits += 1;
            }
        }
        assert!(hits > 40, "only {hits}/50 resets found a start pose");
    }

    #[test]
    fn observation_noise_bounded_and_padding_clean() {
        let spec = sample_robot(TypeTag::A, &SamplingRanges::manipulator(), 1).unwrap();
        let mut env = reacher();
        let obs = env.reset(&spec, 7).unwrap();
        let st = env.sim_state().unwrap();
        for i in 0..5 {
            assert!((obs.q_padded[i] - st.q[i]).abs() <= 0.02 + 1e-12);
            assert!((obs.qd_padded[i] - st.qd[i]).abs() <= 0.02 + 1e-12);
        }
        for i in 5..7 {
            assert_eq!(obs.q_padded[i], 0.0);
            assert_eq!(obs.qd_padded[i], 0.0);
        }
    }

    #[test]
    fn action_tail_does_not_influence_dynamics() {
        let spec = sample_robot(TypeTag::A, &SamplingRanges::manipulator(), 2).unwrap();
        let mut env_a = reacher();
        env_a.reset(&spec, 11).unwrap();
        let mut env_b = reacher();
        env_b.reset(&spec, 11).unwrap();
        let mut act_a = [0.3; 7];
        let mut act_b = [0.3; 7];
        act_a[5] = 0.9;
        act_a[6] = -0.9;
        act_b[5] = -0.2;
        act_b[6] = 0.6;
        for _ in 0..10 {
            env_a.step(&act_a).unwrap();
            env_b.step(&act_b).unwrap();
        }
        assert_eq!(env_a.sim_state().unwrap().q, env_b.sim_state().unwrap().q);
    }

    #[test]
    fn success_ends_episode_and_reward_matches() {
        // Plant the goal on the current POI to force an immediate success.
        let spec = sample_robot(TypeTag::I, &SamplingRanges::manipulator(), 9).unwrap();
        let mut env = reacher();
        env.reset(&spec, 1).unwrap();
        let poi = {
            let st = env.state.as_ref().unwrap();
            env.poi_world(&st.model, &st.sim.q, &st.sim.qd)
        };
        env.state.as_mut().unwrap().goal = poi;
        let out = env.step(&[0.0; 7]).unwrap();
        assert!(out.info.success_now);
        assert!(out.done);
        assert!(out.info.terminal);
        assert!((out.reward - 1.0).abs() < 1e-9);
        assert!(env.step(&[0.0; 7]).is_err(), "done is sticky");
    }

    #[test]
    fn episode_times_out_at_max_steps() {
        let spec = sample_robot(TypeTag::I, &SamplingRanges::manipulator(), 2).unwrap();
        let mut cfg = TaskConfig::manipulator(TaskKind::Reacher);
        cfg.max_steps = 5;
        let mut env = ArmEnv::new(cfg);
        env.reset(&spec, 3).unwrap();
        let mut last = None;
        for _ in 0..5 {
            last = Some(env.step(&[0.1; 7]).unwrap());
        }
        let out = last.unwrap();
        assert!(out.done);
        assert!(!out.info.terminal, "timeout must bootstrap");
        assert_eq!(out.info.steps, 5);
    }

    #[test]
    fn peg_env_builds_table_and_contact_points() {
        let spec = sample_robot(TypeTag::I, &SamplingRanges::manipulator(), 4).unwrap();
        let mut env = ArmEnv::new(TaskConfig::manipulator(TaskKind::PegFixed));
        let obs = env.reset(&spec, 5).unwrap();
        let st = env.state.as_ref().unwrap();
        assert_eq!(st.model.contact_points.len(), PEG_SAMPLES);
        assert_eq!(st.sim.q, vec![0.0; 7], "horizontal fully-expanded start");
        let goal = obs.goal.unwrap();
        assert!((goal.z - (TABLE_TOP - GOAL_DEPTH)).abs() < 1e-12);
        // Success at the goal implies insertion depth > 0.03 m.
        assert!(GOAL_DEPTH - env.cfg.epsilon > 0.03 - 1e-12);
    }

    #[test]
    fn random_peg_goals_move_with_table() {
        let spec = sample_robot(TypeTag::I, &SamplingRanges::manipulator(), 4).unwrap();
        let mut env = ArmEnv::new(TaskConfig::manipulator(TaskKind::PegRandom));
        let mut xs = Vec::new();
        for seed in 0..20 {
            env.reset(&spec, seed).unwrap();
            let g = env.goal().unwrap();
            assert!((g.x - TABLE_CENTER[0]).abs() <= TABLE_RANGE + 1e-12);
            assert!((g.y - TABLE_CENTER[1]).abs() <= TABLE_RANGE + 1e-12);
            assert!((g.z - (TABLE_TOP - GOAL_DEPTH)).abs() <= TABLE_RANGE + 1e-12);
            xs.push(g.x);
        }
        xs.dedup();
        assert!(xs.len() > 10, "goals should vary");
    }

    #[test]
    fn short_armed_type_d_sometimes_cannot_reach_extreme_tables() {
        // Shrink every segment to its minimum and push the table to the
        // extremes: the reach probe must flag at least one unreachable
        // episode while leaving easy tables reachable.
        let tpl = crate::robot::ChainTemplate::manipulator().unwrap();
        let mut ranges = SamplingRanges::manipulator();
        ranges.length_overrides = tpl
            .segments
            .iter()
            .map(|s| (s.name.clone(), (s.nominal - s.halfwidth, 0.0)))
            .collect();
        let pool = build_pool(&[TypeTag::D], 30, &ranges, 17).unwrap();
        let mut env = ArmEnv::new(TaskConfig::manipulator(TaskKind::PegRandom));
        let mut unreachable = 0;
        for (i, spec) in pool.iter().enumerate() {
            let obs = env.reset(spec, 1000 + i as u64).unwrap();
            if !obs.reachable {
                unreachable += 1;
            }
        }
        assert!(
            unreachable > 0,
            "expected some unreachable goals for minimum-length type D"
        );
    }
}
