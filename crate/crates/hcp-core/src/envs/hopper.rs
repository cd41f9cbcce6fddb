//! Planar hopper with dense gym-style reward.
//!
//! The floating base rides on two passive prismatic joints (x, z) and a
//! passive pitch joint; hip, knee and ankle are torque controlled. The
//! reward is forward velocity plus an alive bonus minus a control cost.
//! An episode ends when the torso drops below 70% of its standing height
//! or pitches past 0.5 rad.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{Observation, StepInfo, StepOutcome, TaskConfig};
use crate::contact::{contact_force, Surface};
use crate::dynamics::{step, ChainModel, SimState};
use crate::error::{CoreError, CoreResult};
use crate::robot::{RobotSpec, TypeTag};

const PITCH_LIMIT: f64 = 0.5;
const HEIGHT_FRACTION: f64 = 0.7;
const RESET_NOISE: f64 = 0.005;

#[derive(Debug)]
pub struct HopperEnv {
    pub cfg: TaskConfig,
    state: Option<HopperState>,
}

#[derive(Debug)]
struct HopperState {
    robot: RobotSpec,
    model: ChainModel,
    sim: SimState,
    ground: Surface,
    nominal_height: f64,
    steps: u32,
    start_x: f64,
    done: bool,
}

impl HopperEnv {
    pub fn new(cfg: TaskConfig) -> HopperEnv {
        HopperEnv { cfg, state: None }
    }

    pub fn robot_id(&self) -> Option<&String> {
        self.state.as_ref().map(|s| &s.robot.robot_id)
    }

    pub fn reset(&mut self, robot: &RobotSpec, seed: u64) -> CoreResult<Observation> {
        if robot.type_tag != TypeTag::Hopper {
            return Err(CoreError::Config("hopper task needs a hopper spec".into()));
        }
        let model = ChainModel::from_hopper(robot)?;
        let mut rng = crate::rng::Rng::derive(seed, &[0x40b]);

        // Standing pose: legs straight, foot tip resting on the ground.
        let leg_drop: f64 = robot.joints.iter().map(|j| j.translation().norm()).sum();
        let tip_radius = model.contact_points[0].radius;
        let nominal_height = leg_drop + tip_radius;
        let mut q = vec![0.0; 6];
        q[1] = nominal_height;
        for qi in q.iter_mut() {
            *qi += rng.uniform(-RESET_NOISE, RESET_NOISE);
        }
        let mut qd = vec![0.0; 6];
        for v in qd.iter_mut() {
            *v += rng.uniform(-RESET_NOISE, RESET_NOISE);
        }

        let sim = SimState {
            t: 0.0,
            contact_flags: vec![false; model.contact_points.len()],
            q,
            qd,
        };
        let start_x = sim.q[0];
        self.state = Some(HopperState {
            robot: robot.clone(),
            model,
            sim,
            ground: Surface::plane(0.0, self.cfg.contact),
            nominal_height,
            steps: 0,
            start_x,
            done: false,
        });
        Ok(self.observe())
    }

    fn observe(&self) -> Observation {
        let st = self.state.as_ref().expect("reset first");
        // [z, pitch, hip, knee, ankle] and all six velocities.
        Observation {
            q_padded: st.sim.q[1..6].to_vec(),
            qd_padded: st.sim.qd.clone(),
            goal: None,
            achieved: None,
            reachable: true,
        }
    }

    pub fn step(&mut self, action: &[f64]) -> CoreResult<StepOutcome> {
        let st = self
            .state
            .as_mut()
            .ok_or_else(|| CoreError::State("step before reset".into()))?;
        if st.done {
            return Err(CoreError::State("episode already done".into()));
        }
        if action.len() != 3 {
            return Err(CoreError::Dimension(alloc::format!(
                "expected 3-dim action, got {}",
                action.len()
            )));
        }
        if !action.iter().all(|a| a.is_finite()) {
            return Err(CoreError::Validation("non-finite action".into()));
        }
        let used: Vec<f64> = action.iter().map(|a| a.clamp(-1.0, 1.0)).collect();
        let cmd: Vec<f64> = used
            .iter()
            .zip(&st.robot.joints)
            .map(|(a, j)| a * j.torque_limit)
            .collect();

        let x_before = st.sim.q[0];
        let ground = st.ground;
        let opts = self.cfg.sim.to_options();
        st.sim = step(&st.model, &st.sim, &cmd, &opts, |model, kin| {
            model
                .contact_points
                .iter()
                .map(|cp| {
                    let p = kin[cp.body].point_position(&cp.local);
                    let v = kin[cp.body].point_velocity(&cp.local);
                    contact_force(&p, &v, &ground, cp.radius)
                })
                .collect()
        })?;
        st.steps += 1;

        let forward_velocity = (st.sim.q[0] - x_before) / opts.control_dt;
        let ctrl: f64 = used.iter().map(|a| a * a).sum();
        let reward = forward_velocity + self.cfg.alive_bonus - self.cfg.ctrl_cost * ctrl;

        let fell = st.sim.q[1] < HEIGHT_FRACTION * st.nominal_height
            || st.sim.q[2].abs() > PITCH_LIMIT;
        let done = fell || st.steps >= self.cfg.max_steps;
        st.done = done;
        let info = StepInfo {
            success_now: false,
            success: false,
            distance: st.sim.q[0] - st.start_x,
            terminal: fell,
            steps: st.steps,
        };
        let obs = self.observe();
        Ok(StepOutcome {
            obs,
            reward,
            done,
            info,
        })
    }

    pub fn sim_state(&self) -> Option<&SimState> {
        self.state.as_ref().map(|s| &s.sim)
    }

    pub fn nominal_height(&self) -> Option<f64> {
        self.state.as_ref().map(|s| s.nominal_height)
    }
}
