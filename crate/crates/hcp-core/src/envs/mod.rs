//! Task environments: reacher, peg insertion (fixed/random hole), and
//! the planar hopper.
//!
//! Observations are joint angles and velocities, zero-padded to the
//! 7-slot layout for manipulators, with uniform noise on active entries
//! only; rewards and success tests always use the true state. Actions
//! are normalized to [-1, 1] per slot and scaled by each joint's torque
//! limit; action entries beyond the robot's DOF are ignored.

mod arm;
mod hopper;

pub use arm::ArmEnv;
pub use hopper::HopperEnv;

use alloc::string::String;
use alloc::vec::Vec;

use crate::contact::ContactModel;
use crate::dynamics::SimOptions;
use crate::error::{CoreError, CoreResult};
use crate::math::Vec3;
use crate::robot::{RobotSpec, MAX_ARM_DOF};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TaskKind {
    Reacher,
    PegFixed,
    PegRandom,
    Hopper,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Reacher => "reacher",
            TaskKind::PegFixed => "peg-fixed",
            TaskKind::PegRandom => "peg-random",
            TaskKind::Hopper => "hopper",
        }
    }

    pub fn parse(s: &str) -> CoreResult<TaskKind> {
        match s {
            "reacher" => Ok(TaskKind::Reacher),
            "peg-fixed" => Ok(TaskKind::PegFixed),
            "peg-random" => Ok(TaskKind::PegRandom),
            "hopper" => Ok(TaskKind::Hopper),
            other => Err(CoreError::Config(alloc::format!("unknown task `{other}`"))),
        }
    }

    pub fn is_manipulator(&self) -> bool {
        !matches!(self, TaskKind::Hopper)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskConfig {
    pub task: TaskKind,
    /// Success distance threshold (m).
    pub epsilon: f64,
    /// Action penalty coefficient.
    pub beta: f64,
    pub max_steps: u32,
    /// Uniform observation noise half-width on active entries.
    pub obs_noise: f64,
    pub contact: ContactModel,
    #[cfg_attr(feature = "serde", serde(default))]
    pub sim: SimOptionsCfg,
    /// Hopper reward terms (dense, gym-style).
    pub alive_bonus: f64,
    pub ctrl_cost: f64,
}

/// Serializable mirror of [`SimOptions`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimOptionsCfg {
    pub control_dt: f64,
    pub substep_dt: f64,
}

impl Default for SimOptionsCfg {
    fn default() -> Self {
        SimOptionsCfg {
            control_dt: 0.02,
            substep_dt: 0.002,
        }
    }
}

impl SimOptionsCfg {
    pub fn to_options(self) -> SimOptions {
        SimOptions {
            control_dt: self.control_dt,
            substep_dt: self.substep_dt,
        }
    }
}

impl TaskConfig {
    pub fn manipulator(task: TaskKind) -> TaskConfig {
        TaskConfig {
            task,
            epsilon: 0.02,
            beta: 0.1,
            max_steps: 200,
            obs_noise: 0.02,
            contact: ContactModel::default(),
            sim: SimOptionsCfg::default(),
            alive_bonus: 1.0,
            ctrl_cost: 0.001,
        }
    }

    pub fn hopper() -> TaskConfig {
        TaskConfig {
            task: TaskKind::Hopper,
            epsilon: 0.02,
            beta: 0.1,
            max_steps: 2048,
            obs_noise: 0.0,
            contact: ContactModel::default(),
            sim: SimOptionsCfg::default(),
            alive_bonus: 1.0,
            ctrl_cost: 0.001,
        }
    }

    pub fn for_task(task: TaskKind) -> TaskConfig {
        if task.is_manipulator() {
            TaskConfig::manipulator(task)
        } else {
            TaskConfig::hopper()
        }
    }

    pub fn validate(&self) -> CoreResult<()> {
        if self.epsilon <= 0.0 {
            return Err(CoreError::Config("epsilon must be > 0".into()));
        }
        if self.beta < 0.0 {
            return Err(CoreError::Config("beta must be >= 0".into()));
        }
        if self.max_steps == 0 {
            return Err(CoreError::Config("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Environment observation. For manipulators `q_padded`/`qd_padded` are
/// 7 slots with exact zeros past the robot's DOF; the hopper packs
/// [z, pitch, hip, knee, ankle] and all six velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub q_padded: Vec<f64>,
    pub qd_padded: Vec<f64>,
    pub goal: Option<Vec3>,
    pub achieved: Option<Vec3>,
    pub reachable: bool,
}

impl Observation {
    /// Flat state vector: q_padded ⊕ qd_padded.
    pub fn state_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.q_padded.len() + self.qd_padded.len());
        v.extend_from_slice(&self.q_padded);
        v.extend_from_slice(&self.qd_padded);
        v
    }

    pub fn state_dim(&self) -> usize {
        self.q_padded.len() + self.qd_padded.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Success at this step (distance under epsilon).
    pub success_now: bool,
    /// Success at any step of the episode so far.
    pub success: bool,
    /// POI-goal distance (manipulators) or forward displacement (hopper).
    pub distance: f64,
    /// True when the episode ended in a state whose value is zero
    /// (goal reached / hopper fell); timeouts leave this false so the
    /// critic still bootstraps.
    pub terminal: bool,
    pub steps: u32,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Sparse manipulator reward: sign(ε − ‖poi − goal‖) − β‖a‖², with the
/// boundary distance = ε counting as failure.
pub fn compute_reward(poi: &Vec3, goal: &Vec3, action: &[f64], epsilon: f64, beta: f64) -> f64 {
    let d = (poi - goal).norm();
    let sign = if d < epsilon { 1.0 } else { -1.0 };
    let penalty: f64 = action.iter().map(|a| a * a).sum();
    sign - beta * penalty
}

/// Episode success predicate on a step-info record.
pub fn success(info: &StepInfo) -> bool {
    info.success
}

/// Concrete environment dispatch.
#[derive(Debug)]
pub enum TaskEnv {
    Arm(ArmEnv),
    Hopper(HopperEnv),
}

impl TaskEnv {
    pub fn new(cfg: TaskConfig) -> CoreResult<TaskEnv> {
        cfg.validate()?;
        Ok(match cfg.task {
            TaskKind::Hopper => TaskEnv::Hopper(HopperEnv::new(cfg)),
            _ => TaskEnv::Arm(ArmEnv::new(cfg)),
        })
    }

    pub fn reset(&mut self, robot: &RobotSpec, seed: u64) -> CoreResult<Observation> {
        match self {
            TaskEnv::Arm(e) => e.reset(robot, seed),
            TaskEnv::Hopper(e) => e.reset(robot, seed),
        }
    }

    pub fn step(&mut self, action: &[f64]) -> CoreResult<StepOutcome> {
        match self {
            TaskEnv::Arm(e) => e.step(action),
            TaskEnv::Hopper(e) => e.step(action),
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            TaskEnv::Arm(_) => MAX_ARM_DOF,
            TaskEnv::Hopper(_) => 3,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            TaskEnv::Arm(_) => 2 * MAX_ARM_DOF,
            TaskEnv::Hopper(_) => 11,
        }
    }

    pub fn goal_dim(&self) -> usize {
        match self {
            TaskEnv::Arm(_) => 3,
            TaskEnv::Hopper(_) => 0,
        }
    }

    pub fn config(&self) -> &TaskConfig {
        match self {
            TaskEnv::Arm(e) => &e.cfg,
            TaskEnv::Hopper(e) => &e.cfg,
        }
    }

    pub fn robot_id(&self) -> Option<&String> {
        match self {
            TaskEnv::Arm(e) => e.robot_id(),
            TaskEnv::Hopper(e) => e.robot_id(),
        }
    }
}
