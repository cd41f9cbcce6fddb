//! Reinforcement-learning cores: goal-conditioned DDPG with hindsight
//! relabeling for the sparse manipulator tasks, PPO with GAE for the
//! dense hopper task, and the state-augmentation plumbing shared by
//! both (ŝ = s ⊕ g ⊕ v_h off-policy, ŝ = s ⊕ v_h on-policy).

pub mod ddpg;
pub mod her;
pub mod ppo;

use alloc::string::String;
use alloc::vec::Vec;

use crate::embedding::EmbeddingTable;
use crate::error::{CoreError, CoreResult};
use crate::kinematics;
use crate::robot::{RobotSpec, SamplingRanges};

pub use ddpg::{DdpgConfig, DdpgTrainer, EmbedGradSource};
pub use her::her_relabel;
pub use ppo::{PpoConfig, PpoTrainer};

/// How the hardware vector v_h is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EncodingMode {
    /// No hardware vector at all (vanilla baseline).
    Baseline,
    /// Kinematic-structure encoding from relative joint poses.
    Explicit,
    /// Explicit encoding concatenated with normalized true dynamics.
    ExplicitDyn,
    /// Learned per-robot embedding row.
    Implicit,
}

impl EncodingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EncodingMode::Baseline => "baseline",
            EncodingMode::Explicit => "hcp-e",
            EncodingMode::ExplicitDyn => "hcp-e-dyn",
            EncodingMode::Implicit => "hcp-i",
        }
    }

    pub fn parse(s: &str) -> CoreResult<EncodingMode> {
        match s {
            "baseline" => Ok(EncodingMode::Baseline),
            "hcp-e" => Ok(EncodingMode::Explicit),
            "hcp-e-dyn" => Ok(EncodingMode::ExplicitDyn),
            "hcp-i" => Ok(EncodingMode::Implicit),
            other => Err(CoreError::Config(alloc::format!(
                "unknown algorithm `{other}` (expected baseline|hcp-e|hcp-e-dyn|hcp-i)"
            ))),
        }
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self, EncodingMode::Implicit)
    }

    /// Hardware-vector width for a robot class.
    pub fn vh_dim(&self, tag: crate::robot::TypeTag, implicit_dim: usize) -> usize {
        match self {
            EncodingMode::Baseline => 0,
            EncodingMode::Explicit => 6 * (kinematics::explicit_n_max(tag) + 1),
            EncodingMode::ExplicitDyn => {
                6 * (kinematics::explicit_n_max(tag) + 1) + kinematics::dynamics_encoding_dim(tag)
            }
            EncodingMode::Implicit => implicit_dim,
        }
    }
}

/// Compute the hardware vector for one robot under a mode. For the
/// implicit mode the row must already exist in the table.
pub fn hardware_vector(
    mode: EncodingMode,
    robot: &RobotSpec,
    ranges: &SamplingRanges,
    embedding: Option<&EmbeddingTable>,
) -> CoreResult<Vec<f64>> {
    match mode {
        EncodingMode::Baseline => Ok(Vec::new()),
        EncodingMode::Explicit => {
            let q0 = alloc::vec![0.0; robot.dof()];
            Ok(kinematics::explicit_encoding(robot, &q0)?.values)
        }
        EncodingMode::ExplicitDyn => {
            let q0 = alloc::vec![0.0; robot.dof()];
            let mut v = kinematics::explicit_encoding(robot, &q0)?.values;
            v.extend(kinematics::dynamics_encoding(robot, ranges)?);
            Ok(v)
        }
        EncodingMode::Implicit => {
            let table = embedding.ok_or_else(|| {
                CoreError::Config("implicit encoding requires an embedding table".into())
            })?;
            Ok(table.lookup(&robot.robot_id)?.to_vec())
        }
    }
}

/// Slice layout of the augmented observation ŝ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugLayout {
    pub state_dim: usize,
    pub goal_dim: usize,
    pub vh_dim: usize,
}

impl AugLayout {
    pub fn total(&self) -> usize {
        self.state_dim + self.goal_dim + self.vh_dim
    }

    pub fn goal_range(&self) -> core::ops::Range<usize> {
        self.state_dim..self.state_dim + self.goal_dim
    }

    pub fn vh_range(&self) -> core::ops::Range<usize> {
        self.state_dim + self.goal_dim..self.total()
    }

    pub fn build(&self, state: &[f64], goal: &[f64], vh: &[f64]) -> Vec<f64> {
        debug_assert_eq!(state.len(), self.state_dim);
        debug_assert_eq!(goal.len(), self.goal_dim);
        debug_assert_eq!(vh.len(), self.vh_dim);
        let mut v = Vec::with_capacity(self.total());
        v.extend_from_slice(state);
        v.extend_from_slice(goal);
        v.extend_from_slice(vh);
        v
    }
}

/// Running observation normalizer (Welford). Only the first
/// `normalized_dim` entries (state and goal slices) are standardized and
/// clipped; the hardware-vector tail passes through untouched so
/// embedding gradients keep their plain meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningNorm {
    pub count: f64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
    pub clip: f64,
}

impl RunningNorm {
    pub fn new(normalized_dim: usize) -> RunningNorm {
        RunningNorm {
            count: 0.0,
            mean: alloc::vec![0.0; normalized_dim],
            m2: alloc::vec![0.0; normalized_dim],
            clip: 5.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn update(&mut self, x: &[f64]) {
        self.count += 1.0;
        for i in 0..self.mean.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / self.count;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    fn std(&self, i: usize) -> f64 {
        if self.count < 2.0 {
            1.0
        } else {
            crate::fmath::sqrt((self.m2[i] / self.count).max(1e-8))
        }
    }

    /// Standardize the head of `x`, passing the tail through.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        for (i, &v) in x.iter().enumerate() {
            if i < self.mean.len() {
                out.push(((v - self.mean[i]) / self.std(i)).clamp(-self.clip, self.clip));
            } else {
                out.push(v);
            }
        }
        out
    }
}

/// One stored interaction. `done` is the no-bootstrap flag: true only
/// for success/fall terminations, false at timeouts.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs_aug: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs_aug: Vec<f64>,
    pub done: bool,
    pub achieved_goal: Option<[f64; 3]>,
    pub episode_id: u64,
    pub step_index: u32,
    pub robot_id: String,
    /// Embedding row index when the run uses implicit encoding.
    pub embed_row: Option<usize>,
}

/// Uniform-sampling ring buffer with FIFO eviction.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: Vec<Transition>,
    capacity: usize,
    write: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        ReplayBuffer {
            data: Vec::new(),
            capacity: capacity.max(1),
            write: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.write] = t;
            self.write = (self.write + 1) % self.capacity;
        }
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.data[idx]
    }

    pub fn sample_indices(&self, rng: &mut crate::rng::Rng, batch: usize) -> Vec<usize> {
        (0..batch).map(|_| rng.uniform_usize(self.data.len())).collect()
    }
}

/// Per-episode statistics every trainer reports.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: u64,
    pub robot_id: String,
    pub success: bool,
    pub final_distance: f64,
    pub steps: u32,
    pub sum_reward: f64,
    pub reachable: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{sample_robot, TypeTag};

    #[test]
    fn layout_slices() {
        let l = AugLayout {
            state_dim: 14,
            goal_dim: 3,
            vh_dim: 48,
        };
        assert_eq!(l.total(), 65);
        assert_eq!(l.goal_range(), 14..17);
        assert_eq!(l.vh_range(), 17..65);
        let v = l.build(&[1.0; 14], &[2.0; 3], &[3.0; 48]);
        assert_eq!(v.len(), 65);
        assert_eq!(v[14], 2.0);
        assert_eq!(v[17], 3.0);
    }

    #[test]
    fn ring_buffer_evicts_fifo() {
        let mk = |i: u64| Transition {
            obs_aug: alloc::vec![i as f64],
            action: alloc::vec![],
            reward: 0.0,
            next_obs_aug: alloc::vec![],
            done: false,
            achieved_goal: None,
            episode_id: i,
            step_index: 0,
            robot_id: String::new(),
            embed_row: None,
        };
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(mk(i));
        }
        assert_eq!(buf.len(), 3);
        let ids: Vec<u64> = (0..3).map(|i| buf.get(i).episode_id).collect();
        // Oldest (0, 1) evicted in order.
        assert!(ids.contains(&2) && ids.contains(&3) && ids.contains(&4));
    }

    #[test]
    fn explicit_manipulator_aug_dim_is_65() {
        let spec = sample_robot(TypeTag::I, &SamplingRanges::manipulator(), 1).unwrap();
        let vh = hardware_vector(
            EncodingMode::Explicit,
            &spec,
            &SamplingRanges::manipulator(),
            None,
        )
        .unwrap();
        assert_eq!(vh.len(), 48);
        let layout = AugLayout {
            state_dim: 14,
            goal_dim: 3,
            vh_dim: vh.len(),
        };
        assert_eq!(layout.total(), 65);
    }

    #[test]
    fn baseline_has_empty_hardware_vector() {
        let spec = sample_robot(TypeTag::I, &SamplingRanges::manipulator(), 1).unwrap();
        let vh = hardware_vector(
            EncodingMode::Baseline,
            &spec,
            &SamplingRanges::manipulator(),
            None,
        )
        .unwrap();
        assert!(vh.is_empty());
    }

    #[test]
    fn implicit_requires_table() {
        let spec = sample_robot(TypeTag::Hopper, &SamplingRanges::hopper(), 1).unwrap();
        assert!(hardware_vector(
            EncodingMode::Implicit,
            &spec,
            &SamplingRanges::hopper(),
            None
        )
        .is_err());
    }
}
