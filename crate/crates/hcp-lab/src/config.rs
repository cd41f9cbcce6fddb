//! Run configuration: one TOML file drives every experiment.
//!
//! Every hyperparameter has a named key; defaults follow the shipped
//! parameter tables, so a minimal file only states what differs. The
//! resolved config hashes to a stable identifier recorded in the run
//! manifest.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hcp_core::contact::ContactModel;
use hcp_core::envs::{TaskConfig, TaskKind};
use hcp_core::rl::{DdpgConfig, EmbedGradSource, EncodingMode, PpoConfig};
use hcp_core::robot::{SamplingRanges, TypeTag};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub robots: RobotsSection,
    #[serde(default)]
    pub ranges: RangesSection,
    #[serde(default)]
    pub task: TaskSection,
    #[serde(default)]
    pub ddpg: DdpgSection,
    #[serde(default)]
    pub ppo: PpoSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub stress: StressSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub name: String,
    /// baseline | hcp-e | hcp-e-dyn | hcp-i
    pub algorithm: String,
    /// reacher | peg-fixed | peg-random | hopper
    pub task: String,
    pub seeds: Vec<u64>,
    /// Stream per-episode summaries to episodes_seed{S}.csv.
    pub episodes_csv: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            name: "experiment".into(),
            algorithm: "hcp-e".into(),
            task: "reacher".into(),
            seeds: vec![0],
            episodes_csv: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotsSection {
    pub train_types: Vec<String>,
    pub held_out_type: Option<String>,
    pub variants_per_type: usize,
    pub pool_seed: u64,
}

impl Default for RobotsSection {
    fn default() -> Self {
        RobotsSection {
            train_types: vec![
                "A".into(),
                "B".into(),
                "C".into(),
                "D".into(),
                "E".into(),
                "F".into(),
                "G".into(),
                "I".into(),
            ],
            held_out_type: Some("H".into()),
            variants_per_type: 140,
            pool_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RangesSection {
    /// Defaults resolve per task (manipulator vs hopper tables).
    pub damping: Option<[f64; 2]>,
    pub damping_below_one: Option<f64>,
    pub friction: Option<[f64; 2]>,
    pub armature: Option<[f64; 2]>,
    pub mass_mult: Option<[f64; 2]>,
    pub length: Vec<LengthOverride>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthOverride {
    pub name: String,
    pub mean: f64,
    pub half: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSection {
    pub epsilon: f64,
    pub beta: f64,
    pub max_steps: u32,
    pub obs_noise: Option<f64>,
    pub alive_bonus: f64,
    pub ctrl_cost: f64,
    pub control_dt: f64,
    pub substep_dt: f64,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub contact_friction: f64,
    pub contact_smoothing_velocity: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        TaskSection {
            epsilon: 0.02,
            beta: 0.1,
            max_steps: 0, // 0 = task default (200 manipulators, 2048 hopper)
            obs_noise: None,
            alive_bonus: 1.0,
            ctrl_cost: 0.001,
            control_dt: 0.02,
            substep_dt: 0.002,
            contact_stiffness: 1e4,
            contact_damping: 100.0,
            contact_friction: 1.0,
            contact_smoothing_velocity: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdpgSection {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub critic_weight_decay: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub her_k: usize,
    pub warmup_episodes: u64,
    pub train_iters_per_episode: u32,
    pub buffer_capacity: usize,
    pub exploration_sigma: f64,
    pub random_episode_prob: f64,
    pub random_action_prob: f64,
    pub clip_targets: bool,
    /// both | critic | actor
    pub embed_grad: String,
    pub implicit_dim: usize,
    pub embedding_lr: Option<f64>,
    /// Total training episodes per seed (desk-scale default).
    pub episodes: u64,
    pub eval_every: u64,
}

impl Default for DdpgSection {
    fn default() -> Self {
        let d = DdpgConfig::default();
        DdpgSection {
            actor_lr: d.actor_lr,
            critic_lr: d.critic_lr,
            critic_weight_decay: d.critic_weight_decay,
            gamma: d.gamma,
            tau: d.tau,
            batch_size: d.batch_size,
            hidden: d.hidden,
            her_k: d.her_k,
            warmup_episodes: d.warmup_episodes,
            train_iters_per_episode: d.train_iters_per_episode,
            buffer_capacity: d.buffer_capacity,
            exploration_sigma: d.exploration_sigma,
            random_episode_prob: d.random_episode_prob,
            random_action_prob: d.random_action_prob,
            clip_targets: d.clip_targets,
            embed_grad: "both".into(),
            implicit_dim: d.implicit_dim,
            embedding_lr: d.embedding_lr,
            episodes: 5000,
            eval_every: 250,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoSection {
    pub lr: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_ratio: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub epochs: u32,
    pub minibatch: usize,
    pub actors: usize,
    pub horizon: usize,
    pub hidden: Vec<usize>,
    pub log_std_init: f64,
    pub implicit_dim: usize,
    pub embedding_lr: Option<f64>,
    /// Total environment steps per seed (desk-scale default).
    pub total_steps: u64,
    pub eval_every_iters: u64,
}

impl Default for PpoSection {
    fn default() -> Self {
        let d = PpoConfig::default();
        PpoSection {
            lr: d.lr,
            gamma: d.gamma,
            gae_lambda: d.gae_lambda,
            clip_ratio: d.clip_ratio,
            value_coef: d.value_coef,
            entropy_coef: d.entropy_coef,
            epochs: d.epochs,
            minibatch: d.minibatch,
            actors: d.actors,
            horizon: d.horizon,
            hidden: d.hidden,
            log_std_init: d.log_std_init,
            implicit_dim: d.implicit_dim,
            embedding_lr: d.embedding_lr,
            total_steps: 200_000,
            eval_every_iters: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub trials: usize,
    pub robots_per_trial: usize,
    pub eval_pool_seed: u64,
    pub eval_robots: usize,
    pub eval_seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            trials: 10,
            robots_per_trial: 100,
            eval_pool_seed: 777,
            eval_robots: 100,
            eval_seed: 4242,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StressSection {
    pub train_damping: [f64; 2],
    pub test_ranges: Vec<[f64; 2]>,
    pub robots: usize,
}

impl Default for StressSection {
    fn default() -> Self {
        StressSection {
            train_damping: [0.01, 2.0],
            test_ranges: vec![[0.01, 2.0], [2.0, 10.0], [10.0, 20.0], [20.0, 30.0]],
            robots: 100,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Default::default(),
            robots: Default::default(),
            ranges: Default::default(),
            task: Default::default(),
            ddpg: Default::default(),
            ppo: Default::default(),
            eval: Default::default(),
            stress: Default::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.encoding_mode()?;
        let task = self.task_kind()?;
        let types = self.train_types()?;
        for t in &types {
            if task.is_manipulator() != t.is_manipulator() {
                bail!("robot type {t} does not fit task {}", task.as_str());
            }
        }
        if let Some(h) = self.held_out_type()? {
            if types.contains(&h) {
                bail!("held-out type {h} must not be in train_types");
            }
        }
        if self.experiment.seeds.is_empty() {
            bail!("at least one seed required");
        }
        if self.robots.variants_per_type == 0 {
            bail!("variants_per_type must be >= 1");
        }
        self.sampling_ranges()?
            .validate()
            .map_err(anyhow::Error::from)?;
        self.task_config()?.validate().map_err(anyhow::Error::from)?;
        Ok(())
    }

    pub fn encoding_mode(&self) -> Result<EncodingMode> {
        Ok(EncodingMode::parse(&self.experiment.algorithm)?)
    }

    pub fn task_kind(&self) -> Result<TaskKind> {
        Ok(TaskKind::parse(&self.experiment.task)?)
    }

    pub fn train_types(&self) -> Result<Vec<TypeTag>> {
        self.robots
            .train_types
            .iter()
            .map(|s| TypeTag::parse(s).map_err(anyhow::Error::from))
            .collect()
    }

    pub fn held_out_type(&self) -> Result<Option<TypeTag>> {
        match &self.robots.held_out_type {
            Some(s) if !s.is_empty() => Ok(Some(TypeTag::parse(s)?)),
            _ => Ok(None),
        }
    }

    pub fn sampling_ranges(&self) -> Result<SamplingRanges> {
        let task = self.task_kind()?;
        let mut r = if task.is_manipulator() {
            SamplingRanges::manipulator()
        } else {
            SamplingRanges::hopper()
        };
        if let Some(v) = self.ranges.damping {
            r.damping = v;
        }
        if let Some(v) = self.ranges.damping_below_one {
            r.damping_below_one = v;
        }
        if let Some(v) = self.ranges.friction {
            r.friction = v;
        }
        if let Some(v) = self.ranges.armature {
            r.armature = v;
        }
        if let Some(v) = self.ranges.mass_mult {
            r.mass_mult = v;
        }
        for o in &self.ranges.length {
            r.length_overrides.push((o.name.clone(), (o.mean, o.half)));
        }
        Ok(r)
    }

    pub fn task_config(&self) -> Result<TaskConfig> {
        let kind = self.task_kind()?;
        let mut t = TaskConfig::for_task(kind);
        t.epsilon = self.task.epsilon;
        t.beta = self.task.beta;
        if self.task.max_steps > 0 {
            t.max_steps = self.task.max_steps;
        }
        if let Some(n) = self.task.obs_noise {
            t.obs_noise = n;
        }
        t.alive_bonus = self.task.alive_bonus;
        t.ctrl_cost = self.task.ctrl_cost;
        t.sim.control_dt = self.task.control_dt;
        t.sim.substep_dt = self.task.substep_dt;
        t.contact = ContactModel {
            stiffness: self.task.contact_stiffness,
            damping: self.task.contact_damping,
            friction_coeff: self.task.contact_friction,
            smoothing_velocity: self.task.contact_smoothing_velocity,
            ..ContactModel::default()
        };
        Ok(t)
    }

    pub fn ddpg_config(&self) -> Result<DdpgConfig> {
        let embed_grad = match self.ddpg.embed_grad.as_str() {
            "both" => EmbedGradSource::Both,
            "critic" => EmbedGradSource::Critic,
            "actor" => EmbedGradSource::Actor,
            other => bail!("unknown embed_grad `{other}` (both|critic|actor)"),
        };
        Ok(DdpgConfig {
            actor_lr: self.ddpg.actor_lr,
            critic_lr: self.ddpg.critic_lr,
            critic_weight_decay: self.ddpg.critic_weight_decay,
            gamma: self.ddpg.gamma,
            tau: self.ddpg.tau,
            batch_size: self.ddpg.batch_size,
            hidden: self.ddpg.hidden.clone(),
            her_k: self.ddpg.her_k,
            warmup_episodes: self.ddpg.warmup_episodes,
            train_iters_per_episode: self.ddpg.train_iters_per_episode,
            buffer_capacity: self.ddpg.buffer_capacity,
            exploration_sigma: self.ddpg.exploration_sigma,
            random_episode_prob: self.ddpg.random_episode_prob,
            random_action_prob: self.ddpg.random_action_prob,
            clip_targets: self.ddpg.clip_targets,
            embed_grad,
            implicit_dim: self.ddpg.implicit_dim,
            embedding_lr: self.ddpg.embedding_lr,
        })
    }

    pub fn ppo_config(&self) -> Result<PpoConfig> {
        Ok(PpoConfig {
            lr: self.ppo.lr,
            gamma: self.ppo.gamma,
            gae_lambda: self.ppo.gae_lambda,
            clip_ratio: self.ppo.clip_ratio,
            value_coef: self.ppo.value_coef,
            entropy_coef: self.ppo.entropy_coef,
            epochs: self.ppo.epochs,
            minibatch: self.ppo.minibatch,
            actors: self.ppo.actors,
            horizon: self.ppo.horizon,
            hidden: self.ppo.hidden.clone(),
            log_std_init: self.ppo.log_std_init,
            implicit_dim: self.ppo.implicit_dim,
            embedding_lr: self.ppo.embedding_lr,
        })
    }

    /// Canonical serialization; the manifest records its SHA-256.
    pub fn canonical_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn config_hash(&self) -> Result<String> {
        let text = self.canonical_toml()?;
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        Ok(hex_string(&hasher.finalize()))
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_parameter_tables() {
        let c = ExperimentConfig::default();
        assert_eq!(c.ddpg.actor_lr, 1e-4);
        assert_eq!(c.ddpg.critic_lr, 1e-4);
        assert_eq!(c.ddpg.critic_weight_decay, 1e-3);
        assert_eq!(c.ddpg.hidden, vec![128, 256, 256]);
        assert_eq!(c.ddpg.gamma, 0.99);
        assert_eq!(c.ddpg.batch_size, 128);
        assert_eq!(c.ddpg.warmup_episodes, 50);
        assert_eq!(c.ddpg.buffer_capacity, 1_000_000);
        assert_eq!(c.ddpg.train_iters_per_episode, 100);
        assert_eq!(c.ddpg.tau, 0.01);
        assert_eq!(c.ddpg.her_k, 4);
        assert_eq!(c.task.epsilon, 0.02);
        assert_eq!(c.task.beta, 0.1);
        assert_eq!(c.task.control_dt, 0.02);
        assert_eq!(c.robots.variants_per_type, 140);

        assert_eq!(c.ppo.actors, 8);
        assert_eq!(c.ppo.lr, 1e-4);
        assert_eq!(c.ppo.hidden, vec![128, 128]);
        assert_eq!(c.ppo.gae_lambda, 0.95);
        assert_eq!(c.ppo.clip_ratio, 0.2);
        assert_eq!(c.ppo.minibatch, 512);
        assert_eq!(c.ppo.epochs, 5);
        assert_eq!(c.ppo.value_coef, 0.5);
        assert_eq!(c.ppo.entropy_coef, 0.015);
        assert_eq!(c.ppo.implicit_dim, 32);
        assert_eq!(c.eval.trials, 10);
        assert_eq!(c.eval.robots_per_trial, 100);
    }

    #[test]
    fn minimal_toml_parses_with_defaults() {
        let cfg: ExperimentConfig = toml::from_str(
            r#"
[experiment]
name = "t"
algorithm = "baseline"
task = "reacher"
seeds = [3]
"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.experiment.seeds, vec![3]);
        assert_eq!(cfg.ddpg.batch_size, 128);
    }

    #[test]
    fn held_out_overlap_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.robots.held_out_type = Some("A".into());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn task_type_mismatch_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.task = "hopper".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig::default();
        assert_eq!(a.config_hash().unwrap(), b.config_hash().unwrap());
        let mut c = ExperimentConfig::default();
        c.ddpg.gamma = 0.95;
        assert_ne!(a.config_hash().unwrap(), c.config_hash().unwrap());
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: Result<ExperimentConfig, _> = toml::from_str("[experiment]\nnot_a_key = 1\n");
        assert!(r.is_err());
    }
}
