//! Goal-conditioned DDPG with hindsight relabeling.
//!
//! One trainer owns its environment, robot pool, replay buffer, actor
//! and critic with soft-updated targets, and (for implicit encoding)
//! the embedding table. Every source of randomness flows through one
//! generator, so a (config, seed) pair reproduces the run bit-exactly.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{hardware_vector, AugLayout, EncodingMode, EpisodeStats, ReplayBuffer, RunningNorm, Transition};
use crate::embedding::EmbeddingTable;
use crate::envs::{TaskConfig, TaskEnv};
use crate::error::{CoreError, CoreResult};
use crate::nn::{adam_step, soft_update, Activation, AdamConfig, Cache, Mlp, MlpSpec};
use crate::rng::Rng;
use crate::robot::{RobotSpec, SamplingRanges};

/// Which losses route gradients into the embedding rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EmbedGradSource {
    Both,
    Critic,
    Actor,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DdpgConfig {
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
    /// Per-step chance of replacing the policy action with a uniform
    /// random one (behavioral-policy exploration).
    pub random_action_prob: f64,
    /// Clamp critic targets into the return bounds implied by the
    /// reward range (off-policy stabilizer; reward-bound derived).
    pub clip_targets: bool,
    pub embed_grad: EmbedGradSource,
    pub implicit_dim: usize,
    pub embedding_lr: Option<f64>,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        DdpgConfig {
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            critic_weight_decay: 1e-3,
            gamma: 0.99,
            tau: 0.01,
            batch_size: 128,
            hidden: vec![128, 256, 256],
            her_k: 4,
            warmup_episodes: 50,
            train_iters_per_episode: 100,
            buffer_capacity: 1_000_000,
            exploration_sigma: 0.1,
            random_episode_prob: 0.1,
            random_action_prob: 0.2,
            clip_targets: true,
            embed_grad: EmbedGradSource::Both,
            implicit_dim: 32,
            embedding_lr: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdpgLosses {
    pub critic_loss: f64,
    pub actor_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalStats {
    pub success_rate: f64,
    pub final_distances: Vec<f64>,
    pub episode_lengths: Vec<u32>,
    pub robot_ids: Vec<String>,
    pub successes: Vec<bool>,
}

pub struct DdpgTrainer {
    pub cfg: DdpgConfig,
    pub mode: EncodingMode,
    pub layout: AugLayout,
    pub task: TaskConfig,
    pub ranges: SamplingRanges,
    pub pool: Vec<RobotSpec>,
    pub embedding: Option<EmbeddingTable>,
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub buffer: ReplayBuffer,
    pub obs_norm: RunningNorm,
    env: TaskEnv,
    rng: Rng,
    vh_cache: Vec<Option<Vec<f64>>>,
    pub episodes_done: u64,
    pub updates_done: u64,
    pub skipped_updates: u64,
    action_dim: usize,
    r_min: f64,
    r_max: f64,
}

impl DdpgTrainer {
    pub fn new(
        mode: EncodingMode,
        task: TaskConfig,
        pool: Vec<RobotSpec>,
        ranges: SamplingRanges,
        cfg: DdpgConfig,
        seed: u64,
    ) -> CoreResult<DdpgTrainer> {
        if pool.is_empty() {
            return Err(CoreError::Config("empty robot pool".into()));
        }
        let env = TaskEnv::new(task.clone())?;
        let action_dim = env.action_dim();
        let state_dim = env.state_dim();
        let goal_dim = env.goal_dim();
        let vh_dim = mode.vh_dim(pool[0].type_tag, cfg.implicit_dim);
        let layout = AugLayout {
            state_dim,
            goal_dim,
            vh_dim,
        };

        let mut rng = Rng::derive(seed, &[0xdd9]);
        let embedding = if mode.is_implicit() {
            let mut table =
                EmbeddingTable::new(cfg.implicit_dim, cfg.embedding_lr.unwrap_or(cfg.actor_lr));
            let mut emb_rng = rng.split(0xe0b);
            table.init_rows(pool.iter().map(|r| r.robot_id.as_str()), &mut emb_rng);
            Some(table)
        } else {
            None
        };

        let total = layout.total();
        let mut actor_sizes = vec![total];
        actor_sizes.extend_from_slice(&cfg.hidden);
        actor_sizes.push(action_dim);
        let mut actor_act = vec![Activation::Selu; cfg.hidden.len()];
        actor_act.push(Activation::Tanh);
        let actor = Mlp::new(MlpSpec::new(actor_sizes, actor_act), rng.next_u64())?;

        let mut critic_sizes = vec![total];
        critic_sizes.extend_from_slice(&cfg.hidden);
        critic_sizes.push(1);
        let mut critic_act = vec![Activation::Selu; cfg.hidden.len()];
        critic_act.push(Activation::Identity);
        let inject_layer = if cfg.hidden.len() >= 2 { 1 } else { 0 };
        let critic = Mlp::new(
            MlpSpec::new(critic_sizes, critic_act).with_injection(inject_layer, action_dim),
            rng.next_u64(),
        )?;

        let target_actor = actor.clone();
        let target_critic = critic.clone();
        let beta = task.beta;
        let r_min = -1.0 - beta * action_dim as f64;
        let buffer = ReplayBuffer::new(cfg.buffer_capacity);
        let obs_norm = RunningNorm::new(state_dim + goal_dim);
        let n_robots = pool.len();

        Ok(DdpgTrainer {
            cfg,
            mode,
            layout,
            task,
            ranges,
            pool,
            embedding,
            actor,
            critic,
            target_actor,
            target_critic,
            buffer,
            obs_norm,
            env,
            rng,
            vh_cache: vec![None; n_robots],
            episodes_done: 0,
            updates_done: 0,
            skipped_updates: 0,
            action_dim,
            r_min,
            r_max: 1.0,
        })
    }

    /// Hardware vector for a pool robot (cached for static encodings,
    /// snapshotted per call for the implicit mode).
    fn vh(&mut self, robot_idx: usize) -> CoreResult<Vec<f64>> {
        if self.mode.is_implicit() {
            return hardware_vector(
                self.mode,
                &self.pool[robot_idx],
                &self.ranges,
                self.embedding.as_ref(),
            );
        }
        if self.vh_cache[robot_idx].is_none() {
            let v = hardware_vector(self.mode, &self.pool[robot_idx], &self.ranges, None)?;
            self.vh_cache[robot_idx] = Some(v);
        }
        Ok(self.vh_cache[robot_idx].clone().unwrap())
    }

    fn policy(net: &Mlp, obs_aug: &[f64]) -> Vec<f64> {
        let mut cache = Cache::default();
        net.forward(obs_aug, None, &mut cache).expect("policy forward")
    }

    /// Run one training episode (robot sampled uniformly from the pool),
    /// push originals plus hindsight relabels, then run the configured
    /// number of optimization iterations.
    pub fn run_training_episode(&mut self) -> CoreResult<EpisodeStats> {
        let episode_id = self.episodes_done;
        let robot_idx = self.rng.uniform_usize(self.pool.len());
        let env_seed = self.rng.next_u64();
        let explore_random = self.episodes_done < self.cfg.warmup_episodes
            || self.rng.next_f64() < self.cfg.random_episode_prob;
        let vh = self.vh(robot_idx)?;
        let robot = self.pool[robot_idx].clone();
        let embed_row = match &self.embedding {
            Some(t) => Some(t.row_index(&robot.robot_id)?),
            None => None,
        };

        let mut obs = self.env.reset(&robot, env_seed)?;
        let reachable = obs.reachable;
        let mut transitions: Vec<Transition> = Vec::new();
        let mut sum_reward = 0.0;

        let (final_distance, steps, success) = loop {
            let goal: Vec<f64> = obs.goal.map(|g| vec![g.x, g.y, g.z]).unwrap_or_default();
            let obs_aug = self.layout.build(&obs.state_vec(), &goal, &vh);
            self.obs_norm.update(&obs_aug);
            let step_random =
                explore_random || self.rng.next_f64() < self.cfg.random_action_prob;
            let mut action = if step_random {
                (0..self.action_dim)
                    .map(|_| self.rng.uniform(-1.0, 1.0))
                    .collect::<Vec<f64>>()
            } else {
                let mut a = Self::policy(&self.actor, &self.obs_norm.normalize(&obs_aug));
                for x in &mut a {
                    *x += self.cfg.exploration_sigma * self.rng.normal();
                }
                a
            };
            for x in &mut action {
                *x = x.clamp(-1.0, 1.0);
            }

            let out = self.env.step(&action)?;
            sum_reward += out.reward;
            let next_aug = self.layout.build(&out.obs.state_vec(), &goal, &vh);
            transitions.push(Transition {
                obs_aug,
                action,
                reward: out.reward,
                next_obs_aug: next_aug,
                done: out.info.terminal,
                achieved_goal: out.obs.achieved.map(|a| [a.x, a.y, a.z]),
                episode_id,
                step_index: out.info.steps - 1,
                robot_id: robot.robot_id.clone(),
                embed_row,
            });
            if out.done {
                break (out.info.distance, out.info.steps, out.info.success);
            }
            obs = out.obs;
        };

        // Hindsight relabels (manipulator tasks carry achieved goals).
        if self.layout.goal_dim == 3 && self.cfg.her_k > 0 {
            let epsilon = self.task.epsilon;
            let beta = self.task.beta;
            let n_used = robot.dof();
            let relabeled = super::her_relabel(
                &transitions,
                self.cfg.her_k,
                &self.layout,
                &mut self.rng,
                |achieved, goal, action| {
                    let d2: f64 = achieved
                        .iter()
                        .zip(goal)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    let d = crate::fmath::sqrt(d2);
                    let pen: f64 =
                        beta * action[..n_used].iter().map(|a| a * a).sum::<f64>();
                    if d < epsilon {
                        (1.0 - pen, true)
                    } else {
                        (-1.0 - pen, false)
                    }
                },
            )?;
            for t in transitions.drain(..) {
                self.buffer.push(t);
            }
            for t in relabeled {
                self.buffer.push(t);
            }
        } else {
            for t in transitions.drain(..) {
                self.buffer.push(t);
            }
        }

        self.episodes_done += 1;
        if self.episodes_done > self.cfg.warmup_episodes {
            for _ in 0..self.cfg.train_iters_per_episode {
                self.update()?;
            }
        }

        Ok(EpisodeStats {
            episode: episode_id,
            robot_id: robot.robot_id,
            success,
            final_distance,
            steps,
            sum_reward,
            reachable,
        })
    }

    /// One minibatch optimization step: critic regression to the target
    /// value, actor ascent on Q, soft target updates, and embedding-row
    /// updates when the encoding is learned.
    pub fn update(&mut self) -> CoreResult<Option<DdpgLosses>> {
        let b = self.cfg.batch_size;
        if self.buffer.len() < b {
            self.skipped_updates += 1;
            return Ok(None);
        }
        let idx = self.buffer.sample_indices(&mut self.rng, b);
        let inv_b = 1.0 / b as f64;
        let q_lo = self.r_min / (1.0 - self.cfg.gamma);
        let q_hi = self.r_max;

        let mut cache_a = Cache::default();
        let mut cache_c = Cache::default();
        let mut embed_grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let vh_range = self.layout.vh_range();

        // Critic step.
        let mut critic_loss = 0.0;
        for &i in &idx {
            let tr = self.buffer.get(i);
            let obs_n = self.obs_norm.normalize(&tr.obs_aug);
            let next_n = self.obs_norm.normalize(&tr.next_obs_aug);
            let next_action = {
                let mut c = Cache::default();
                self.target_actor.forward(&next_n, None, &mut c)?
            };
            let q_next = {
                let mut c = Cache::default();
                self.target_critic
                    .forward(&next_n, Some(&next_action), &mut c)?[0]
            };
            let mut y = tr.reward + self.cfg.gamma * (1.0 - tr.done as u8 as f64) * q_next;
            if self.cfg.clip_targets {
                y = y.clamp(q_lo, q_hi);
            }
            let q = self
                .critic
                .forward(&obs_n, Some(&tr.action), &mut cache_c)?[0];
            let err = q - y;
            critic_loss += err * err * inv_b;
            let (input_grad, _) = self
                .critic
                .backward(&cache_c, &[2.0 * err * inv_b])?;
            if let (Some(row), EmbedGradSource::Both | EmbedGradSource::Critic) =
                (tr.embed_row, self.cfg.embed_grad)
            {
                let acc = embed_grads
                    .entry(row)
                    .or_insert_with(|| vec![0.0; self.layout.vh_dim]);
                for (a, g) in acc.iter_mut().zip(&input_grad[vh_range.clone()]) {
                    *a += *g;
                }
            }
        }
        if !critic_loss.is_finite() {
            return Err(CoreError::Validation("non-finite critic loss".into()));
        }
        adam_step(
            &mut self.critic.params,
            &AdamConfig::new(self.cfg.critic_lr).with_weight_decay(self.cfg.critic_weight_decay),
        );

        // Actor step: ascend Q(s, mu(s)).
        let mut actor_q = 0.0;
        for &i in &idx {
            let tr = self.buffer.get(i);
            let obs_n = self.obs_norm.normalize(&tr.obs_aug);
            let a = self.actor.forward(&obs_n, None, &mut cache_a)?;
            let q = self.critic.forward(&obs_n, Some(&a), &mut cache_c)?[0];
            actor_q += q * inv_b;
            let (critic_in_grad, action_grad) =
                self.critic.backward(&cache_c, &[-inv_b])?;
            let action_grad = action_grad.expect("critic has action injection");
            let (actor_in_grad, _) = self.actor.backward(&cache_a, &action_grad)?;
            if let (Some(row), EmbedGradSource::Both | EmbedGradSource::Actor) =
                (tr.embed_row, self.cfg.embed_grad)
            {
                let acc = embed_grads
                    .entry(row)
                    .or_insert_with(|| vec![0.0; self.layout.vh_dim]);
                for ((a, g1), g2) in acc
                    .iter_mut()
                    .zip(&critic_in_grad[vh_range.clone()])
                    .zip(&actor_in_grad[vh_range.clone()])
                {
                    *a += *g1 + *g2;
                }
            }
        }
        if !actor_q.is_finite() {
            return Err(CoreError::Validation("non-finite actor objective".into()));
        }
        // The actor pass polluted critic grads; the critic was already
        // stepped, so drop them.
        self.critic.params.zero_grads();
        adam_step(&mut self.actor.params, &AdamConfig::new(self.cfg.actor_lr));

        soft_update(
            &mut self.target_actor.params,
            &self.actor.params,
            self.cfg.tau,
        )?;
        soft_update(
            &mut self.target_critic.params,
            &self.critic.params,
            self.cfg.tau,
        )?;

        if let Some(table) = &mut self.embedding {
            table.apply_gradients(&embed_grads)?;
        }
        self.updates_done += 1;
        Ok(Some(DdpgLosses {
            critic_loss,
            actor_q,
        }))
    }

    /// Deterministic-policy evaluation, one episode per robot. Leaves
    /// the training random stream untouched.
    pub fn evaluate(&mut self, robots: &[RobotSpec], eval_seed: u64) -> CoreResult<EvalStats> {
        let mut stats = EvalStats {
            success_rate: 0.0,
            final_distances: Vec::with_capacity(robots.len()),
            episode_lengths: Vec::with_capacity(robots.len()),
            robot_ids: Vec::with_capacity(robots.len()),
            successes: Vec::with_capacity(robots.len()),
        };
        let mut successes = 0usize;
        for (ri, robot) in robots.iter().enumerate() {
            let vh = match self.mode.is_implicit() {
                true => hardware_vector(self.mode, robot, &self.ranges, self.embedding.as_ref())?,
                false => hardware_vector(self.mode, robot, &self.ranges, None)?,
            };
            let seed = Rng::derive(eval_seed, &[0xe7a1, ri as u64]).state();
            let mut obs = self.env.reset(robot, seed)?;
            let (dist, steps, success) = loop {
                let goal: Vec<f64> = obs.goal.map(|g| vec![g.x, g.y, g.z]).unwrap_or_default();
                let obs_aug = self.layout.build(&obs.state_vec(), &goal, &vh);
                let action = Self::policy(&self.actor, &self.obs_norm.normalize(&obs_aug));
                let out = self.env.step(&action)?;
                if out.done {
                    break (out.info.distance, out.info.steps, out.info.success);
                }
                obs = out.obs;
            };
            successes += success as usize;
            stats.final_distances.push(dist);
            stats.episode_lengths.push(steps);
            stats.robot_ids.push(robot.robot_id.clone());
            stats.successes.push(success);
        }
        stats.success_rate = successes as f64 / robots.len().max(1) as f64;
        Ok(stats)
    }

    pub fn rng_state(&self) -> u64 {
        self.rng.state()
    }

    pub fn restore_rng(&mut self, state: u64) {
        self.rng = Rng::restore(state);
    }

    /// Success rate of uniform-random actions over the given robots;
    /// the null model learning must beat.
    pub fn random_policy_success(
        &mut self,
        robots: &[RobotSpec],
        eval_seed: u64,
    ) -> CoreResult<f64> {
        let mut rng = Rng::derive(eval_seed, &[0x4a4d]);
        let mut successes = 0usize;
        for (ri, robot) in robots.iter().enumerate() {
            let seed = Rng::derive(eval_seed, &[0xe7a1, ri as u64]).state();
            let mut _obs = self.env.reset(robot, seed)?;
            loop {
                let action: Vec<f64> = (0..self.action_dim)
                    .map(|_| rng.uniform(-1.0, 1.0))
                    .collect();
                let out = self.env.step(&action)?;
                if out.done {
                    successes += out.info.success as usize;
                    break;
                }
            }
        }
        Ok(successes as f64 / robots.len().max(1) as f64)
    }
}

impl core::fmt::Debug for DdpgTrainer {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DdpgTrainer")
            .field("mode", &self.mode)
            .field("episodes_done", &self.episodes_done)
            .field("updates_done", &self.updates_done)
            .field("buffer_len", &self.buffer.len())
            .finish()
    }
}
