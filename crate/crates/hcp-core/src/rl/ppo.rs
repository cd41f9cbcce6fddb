//! PPO with clipped surrogate, GAE, and a diagonal Gaussian policy.
//!
//! K actor slots step their own environments for a fixed horizon each
//! iteration (robots resampled from the pool at episode boundaries); the
//! flattened batch is optimized for several epochs of shuffled
//! minibatches. The policy mean comes from a tanh-output network; the
//! log standard deviation is a free state-independent parameter vector.
//! Embedding rows receive gradients through the v_h slice of both the
//! policy and value inputs.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{hardware_vector, AugLayout, EncodingMode, RunningNorm};
use crate::embedding::EmbeddingTable;
use crate::envs::{TaskConfig, TaskEnv};
use crate::error::{CoreError, CoreResult};
use crate::fmath;
use crate::nn::{adam_step, Activation, AdamConfig, Cache, Mlp, MlpSpec, NetParams};
use crate::rng::Rng;
use crate::robot::{RobotSpec, SamplingRanges};

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PpoConfig {
    pub lr: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_ratio: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub epochs: u32,
    pub minibatch: usize,
    pub actors: usize,
    /// Steps collected per actor per iteration.
    pub horizon: usize,
    pub hidden: Vec<usize>,
    pub log_std_init: f64,
    pub implicit_dim: usize,
    pub embedding_lr: Option<f64>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            lr: 1e-4,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_ratio: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.015,
            epochs: 5,
            minibatch: 512,
            actors: 8,
            horizon: 256,
            hidden: vec![128, 128],
            log_std_init: -0.6931471805599453, // ln(0.5)
            implicit_dim: 32,
            embedding_lr: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoLosses {
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

/// Flattened on-policy batch with advantages and returns.
#[derive(Debug, Default)]
pub struct PpoBatch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub logp_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub embed_rows: Vec<Option<usize>>,
}

impl PpoBatch {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

/// Statistics of the episodes finished during one collection.
#[derive(Debug, Clone, Default)]
pub struct IterationStats {
    pub episodes_finished: u32,
    pub mean_return: f64,
    pub mean_length: f64,
    pub steps_collected: u64,
}

struct ActorSlot {
    env: TaskEnv,
    obs: Option<crate::envs::Observation>,
    robot_idx: usize,
    vh: Vec<f64>,
    embed_row: Option<usize>,
    ep_return: f64,
    ep_len: u32,
}

pub struct PpoTrainer {
    pub cfg: PpoConfig,
    pub mode: EncodingMode,
    pub layout: AugLayout,
    pub task: TaskConfig,
    pub ranges: SamplingRanges,
    pub pool: Vec<RobotSpec>,
    pub embedding: Option<EmbeddingTable>,
    pub policy: Mlp,
    pub log_std: NetParams,
    pub value: Mlp,
    pub obs_norm: RunningNorm,
    slots: Vec<ActorSlot>,
    rng: Rng,
    action_dim: usize,
    pub steps_done: u64,
    pub iterations_done: u64,
}

impl PpoTrainer {
    pub fn new(
        mode: EncodingMode,
        task: TaskConfig,
        pool: Vec<RobotSpec>,
        ranges: SamplingRanges,
        cfg: PpoConfig,
        seed: u64,
    ) -> CoreResult<PpoTrainer> {
        if pool.is_empty() {
            return Err(CoreError::Config("empty robot pool".into()));
        }
        let probe_env = TaskEnv::new(task.clone())?;
        let action_dim = probe_env.action_dim();
        let layout = AugLayout {
            state_dim: probe_env.state_dim(),
            goal_dim: 0,
            vh_dim: mode.vh_dim(pool[0].type_tag, cfg.implicit_dim),
        };

        let mut rng = Rng::derive(seed, &[0x990]);
        let embedding = if mode.is_implicit() {
            let mut table =
                EmbeddingTable::new(cfg.implicit_dim, cfg.embedding_lr.unwrap_or(cfg.lr));
            let mut emb_rng = rng.split(0xe0b);
            table.init_rows(pool.iter().map(|r| r.robot_id.as_str()), &mut emb_rng);
            Some(table)
        } else {
            None
        };

        let total = layout.total();
        let mut pol_sizes = vec![total];
        pol_sizes.extend_from_slice(&cfg.hidden);
        pol_sizes.push(action_dim);
        let mut pol_act = vec![Activation::Selu; cfg.hidden.len()];
        pol_act.push(Activation::Tanh);
        let policy = Mlp::new(MlpSpec::new(pol_sizes, pol_act), rng.next_u64())?;

        let mut val_sizes = vec![total];
        val_sizes.extend_from_slice(&cfg.hidden);
        val_sizes.push(1);
        let mut val_act = vec![Activation::Selu; cfg.hidden.len()];
        val_act.push(Activation::Identity);
        let value = Mlp::new(MlpSpec::new(val_sizes, val_act), rng.next_u64())?;

        let mut log_std = NetParams::zeros(action_dim);
        log_std.values.iter_mut().for_each(|v| *v = cfg.log_std_init);

        let mut slots = Vec::with_capacity(cfg.actors);
        for _ in 0..cfg.actors {
            slots.push(ActorSlot {
                env: TaskEnv::new(task.clone())?,
                obs: None,
                robot_idx: 0,
                vh: Vec::new(),
                embed_row: None,
                ep_return: 0.0,
                ep_len: 0,
            });
        }

        let obs_norm = RunningNorm::new(layout.state_dim);
        Ok(PpoTrainer {
            cfg,
            mode,
            layout,
            task,
            ranges,
            pool,
            embedding,
            policy,
            log_std,
            value,
            obs_norm,
            slots,
            rng,
            action_dim,
            steps_done: 0,
            iterations_done: 0,
        })
    }

    fn forward_simple(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut c = Cache::default();
        net.forward(x, None, &mut c).expect("forward")
    }

    fn log_prob(&self, mean: &[f64], action: &[f64]) -> f64 {
        let mut lp = 0.0;
        for i in 0..self.action_dim {
            let ls = self.log_std.values[i];
            let sigma = fmath::exp(ls);
            let z = (action[i] - mean[i]) / sigma;
            lp += -0.5 * z * z - ls - 0.5 * LN_2PI;
        }
        lp
    }

    /// Collect one iteration of experience (actors × horizon steps) and
    /// assemble advantages with GAE(λ).
    pub fn collect(&mut self) -> CoreResult<(PpoBatch, IterationStats)> {
        let mut batch = PpoBatch::default();
        let mut stats = IterationStats::default();
        let mut returns_sum = 0.0;
        let mut lengths_sum = 0.0;

        // Per-step scratch for GAE bookkeeping.
        struct StepRec {
            reward: f64,
            value: f64,
            terminal: bool,
            done: bool,
            bootstrap: f64,
        }

        for slot_idx in 0..self.slots.len() {
            let mut recs: Vec<StepRec> = Vec::with_capacity(self.cfg.horizon);
            let base = batch.obs.len();
            for _ in 0..self.cfg.horizon {
                // (Re)start an episode if needed.
                if self.slots[slot_idx].obs.is_none() {
                    let robot_idx = self.rng.uniform_usize(self.pool.len());
                    let seed = self.rng.next_u64();
                    let vh = hardware_vector(
                        self.mode,
                        &self.pool[robot_idx],
                        &self.ranges,
                        self.embedding.as_ref(),
                    )?;
                    let embed_row = match &self.embedding {
                        Some(t) => Some(t.row_index(&self.pool[robot_idx].robot_id)?),
                        None => None,
                    };
                    let slot = &mut self.slots[slot_idx];
                    let obs = slot.env.reset(&self.pool[robot_idx], seed)?;
                    slot.obs = Some(obs);
                    slot.robot_idx = robot_idx;
                    slot.vh = vh;
                    slot.embed_row = embed_row;
                    slot.ep_return = 0.0;
                    slot.ep_len = 0;
                }

                let obs_aug = {
                    let slot = &self.slots[slot_idx];
                    self.layout
                        .build(&slot.obs.as_ref().unwrap().state_vec(), &[], &slot.vh)
                };
                self.obs_norm.update(&obs_aug);
                let obs_in = self.obs_norm.normalize(&obs_aug);
                let mean = Self::forward_simple(&self.policy, &obs_in);
                let action: Vec<f64> = (0..self.action_dim)
                    .map(|i| mean[i] + fmath::exp(self.log_std.values[i]) * self.rng.normal())
                    .collect();
                let logp = self.log_prob(&mean, &action);
                let v = Self::forward_simple(&self.value, &obs_in)[0];

                let out = self.slots[slot_idx].env.step(&action)?;
                self.steps_done += 1;
                let slot = &mut self.slots[slot_idx];
                slot.ep_return += out.reward;
                slot.ep_len += 1;

                let mut bootstrap = 0.0;
                if out.done && !out.info.terminal {
                    // Timeout: bootstrap from the reached state.
                    let next_aug = self.layout.build(&out.obs.state_vec(), &[], &slot.vh);
                    bootstrap =
                        Self::forward_simple(&self.value, &self.obs_norm.normalize(&next_aug))[0];
                }

                batch.obs.push(obs_in);
                batch.actions.push(action);
                batch.logp_old.push(logp);
                batch.embed_rows.push(slot.embed_row);
                recs.push(StepRec {
                    reward: out.reward,
                    value: v,
                    terminal: out.info.terminal,
                    done: out.done,
                    bootstrap,
                });

                if out.done {
                    stats.episodes_finished += 1;
                    returns_sum += slot.ep_return;
                    lengths_sum += slot.ep_len as f64;
                    slot.obs = None;
                } else {
                    slot.obs = Some(out.obs);
                }
            }

            // Horizon cut: bootstrap the unfinished episode.
            let tail_bootstrap = match &self.slots[slot_idx].obs {
                Some(obs) => {
                    let aug =
                        self.layout
                            .build(&obs.state_vec(), &[], &self.slots[slot_idx].vh);
                    Self::forward_simple(&self.value, &self.obs_norm.normalize(&aug))[0]
                }
                None => 0.0,
            };

            // GAE sweep over this slot's fragment.
            batch.advantages.resize(batch.obs.len(), 0.0);
            batch.returns.resize(batch.obs.len(), 0.0);
            let mut gae = 0.0;
            let mut next_value = tail_bootstrap;
            for (k, rec) in recs.iter().enumerate().rev() {
                let nv = if rec.terminal {
                    0.0
                } else if rec.done {
                    rec.bootstrap
                } else {
                    next_value
                };
                let delta = rec.reward + self.cfg.gamma * nv - rec.value;
                gae = delta
                    + if rec.done {
                        0.0
                    } else {
                        self.cfg.gamma * self.cfg.gae_lambda * gae
                    };
                batch.advantages[base + k] = gae;
                batch.returns[base + k] = gae + rec.value;
                next_value = rec.value;
            }
        }

        if stats.episodes_finished > 0 {
            stats.mean_return = returns_sum / stats.episodes_finished as f64;
            stats.mean_length = lengths_sum / stats.episodes_finished as f64;
        }
        stats.steps_collected = batch.len() as u64;
        Ok((batch, stats))
    }

    /// Normalize advantages, then run clipped-surrogate optimization for
    /// the configured epochs of shuffled minibatches.
    pub fn update(&mut self, batch: &mut PpoBatch) -> CoreResult<PpoLosses> {
        if batch.is_empty() {
            return Err(CoreError::Config("empty PPO batch".into()));
        }
        let n = batch.len();
        let mean_adv = batch.advantages.iter().sum::<f64>() / n as f64;
        let var = batch
            .advantages
            .iter()
            .map(|a| (a - mean_adv) * (a - mean_adv))
            .sum::<f64>()
            / n as f64;
        let std = fmath::sqrt(var).max(1e-8);
        for a in &mut batch.advantages {
            *a = (*a - mean_adv) / std;
        }

        let mut last = PpoLosses {
            surrogate: 0.0,
            value_loss: 0.0,
            entropy: 0.0,
        };
        let mut cache_p = Cache::default();
        let mut cache_v = Cache::default();
        let policy_cfg = AdamConfig::new(self.cfg.lr);
        let value_cfg = AdamConfig::new(self.cfg.lr);

        for _epoch in 0..self.cfg.epochs {
            let order = self.rng.sample_distinct(n, n);
            for chunk in order.chunks(self.cfg.minibatch) {
                let inv = 1.0 / chunk.len() as f64;
                let mut embed_grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
                let vh_range = self.layout.vh_range();
                let mut surr_sum = 0.0;
                let mut vloss_sum = 0.0;

                for &i in chunk {
                    let obs = &batch.obs[i];
                    let act = &batch.actions[i];
                    let adv = batch.advantages[i];
                    let ret = batch.returns[i];

                    let mean = self.policy.forward(obs, None, &mut cache_p)?;
                    let logp = self.log_prob(&mean, act);
                    let ratio = fmath::exp(logp - batch.logp_old[i]);
                    let clipped = ratio.clamp(1.0 - self.cfg.clip_ratio, 1.0 + self.cfg.clip_ratio);
                    surr_sum += (ratio * adv).min(clipped * adv);

                    // Gradient of the clipped surrogate w.r.t. logp_new:
                    // zero where the clip is active and binding.
                    let active = if adv >= 0.0 {
                        ratio <= 1.0 + self.cfg.clip_ratio
                    } else {
                        ratio >= 1.0 - self.cfg.clip_ratio
                    };
                    let dlogp = if active { -adv * ratio * inv } else { 0.0 };

                    let mut dmean = vec![0.0; self.action_dim];
                    for k in 0..self.action_dim {
                        let ls = self.log_std.values[k];
                        let sigma = fmath::exp(ls);
                        let z = (act[k] - mean[k]) / sigma;
                        dmean[k] = dlogp * (z / sigma);
                        // d logp / d log_std = z^2 - 1; entropy adds +1.
                        self.log_std.grads[k] +=
                            dlogp * (z * z - 1.0) - self.cfg.entropy_coef * inv;
                    }
                    let (pol_in_grad, _) = self.policy.backward(&cache_p, &dmean)?;

                    let v = self.value.forward(obs, None, &mut cache_v)?[0];
                    let verr = v - ret;
                    vloss_sum += verr * verr;
                    let (val_in_grad, _) = self
                        .value
                        .backward(&cache_v, &[2.0 * self.cfg.value_coef * verr * inv])?;

                    if let Some(row) = batch.embed_rows[i] {
                        let acc = embed_grads
                            .entry(row)
                            .or_insert_with(|| vec![0.0; self.layout.vh_dim]);
                        for ((a, g1), g2) in acc
                            .iter_mut()
                            .zip(&pol_in_grad[vh_range.clone()])
                            .zip(&val_in_grad[vh_range.clone()])
                        {
                            *a += *g1 + *g2;
                        }
                    }
                }

                let surrogate = surr_sum * inv;
                let value_loss = vloss_sum * inv;
                let entropy: f64 = self
                    .log_std
                    .values
                    .iter()
                    .map(|ls| ls + 0.5 * (LN_2PI + 1.0))
                    .sum();
                if !surrogate.is_finite() || !value_loss.is_finite() {
                    return Err(CoreError::Validation(alloc::format!(
                        "non-finite PPO loss (surrogate {surrogate}, value {value_loss})"
                    )));
                }
                adam_step(&mut self.policy.params, &policy_cfg);
                adam_step(&mut self.log_std, &policy_cfg);
                adam_step(&mut self.value.params, &value_cfg);
                if let Some(table) = &mut self.embedding {
                    table.apply_gradients(&embed_grads)?;
                }
                last = PpoLosses {
                    surrogate,
                    value_loss,
                    entropy,
                };
            }
        }
        self.iterations_done += 1;
        Ok(last)
    }

    /// One full training iteration: collect then optimize.
    pub fn train_iteration(&mut self) -> CoreResult<(IterationStats, PpoLosses)> {
        let (mut batch, stats) = self.collect()?;
        let losses = self.update(&mut batch)?;
        Ok((stats, losses))
    }

    pub fn rng_state(&self) -> u64 {
        self.rng.state()
    }

    pub fn restore_rng(&mut self, state: u64) {
        self.rng = Rng::restore(state);
    }

    /// Deterministic (mean-action) evaluation: one episode per robot,
    /// returning per-robot returns and forward progress.
    pub fn evaluate(
        &mut self,
        robots: &[RobotSpec],
        eval_seed: u64,
    ) -> CoreResult<PpoEvalStats> {
        let mut env = TaskEnv::new(self.task.clone())?;
        let mut returns = Vec::with_capacity(robots.len());
        let mut progress = Vec::with_capacity(robots.len());
        let mut lengths = Vec::with_capacity(robots.len());
        for (ri, robot) in robots.iter().enumerate() {
            let vh = hardware_vector(self.mode, robot, &self.ranges, self.embedding.as_ref())?;
            let seed = Rng::derive(eval_seed, &[0xe7a1, ri as u64]).state();
            let mut obs = env.reset(robot, seed)?;
            let mut ret = 0.0;
            let (dist, len) = loop {
                let obs_aug = self.layout.build(&obs.state_vec(), &[], &vh);
                let action =
                    Self::forward_simple(&self.policy, &self.obs_norm.normalize(&obs_aug));
                let out = env.step(&action)?;
                ret += out.reward;
                if out.done {
                    break (out.info.distance, out.info.steps);
                }
                obs = out.obs;
            };
            returns.push(ret);
            progress.push(dist);
            lengths.push(len);
        }
        let mean_return = returns.iter().sum::<f64>() / returns.len().max(1) as f64;
        Ok(PpoEvalStats {
            mean_return,
            returns,
            forward_progress: progress,
            episode_lengths: lengths,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoEvalStats {
    pub mean_return: f64,
    pub returns: Vec<f64>,
    pub forward_progress: Vec<f64>,
    pub episode_lengths: Vec<u32>,
}

impl core::fmt::Debug for PpoTrainer {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PpoTrainer")
            .field("mode", &self.mode)
            .field("steps_done", &self.steps_done)
            .field("iterations_done", &self.iterations_done)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{build_pool, TypeTag};

    fn hopper_trainer(mode: EncodingMode, seed: u64) -> PpoTrainer {
        let ranges = SamplingRanges::hopper();
        let pool = build_pool(&[TypeTag::Hopper], 4, &ranges, 2).unwrap();
        let cfg = PpoConfig {
            hidden: vec![32, 32],
            actors: 2,
            horizon: 64,
            minibatch: 32,
            epochs: 2,
            ..PpoConfig::default()
        };
        PpoTrainer::new(mode, TaskConfig::hopper(), pool, ranges, cfg, seed).unwrap()
    }

    #[test]
    fn dims_by_mode() {
        assert_eq!(hopper_trainer(EncodingMode::Baseline, 0).layout.total(), 11);
        assert_eq!(
            hopper_trainer(EncodingMode::Implicit, 0).layout.total(),
            11 + 32
        );
        // Explicit hopper: 4 blocks of 6 = 24.
        assert_eq!(
            hopper_trainer(EncodingMode::Explicit, 0).layout.total(),
            11 + 24
        );
        // Explicit+dynamics: + 3*3 joint params + 4 masses.
        assert_eq!(
            hopper_trainer(EncodingMode::ExplicitDyn, 0).layout.total(),
            11 + 24 + 13
        );
    }

    #[test]
    fn collect_produces_full_batch_with_advantages() {
        let mut t = hopper_trainer(EncodingMode::Baseline, 1);
        let (batch, stats) = t.collect().unwrap();
        assert_eq!(batch.len(), 2 * 64);
        assert_eq!(batch.advantages.len(), batch.len());
        assert_eq!(batch.returns.len(), batch.len());
        assert!(stats.steps_collected == 128);
        assert!(batch.advantages.iter().all(|a| a.is_finite()));
    }

    #[test]
    fn identical_policies_give_unit_ratio_and_mean_advantage() {
        // With logp_new == logp_old the clipped surrogate equals the
        // mean advantage; after normalization that is ~0.
        let mut t = hopper_trainer(EncodingMode::Baseline, 2);
        let (mut batch, _) = t.collect().unwrap();
        // One epoch, single full-size minibatch, zero learning rate:
        // ratios stay exactly 1 and the surrogate is the batch mean.
        t.cfg.epochs = 1;
        t.cfg.lr = 0.0;
        t.cfg.minibatch = batch.len();
        let losses = t.update(&mut batch).unwrap();
        assert!(
            losses.surrogate.abs() < 1e-9,
            "surrogate {} should be ~0 (normalized advantages, ratio=1)",
            losses.surrogate
        );
    }

    #[test]
    fn gae_reductions_match_hand_computation() {
        // Hand-built 3-step fragment, gamma=0.5, lambda=0.5:
        // rewards [1, 2, 3], values [0.5, 1.0, 1.5], terminal at step 3.
        let gamma: f64 = 0.5;
        let lambda: f64 = 0.5;
        let rewards = [1.0, 2.0, 3.0];
        let values = [0.5, 1.0, 1.5];
        // deltas: d2 = 3 + 0 - 1.5 = 1.5
        //         d1 = 2 + 0.5*1.5 - 1.0 = 1.75
        //         d0 = 1 + 0.5*1.0 - 0.5 = 1.0
        // gae2 = 1.5; gae1 = 1.75 + 0.25*1.5 = 2.125; gae0 = 1 + 0.25*2.125 = 1.53125
        let mut gae = 0.0;
        let mut next_value = 0.0;
        let mut adv = [0.0; 3];
        for k in (0..3).rev() {
            let terminal = k == 2;
            let nv = if terminal { 0.0 } else { next_value };
            let delta = rewards[k] + gamma * nv - values[k];
            gae = delta + if terminal { 0.0 } else { gamma * lambda * gae };
            adv[k] = gae;
            next_value = values[k];
        }
        assert!((adv[2] - 1.5).abs() < 1e-12);
        assert!((adv[1] - 2.125).abs() < 1e-12);
        assert!((adv[0] - 1.53125).abs() < 1e-12);
    }

    #[test]
    fn gae_lambda_zero_gamma_one_is_one_step_td() {
        // delta only: A = r + V(s') - V(s).
        let gamma: f64 = 1.0;
        let lambda: f64 = 0.0;
        let rewards = [1.0, -2.0];
        let values = [3.0, 5.0];
        let tail = 7.0; // bootstrap
        let mut gae;
        let mut adv = [0.0; 2];
        let mut next_value = tail;
        let mut carry = 0.0;
        for k in (0..2).rev() {
            let delta = rewards[k] + gamma * next_value - values[k];
            gae = delta + gamma * lambda * carry;
            carry = gae;
            adv[k] = gae;
            next_value = values[k];
        }
        assert!((adv[1] - (-2.0 + 7.0 - 5.0)).abs() < 1e-12);
        assert!((adv[0] - (1.0 + 5.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn training_iteration_runs_and_is_deterministic() {
        let run = |seed| {
            let mut t = hopper_trainer(EncodingMode::Implicit, seed);
            let (stats, losses) = t.train_iteration().unwrap();
            (
                stats.steps_collected,
                losses.value_loss,
                t.policy.params.values[0],
            )
        };
        let a = run(5);
        let b = run(5);
        assert_eq!(a, b);
        assert!(a.1.is_finite());
    }

    #[test]
    fn log_prob_matches_gaussian_density() {
        let t = hopper_trainer(EncodingMode::Baseline, 3);
        // sigma = 0.5 everywhere; check against the explicit formula.
        let mean = [0.1, -0.2, 0.3];
        let act = [0.2, 0.0, -0.1];
        let lp = t.log_prob(&mean, &act);
        let mut want = 0.0;
        for i in 0..3 {
            let sigma = 0.5f64;
            let z = (act[i] - mean[i]) / sigma;
            want += -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * core::f64::consts::PI).ln();
        }
        assert!((lp - want).abs() < 1e-12);
    }

    #[test]
    fn evaluation_reports_per_robot_returns() {
        let mut t = hopper_trainer(EncodingMode::Baseline, 4);
        let robots = t.pool.clone();
        let e = t.evaluate(&robots, 9).unwrap();
        assert_eq!(e.returns.len(), robots.len());
        let e2 = t.evaluate(&robots, 9).unwrap();
        assert_eq!(e.returns, e2.returns);
    }
}
