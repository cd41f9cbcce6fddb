use hcp_core::envs::{TaskConfig, TaskKind};
use hcp_core::rl::{DdpgConfig, DdpgTrainer, EncodingMode};
use hcp_core::robot::{build_pool, SamplingRanges, TypeTag};

#[test]
#[ignore]
fn ddpg_easy_probe() {
    let mut ranges = SamplingRanges::degenerate();
    ranges.damping = [1.0, 1.0];
    ranges.friction = [0.2, 0.2];
    ranges.armature = [0.5, 0.5];
    let pool = build_pool(&[TypeTag::F], 1, &ranges, 1).unwrap();
    let cfg = DdpgConfig {
        hidden: vec![64, 64],
        batch_size: 256,
        warmup_episodes: 20,
        train_iters_per_episode: 40,
        buffer_capacity: 200_000,
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        tau: 0.05,
        exploration_sigma: 0.2,
        random_action_prob: 0.3,
        random_episode_prob: 0.1,
        ..DdpgConfig::default()
    };
    let mut task = TaskConfig::manipulator(TaskKind::Reacher);
    task.max_steps = 100;
    task.epsilon = 0.10;
    let mut t = DdpgTrainer::new(EncodingMode::Explicit, task, pool.clone(), ranges, cfg, 7).unwrap();
    let t0 = std::time::Instant::now();
    for ep in 0..500 {
        t.run_training_episode().unwrap();
        if (ep + 1) % 50 == 0 {
            let robots: Vec<_> = (0..20).map(|_| pool[0].clone()).collect();
            let e = t.evaluate(&robots, 1000 + ep).unwrap();
            println!("ep {:4}  success {:5.2}  mean_dist {:.3}  elapsed {:.0}s", ep + 1,
                e.success_rate, e.final_distances.iter().sum::<f64>() / 20.0, t0.elapsed().as_secs_f64());
        }
    }
}
