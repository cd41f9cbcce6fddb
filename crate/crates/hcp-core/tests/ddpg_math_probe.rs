use hcp_core::envs::{TaskConfig, TaskKind};
use hcp_core::rl::{DdpgConfig, DdpgTrainer, EncodingMode, Transition};
use hcp_core::robot::{build_pool, SamplingRanges, TypeTag};
use hcp_core::rng::Rng;

// Synthetic 1-D MDP dressed in reacher clothes: s=[x,0..], x' = x+0.1*a0,
// r = -|x'|. Optimal policy: a0 = -sign(x) (full push toward 0).
#[test]
#[ignore]
fn ddpg_update_math() {
    let ranges = SamplingRanges::manipulator();
    let pool = build_pool(&[TypeTag::F], 1, &ranges, 1).unwrap();
    let cfg = DdpgConfig {
        hidden: vec![32, 32],
        batch_size: 64,
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        tau: 0.05,
        clip_targets: false,
        ..DdpgConfig::default()
    };
    let task = TaskConfig::manipulator(TaskKind::Reacher);
    let mut t = DdpgTrainer::new(EncodingMode::Baseline, task, pool, ranges, cfg, 3).unwrap();

    let mut rng = Rng::new(1);
    let dim = t.layout.total();
    assert_eq!(dim, 17);
    let mk_obs = |x: f64| {
        let mut v = vec![0.0; 17];
        v[0] = x;
        v
    };
    for ep in 0..2000u64 {
        let x = rng.uniform(-1.0, 1.0);
        let a: Vec<f64> = (0..7).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let x2 = (x + 0.1 * a[0]).clamp(-1.5, 1.5);
        t.buffer.push(Transition {
            obs_aug: mk_obs(x),
            action: a,
            reward: -x2.abs(),
            next_obs_aug: mk_obs(x2),
            done: false,
            achieved_goal: Some([0.0; 3]),
            episode_id: ep,
            step_index: 0,
            robot_id: "r".into(),
            embed_row: None,
        });
        // keep normalizer stats realistic
        t.obs_norm.update(&mk_obs(x));
    }
    for _ in 0..3000 {
        t.update().unwrap().unwrap();
    }
    // Probe the actor.
    let probe = |t: &DdpgTrainer, x: f64| {
        use hcp_core::nn::Cache;
        let mut c = Cache::default();
        let obs = t.obs_norm.normalize(&mk_obs(x));
        t.actor.forward(&obs, None, &mut c).unwrap()[0]
    };
    let a_pos = probe(&t, 0.8);
    let a_neg = probe(&t, -0.8);
    println!("actor(x=+0.8).a0 = {a_pos:.3} (want ~ -1). actor(x=-0.8).a0 = {a_neg:.3} (want ~ +1)");
    assert!(a_pos < -0.8, "actor should push hard negative, got {a_pos}");
    assert!(a_neg > 0.8, "actor should push hard positive, got {a_neg}");
}
