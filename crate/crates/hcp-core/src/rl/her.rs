//! Hindsight goal relabeling with the "future" strategy.

use alloc::vec::Vec;

use super::{AugLayout, Transition};
use crate::error::{CoreError, CoreResult};
use crate::rng::Rng;

/// Relabel an episode with future achieved goals.
///
/// For the transition at step t, up to `k` future steps t' > t are drawn
/// uniformly without replacement; each yields a copy with the goal slice
/// rewritten to the achieved goal of t' and the reward (and terminal
/// flag) recomputed by `reward_fn(achieved_t, new_goal, action_t)`.
/// Originals are not included in the returned list; the caller stores
/// both. A one-step episode yields no relabels.
pub fn her_relabel<F>(
    episode: &[Transition],
    k: usize,
    layout: &AugLayout,
    rng: &mut Rng,
    mut reward_fn: F,
) -> CoreResult<Vec<Transition>>
where
    F: FnMut(&[f64; 3], &[f64; 3], &[f64]) -> (f64, bool),
{
    if episode.is_empty() {
        return Ok(Vec::new());
    }
    if episode.iter().any(|t| t.achieved_goal.is_none()) {
        return Err(CoreError::Config(
            "hindsight relabeling needs achieved goals on every transition".into(),
        ));
    }
    let goal_range = layout.goal_range();
    let mut out = Vec::new();
    let len = episode.len();
    for (t, tr) in episode.iter().enumerate() {
        let future = len - 1 - t;
        let picks = k.min(future);
        if picks == 0 {
            continue;
        }
        let chosen = rng.sample_distinct(future, picks);
        let achieved_t = tr.achieved_goal.unwrap();
        for offset in chosen {
            let t_future = t + 1 + offset;
            let new_goal = episode[t_future].achieved_goal.unwrap();
            let (reward, success) = reward_fn(&achieved_t, &new_goal, &tr.action);
            let mut relabeled = tr.clone();
            relabeled.obs_aug[goal_range.clone()].copy_from_slice(&new_goal);
            relabeled.next_obs_aug[goal_range.clone()].copy_from_slice(&new_goal);
            relabeled.reward = reward;
            relabeled.done = success;
            out.push(relabeled);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn layout() -> AugLayout {
        AugLayout {
            state_dim: 2,
            goal_dim: 3,
            vh_dim: 1,
        }
    }

    fn episode(n: usize) -> Vec<Transition> {
        (0..n)
            .map(|t| {
                let achieved = [t as f64, 0.0, 0.0];
                Transition {
                    obs_aug: alloc::vec![0.1, 0.2, 9.0, 9.0, 9.0, 0.5],
                    action: alloc::vec![0.3, -0.4],
                    reward: -1.0,
                    next_obs_aug: alloc::vec![0.2, 0.3, 9.0, 9.0, 9.0, 0.5],
                    done: false,
                    achieved_goal: Some(achieved),
                    episode_id: 1,
                    step_index: t as u32,
                    robot_id: String::from("r"),
                    embed_row: None,
                }
            })
            .collect()
    }

    fn reward_fn(achieved: &[f64; 3], goal: &[f64; 3], action: &[f64]) -> (f64, bool) {
        let d2: f64 = achieved
            .iter()
            .zip(goal)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let d = d2.sqrt();
        let pen: f64 = 0.1 * action.iter().map(|a| a * a).sum::<f64>();
        if d < 0.02 {
            (1.0 - pen, true)
        } else {
            (-1.0 - pen, false)
        }
    }

    #[test]
    fn combinatorial_count() {
        let mut rng = Rng::new(1);
        for (len, k) in [(200usize, 4usize), (10, 4), (5, 2), (1, 4)] {
            let ep = episode(len);
            let out = her_relabel(&ep, k, &layout(), &mut rng, reward_fn).unwrap();
            let expected: usize = (0..len).map(|t| k.min(len - 1 - t)).sum();
            assert_eq!(out.len(), expected, "len={len} k={k}");
        }
    }

    #[test]
    fn single_step_episode_yields_nothing() {
        let mut rng = Rng::new(2);
        let out = her_relabel(&episode(1), 4, &layout(), &mut rng, reward_fn).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn goals_are_future_achieved_goals_and_rewards_recompute() {
        let mut rng = Rng::new(3);
        let ep = episode(20);
        let out = her_relabel(&ep, 4, &layout(), &mut rng, reward_fn).unwrap();
        for r in &out {
            let goal = [r.obs_aug[2], r.obs_aug[3], r.obs_aug[4]];
            // Goal must be an achieved goal from a strictly later step.
            assert!(goal[0] > r.step_index as f64);
            // Goal slice written identically into both observations.
            assert_eq!(&r.next_obs_aug[2..5], &goal);
            // Stored reward matches an independent recomputation.
            let (want, success) = reward_fn(&r.achieved_goal.unwrap(), &goal, &r.action);
            assert_eq!(r.reward, want);
            assert_eq!(r.done, success);
            // Non-goal slices untouched.
            assert_eq!(r.obs_aug[0], 0.1);
            assert_eq!(r.obs_aug[5], 0.5);
        }
    }

    #[test]
    fn futures_are_distinct_per_transition() {
        let mut rng = Rng::new(4);
        let ep = episode(30);
        let out = her_relabel(&ep, 4, &layout(), &mut rng, reward_fn).unwrap();
        use alloc::collections::BTreeSet;
        let mut seen: alloc::collections::BTreeMap<u32, BTreeSet<u64>> = Default::default();
        for r in &out {
            let goal_step = r.obs_aug[2] as u64;
            assert!(
                seen.entry(r.step_index).or_default().insert(goal_step),
                "duplicate future pick for step {}",
                r.step_index
            );
        }
    }

    #[test]
    fn self_goal_relabel_is_successful() {
        // Last transition relabeled with its own achieved goal: distance
        // zero, reward = 1 - beta|a|^2. Build a 2-step episode where both
        // steps achieved the same point so the future goal equals it.
        let mut ep = episode(2);
        ep[0].achieved_goal = Some([5.0, 0.0, 0.0]);
        ep[1].achieved_goal = Some([5.0, 0.0, 0.0]);
        let mut rng = Rng::new(5);
        let out = her_relabel(&ep, 4, &layout(), &mut rng, reward_fn).unwrap();
        assert_eq!(out.len(), 1);
        let pen = 0.1 * (0.3f64 * 0.3 + 0.4 * 0.4);
        assert!((out[0].reward - (1.0 - pen)).abs() < 1e-12);
        assert!(out[0].done);
    }

    #[test]
    fn missing_achieved_goal_is_config_error() {
        let mut ep = episode(3);
        ep[1].achieved_goal = None;
        let mut rng = Rng::new(6);
        assert!(matches!(
            her_relabel(&ep, 4, &layout(), &mut rng, reward_fn),
            Err(CoreError::Config(_))
        ));
    }
}
