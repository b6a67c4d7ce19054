use rand::SeedableRng;

use super::*;
use crate::envs::{GridAction, GridState, GridStitch, PointReach};

fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

fn point_spec() -> EnvSpec {
    PointReach::new().spec().clone()
}

fn grid_spec() -> EnvSpec {
    GridStitch::new().spec().clone()
}

fn agent(algo: Algo, hidden: Vec<usize>, spec: &EnvSpec, seed: u64) -> Agent {
    let cfg = AgentConfig {
        hidden,
        ..AgentConfig::with_algo(algo)
    };
    Agent::new(cfg, spec, RewardMode::SparseNeg, &mut rng(seed)).unwrap()
}

/// Zero every parameter except the scalar output bias.
fn make_constant(net: &mut DenseNet, c: f64) {
    let p = net.params_mut();
    p.iter_mut().for_each(|v| *v = 0.0);
    *p.last_mut().unwrap() = c;
}

fn sample(
    state: [f64; 2],
    action: [f64; 2],
    next: [f64; 2],
    goal: [f64; 2],
    reward: f64,
    offset: usize,
) -> RelabeledSample {
    RelabeledSample {
        state: state.to_vec(),
        action: action.to_vec(),
        next_state: next.to_vec(),
        goal: goal.to_vec(),
        reward,
        offset,
        relabeled: offset > 0,
    }
}

fn random_batch(n: usize, seed: u64) -> Batch {
    let mut r = rng(seed);
    let samples: Vec<_> = (0..n)
        .map(|_| {
            let mut v = || r.random_range(-1.0..1.0);
            
            sample([v(), v()], [v(), v()], [v(), v()], [v(), v()], -1.0, 0)
        })
        .collect();
    let mut b = Batch::from_samples(&samples).unwrap();
    b.rewards = (0..n).map(|i| if i % 3 == 0 { 0.0 } else { -1.0 }).collect();
    b.offsets = (0..n).map(|i| i % 4).collect();
    b
}

#[test]
fn q_target_examples() {
    let spec = point_spec();
    let mut a = agent(Algo::Qwsl, vec![2], &spec, 1);
    let mut batch = Batch::from_samples(&[sample([0.0; 2], [0.0; 2], [0.1, 0.1], [0.5; 2], -1.0, 0)]).unwrap();
    make_constant(&mut a.critic_target, -10.0);
    assert!((a.compute_q_target(&batch).unwrap()[0] - -10.8).abs() < 1e-12);
    make_constant(&mut a.critic_target, -60.0);
    assert!((a.compute_q_target(&batch).unwrap()[0] - -50.0).abs() < 1e-12);
    make_constant(&mut a.critic_target, 0.0);
    batch.rewards[0] = 0.0;
    assert_eq!(a.compute_q_target(&batch).unwrap()[0], 0.0);
    let stats = a.target_stats();
    assert_eq!((stats.count, stats.clipped, stats.violations), (3, 1, 0));
    assert!((stats.raw_min - -59.8).abs() < 1e-12);
}

#[test]
fn indicator_targets_clip_to_positive_range() {
    let spec = point_spec();
    let cfg = AgentConfig {
        hidden: vec![2],
        ..AgentConfig::default()
    };
    let mut a = Agent::new(cfg, &spec, RewardMode::Indicator, &mut rng(2)).unwrap();
    assert_eq!(a.q_target_bounds(), (0.0, 1.0 / (1.0 - 0.98)));
    make_constant(&mut a.critic_target, 80.0);
    let batch = Batch::from_samples(&[sample([0.0; 2], [0.0; 2], [0.0; 2], [0.0; 2], 1.0, 0)]).unwrap();
    assert!((a.compute_q_target(&batch).unwrap()[0] - 50.0).abs() < 1e-9);
}

#[test]
fn critic_loss_zero_when_fit() {
    let spec = point_spec();
    let mut a = agent(Algo::Qwsl, vec![3], &spec, 3);
    make_constant(&mut a.critic, 0.0);
    make_constant(&mut a.critic_target, 0.0);
    let mut batch = random_batch(4, 9);
    batch.rewards = vec![0.0; 4];
    let (loss, grad) = a.critic_gradient(&batch, &[0.0; 4]).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grad.iter().all(|g| *g == 0.0));
    let before = a.critic.params().to_vec();
    assert_eq!(a.critic_update(&batch).unwrap(), 0.0);
    assert_eq!(a.critic.params(), &before[..]);
}

#[test]
fn critic_loss_is_mean_squared_residual() {
    let spec = point_spec();
    let mut a = agent(Algo::Ddpg, vec![2], &spec, 4);
    make_constant(&mut a.critic, -3.0);
    make_constant(&mut a.critic_target, -10.0);
    let batch = Batch::from_samples(&[
        sample([0.1, 0.2], [0.5, 0.5], [0.15, 0.25], [0.9, 0.9], -1.0, 0),
        sample([0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], 0.0, 0),
    ])
    .unwrap();
    // targets -10.8 and -9.8; residuals 7.8 and 6.8
    let expected = (7.8f64.powi(2) + 6.8f64.powi(2)) / 2.0;
    let loss = a.critic_update(&batch).unwrap();
    assert!((loss - expected).abs() < 1e-9, "{loss} vs {expected}");
    assert!(loss >= 0.0);
}

#[test]
fn advantage_arithmetic() {
    let spec = point_spec();
    let mut a = agent(Algo::Qwsl, vec![3], &spec, 5);
    let c = -7.0;
    make_constant(&mut a.critic, c);
    let batch = random_batch(6, 11);
    let adv = a.compute_advantage(&batch).unwrap();
    for (ai, r) in adv.iter().zip(&batch.rewards) {
        assert!((ai - (r + 0.98 * c - c)).abs() < 1e-12);
    }
}

#[test]
fn advantage_matches_rowwise_reevaluation() {
    let spec = point_spec();
    let a = agent(Algo::Qwsl, vec![5, 4], &spec, 6);
    let ck = a.checkpoint();
    let actor = ck.actor.to_net().unwrap();
    let critic = ck.critic.to_net().unwrap();
    let batch = random_batch(5, 12);
    let adv = a.compute_advantage(&batch).unwrap();
    let v = |s: &[f64], g: &[f64]| {
        let pi = actor.forward(&[s, g].concat()).unwrap();
        critic.forward(&[s, g, &pi].concat()).unwrap()[0]
    };
    for i in 0..batch.rows {
        let s = &batch.states[2 * i..2 * i + 2];
        let s2 = &batch.next_states[2 * i..2 * i + 2];
        let g = &batch.goals[2 * i..2 * i + 2];
        let expected = batch.rewards[i] + 0.98 * v(s2, g) - v(s, g);
        assert!((adv[i] - expected).abs() < 1e-12);
    }
}

/// Two-sample batch through hand-specified one-unit networks.
#[test]
fn actor_losses_match_hand_arithmetic() {
    let spec = point_spec();
    let batch = Batch::from_samples(&[
        sample([0.4, 0.0], [0.2, -0.1], [0.5, 0.0], [0.3, 0.3], -1.0, 0),
        sample([-0.3, 0.6], [-0.5, 0.5], [-0.3, 0.7], [0.1, -0.2], -1.0, 2),
    ])
    .unwrap();
    let weights = [1.0, 0.5];
    let actor_params = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.5, -0.5, 0.1, 0.0];
    let critic_params = vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, -2.0, 0.0];

    let pi = |s: [f64; 2]| {
        let h = s[0].max(0.0);
        [(0.5 * h + 0.1).tanh(), (-0.5 * h).tanh()]
    };
    let q = |a: [f64; 2]| -2.0 * (1.0 + a[0]).max(0.0);
    let rows = [([0.4, 0.0], [0.2, -0.1]), ([-0.3, 0.6], [-0.5, 0.5])];
    let mut neg_q = 0.0;
    let mut l2 = 0.0;
    let mut bc = 0.0;
    let mut wbc = 0.0;
    for (i, (s, a)) in rows.iter().enumerate() {
        let p = pi(*s);
        neg_q -= q(p) / 2.0;
        l2 += (p[0] * p[0] + p[1] * p[1]) / 2.0;
        let d = (p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2);
        bc += d / 2.0;
        wbc += weights[i] * d / 2.0;
    }
    let eta = 0.1;
    let expected = [
        (Algo::Ddpg, neg_q + l2),
        (Algo::DdpgHer, neg_q + l2),
        (Algo::Gcsl, bc),
        (Algo::Wgcsl, wbc),
        (Algo::Qwsl, neg_q + eta * wbc + l2),
    ];
    for (algo, want) in expected {
        let mut a = agent(algo, vec![1], &spec, 7);
        a.actor.params_mut().copy_from_slice(&actor_params);
        a.critic.params_mut().copy_from_slice(&critic_params);
        let (loss, _) = a.actor_gradient(&batch, Some(&weights)).unwrap();
        assert!((loss - want).abs() < 1e-12, "{algo:?}: {loss} vs {want}");
        assert_eq!(a.actor_update(&batch, Some(&weights)).unwrap(), loss);
    }
}

fn finite_difference_check(algo: Algo, seed: u64) {
    let spec = point_spec();
    let mut a = agent(algo, vec![6, 5], &spec, seed);
    let batch = random_batch(7, seed + 100);
    let weights: Vec<f64> = (0..7).map(|i| 0.3 + 0.2 * i as f64).collect();
    let (_, grad) = a.actor_gradient(&batch, Some(&weights)).unwrap();
    let h = 1e-6;
    for j in 0..grad.len() {
        let base = a.actor.params()[j];
        a.actor.params_mut()[j] = base + h;
        let (up, _) = a.actor_gradient(&batch, Some(&weights)).unwrap();
        a.actor.params_mut()[j] = base - h;
        let (down, _) = a.actor_gradient(&batch, Some(&weights)).unwrap();
        a.actor.params_mut()[j] = base;
        let fd = (up - down) / (2.0 * h);
        assert!(
            (fd - grad[j]).abs() <= 1e-6 * (1.0 + fd.abs()),
            "{algo:?} param {j}: {fd} vs {}",
            grad[j]
        );
    }
}

#[test]
fn actor_gradients_match_finite_differences() {
    for (i, algo) in Algo::ALL.iter().enumerate() {
        finite_difference_check(*algo, 20 + i as u64);
    }
}

#[test]
fn critic_gradient_matches_finite_differences() {
    let spec = point_spec();
    let mut a = agent(Algo::Qwsl, vec![6, 5], &spec, 31);
    let batch = random_batch(6, 32);
    let targets = [-1.0, -3.0, 0.0, -10.0, -2.5, -0.5];
    let (_, grad) = a.critic_gradient(&batch, &targets).unwrap();
    let h = 1e-6;
    for j in 0..grad.len() {
        let base = a.critic.params()[j];
        a.critic.params_mut()[j] = base + h;
        let up = a.critic_gradient(&batch, &targets).unwrap().0;
        a.critic.params_mut()[j] = base - h;
        let down = a.critic_gradient(&batch, &targets).unwrap().0;
        a.critic.params_mut()[j] = base;
        let fd = (up - down) / (2.0 * h);
        assert!((fd - grad[j]).abs() <= 1e-6 * (1.0 + fd.abs()));
    }
}

#[test]
fn vanishing_eta_recovers_ddpg_her_loss() {
    let spec = point_spec();
    let batch = random_batch(8, 40);
    let weights = vec![2.0; 8];
    let her = agent(Algo::DdpgHer, vec![4], &spec, 41);
    let mut q = agent(Algo::Qwsl, vec![4], &spec, 41);
    q.config_mut().eta = 1e-12;
    let (l_her, g_her) = her.actor_gradient(&batch, Some(&weights)).unwrap();
    let (l_q, g_q) = q.actor_gradient(&batch, Some(&weights)).unwrap();
    assert!((l_her - l_q).abs() < 1e-9);
    for (x, y) in g_her.iter().zip(&g_q) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn frozen_zero_critic_leaves_gcsl_plus_l2_gradient() {
    let spec = point_spec();
    let batch = random_batch(8, 50);
    let ones = vec![1.0; 8];
    let mut q = agent(Algo::Qwsl, vec![4], &spec, 51);
    q.config_mut().eta = 1.0;
    make_constant(&mut q.critic, 0.0);
    let gcsl = agent(Algo::Gcsl, vec![4], &spec, 51);
    let mut l2_only = agent(Algo::Ddpg, vec![4], &spec, 51);
    make_constant(&mut l2_only.critic, 0.0);
    let (_, g_q) = q.actor_gradient(&batch, Some(&ones)).unwrap();
    let (_, g_bc) = gcsl.actor_gradient(&batch, None).unwrap();
    let (_, g_l2) = l2_only.actor_gradient(&batch, None).unwrap();
    for i in 0..g_q.len() {
        assert!((g_q[i] - g_bc[i] - g_l2[i]).abs() < 1e-12);
    }
}

#[test]
fn updates_touch_only_their_network() {
    let spec = point_spec();
    let mut a = agent(Algo::Qwsl, vec![4], &spec, 60);
    let batch = random_batch(8, 61);
    let snapshot = a.clone();
    a.critic_update(&batch).unwrap();
    assert_ne!(a.critic.params(), snapshot.critic.params());
    assert_eq!(a.actor.params(), snapshot.actor.params());
    assert_eq!(a.actor_target.params(), snapshot.actor_target.params());
    assert_eq!(a.critic_target.params(), snapshot.critic_target.params());
    let after_critic = a.clone();
    a.actor_update(&batch, None).unwrap();
    assert_ne!(a.actor.params(), after_critic.actor.params());
    assert_eq!(a.critic.params(), after_critic.critic.params());
    assert_eq!(a.actor_target.params(), snapshot.actor_target.params());
    assert_eq!(a.critic_target.params(), snapshot.critic_target.params());
}

#[test]
fn gcsl_never_updates_critic() {
    let spec = point_spec();
    let mut a = agent(Algo::Gcsl, vec![4], &spec, 62);
    let before = a.critic.params().to_vec();
    let stats = a.update(&random_batch(8, 63)).unwrap();
    assert_eq!(stats.critic_loss, None);
    assert_eq!(a.critic.params(), &before[..]);
}

#[test]
fn polyak_examples() {
    let spec = point_spec();
    let mut a = agent(Algo::Qwsl, vec![2], &spec, 70);
    a.actor.params_mut().iter_mut().for_each(|v| *v = 1.0);
    a.actor_target.params_mut().iter_mut().for_each(|v| *v = 0.0);
    a.polyak_update();
    assert!(a.actor_target.params().iter().all(|v| (v - 0.05).abs() < 1e-15));

    let frozen = a.clone();
    a.config_mut().polyak_retain = 1.0;
    a.polyak_update();
    assert_eq!(a.actor_target.params(), frozen.actor_target.params());

    a.config_mut().polyak_retain = 0.0;
    a.polyak_update();
    assert_eq!(a.actor_target.params(), a.actor.params());
    assert_eq!(a.critic_target.params(), a.critic.params());
}

#[test]
fn ddpg_and_ddpg_her_share_a_trajectory_on_the_same_batches() {
    let spec = point_spec();
    let mut a = agent(Algo::Ddpg, vec![4], &spec, 80);
    let mut b = agent(Algo::DdpgHer, vec![4], &spec, 80);
    for k in 0..5 {
        let batch = random_batch(8, 81 + k);
        let sa = a.update(&batch).unwrap();
        let sb = b.update(&batch).unwrap();
        assert_eq!(sa, sb);
        a.polyak_update();
        b.polyak_update();
    }
    assert_eq!(a.actor.params(), b.actor.params());
    assert_eq!(a.critic_target.params(), b.critic_target.params());
}

#[test]
fn greedy_selection_is_deterministic() {
    let spec = point_spec();
    let a = agent(Algo::Qwsl, vec![4], &spec, 90);
    let obs = PointReach::new().reset(&mut rng(1));
    let x = a.select_action(&obs, false, &mut rng(2)).unwrap();
    let y = a.select_action(&obs, false, &mut rng(3)).unwrap();
    assert_eq!(x, y);
    assert!(x.iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn full_random_exploration_fills_the_box() {
    let spec = point_spec();
    let mut a = agent(Algo::Qwsl, vec![4], &spec, 91);
    a.config_mut().random_eps = 1.0;
    let obs = PointReach::new().reset(&mut rng(1));
    let mut r = rng(5);
    let draws: Vec<Vec<f64>> = (0..4000)
        .map(|_| a.select_action(&obs, true, &mut r).unwrap())
        .collect();
    let xs: Vec<f64> = draws.iter().map(|d| d[0]).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    assert!(mean.abs() < 0.05);
    // uniform on [-1, 1] has variance 1/3
    assert!((var - 1.0 / 3.0).abs() < 0.02);
    assert!(xs.iter().all(|x| x.abs() <= 1.0));
}

#[test]
fn exploration_noise_has_configured_std() {
    let spec = point_spec();
    let mut a = agent(Algo::Qwsl, vec![4], &spec, 92);
    a.config_mut().random_eps = 0.0;
    a.actor.params_mut().iter_mut().for_each(|v| *v = 0.0);
    let obs = PointReach::new().reset(&mut rng(1));
    let mut r = rng(6);
    let n = 100_000;
    let xs: Vec<f64> = (0..n)
        .map(|_| a.select_action(&obs, true, &mut r).unwrap()[1])
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((std - 0.2).abs() < 0.02 * 0.2, "{std}");
}

#[test]
fn discrete_argmax_is_scale_invariant() {
    let spec = grid_spec();
    let mut a = agent(Algo::Qwsl, vec![8], &spec, 93);
    let mut env = GridStitch::new();
    let obs = env.reset_pair(GridState::AStart, GridState::GoalB);
    let before = a.greedy_action(&obs).unwrap();
    let hidden = 8;
    let n = a.critic.params().len();
    for v in &mut a.critic.params_mut()[n - hidden - 1..] {
        *v *= 3.7;
    }
    assert_eq!(a.greedy_action(&obs).unwrap(), before);
    assert_eq!(before.iter().filter(|v| **v == 1.0).count(), 1);
}

#[test]
fn discrete_exploration_emits_one_hot_actions() {
    let spec = grid_spec();
    let a = agent(Algo::Gcsl, vec![8], &spec, 94);
    let mut env = GridStitch::new();
    let obs = env.reset_pair(GridState::BStart, GridState::GoalA);
    let mut r = rng(7);
    for _ in 0..200 {
        let act = a.select_action(&obs, true, &mut r).unwrap();
        assert_eq!(act.iter().sum::<f64>(), 1.0);
        assert!(act.iter().all(|v| *v == 0.0 || *v == 1.0));
    }
}

#[test]
fn oracle_policy_evaluates_to_one_on_grid() {
    let mut env = GridStitch::new();
    let oracle = |o: &Observation| -> Result<Vec<f64>> {
        let at = |s: GridState| o.state == GridStitch::encoded(s);
        let action = if at(GridState::Hub) {
            if o.desired == GridStitch::encoded(GridState::GoalA) {
                GridAction::ToGoalA
            } else {
                GridAction::ToGoalB
            }
        } else if at(GridState::AStart) || at(GridState::BStart) {
            GridAction::ToHub
        } else {
            GridAction::Stay
        };
        Ok(GridStitch::encoded_action(action))
    };
    assert_eq!(evaluate_policy(&mut env, 100, &mut rng(8), oracle).unwrap(), 1.0);
}

#[test]
fn random_policy_rarely_reaches_point_goals() {
    let mut env = PointReach::new();
    let mut policy_rng = rng(10);
    let rate = evaluate_policy(&mut env, 100, &mut rng(9), |_| {
        Ok(vec![
            policy_rng.random_range(-1.0..=1.0),
            policy_rng.random_range(-1.0..=1.0),
        ])
    })
    .unwrap();
    assert!(rate < 0.5, "{rate}");
}

#[test]
fn evaluation_is_seed_deterministic() {
    let spec = point_spec();
    let a = agent(Algo::Qwsl, vec![4], &spec, 95);
    let x = a.evaluate(&mut PointReach::new(), 20, &mut rng(3)).unwrap();
    let y = a.evaluate(&mut PointReach::new(), 20, &mut rng(3)).unwrap();
    assert_eq!(x, y);
}

#[test]
fn checkpoint_round_trip() {
    let spec = point_spec();
    let mut a = agent(Algo::Qwsl, vec![4], &spec, 96);
    a.state_norm.update(&[0.5, 0.25, -0.5, 0.1]).unwrap();
    let json = serde_json::to_string(&a.checkpoint()).unwrap();
    let ck: AgentCheckpoint = serde_json::from_str(&json).unwrap();
    let mut b = agent(Algo::Qwsl, vec![4], &spec, 97);
    b.load_checkpoint(&ck).unwrap();
    assert_eq!(a.actor.params(), b.actor.params());
    assert_eq!(a.critic.params(), b.critic.params());
    assert_eq!(a.state_norm, b.state_norm);
    let mut wrong = agent(Algo::Qwsl, vec![5], &spec, 98);
    assert!(wrong.load_checkpoint(&ck).is_err());
}

#[test]
fn empty_batch_rejected() {
    assert!(matches!(Batch::from_samples(&[]), Err(Error::EmptyBatch)));
}
