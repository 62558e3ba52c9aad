//! Deep deterministic policy gradient: replay buffer, exploration,
//! critic regression on the Bellman target, and actor ascent along the
//! critic's action gradient.
//!
//! The learner is strictly single-threaded and fully seeded: one stream
//! drives exploration noise, another replay sampling, so training
//! trajectories are bit-reproducible.

use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::env::Env;
use crate::error::{Error, Result};
use crate::inverter::InverterDispatch;
use crate::nn::{
    adam_step, backward_accumulate, backward_input, forward, soft_update, Activation, AdamState,
    MlpNet, ParamGrads,
};

/// One transition. States are stored as the normalized observation vectors
/// the networks consume.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity ring buffer; overwrites the oldest entry when full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Experience>,
    written: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer needs capacity > 0");
        Self {
            capacity,
            storage: Vec::new(),
            written: 0,
        }
    }

    pub fn push(&mut self, e: Experience) {
        if self.storage.len() < self.capacity {
            self.storage.push(e);
        } else {
            self.storage[self.written % self.capacity] = e;
        }
        self.written += 1;
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(&'a self, batch_size: usize, rng: &mut impl Rng) -> Vec<&'a Experience> {
        (0..batch_size)
            .map(|_| &self.storage[rng.gen_range(0..self.storage.len())])
            .collect()
    }
}

/// Architecture and hyperparameters for a fresh agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub gamma: f64,
    pub tau: f64,
    pub noise_sigma: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            lr_actor: 1e-4,
            lr_critic: 1e-4,
            gamma: 0.99,
            tau: 0.005,
            noise_sigma: 0.2,
        }
    }
}

/// Final-layer init bound, divided by sqrt(fan_in) when applied so the
/// near-zero start of policy and value head holds at any hidden width.
pub const FINAL_LAYER_INIT_BOUND: f64 = 3e-3;

/// Actor, critic, their target copies, and both optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBundle {
    pub actor: MlpNet,
    pub critic: MlpNet,
    pub actor_target: MlpNet,
    pub critic_target: MlpNet,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub gamma: f64,
    pub tau: f64,
    pub noise_sigma: f64,
}

impl AgentBundle {
    /// Builds a fresh agent. Draw order (actor weights, actor head, critic
    /// weights, critic head) is fixed, so a given rng stream always produces
    /// the same agent.
    pub fn new(n_obs: usize, n_actions: usize, cfg: &AgentConfig, rng: &mut impl Rng) -> Self {
        let mut actor_sizes = vec![n_obs];
        actor_sizes.extend_from_slice(&cfg.hidden);
        actor_sizes.push(n_actions);
        let mut critic_sizes = vec![n_obs + n_actions];
        critic_sizes.extend_from_slice(&cfg.hidden);
        critic_sizes.push(1);

        let head_fan_in = *cfg.hidden.last().unwrap_or(&n_obs) as f64;
        let head_bound = FINAL_LAYER_INIT_BOUND / head_fan_in.sqrt();
        let mut actor =
            MlpNet::init_kaiming(&actor_sizes, Activation::Relu, Activation::Tanh, rng);
        actor.reinit_final_layer(head_bound, rng);
        let mut critic =
            MlpNet::init_kaiming(&critic_sizes, Activation::Relu, Activation::Linear, rng);
        critic.reinit_final_layer(head_bound, rng);

        Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor_opt: AdamState::new(&actor, cfg.lr_actor),
            critic_opt: AdamState::new(&critic, cfg.lr_critic),
            actor,
            critic,
            gamma: cfg.gamma,
            tau: cfg.tau,
            noise_sigma: cfg.noise_sigma,
        }
    }

    pub fn n_obs(&self) -> usize {
        self.actor.input_len()
    }

    pub fn n_actions(&self) -> usize {
        self.actor.output_len()
    }
}

/// Deterministic policy output, optionally perturbed by Gaussian noise of
/// scale `agent.noise_sigma` and clamped back into the action box.
pub fn select_action(
    agent: &AgentBundle,
    state: &[f64],
    explore: bool,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let (mut action, _) = forward(&agent.actor, state)?;
    if explore {
        let normal = Normal::new(0.0, agent.noise_sigma)
            .map_err(|e| Error::Domain(format!("bad noise sigma: {e}")))?;
        for a in &mut action {
            *a = (*a + normal.sample(rng)).clamp(-1.0, 1.0);
        }
    }
    Ok(action)
}

fn concat(state: &[f64], action: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(state.len() + action.len());
    v.extend_from_slice(state);
    v.extend_from_slice(action);
    v
}

/// One critic regression step toward the Bellman targets
/// `y_i = r_i + gamma * Q'(s'_i, mu'(s'_i))`. Returns the pre-step MSE.
pub fn critic_update(agent: &mut AgentBundle, batch: &[&Experience]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let inv_b = 1.0 / batch.len() as f64;
    let mut grads = ParamGrads::zeros_like(&agent.critic);
    let mut loss = 0.0;
    for e in batch {
        let (next_action, _) = forward(&agent.actor_target, &e.next_state)?;
        let (q_next, _) = forward(&agent.critic_target, &concat(&e.next_state, &next_action))?;
        let y = e.reward + agent.gamma * q_next[0];

        let (q, cache) = forward(&agent.critic, &concat(&e.state, &e.action))?;
        let diff = q[0] - y;
        loss += diff * diff;
        backward_accumulate(&agent.critic, &cache, &[2.0 * diff * inv_b], &mut grads)?;
    }
    adam_step(&mut agent.critic, &grads, &mut agent.critic_opt)?;
    Ok(loss * inv_b)
}

/// One actor ascent step on `Q(s, mu(s))`: the critic's gradient with
/// respect to the action is routed through the actor's backward pass. The
/// critic's parameters are left untouched. Returns the pre-step mean Q.
pub fn actor_update(agent: &mut AgentBundle, batch: &[&Experience]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n_obs = agent.n_obs();
    let inv_b = 1.0 / batch.len() as f64;
    let mut grads = ParamGrads::zeros_like(&agent.actor);
    let mut mean_q = 0.0;
    for e in batch {
        let (action, actor_cache) = forward(&agent.actor, &e.state)?;
        let (q, critic_cache) = forward(&agent.critic, &concat(&e.state, &action))?;
        mean_q += q[0];
        let d_input = backward_input(&agent.critic, &critic_cache, &[1.0])?;
        // Ascent: minimize -Q, so the actor sees -dQ/da averaged over the batch.
        let grad_out: Vec<f64> = d_input[n_obs..].iter().map(|g| -g * inv_b).collect();
        backward_accumulate(&agent.actor, &actor_cache, &grad_out, &mut grads)?;
    }
    adam_step(&mut agent.actor, &grads, &mut agent.actor_opt)?;
    Ok(mean_q * inv_b)
}

/// Anything that maps an observation to an action vector in `[-1, 1]^m`.
pub trait Policy {
    fn act(&self, obs: &[f64]) -> Result<Vec<f64>>;
}

impl Policy for AgentBundle {
    fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let (action, _) = forward(&self.actor, obs)?;
        Ok(action)
    }
}

/// The do-nothing baseline: every inverter at unity power factor.
#[derive(Debug, Clone)]
pub struct ZeroPolicy {
    pub n_actions: usize,
}

impl Policy for ZeroPolicy {
    fn act(&self, _obs: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.n_actions])
    }
}

/// Training-loop knobs.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub episodes: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Chronological step range each episode walks through.
    pub train_steps: std::ops::Range<usize>,
    pub sigma_start: f64,
    pub sigma_end: f64,
    /// Where to dump the agent if a loss turns non-finite.
    pub crash_dump: Option<PathBuf>,
}

/// Per-episode training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub ret: f64,
    pub mean_critic_loss: f64,
    pub mean_q: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeStats>,
}

/// Runs DDPG over `opts.episodes` chronological passes of the training
/// split: act with exploration noise, store the transition, and once the
/// buffer holds one batch run a critic update, an actor update, and Polyak
/// updates of both targets after every environment step.
pub fn train(
    agent: &mut AgentBundle,
    env: &Env,
    opts: &TrainOptions,
    explore_rng: &mut impl Rng,
    replay_rng: &mut impl Rng,
) -> Result<TrainingLog> {
    if opts.train_steps.end + 1 > env.n_steps() || opts.train_steps.is_empty() {
        return Err(Error::Index(format!(
            "training steps {:?} do not fit a series of {} steps",
            opts.train_steps,
            env.n_steps()
        )));
    }
    let steps_per_episode = opts.train_steps.len();
    let total_steps = (opts.episodes * steps_per_episode).max(2);
    let mut buffer = ReplayBuffer::new(opts.buffer_capacity);
    let mut log = TrainingLog::default();
    let mut global_step = 0usize;

    for episode in 0..opts.episodes {
        let mut ret = 0.0;
        let mut loss_sum = 0.0;
        let mut q_sum = 0.0;
        let mut n_updates = 0usize;
        for t in opts.train_steps.clone() {
            let frac = global_step as f64 / (total_steps - 1) as f64;
            agent.noise_sigma = opts.sigma_start + (opts.sigma_end - opts.sigma_start) * frac;

            let obs = env.observation(t)?;
            let action = select_action(agent, &obs, true, explore_rng)?;
            let result = env.step(t, &action)?;
            ret += result.reward.total;
            buffer.push(Experience {
                state: obs,
                action,
                reward: result.reward.total,
                next_state: result.next_state.observation(),
            });

            if buffer.len() >= opts.batch_size {
                let batch = buffer.sample(opts.batch_size, replay_rng);
                let loss = guard(critic_update(agent, &batch), agent, opts)?;
                let q = guard(actor_update(agent, &batch), agent, opts)?;
                if !loss.is_finite() || !q.is_finite() {
                    return Err(crash(agent, opts, "non-finite loss"));
                }
                soft_update(&mut agent.actor_target, &agent.actor, agent.tau)?;
                soft_update(&mut agent.critic_target, &agent.critic, agent.tau)?;
                loss_sum += loss;
                q_sum += q;
                n_updates += 1;
            }
            global_step += 1;
        }
        let denom = n_updates.max(1) as f64;
        log.episodes.push(EpisodeStats {
            episode,
            ret,
            mean_critic_loss: loss_sum / denom,
            mean_q: q_sum / denom,
        });
    }
    Ok(log)
}

fn guard(result: Result<f64>, agent: &AgentBundle, opts: &TrainOptions) -> Result<f64> {
    match result {
        Err(Error::Numerical(msg)) => Err(crash(agent, opts, &msg)),
        other => other,
    }
}

fn crash(agent: &AgentBundle, opts: &TrainOptions, msg: &str) -> Error {
    if let Some(path) = &opts.crash_dump {
        let _ = crate::checkpoint::save_agent(path, agent);
    }
    Error::Numerical(format!("training aborted: {msg}"))
}

/// Everything recorded about one evaluated step.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalStep {
    pub t: usize,
    pub v_mag_pu: Vec<f64>,
    pub actions: Vec<f64>,
    pub dispatches: Vec<InverterDispatch>,
    pub reward: crate::env::RewardBreakdown,
    pub converged: bool,
}

/// Deterministic rollout record over a step range.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTrace {
    pub start: usize,
    pub end: usize,
    pub steps: Vec<EvalStep>,
}

/// Rolls the policy (no exploration) over `range` and records voltages,
/// dispatches, and reward terms per step.
pub fn evaluate(
    policy: &(impl Policy + ?Sized),
    env: &Env,
    range: std::ops::Range<usize>,
) -> Result<EvalTrace> {
    if range.end + 1 > env.n_steps() {
        return Err(Error::Index(format!(
            "evaluation range {range:?} does not fit a series of {} steps \
             (the final step has no successor)",
            env.n_steps()
        )));
    }
    let mut steps = Vec::with_capacity(range.len());
    for t in range.clone() {
        let obs = env.observation(t)?;
        let actions = policy.act(&obs)?;
        let result = env.step(t, &actions)?;
        steps.push(EvalStep {
            t,
            v_mag_pu: result.pf.v_mag.clone(),
            actions,
            dispatches: result.dispatches,
            reward: result.reward,
            converged: result.pf.converged,
        });
    }
    Ok(EvalTrace {
        start: range.start,
        end: range.end,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{RewardWeights, StateVoltage, DEFAULT_FV_SLOPE};
    use crate::feeder::generate_feeder;
    use crate::seeding::{stream_rng, STREAM_EXPLORATION, STREAM_NET_INIT, STREAM_REPLAY};

    fn tiny_env(weights: RewardWeights) -> Env {
        let (spec, series, inverters) = generate_feeder(2, 3, 5).unwrap();
        Env::new(
            spec,
            series,
            inverters,
            weights,
            DEFAULT_FV_SLOPE,
            StateVoltage::Uncontrolled,
        )
        .unwrap()
    }

    fn tiny_agent(env: &Env, seed: u64) -> AgentBundle {
        let cfg = AgentConfig {
            hidden: vec![16, 16],
            ..AgentConfig::default()
        };
        AgentBundle::new(
            env.observation_len(),
            env.action_len(),
            &cfg,
            &mut stream_rng(seed, STREAM_NET_INIT),
        )
    }

    #[test]
    fn greedy_action_is_deterministic_and_noise_is_clamped() {
        let env = tiny_env(RewardWeights::default());
        let agent = tiny_agent(&env, 1);
        let obs = env.observation(10).unwrap();
        let mut rng = stream_rng(1, STREAM_EXPLORATION);
        let a = select_action(&agent, &obs, false, &mut rng).unwrap();
        let b = select_action(&agent, &obs, false, &mut rng).unwrap();
        assert_eq!(a, b);

        let mut big_noise = agent.clone();
        big_noise.noise_sigma = 5.0;
        for _ in 0..200 {
            let a = select_action(&big_noise, &obs, true, &mut rng).unwrap();
            assert!(a.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn fresh_actor_starts_near_the_zero_action() {
        let env = tiny_env(RewardWeights::default());
        for seed in [1, 2, 3, 4, 5] {
            let agent = tiny_agent(&env, seed);
            for t in [0, 40, 48, 100, 200] {
                let a = agent.act(&env.observation(t).unwrap()).unwrap();
                let max = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(max < 0.01, "seed {seed} t {t}: |action| = {max}");
            }
        }
    }

    #[test]
    fn gamma_zero_target_is_the_reward() {
        let env = tiny_env(RewardWeights::default());
        let mut agent = tiny_agent(&env, 2);
        agent.gamma = 0.0;
        agent.critic_opt.lr = 1e-2;
        let e = Experience {
            state: env.observation(5).unwrap(),
            action: vec![0.1, -0.2],
            reward: -3.5,
            next_state: env.observation(6).unwrap(),
        };
        // With gamma = 0 the target is exactly r; overfitting one sample
        // must drive Q there.
        let batch: Vec<&Experience> = std::iter::repeat(&e).take(64).collect();
        for _ in 0..3000 {
            critic_update(&mut agent, &batch).unwrap();
        }
        let (q, _) = forward(&agent.critic, &concat(&e.state, &e.action)).unwrap();
        assert!((q[0] - e.reward).abs() < 1e-2, "q = {}, r = {}", q[0], e.reward);
    }

    #[test]
    fn critic_overfits_one_sample_toward_the_bellman_target() {
        let env = tiny_env(RewardWeights::default());
        let mut agent = tiny_agent(&env, 3);
        agent.critic_opt.lr = 1e-2;
        let e = Experience {
            state: env.observation(8).unwrap(),
            action: vec![-0.4, 0.3],
            reward: -1.0,
            next_state: env.observation(9).unwrap(),
        };
        // Target networks only move via soft_update, which this loop never
        // calls, so y is a constant.
        let (na, _) = forward(&agent.actor_target, &e.next_state).unwrap();
        let (qn, _) = forward(&agent.critic_target, &concat(&e.next_state, &na)).unwrap();
        let y = e.reward + agent.gamma * qn[0];

        let batch: Vec<&Experience> = std::iter::repeat(&e).take(64).collect();
        for _ in 0..3000 {
            critic_update(&mut agent, &batch).unwrap();
        }
        let (q, _) = forward(&agent.critic, &concat(&e.state, &e.action)).unwrap();
        assert!((q[0] - y).abs() < 1e-2, "q = {}, y = {y}", q[0]);
    }

    #[test]
    fn critic_loss_finite_nonnegative_and_empty_batch_rejected() {
        let env = tiny_env(RewardWeights::default());
        let mut agent = tiny_agent(&env, 4);
        assert!(matches!(
            critic_update(&mut agent, &[]),
            Err(Error::EmptyBatch)
        ));
        assert!(matches!(
            actor_update(&mut agent, &[]),
            Err(Error::EmptyBatch)
        ));
        let mut rng = stream_rng(4, STREAM_REPLAY);
        let mut buffer = ReplayBuffer::new(256);
        for t in 0..80 {
            let obs = env.observation(t).unwrap();
            let action = select_action(&agent, &obs, true, &mut rng).unwrap();
            let r = env.step(t, &action).unwrap();
            buffer.push(Experience {
                state: obs,
                action,
                reward: r.reward.total,
                next_state: r.next_state.observation(),
            });
        }
        let batch = buffer.sample(64, &mut rng);
        let loss = critic_update(&mut agent, &batch).unwrap();
        assert!(loss.is_finite() && loss >= 0.0);
    }

    #[test]
    fn actor_update_leaves_critic_untouched_and_ascends() {
        let env = tiny_env(RewardWeights::default());
        let mut agent = tiny_agent(&env, 5);
        let experiences: Vec<Experience> = (0..64)
            .map(|t| {
                let obs = env.observation(t).unwrap();
                let r = env.step(t, &vec![0.0; 2]).unwrap();
                Experience {
                    state: obs,
                    action: vec![0.0; 2],
                    reward: r.reward.total,
                    next_state: r.next_state.observation(),
                }
            })
            .collect();
        let batch: Vec<&Experience> = experiences.iter().collect();

        let critic_before = agent.critic.clone();
        let mean_q = |agent: &AgentBundle| -> f64 {
            batch
                .iter()
                .map(|e| {
                    let (a, _) = forward(&agent.actor, &e.state).unwrap();
                    let (q, _) = forward(&agent.critic, &concat(&e.state, &a)).unwrap();
                    q[0]
                })
                .sum::<f64>()
                / batch.len() as f64
        };

        agent.actor_opt.lr = 1e-6;
        let q_before = mean_q(&agent);
        let reported = actor_update(&mut agent, &batch).unwrap();
        let q_after = mean_q(&agent);

        assert_eq!(agent.critic, critic_before);
        assert!((reported - q_before).abs() < 1e-12);
        assert!(q_after >= q_before - 1e-6, "{q_after} < {q_before}");
    }

    #[test]
    fn actor_tracks_the_frozen_critic_optimum() {
        // Critic fitted offline to Q(s, a) = -(a - 0.3)^2; repeated actor
        // updates must drive the policy to the analytic optimum 0.3.
        let mut rng = stream_rng(6, STREAM_NET_INIT);
        let cfg = AgentConfig {
            hidden: vec![48, 48],
            lr_actor: 3e-3,
            lr_critic: 3e-3,
            ..AgentConfig::default()
        };
        let mut agent = AgentBundle::new(1, 1, &cfg, &mut rng);
        let state = vec![0.5];

        // Supervised fit of the critic on a dense action grid.
        let n_grid = 161;
        for _ in 0..6000 {
            let mut grads = ParamGrads::zeros_like(&agent.critic);
            for k in 0..n_grid {
                let a = -1.0 + 2.0 * k as f64 / (n_grid - 1) as f64;
                let target = -(a - 0.3) * (a - 0.3);
                let (q, cache) = forward(&agent.critic, &concat(&state, &[a])).unwrap();
                let diff = q[0] - target;
                backward_accumulate(
                    &agent.critic,
                    &cache,
                    &[2.0 * diff / n_grid as f64],
                    &mut grads,
                )
                .unwrap();
            }
            adam_step(&mut agent.critic, &grads, &mut agent.critic_opt).unwrap();
        }

        let e = Experience {
            state: state.clone(),
            action: vec![0.0],
            reward: 0.0,
            next_state: state.clone(),
        };
        let batch: Vec<&Experience> = std::iter::repeat(&e).take(16).collect();
        for _ in 0..3000 {
            actor_update(&mut agent, &batch).unwrap();
        }
        let (mu, _) = forward(&agent.actor, &state).unwrap();
        assert!(
            (mu[0] - 0.3).abs() <= 0.01,
            "policy settled at {} instead of 0.3",
            mu[0]
        );
    }

    #[test]
    fn replay_ring_overwrites_oldest() {
        let mut buffer = ReplayBuffer::new(3);
        for i in 0..5 {
            buffer.push(Experience {
                state: vec![i as f64],
                action: vec![],
                reward: 0.0,
                next_state: vec![],
            });
            assert_eq!(buffer.len(), (i + 1).min(3));
        }
        // Entries 3 and 4 overwrote 0 and 1.
        let kept: Vec<f64> = buffer.storage.iter().map(|e| e.state[0]).collect();
        assert_eq!(kept, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn replay_sampling_is_uniform() {
        let capacity = 100;
        let mut buffer = ReplayBuffer::new(capacity);
        for i in 0..capacity {
            buffer.push(Experience {
                state: vec![i as f64],
                action: vec![],
                reward: 0.0,
                next_state: vec![],
            });
        }
        let mut rng = stream_rng(7, STREAM_REPLAY);
        let draws = 100_000;
        let mut counts = vec![0usize; capacity];
        for e in buffer.sample(draws, &mut rng) {
            counts[e.state[0] as usize] += 1;
        }
        let expected = draws as f64 / capacity as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&o| {
                let d = o as f64 - expected;
                d * d / expected
            })
            .sum();
        // 0.99 quantile of chi-squared with 99 degrees of freedom; exceeding
        // it would reject uniformity at p < 0.01.
        assert!(chi2 < 134.642, "chi2 = {chi2}");
    }

    #[test]
    fn target_gap_decays_geometrically_with_frozen_online_nets() {
        let env = tiny_env(RewardWeights::default());
        let mut agent = tiny_agent(&env, 8);
        // Separate the target from the online net first.
        let mut rng = stream_rng(9, STREAM_NET_INIT);
        agent.actor_target = MlpNet::init_kaiming(
            &agent.actor.layer_sizes,
            Activation::Relu,
            Activation::Tanh,
            &mut rng,
        );
        let gap = |a: &AgentBundle| -> f64 {
            a.actor_target
                .weights
                .iter()
                .flatten()
                .zip(a.actor.weights.iter().flatten())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let g0 = gap(&agent);
        for k in 1..=10 {
            soft_update(&mut agent.actor_target, &agent.actor, agent.tau).unwrap();
            let expected = (1.0 - agent.tau).powi(k) * g0;
            assert!((gap(&agent) - expected).abs() < 1e-9 * g0);
        }
    }

    #[test]
    fn training_with_zero_weights_still_updates_parameters() {
        let env = tiny_env(RewardWeights {
            alpha: 0.0,
            beta: 0.0,
            omega: 0.0,
        });
        let mut agent = tiny_agent(&env, 10);
        let before = agent.actor.clone();
        let opts = TrainOptions {
            episodes: 2,
            batch_size: 16,
            buffer_capacity: 1000,
            train_steps: 0..60,
            sigma_start: 0.2,
            sigma_end: 0.1,
            crash_dump: None,
        };
        let log = train(
            &mut agent,
            &env,
            &opts,
            &mut stream_rng(10, STREAM_EXPLORATION),
            &mut stream_rng(10, STREAM_REPLAY),
        )
        .unwrap();
        assert_eq!(log.episodes.len(), 2);
        for ep in &log.episodes {
            assert_eq!(ep.ret, 0.0);
        }
        assert_ne!(agent.actor, before);
    }

    #[test]
    fn evaluation_is_deterministic_and_zero_actor_matches_zero_policy() {
        let env = tiny_env(RewardWeights::default());
        let mut agent = tiny_agent(&env, 11);
        let range = 100..180;
        let a = evaluate(&agent, &env, range.clone()).unwrap();
        let b = evaluate(&agent, &env, range.clone()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.steps.len(), range.len());

        // Zeroing the actor's output layer makes mu identically zero.
        let last = agent.actor.weights.len() - 1;
        for w in &mut agent.actor.weights[last] {
            *w = 0.0;
        }
        for b in agent.actor.biases.last_mut().unwrap() {
            *b = 0.0;
        }
        let zeroed = evaluate(&agent, &env, range.clone()).unwrap();
        let baseline = evaluate(
            &ZeroPolicy {
                n_actions: env.action_len(),
            },
            &env,
            range,
        )
        .unwrap();
        assert_eq!(zeroed, baseline);
    }

    #[test]
    fn buffer_size_is_min_of_pushes_and_capacity() {
        let env = tiny_env(RewardWeights::default());
        let agent = tiny_agent(&env, 12);
        let mut buffer = ReplayBuffer::new(100);
        let mut rng = stream_rng(12, STREAM_EXPLORATION);
        // 3 episodes x 50 steps = 150 pushes into capacity 100.
        for _ in 0..3 {
            for t in 0..50 {
                let obs = env.observation(t).unwrap();
                let action = select_action(&agent, &obs, true, &mut rng).unwrap();
                let r = env.step(t, &action).unwrap();
                buffer.push(Experience {
                    state: obs,
                    action,
                    reward: r.reward.total,
                    next_state: r.next_state.observation(),
                });
            }
        }
        assert_eq!(buffer.len(), (3 * 50usize).min(100));
    }
}
