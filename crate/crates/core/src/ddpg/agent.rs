use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::{Activation, Mlp};
use super::replay::ReplayBuffer;
use crate::error::{Error, Result};
use crate::mdp::{MdpAction, Transition};
use crate::rng::{rng_for, stream, SimRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub discount: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Initial exploration noise scale.
    pub noise_std: f64,
    /// Per-episode multiplicative decay of the noise scale.
    pub noise_decay: f64,
    /// Episodes of uniformly random actions before the actor takes over.
    pub warmup_episodes: usize,
    /// Rewards are multiplied by this before they reach the critic.
    pub reward_scale: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            hidden: vec![128, 64],
            discount: 0.95,
            tau: 0.01,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            batch_size: 64,
            buffer_capacity: 10_000,
            noise_std: 0.3,
            noise_decay: 0.995,
            warmup_episodes: 10,
            reward_scale: 0.1,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("agent: {m}")));
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad("discount must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("batch size and buffer capacity must be positive");
        }
        if !(self.noise_std >= 0.0) || !(self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return bad("noise scale must be non-negative and its decay in (0, 1]");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward scale must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        Ok(())
    }
}

/// `N(0, sigma^2)` per coordinate, before clipping.
pub fn exploration_noise<R: Rng + ?Sized>(dim: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![0.0; dim];
    }
    let n = Normal::new(0.0, sigma).expect("positive scale");
    (0..dim).map(|_| n.sample(rng)).collect()
}

/// Actor output plus clipped Gaussian noise; `sigma = 0` is the greedy policy.
pub fn act<R: Rng + ?Sized>(actor: &Mlp, state: &[f64], sigma: f64, rng: &mut R) -> Result<MdpAction> {
    let mean = actor.predict(state)?;
    let noise = exploration_noise(mean.len(), sigma, rng);
    Ok(mean
        .iter()
        .zip(noise)
        .map(|(m, e)| (m + e).clamp(-1.0, 1.0))
        .collect())
}

/// Losses of one update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainStats {
    pub critic_loss: f64,
    /// Mean critic value of the actor's actions, before the actor step.
    pub actor_objective: f64,
}

/// Actor, critic, their targets, optimizers, replay and exploration state.
#[derive(Clone, Debug)]
pub struct Agent {
    config: AgentConfig,
    state_dim: usize,
    action_dim: usize,
    pub(crate) actor: Mlp,
    pub(crate) critic: Mlp,
    pub(crate) actor_target: Mlp,
    pub(crate) critic_target: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
    buffer: ReplayBuffer,
    rng: SimRng,
    noise: f64,
    episodes: u64,
}

fn join(state: &[f64], action: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(state.len() + action.len());
    v.extend_from_slice(state);
    v.extend_from_slice(action);
    v
}

impl Agent {
    pub fn new(state_dim: usize, action_dim: usize, config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = rng_for(seed, &[stream::INIT]);
        let mut sizes = vec![state_dim];
        sizes.extend(&config.hidden);
        sizes.push(action_dim);
        let actor = Mlp::init(&sizes, Activation::Relu, Activation::Tanh, 3e-3, &mut init)?;
        sizes[0] = state_dim + action_dim;
        *sizes.last_mut().expect("output") = 1;
        let critic = Mlp::init(&sizes, Activation::Relu, Activation::Identity, 3e-3, &mut init)?;
        Ok(Agent {
            state_dim,
            action_dim,
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor_opt: Adam::new(actor.params().len()),
            critic_opt: Adam::new(critic.params().len()),
            actor,
            critic,
            buffer: ReplayBuffer::new(config.buffer_capacity)?,
            rng: rng_for(seed, &[stream::AGENT]),
            noise: config.noise_std,
            episodes: 0,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critic(&self) -> &Mlp {
        &self.critic
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise
    }

    pub fn episodes_seen(&self) -> u64 {
        self.episodes
    }

    pub fn in_warmup(&self) -> bool {
        (self.episodes as usize) < self.config.warmup_episodes
    }

    /// Greedy action.
    pub fn policy(&self, state: &[f64]) -> Result<MdpAction> {
        self.actor.predict(state)
    }

    /// Uniform random action during warmup, noisy actor output afterwards.
    pub fn explore(&mut self, state: &[f64]) -> Result<MdpAction> {
        if self.in_warmup() {
            let rng = &mut self.rng;
            return Ok((0..self.action_dim).map(|_| rng.random_range(-1.0..=1.0)).collect());
        }
        act(&self.actor, state, self.noise, &mut self.rng)
    }

    pub fn q_value(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        Ok(self.critic.predict(&join(state, action))?[0])
    }

    pub fn observe(&mut self, t: Transition) -> Result<()> {
        if t.state.len() != self.state_dim || t.next_state.len() != self.state_dim {
            return Err(Error::dim("transition state", self.state_dim, t.state.len()));
        }
        if t.action.len() != self.action_dim {
            return Err(Error::dim("transition action", self.action_dim, t.action.len()));
        }
        if !t.reward.is_finite() {
            return Err(Error::NonFinite(format!("reward {}", t.reward)));
        }
        self.buffer.push(t);
        Ok(())
    }

    /// One minibatch update once the buffer holds a full batch.
    pub fn learn(&mut self) -> Result<Option<TrainStats>> {
        if self.buffer.len() < self.config.batch_size {
            return Ok(None);
        }
        let batch: Vec<Transition> = self
            .buffer
            .sample(self.config.batch_size, &mut self.rng)?
            .into_iter()
            .cloned()
            .collect();
        self.train_step(&batch).map(Some)
    }

    pub fn end_episode(&mut self) {
        let exploring = !self.in_warmup();
        self.episodes += 1;
        if exploring {
            self.noise *= self.config.noise_decay;
        }
    }

    /// Mean squared TD error and its gradient in the critic parameters.
    pub fn critic_gradient(&self, batch: &[Transition]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = batch.len() as f64;
        let mut grads = vec![0.0; self.critic.params().len()];
        let mut loss = 0.0;
        for t in batch {
            let next_action = self.actor_target.predict(&t.next_state)?;
            let next_q = self.critic_target.predict(&join(&t.next_state, &next_action))?[0];
            let y = self.config.reward_scale * t.reward + self.config.discount * next_q;
            let cache = self.critic.forward(&join(&t.state, &t.action))?;
            let err = cache.output()[0] - y;
            loss += err * err;
            self.critic.backward_accumulate(&cache, &[2.0 * err / n], &mut grads)?;
        }
        Ok((loss / n, grads))
    }

    /// Mean critic value of the actor's actions and the gradient of its
    /// negation in the actor parameters.
    pub fn actor_gradient(&self, batch: &[Transition]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = batch.len() as f64;
        let mut grads = vec![0.0; self.actor.params().len()];
        let mut scratch = vec![0.0; self.critic.params().len()];
        let mut objective = 0.0;
        for t in batch {
            let a_cache = self.actor.forward(&t.state)?;
            let q_cache = self.critic.forward(&join(&t.state, a_cache.output()))?;
            objective += q_cache.output()[0];
            let dq = self.critic.backward_accumulate(&q_cache, &[1.0], &mut scratch)?;
            let up: Vec<f64> = dq[self.state_dim..].iter().map(|g| -g / n).collect();
            self.actor.backward_accumulate(&a_cache, &up, &mut grads)?;
        }
        Ok((objective / n, grads))
    }

    /// Critic step toward the TD target, actor step along the deterministic
    /// policy gradient, then soft target updates.
    pub fn train_step(&mut self, batch: &[Transition]) -> Result<TrainStats> {
        let (critic_loss, cg) = self.critic_gradient(batch)?;
        if !critic_loss.is_finite() {
            return Err(Error::NonFinite(format!("critic loss {critic_loss}")));
        }
        self.critic_opt.update(self.critic.params_mut(), &cg, self.config.lr_critic)?;
        let (actor_objective, ag) = self.actor_gradient(batch)?;
        self.actor_opt.update(self.actor.params_mut(), &ag, self.config.lr_actor)?;
        self.actor.soft_update_into(&mut self.actor_target, self.config.tau)?;
        self.critic.soft_update_into(&mut self.critic_target, self.config.tau)?;
        Ok(TrainStats {
            critic_loss,
            actor_objective,
        })
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            format: CHECKPOINT_FORMAT,
            state_dim: self.state_dim,
            action_dim: self.action_dim,
            config: self.config.clone(),
            actor: self.actor.clone(),
            critic: self.critic.clone(),
            actor_target: self.actor_target.clone(),
            critic_target: self.critic_target.clone(),
            actor_opt: self.actor_opt.clone(),
            critic_opt: self.critic_opt.clone(),
            noise: self.noise,
            episodes: self.episodes,
            rng: RngState::capture(&self.rng),
            replay: self.buffer.clone(),
        }
    }

    pub fn from_checkpoint(c: AgentCheckpoint) -> Result<Self> {
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::CheckpointMismatch(format!("unknown format {}", c.format)));
        }
        c.config.validate()?;
        let expect = |net: &Mlp, input: usize, output: usize, what: &str| {
            if net.input_dim() != input || net.output_dim() != output || !net.is_finite() {
                Err(Error::CheckpointMismatch(format!("{what} network has the wrong shape")))
            } else {
                Ok(())
            }
        };
        expect(&c.actor, c.state_dim, c.action_dim, "actor")?;
        expect(&c.actor_target, c.state_dim, c.action_dim, "target actor")?;
        expect(&c.critic, c.state_dim + c.action_dim, 1, "critic")?;
        expect(&c.critic_target, c.state_dim + c.action_dim, 1, "target critic")?;
        if c.actor_opt.len() != c.actor.params().len() || c.critic_opt.len() != c.critic.params().len() {
            return Err(Error::CheckpointMismatch("optimizer state size".into()));
        }
        Ok(Agent {
            config: c.config,
            state_dim: c.state_dim,
            action_dim: c.action_dim,
            actor: c.actor,
            critic: c.critic,
            actor_target: c.actor_target,
            critic_target: c.critic_target,
            actor_opt: c.actor_opt,
            critic_opt: c.critic_opt,
            buffer: c.replay,
            rng: c.rng.restore()?,
            noise: c.noise,
            episodes: c.episodes,
        })
    }
}

pub const CHECKPOINT_FORMAT: u32 = 1;

/// Position of a ChaCha8 stream. Integers wider than 53 bits are stored as
/// decimal strings so JSON readers cannot round them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    /// 32 seed bytes, hex.
    pub seed: String,
    pub stream: String,
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &SimRng) -> Self {
        RngState {
            seed: rng.get_seed().iter().map(|b| format!("{b:02x}")).collect(),
            stream: rng.get_stream().to_string(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<SimRng> {
        let bad = |m: &str| Error::CheckpointMismatch(format!("rng state: {m}"));
        if self.seed.len() != 64 {
            return Err(bad("seed must be 64 hex digits"));
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad("seed"))?;
        }
        let mut rng = SimRng::from_seed(seed);
        rng.set_stream(self.stream.parse().map_err(|_| bad("stream"))?);
        rng.set_word_pos(self.word_pos.parse().map_err(|_| bad("word_pos"))?);
        Ok(rng)
    }
}

/// Everything needed to resume training bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub format: u32,
    pub state_dim: usize,
    pub action_dim: usize,
    pub config: AgentConfig,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub noise: f64,
    pub episodes: u64,
    pub rng: RngState,
    pub replay: ReplayBuffer,
}
