//! Deep deterministic policy gradient from scratch: networks, optimizer,
//! replay and the actor-critic agent.

pub mod adam;
pub mod agent;
pub mod mlp;
pub mod replay;

pub use adam::Adam;
pub use agent::{act, exploration_noise, Agent, AgentCheckpoint, AgentConfig, RngState, TrainStats};
pub use mlp::{Activation, ForwardCache, Gradients, Mlp};
pub use replay::ReplayBuffer;
