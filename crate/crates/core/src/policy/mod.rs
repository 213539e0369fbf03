//! Task-conditioned policies, REINFORCE gradients, and gradient oracles.

mod advantage;
mod exact;
mod params;
mod reinforce;

pub use advantage::{
    global_advantage_normalize, per_task_advantage_normalize, raw_advantages, returns_to_go,
    AdvantageBatch, GroupStats, ValueBaseline,
};
pub use exact::{exact_policy_gradient, gradient_cosine_accuracy, mdp_policy, CosinePoint};
pub use params::{
    load_checkpoint, save_checkpoint, state_index, Architecture, PolicyError, PolicyParams,
    PolicyTable,
};
pub use reinforce::{reinforce_gradient, rollout_episode, surrogate_value};
