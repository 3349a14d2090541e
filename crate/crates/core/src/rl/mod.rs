//! Observation, reward shaping, normalization, rollouts, GAE and PPO.

pub mod buffer;
pub mod dist;
pub mod normalize;
pub mod observation;
pub mod ppo;
pub mod reward;

pub use buffer::{gae, RolloutBuffer};
pub use normalize::{RewardScaler, RunningNormalizer};
pub use observation::{observe, Observation, OBS_DIM};
pub use ppo::{ppo_update, PpoConfig, UpdateStats};
pub use reward::{cumulative_reward, PiecewiseLinear, RewardBreakdown, RewardConfig};
