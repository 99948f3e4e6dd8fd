//! Deterministic actor-critic teaching agent: exploration noise, replay,
//! the per-class batch sampler and the two-phase teaching loop.

mod ddpg;
mod log;
mod noise;
mod replay;
mod sampler;
mod teacher;

pub use ddpg::{ActorBlock, AgentConfig, AgentNets, CriticBlock};
pub use log::{EpisodeRecord, MetricsLog, StepRecord};
pub use noise::{OuConfig, OuNoise};
pub use replay::{PoolInputs, ReplayBuffer, Transition};
pub use sampler::{class_quotas, reward, weighted_sample};
pub(crate) use teacher::with_context;
pub use teacher::{RewardKind, Schedule, StateKind, Teacher, TeachingData, TeachingStack};
