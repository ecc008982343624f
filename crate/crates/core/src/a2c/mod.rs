//! Advantage actor-critic training: lockstep rollouts over several
//! environments, n-step advantages, entropy-regularized policy gradient and a
//! squared-advantage critic loss.

mod advantage;
mod agent;
mod config;
mod optim;
mod rollout;
mod train;

pub use advantage::{compute_advantages, n_step_returns};
pub use agent::DrlScheduler;
pub use config::{ArchKind, OptimizerKind, TrainConfig};
pub use optim::{Optimizer, StepStats};
pub use rollout::{
    Decision, EnvFactory, Experience, LiveEnvFactory, Rollout, TraceEnvFactory, Trajectory,
};
pub use train::{
    build_batch, compute_update, curve_csv, train, CurveRow, EvalSpec, TrainOutput, UpdateStats,
};
