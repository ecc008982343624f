//! Single-cell downlink environment.

mod buffer;
mod cell;
mod channel;
mod config;
mod trace;

pub use buffer::{Packet, RlcBuffer};
pub use cell::{
    Allocation, CellEnv, FeatureScale, Observation, StepOutcome, TtiPlanner, UeObservation,
};
pub use channel::{ChannelProcess, LadderStep, RateLadder};
pub use config::{AvgInit, EnvConfig, SnrProfile, Traffic};
pub use trace::{deployment, LiveProcess, Trace, TraceHeader, TtiRecord, TRACE_FORMAT, TRACE_VERSION};
