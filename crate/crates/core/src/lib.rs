pub mod a2c;
pub mod baselines;
pub mod compare;
pub mod env;
pub mod error;
pub mod kpi;
pub mod neural;
pub mod pareto;
pub mod seed;

pub use error::{ConfigError, Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/environment.md")]
    mod environment {}
    #[doc = include_str!("../../../book/src/kpis.md")]
    mod kpis {}
    #[doc = include_str!("../../../book/src/schedulers.md")]
    mod schedulers {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/pareto.md")]
    mod pareto {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
