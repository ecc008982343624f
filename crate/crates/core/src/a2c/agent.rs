use std::sync::Arc;

use crate::baselines::Scheduler;
use crate::env::{Allocation, CellEnv};
use crate::error::Result;
use crate::neural::{greedy_action, sample_action, ActorCritic};
use crate::seed::{rng_from, Rng};

/// The learned scheduler: one policy evaluation per RBG against the
/// provisional state of the TTI.
#[derive(Debug, Clone)]
pub struct DrlScheduler {
    agent: Arc<ActorCritic>,
    greedy: bool,
    rng: Rng,
}

impl DrlScheduler {
    /// Greedy (argmax) scheduler for evaluation.
    pub fn greedy(agent: Arc<ActorCritic>, num_ues: usize) -> Result<Self> {
        agent.check_num_ues(num_ues)?;
        Ok(DrlScheduler {
            agent,
            greedy: true,
            rng: rng_from(0),
        })
    }

    /// Scheduler sampling from the policy.
    pub fn sampling(agent: Arc<ActorCritic>, num_ues: usize, seed: u64) -> Result<Self> {
        agent.check_num_ues(num_ues)?;
        Ok(DrlScheduler {
            agent,
            greedy: false,
            rng: rng_from(seed),
        })
    }
}

impl Scheduler for DrlScheduler {
    fn name(&self) -> &str {
        "drl"
    }

    fn schedule(&mut self, env: &CellEnv) -> Allocation {
        let scale = env.feature_scale();
        let mut p = env.planner();
        while p.next_rbg().is_some() {
            if !p.any_active() {
                p.grant(None);
                continue;
            }
            let obs = p.observe();
            let out = self.agent.policy_output(&obs.features(&scale), &obs.mask());
            let a = if self.greedy {
                greedy_action(&out.probs)
            } else {
                sample_action(&out.probs, &mut self.rng)
            };
            p.grant(Some(a));
        }
        p.finish()
    }
}
