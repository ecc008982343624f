use std::sync::Arc;

use crate::env::{Allocation, CellEnv, EnvConfig, Trace};
use crate::error::{Error, Result};
use crate::kpi::{RewardTracker, RewardWeights};
use crate::neural::{greedy_action, sample_action, ActorCritic, FEATURES};
use crate::seed::{derive, derive_rng, Rng};

/// Supplies a fresh environment for every (worker, episode).
pub trait EnvFactory {
    fn num_ues(&self) -> usize;
    fn make(&self, worker: usize, episode: u64) -> Result<CellEnv>;
}

/// Live environments; every episode of every worker is a new seed and so a
/// new deployment.
#[derive(Debug, Clone)]
pub struct LiveEnvFactory {
    pub cfg: EnvConfig,
    pub seed: u64,
}

impl EnvFactory for LiveEnvFactory {
    fn num_ues(&self) -> usize {
        self.cfg.num_ues
    }

    fn make(&self, worker: usize, episode: u64) -> Result<CellEnv> {
        let s = derive(self.seed, "train-env", ((worker as u64) << 32) | episode);
        Ok(CellEnv::reset(&self.cfg, s)?)
    }
}

/// Virtual environments replaying recorded traces; worker `w` cycles through
/// the traces starting at offset `w`.
#[derive(Debug, Clone)]
pub struct TraceEnvFactory {
    traces: Vec<Arc<Trace>>,
}

impl TraceEnvFactory {
    pub fn new(traces: Vec<Arc<Trace>>) -> Result<Self> {
        let k = traces
            .first()
            .ok_or_else(|| Error::contract("trace factory needs at least one trace"))?
            .num_ues();
        if traces.iter().any(|t| t.num_ues() != k || t.is_empty()) {
            return Err(Error::contract("traces must be nonempty and share the UE count"));
        }
        Ok(TraceEnvFactory { traces })
    }
}

impl EnvFactory for TraceEnvFactory {
    fn num_ues(&self) -> usize {
        self.traces[0].num_ues()
    }

    fn make(&self, worker: usize, episode: u64) -> Result<CellEnv> {
        let i = (worker + episode as usize) % self.traces.len();
        CellEnv::replay(self.traces[i].clone())
    }
}

/// One RBG decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub features: Vec<[f64; FEATURES]>,
    pub mask: Vec<bool>,
    pub action: usize,
}

/// One TTI of one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    /// TTI-level normalized state, regressed by the critic.
    pub state: Vec<[f64; FEATURES]>,
    /// Empty on idle TTIs.
    pub decisions: Vec<Decision>,
    pub reward: f64,
    /// The scheduling duration ended with this TTI.
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub experiences: Vec<Experience>,
    /// State after the last experience; `None` when it was terminal.
    pub bootstrap_state: Option<Vec<[f64; FEATURES]>>,
}

struct Worker {
    env: CellEnv,
    tracker: RewardTracker,
    episode: u64,
}

/// Lockstep interaction of several environments with one policy.
pub struct Rollout<'a> {
    factory: &'a dyn EnvFactory,
    workers: Vec<Worker>,
    rngs: Vec<Rng>,
    weights: RewardWeights,
    pub episodes_finished: u64,
}

impl<'a> Rollout<'a> {
    pub fn new(
        factory: &'a dyn EnvFactory,
        num_envs: usize,
        weights: RewardWeights,
        seed: u64,
    ) -> Result<Self> {
        let workers = (0..num_envs)
            .map(|w| Self::fresh(factory, w, 0, weights))
            .collect::<Result<Vec<_>>>()?;
        let rngs = (0..num_envs)
            .map(|w| derive_rng(seed, "policy-sampling", w as u64))
            .collect();
        Ok(Rollout {
            factory,
            workers,
            rngs,
            weights,
            episodes_finished: 0,
        })
    }

    fn fresh(f: &dyn EnvFactory, w: usize, ep: u64, weights: RewardWeights) -> Result<Worker> {
        let env = f.make(w, ep)?;
        let tracker = RewardTracker::new(weights, env.num_ues(), env.top_rate(), env.tti());
        Ok(Worker {
            env,
            tracker,
            episode: ep,
        })
    }

    pub fn num_envs(&self) -> usize {
        self.workers.len()
    }

    fn tti_state(env: &CellEnv) -> Vec<[f64; FEATURES]> {
        env.observe().features(&env.feature_scale())
    }

    /// Collect `n` TTIs from every environment.
    pub fn sample_batch(
        &mut self,
        agent: &ActorCritic,
        n: usize,
        greedy: bool,
    ) -> Result<Vec<Trajectory>> {
        let e = self.workers.len();
        let mut trajs: Vec<Vec<Experience>> = vec![Vec::with_capacity(n); e];
        for _ in 0..n {
            let states: Vec<_> = self.workers.iter().map(|w| Self::tti_state(&w.env)).collect();
            let (allocs, decisions) = self.decide(agent, greedy);
            for (i, ((alloc, decs), state)) in allocs.into_iter().zip(decisions).zip(states).enumerate() {
                let w = &mut self.workers[i];
                let out = w.env.step(&alloc).map_err(|err| {
                    Error::contract(format!("worker {i}, episode {}: {err}", w.episode))
                })?;
                let row = w.tracker.record(&out);
                trajs[i].push(Experience {
                    state,
                    decisions: decs,
                    reward: row.reward,
                    terminal: out.done,
                });
                if out.done {
                    let ep = w.episode + 1;
                    *w = Self::fresh(self.factory, i, ep, self.weights)?;
                    self.episodes_finished += 1;
                }
            }
        }
        Ok(trajs
            .into_iter()
            .zip(&self.workers)
            .map(|(experiences, w)| {
                let ended = experiences.last().is_some_and(|x| x.terminal);
                Trajectory {
                    experiences,
                    bootstrap_state: (!ended).then(|| Self::tti_state(&w.env)),
                }
            })
            .collect())
    }

    /// One TTI of RBG-by-RBG decisions for every worker, batching the policy
    /// evaluation across workers at each RBG.
    fn decide(&mut self, agent: &ActorCritic, greedy: bool) -> (Vec<Allocation>, Vec<Vec<Decision>>) {
        let e = self.workers.len();
        let mut planners: Vec<_> = self.workers.iter().map(|w| w.env.planner()).collect();
        let scales: Vec<_> = self.workers.iter().map(|w| w.env.feature_scale()).collect();
        let mut decisions: Vec<Vec<Decision>> = vec![Vec::new(); e];
        let num_rbgs = self.workers.first().map_or(0, |w| w.env.num_rbgs());
        for _ in 0..num_rbgs {
            let live: Vec<usize> = (0..e).filter(|&i| planners[i].any_active()).collect();
            let obs: Vec<_> = live.iter().map(|&i| planners[i].observe()).collect();
            let feats: Vec<_> = live
                .iter()
                .zip(&obs)
                .map(|(&i, o)| o.features(&scales[i]))
                .collect();
            let masks: Vec<_> = obs.iter().map(|o| o.mask()).collect();
            let outs = agent.policy_batch(&feats, &masks);
            let mut granted = vec![false; e];
            for ((j, &i), out) in live.iter().enumerate().zip(outs) {
                let a = if greedy {
                    greedy_action(&out.probs)
                } else {
                    sample_action(&out.probs, &mut self.rngs[i])
                };
                planners[i].grant(Some(a));
                granted[i] = true;
                decisions[i].push(Decision {
                    features: feats[j].clone(),
                    mask: masks[j].clone(),
                    action: a,
                });
            }
            for (i, p) in planners.iter_mut().enumerate() {
                if !granted[i] {
                    p.grant(None);
                }
            }
        }
        (planners.into_iter().map(|p| p.finish()).collect(), decisions)
    }
}
