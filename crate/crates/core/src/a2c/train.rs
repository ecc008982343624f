use std::sync::Arc;

use serde::Serialize;

use super::advantage::n_step_returns;
use super::agent::DrlScheduler;
use super::config::TrainConfig;
use super::optim::{Optimizer, StepStats};
use super::rollout::{EnvFactory, Rollout, Trajectory};
use crate::baselines::{classical, Scheduler};
use crate::compare::{compare, ComparisonReport, CompareSpec, EpisodeEnvs};
use crate::env::{CellEnv, EnvConfig};
use crate::error::{Error, Result};
use crate::kpi::RewardWeights;
use crate::neural::{stack_states, A2cBatch, A2cLoss, ActorCritic, Checkpoint};
use crate::seed::derive_rng;

/// Held-out environments for greedy evaluation against PF.
#[derive(Debug, Clone)]
pub struct EvalSpec {
    pub envs: Vec<(u64, CellEnv)>,
    pub weights: RewardWeights,
}

impl EvalSpec {
    pub fn live(cfg: &EnvConfig, seeds: &[u64], weights: RewardWeights) -> Result<Self> {
        let envs = seeds
            .iter()
            .map(|&s| Ok((s, CellEnv::reset(cfg, s)?)))
            .collect::<Result<_>>()?;
        Ok(EvalSpec { envs, weights })
    }

    /// Greedy agent vs PF in paired mode.
    pub fn evaluate(&self, agent: &Arc<ActorCritic>) -> Result<ComparisonReport> {
        let drl = |env: &CellEnv| -> Result<Box<dyn Scheduler + Send>> {
            Ok(Box::new(DrlScheduler::greedy(agent.clone(), env.num_ues())?))
        };
        let pf = |env: &CellEnv| -> Result<Box<dyn Scheduler + Send>> {
            Ok(classical("pf", env.num_ues(), env.config().avg_window).expect("pf exists"))
        };
        let spec = CompareSpec {
            scheme: "drl",
            baseline: "pf",
            make_scheme: &drl,
            make_baseline: &pf,
            weights: self.weights,
            window_ttis: u64::MAX,
        };
        let eps = self
            .envs
            .iter()
            .map(|(s, e)| EpisodeEnvs {
                seed: *s,
                scheme_env: e.clone(),
                baseline_env: None,
            })
            .collect();
        compare(&spec, eps)
    }
}

/// One learning-curve point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub update_index: u64,
    /// Mean per-TTI reward of the greedy agent on the evaluation set.
    pub mean_reward: f64,
    pub thp_ratio_vs_pf: Option<f64>,
    pub jfi_ratio_vs_pf: Option<f64>,
    pub pdr_ratio_vs_pf: Option<f64>,
}

impl CurveRow {
    fn from_report(update_index: u64, r: &ComparisonReport) -> Self {
        CurveRow {
            update_index,
            mean_reward: r.scheme_mean.mean_reward,
            thp_ratio_vs_pf: r.ratios.thp,
            jfi_ratio_vs_pf: r.ratios.jfi,
            pdr_ratio_vs_pf: r.ratios.pdr,
        }
    }
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut s = String::from("update_index,mean_reward,thp_ratio_vs_pf,jfi_ratio_vs_pf,pdr_ratio_vs_pf\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.update_index,
            r.mean_reward,
            opt(r.thp_ratio_vs_pf),
            opt(r.jfi_ratio_vs_pf),
            opt(r.pdr_ratio_vs_pf)
        ));
    }
    s
}

/// Values, n-step targets and per-decision advantages for a batch. The
/// advantage of a TTI is shared by all its RBG decisions; idle TTIs only
/// feed the critic.
pub fn build_batch(agent: &ActorCritic, trajs: &[Trajectory], gamma: f64, n: usize) -> A2cBatch {
    let mut value_rows = Vec::new();
    let mut targets = Vec::new();
    let mut dec_rows = Vec::new();
    let mut masks = Vec::new();
    let mut actions = Vec::new();
    let mut advantages = Vec::new();
    for tr in trajs {
        let mut states: Vec<&[[f64; 4]]> = tr.experiences.iter().map(|x| &x.state[..]).collect();
        if let Some(b) = &tr.bootstrap_state {
            states.push(b);
        }
        let v = agent.value_batch(&states);
        let len = tr.experiences.len();
        let boot = if tr.bootstrap_state.is_some() { v[len] } else { 0.0 };
        let rewards: Vec<f64> = tr.experiences.iter().map(|x| x.reward).collect();
        let terminals: Vec<bool> = tr.experiences.iter().map(|x| x.terminal).collect();
        let returns = n_step_returns(&rewards, &terminals, &v[..len], boot, gamma, n);
        for (t, x) in tr.experiences.iter().enumerate() {
            let adv = returns[t] - v[t];
            for d in &x.decisions {
                dec_rows.push(&d.features[..]);
                masks.push(d.mask.clone());
                actions.push(d.action);
                advantages.push(adv);
            }
            value_rows.push(&x.state[..]);
            targets.push(returns[t]);
        }
    }
    A2cBatch {
        decisions: stack_or_empty(&dec_rows),
        masks,
        actions,
        advantages,
        value_states: stack_or_empty(&value_rows),
        targets,
    }
}

fn stack_or_empty(rows: &[&[[f64; 4]]]) -> ndarray::Array2<f64> {
    if rows.is_empty() {
        ndarray::Array2::zeros((0, 0))
    } else {
        stack_states(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub loss: A2cLoss,
    pub step: StepStats,
}

/// One gradient step on `batch`.
pub fn compute_update(
    agent: &mut ActorCritic,
    opt: &mut Optimizer,
    batch: &A2cBatch,
    cfg: &TrainConfig,
    update_index: u64,
) -> Result<UpdateStats> {
    let (loss, grads) = agent.a2c_loss_and_grad(batch, cfg.loss_weights());
    if !loss.total.is_finite() || !grads.policy.is_finite() || !grads.value.is_finite() {
        return Err(Error::NonFinite(format!(
            "update {update_index}: objective {}, entropy {}, value loss {}, total {}",
            loss.objective, loss.entropy, loss.value_loss, loss.total
        )));
    }
    let step = opt.step(agent, grads, cfg.learning_rate_at(update_index));
    Ok(UpdateStats { loss, step })
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub checkpoint: Checkpoint,
    pub curve: Vec<CurveRow>,
    /// Mean per-TTI training reward of every batch.
    pub batch_rewards: Vec<f64>,
}

/// A2C training loop. `init` continues from existing parameters (for example
/// an agent pre-trained on traces); otherwise the agent is freshly initialized
/// from `seed`.
pub fn train(
    cfg: &TrainConfig,
    factory: &dyn EnvFactory,
    eval: Option<&EvalSpec>,
    init: Option<Checkpoint>,
    seed: u64,
) -> Result<TrainOutput> {
    cfg.validate()?;
    let k = factory.num_ues();
    let (mut agent, start) = match init {
        Some(ck) => {
            ck.agent.check_num_ues(k)?;
            (ck.agent, ck.updates)
        }
        None => {
            let mut rng = derive_rng(seed, "init", 0);
            (ActorCritic::new(cfg.architecture(k), cfg.hidden_per_ue, &mut rng), 0)
        }
    };
    let mut curve = Vec::new();
    let mut batch_rewards = Vec::new();
    let evaluate = |agent: &ActorCritic, u: u64, curve: &mut Vec<CurveRow>| -> Result<()> {
        if let Some(spec) = eval {
            let report = spec.evaluate(&Arc::new(agent.clone()))?;
            curve.push(CurveRow::from_report(u, &report));
        }
        Ok(())
    };
    if cfg.eval_every > 0 {
        evaluate(&agent, start, &mut curve)?;
    }
    if cfg.max_updates > 0 {
        let mut rollout = Rollout::new(factory, cfg.num_envs, cfg.reward, seed)?;
        let mut opt = Optimizer::new(cfg);
        for u in start..start + cfg.max_updates {
            let trajs = rollout.sample_batch(&agent, cfg.n_steps, false)?;
            let (sum, cnt) = trajs
                .iter()
                .flat_map(|t| &t.experiences)
                .fold((0.0, 0usize), |(s, c), x| (s + x.reward, c + 1));
            batch_rewards.push(sum / cnt as f64);
            let batch = build_batch(&agent, &trajs, cfg.gamma, cfg.n_steps);
            compute_update(&mut agent, &mut opt, &batch, cfg, u)?;
            let done = u + 1;
            if cfg.eval_every > 0 && (done - start) % cfg.eval_every == 0 {
                evaluate(&agent, done, &mut curve)?;
            }
        }
    }
    Ok(TrainOutput {
        checkpoint: Checkpoint {
            agent,
            updates: start + cfg.max_updates,
        },
        curve,
        batch_rewards,
    })
}
