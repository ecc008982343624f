//! Central finite-difference check of the analytic A2C gradients.
//!
//! For sampled coordinates of every weight and bias tensor the analytic
//! derivative of the full loss is compared with `(f(θ+h) − f(θ−h)) / 2h`.
//! Coordinates whose perturbation flips a ReLU unit are skipped: the loss is
//! not differentiable across the kink and the difference quotient is
//! meaningless there.

use rand::seq::index::sample;
use rand::Rng as _;
use serde::Serialize;

use super::mlp::Mlp;
use super::policy::{
    stack_states, A2cBatch, A2cGrads, ActorCritic, Architecture, LossWeights, FEATURES,
};
use crate::seed::{derive_rng, Rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor of the relative error.
    pub floor: f64,
    pub coords_per_tensor: usize,
    pub batch_size: usize,
    pub hidden_per_ue: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            tolerance: 1e-4,
            floor: 1e-6,
            coords_per_tensor: 8,
            batch_size: 6,
            hidden_per_ue: 128,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub architecture: String,
    pub num_ues: usize,
    pub network: String,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub step: f64,
    pub tolerance: f64,
    pub cases: Vec<CaseResult>,
    pub passed: bool,
}

impl GradCheckReport {
    /// Largest relative error per architecture name.
    pub fn max_error_by_architecture(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for c in &self.cases {
            match out.iter_mut().find(|(a, _)| *a == c.architecture) {
                Some((_, e)) => *e = e.max(c.max_rel_error),
                None => out.push((c.architecture.clone(), c.max_rel_error)),
            }
        }
        out
    }
}

/// Gradient under test.
pub type GradFn<'a> = &'a dyn Fn(&ActorCritic, &A2cBatch, LossWeights) -> A2cGrads;

pub const CHECK_WEIGHTS: LossWeights = LossWeights {
    entropy: 0.03,
    value: 0.5,
};

/// Random states, masks (at least one active), actions, advantages and targets.
pub fn random_batch(num_ues: usize, size: usize, rng: &mut Rng) -> A2cBatch {
    let states: Vec<Vec<[f64; FEATURES]>> = (0..size)
        .map(|_| {
            (0..num_ues)
                .map(|_| std::array::from_fn(|_| rng.random::<f64>()))
                .collect()
        })
        .collect();
    let mut masks = Vec::with_capacity(size);
    let mut actions = Vec::with_capacity(size);
    for _ in 0..size {
        let mut m: Vec<bool> = (0..num_ues).map(|_| rng.random_bool(0.7)).collect();
        let forced = rng.random_range(0..num_ues);
        m[forced] = true;
        let active: Vec<usize> = (0..num_ues).filter(|&k| m[k]).collect();
        actions.push(active[rng.random_range(0..active.len())]);
        masks.push(m);
    }
    let advantages = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
    let targets = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
    let stacked = stack_states(&states);
    A2cBatch {
        decisions: stacked.clone(),
        masks,
        actions,
        advantages,
        value_states: stacked,
        targets,
    }
}

fn param_mut(net: &mut Mlp, tensor: usize, idx: usize) -> &mut f64 {
    let l = &mut net.layers[tensor / 2];
    if tensor.is_multiple_of(2) {
        &mut l.w.as_slice_mut().expect("standard layout")[idx]
    } else {
        &mut l.b.as_slice_mut().expect("standard layout")[idx]
    }
}

fn tensor_len(net: &Mlp, tensor: usize) -> usize {
    let l = &net.layers[tensor / 2];
    if tensor.is_multiple_of(2) {
        l.w.len()
    } else {
        l.b.len()
    }
}

fn pattern(ac: &ActorCritic, batch: &A2cBatch) -> Vec<bool> {
    let mut p = ac.policy_forward(batch.decisions.view()).1.pattern();
    p.extend(ac.value_forward(batch.value_states.view()).1.pattern());
    p
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Which {
    Policy,
    Value,
}

fn check_network(
    ac: &ActorCritic,
    batch: &A2cBatch,
    which: Which,
    analytic: &Mlp,
    cfg: &GradCheckConfig,
    rng: &mut Rng,
) -> (usize, usize, f64) {
    let net = match which {
        Which::Policy => &ac.policy,
        Which::Value => &ac.value,
    };
    let base = pattern(ac, batch);
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
    for tensor in 0..net.layers.len() * 2 {
        let len = tensor_len(net, tensor);
        let n = cfg.coords_per_tensor.min(len);
        for idx in sample(rng, len, n) {
            let eval = |delta: f64| {
                let mut probe = ac.clone();
                let target = match which {
                    Which::Policy => &mut probe.policy,
                    Which::Value => &mut probe.value,
                };
                *param_mut(target, tensor, idx) += delta;
                let kink = pattern(&probe, batch) != base;
                (probe.a2c_loss(batch, CHECK_WEIGHTS).total, kink)
            };
            let (fp, kp) = eval(cfg.step);
            let (fm, km) = eval(-cfg.step);
            if kp || km {
                skipped += 1;
                continue;
            }
            let numeric = (fp - fm) / (2.0 * cfg.step);
            let mut grad_net = analytic.clone();
            let a = *param_mut(&mut grad_net, tensor, idx);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(cfg.floor);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    (checked, skipped, worst)
}

/// Check one agent on one batch.
pub fn check_agent(
    ac: &ActorCritic,
    batch: &A2cBatch,
    cfg: &GradCheckConfig,
    grad_fn: GradFn<'_>,
    rng: &mut Rng,
) -> Vec<CaseResult> {
    let grads = grad_fn(ac, batch, CHECK_WEIGHTS);
    let arch = match ac.arch {
        Architecture::OnePass { .. } => "one_pass",
        Architecture::Scalable => "scalable",
    };
    let k = batch.masks.first().map_or(0, Vec::len);
    [(Which::Policy, &grads.policy, "policy"), (Which::Value, &grads.value, "value")]
        .into_iter()
        .map(|(which, g, name)| {
            let (checked, skipped, worst) = check_network(ac, batch, which, g, cfg, rng);
            CaseResult {
                architecture: arch.to_string(),
                num_ues: k,
                network: name.to_string(),
                checked,
                skipped_kinks: skipped,
                max_rel_error: worst,
                passed: checked > 0 && worst < cfg.tolerance,
            }
        })
        .collect()
}

/// Both architectures, `K ∈ {2, 5}`, policy and value networks.
pub fn run_gradcheck(cfg: &GradCheckConfig) -> GradCheckReport {
    run_gradcheck_with(cfg, &|ac, b, w| ac.a2c_loss_and_grad(b, w).1)
}

pub fn run_gradcheck_with(cfg: &GradCheckConfig, grad_fn: GradFn<'_>) -> GradCheckReport {
    let mut cases = Vec::new();
    for (ai, k) in [(0u64, 2usize), (0, 5), (1, 2), (1, 5)] {
        let arch = if ai == 0 {
            Architecture::OnePass { num_ues: k }
        } else {
            Architecture::Scalable
        };
        let mut rng = derive_rng(cfg.seed, "gradcheck", ai * 100 + k as u64);
        let ac = ActorCritic::new(arch, cfg.hidden_per_ue, &mut rng);
        let batch = random_batch(k, cfg.batch_size, &mut rng);
        cases.extend(check_agent(&ac, &batch, cfg, grad_fn, &mut rng));
    }
    let passed = cases.iter().all(|c| c.passed);
    GradCheckReport {
        step: cfg.step,
        tolerance: cfg.tolerance,
        cases,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GradCheckConfig {
        GradCheckConfig {
            hidden_per_ue: 16,
            coords_per_tensor: 6,
            ..GradCheckConfig::default()
        }
    }

    #[test]
    fn intact_gradients_pass() {
        let report = run_gradcheck(&small());
        for c in &report.cases {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(report.max_error_by_architecture().len(), 2);
    }

    #[test]
    fn perturbed_backward_fails() {
        let skewed = |ac: &ActorCritic, b: &A2cBatch, w: LossWeights| {
            let mut g = ac.a2c_loss_and_grad(b, w).1;
            g.policy.scale(1.01);
            g
        };
        assert!(!run_gradcheck_with(&small(), &skewed).passed);
    }
}
