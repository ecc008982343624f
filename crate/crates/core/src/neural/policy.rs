use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, MlpCache};
use crate::error::{Error, Result};
use crate::seed::Rng;

/// Per-UE state features fed to the networks.
pub const FEATURES: usize = 4;
/// Subtracted from the logits of inactive UEs before the softmax.
pub const MASK_PENALTY: f64 = 1e9;

/// Network layout.
///
/// `OnePass` reads the concatenated `4K` state and emits `K` logits, so it is
/// tied to `K`. `Scalable` applies one shared `4 -> 1` network to every UE and
/// a value network to the mean UE state, so it accepts any `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    OnePass { num_ues: usize },
    Scalable,
}

impl Architecture {
    /// Hidden multiplier `V`: `K` for one-pass, 1 for scalable.
    pub fn width_factor(&self) -> usize {
        match self {
            Architecture::OnePass { num_ues } => *num_ues,
            Architecture::Scalable => 1,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Architecture::OnePass { num_ues } => FEATURES * num_ues,
            Architecture::Scalable => FEATURES,
        }
    }

    pub fn policy_outputs(&self) -> usize {
        match self {
            Architecture::OnePass { num_ues } => *num_ues,
            Architecture::Scalable => 1,
        }
    }

    pub fn layer_sizes(&self, hidden_per_ue: usize) -> (Vec<usize>, Vec<usize>) {
        let h = hidden_per_ue * self.width_factor();
        let i = self.input_dim();
        (vec![i, h, h, self.policy_outputs()], vec![i, h, h, 1])
    }
}

/// Probabilities over UEs after masking.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Softmax of `logits` with [`MASK_PENALTY`] subtracted from inactive
/// entries. At least one entry must be active.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    log_softmax_masked(logits, mask)
        .into_iter()
        .map(f64::exp)
        .collect()
}

fn log_softmax_masked(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    assert!(mask.iter().any(|&a| a), "softmax needs an active UE");
    let shifted: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(&z, &a)| if a { z } else { z - MASK_PENALTY })
        .collect();
    let m = shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = shifted.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    shifted.iter().map(|z| z - m - lse).collect()
}

/// Entropy over active UEs.
pub fn entropy(probs: &[f64], mask: &[bool]) -> f64 {
    -probs
        .iter()
        .zip(mask)
        .filter(|(&p, &a)| a && p > 0.0)
        .map(|(&p, _)| p * p.ln())
        .sum::<f64>()
}

/// Draw from the categorical distribution.
pub fn sample_action(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Lowest-index most likely UE.
pub fn greedy_action(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Stack per-decision UE states into rows of `4K` features.
pub fn stack_states<S: AsRef<[[f64; FEATURES]]>>(states: &[S]) -> Array2<f64> {
    let k = states.first().map_or(0, |s| s.as_ref().len());
    let mut flat = Vec::with_capacity(states.len() * k * FEATURES);
    for s in states {
        let s = s.as_ref();
        assert_eq!(s.len(), k, "all states in a batch need the same UE count");
        flat.extend(s.iter().flatten());
    }
    Array2::from_shape_vec((states.len(), k * FEATURES), flat).expect("shape")
}

/// Policy and value networks of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub arch: Architecture,
    pub hidden_per_ue: usize,
    pub policy: Mlp,
    pub value: Mlp,
}

/// Weights of the regularizer and critic terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub entropy: f64,
    pub value: f64,
}

/// Inputs of one A2C gradient evaluation.
#[derive(Debug, Clone, Default)]
pub struct A2cBatch {
    /// Decision states, one `4K` row per decision.
    pub decisions: Array2<f64>,
    pub masks: Vec<Vec<bool>>,
    pub actions: Vec<usize>,
    /// Advantage of each decision, treated as a constant.
    pub advantages: Vec<f64>,
    /// States regressed by the critic, one row per TTI.
    pub value_states: Array2<f64>,
    /// n-step return targets for `value_states`.
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct A2cLoss {
    /// `Σ A log π(a|s)`
    pub objective: f64,
    /// Summed entropy over decisions.
    pub entropy: f64,
    /// `Σ (target − V(s))²`
    pub value_loss: f64,
    /// `−(objective + λe·entropy) + λv·value_loss`
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct A2cGrads {
    pub policy: Mlp,
    pub value: Mlp,
}

impl ActorCritic {
    pub fn new(arch: Architecture, hidden_per_ue: usize, rng: &mut Rng) -> Self {
        let (p, v) = arch.layer_sizes(hidden_per_ue);
        ActorCritic {
            arch,
            hidden_per_ue,
            policy: Mlp::new(&p, rng),
            value: Mlp::new(&v, rng),
        }
    }

    /// Can this agent schedule `num_ues` UEs?
    pub fn check_num_ues(&self, num_ues: usize) -> Result<()> {
        match self.arch {
            Architecture::OnePass { num_ues: k } if k != num_ues => Err(Error::ShapeMismatch(
                format!("one-pass network built for {k} UEs cannot schedule {num_ues}"),
            )),
            _ => Ok(()),
        }
    }

    fn ue_rows(x: ArrayView2<'_, f64>) -> Array2<f64> {
        let (m, w) = x.dim();
        let k = w / FEATURES;
        x.as_standard_layout()
            .into_owned()
            .into_shape_with_order((m * k, FEATURES))
            .expect("contiguous")
    }

    fn value_input(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match self.arch {
            Architecture::OnePass { .. } => x.to_owned(),
            Architecture::Scalable => {
                let (m, w) = x.dim();
                let k = w / FEATURES;
                let rows = Self::ue_rows(x);
                let per = rows
                    .into_shape_with_order((m, k, FEATURES))
                    .expect("contiguous");
                per.mean_axis(Axis(1)).expect("K >= 1")
            }
        }
    }

    /// Logits `(M, K)` for `M` stacked states.
    pub fn policy_forward(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, MlpCache) {
        let (m, w) = x.dim();
        match self.arch {
            Architecture::OnePass { .. } => self.policy.forward(x),
            Architecture::Scalable => {
                let (out, cache) = self.policy.forward(Self::ue_rows(x).view());
                let k = w / FEATURES;
                (out.into_shape_with_order((m, k)).expect("contiguous"), cache)
            }
        }
    }

    pub fn policy_backward(&self, cache: &MlpCache, grad_logits: ArrayView2<'_, f64>) -> Mlp {
        match self.arch {
            Architecture::OnePass { .. } => self.policy.backward(cache, grad_logits),
            Architecture::Scalable => {
                let (m, k) = grad_logits.dim();
                let g = grad_logits
                    .as_standard_layout()
                    .into_owned()
                    .into_shape_with_order((m * k, 1))
                    .expect("contiguous");
                self.policy.backward(cache, g.view())
            }
        }
    }

    pub fn value_forward(&self, x: ArrayView2<'_, f64>) -> (Array1<f64>, MlpCache) {
        let (out, cache) = self.value.forward(self.value_input(x).view());
        (out.column(0).to_owned(), cache)
    }

    pub fn value_backward(&self, cache: &MlpCache, grad: &Array1<f64>) -> Mlp {
        let g = grad.view().insert_axis(Axis(1));
        self.value.backward(cache, g)
    }

    pub fn policy_batch<S: AsRef<[[f64; FEATURES]]>>(
        &self,
        states: &[S],
        masks: &[Vec<bool>],
    ) -> Vec<PolicyOutput> {
        if states.is_empty() {
            return Vec::new();
        }
        let (logits, _) = self.policy_forward(stack_states(states).view());
        logits
            .rows()
            .into_iter()
            .zip(masks)
            .map(|(row, mask)| {
                let logits = row.to_vec();
                let probs = masked_softmax(&logits, mask);
                PolicyOutput {
                    logits,
                    probs,
                    mask: mask.clone(),
                }
            })
            .collect()
    }

    pub fn policy_output(&self, state: &[[f64; FEATURES]], mask: &[bool]) -> PolicyOutput {
        self.policy_batch(&[state], &[mask.to_vec()]).remove(0)
    }

    pub fn value_batch<S: AsRef<[[f64; FEATURES]]>>(&self, states: &[S]) -> Vec<f64> {
        if states.is_empty() {
            return Vec::new();
        }
        self.value_forward(stack_states(states).view()).0.to_vec()
    }

    pub fn value_estimate(&self, state: &[[f64; FEATURES]]) -> f64 {
        self.value_batch(&[state])[0]
    }

    /// Loss only, for finite-difference checks.
    pub fn a2c_loss(&self, batch: &A2cBatch, w: LossWeights) -> A2cLoss {
        self.loss_impl(batch, w, false).0
    }

    /// Loss and its gradient with respect to both networks.
    pub fn a2c_loss_and_grad(&self, batch: &A2cBatch, w: LossWeights) -> (A2cLoss, A2cGrads) {
        let (loss, grads) = self.loss_impl(batch, w, true);
        (loss, grads.expect("requested"))
    }

    fn loss_impl(&self, batch: &A2cBatch, w: LossWeights, grad: bool) -> (A2cLoss, Option<A2cGrads>) {
        let mut loss = A2cLoss::default();
        let mut policy_grad = None;
        if !batch.actions.is_empty() {
            let (logits, cache) = self.policy_forward(batch.decisions.view());
            let mut g = Array2::<f64>::zeros(logits.dim());
            for (i, row) in logits.rows().into_iter().enumerate() {
                let mask = &batch.masks[i];
                let a = batch.actions[i];
                let adv = batch.advantages[i];
                let logp = log_softmax_masked(row.as_slice().expect("row"), mask);
                let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
                let h = -probs
                    .iter()
                    .zip(&logp)
                    .zip(mask)
                    .filter(|(_, &on)| on)
                    .map(|((p, l), _)| p * l)
                    .sum::<f64>();
                loss.objective += adv * logp[a];
                loss.entropy += h;
                if grad {
                    for j in 0..probs.len() {
                        if !mask[j] {
                            continue;
                        }
                        let dj = adv * (f64::from(u8::from(j == a)) - probs[j]);
                        let dh = -probs[j] * (logp[j] + h);
                        g[[i, j]] = -(dj + w.entropy * dh);
                    }
                }
            }
            if grad {
                policy_grad = Some(self.policy_backward(&cache, g.view()));
            }
        }
        let mut value_grad = None;
        if !batch.targets.is_empty() {
            let (v, cache) = self.value_forward(batch.value_states.view());
            let mut g = Array1::<f64>::zeros(v.len());
            for (i, (&vi, &t)) in v.iter().zip(&batch.targets).enumerate() {
                let e = t - vi;
                loss.value_loss += e * e;
                g[i] = -2.0 * w.value * e;
            }
            if grad {
                value_grad = Some(self.value_backward(&cache, &g));
            }
        }
        loss.total = -(loss.objective + w.entropy * loss.entropy) + w.value * loss.value_loss;
        let grads = grad.then(|| A2cGrads {
            policy: policy_grad.unwrap_or_else(|| self.policy.zeros_like()),
            value: value_grad.unwrap_or_else(|| self.value.zeros_like()),
        });
        (loss, grads)
    }
}
