use crate::neural::{A2cGrads, ActorCritic, Mlp};

use super::config::{OptimizerKind, TrainConfig};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
struct Moments {
    m: Mlp,
    v: Mlp,
}

/// Gradient-descent step with per-network norm clipping and the step
/// learning-rate schedule.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    clip: f64,
    adam: Option<(Moments, Moments)>,
    steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub learning_rate: f64,
    /// Norms before clipping.
    pub policy_grad_norm: f64,
    pub value_grad_norm: f64,
}

fn clip(g: &mut Mlp, max: f64) -> f64 {
    let norm = g.norm_sq().sqrt();
    if max > 0.0 && norm > max {
        g.scale(max / norm);
    }
    norm
}

fn adam_step(params: &mut Mlp, g: &Mlp, mo: &mut Moments, lr: f64, t: u64) {
    let c1 = 1.0 - ADAM_BETA1.powi(t as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(t as i32);
    for (((p, &gi), m), v) in params
        .params_mut()
        .zip(g.params())
        .zip(mo.m.params_mut())
        .zip(mo.v.params_mut())
    {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * gi;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * gi * gi;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
    }
}

impl Optimizer {
    pub fn new(cfg: &TrainConfig) -> Self {
        Optimizer {
            kind: cfg.optimizer,
            clip: cfg.grad_clip,
            adam: None,
            steps: 0,
        }
    }

    /// Apply `grads` (of the loss to minimize) with learning rate `lr`.
    pub fn step(&mut self, agent: &mut ActorCritic, mut grads: A2cGrads, lr: f64) -> StepStats {
        let pn = clip(&mut grads.policy, self.clip);
        let vn = clip(&mut grads.value, self.clip);
        self.steps += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                agent.policy.add_scaled(-lr, &grads.policy);
                agent.value.add_scaled(-lr, &grads.value);
            }
            OptimizerKind::Adam => {
                let (mp, mv) = self.adam.get_or_insert_with(|| {
                    let z = |n: &Mlp| Moments {
                        m: n.zeros_like(),
                        v: n.zeros_like(),
                    };
                    (z(&agent.policy), z(&agent.value))
                });
                adam_step(&mut agent.policy, &grads.policy, mp, lr, self.steps);
                adam_step(&mut agent.value, &grads.value, mv, lr, self.steps);
            }
        }
        StepStats {
            learning_rate: lr,
            policy_grad_norm: pn,
            value_grad_norm: vn,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_caps_norm() {
        let mut g = Mlp::zeros(&[2, 2]);
        g.params_mut().for_each(|p| *p = 10.0);
        let before = clip(&mut g, 5.0);
        assert!(before > 5.0);
        assert!((g.norm_sq().sqrt() - 5.0).abs() < 1e-12);
    }
}
