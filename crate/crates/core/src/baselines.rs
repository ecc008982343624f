//! Classical schedulers: round robin, Max C/I, max-min and proportional fair.
//!
//! Selectors are pure functions over per-UE values and an active mask; ties go
//! to the lowest UE index and `None` means the RBG stays idle. The
//! [`Scheduler`] implementations extend them to several RBGs by deciding one
//! RBG at a time against the provisional state of a [`TtiPlanner`].

use crate::env::{Allocation, CellEnv, StepOutcome, TtiPlanner};

/// Floor on the PF average throughput, bits/TTI.
pub const PF_EPSILON: f64 = 1e-6;

/// First active UE strictly after `last_served` in cyclic order.
pub fn rr_select(active: &[bool], last_served: Option<usize>) -> Option<usize> {
    let k = active.len();
    let start = last_served.map_or(0, |l| l + 1);
    (0..k).map(|i| (start + i) % k).find(|&u| active[u])
}

/// Lowest-index argmax of `score` over active UEs.
fn argmax_active(active: &[bool], score: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (u, _) in active.iter().enumerate().filter(|(_, &a)| a) {
        let s = score(u);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((u, s));
        }
    }
    best.map(|(u, _)| u)
}

pub fn max_ci_select(rates: &[f64], active: &[bool]) -> Option<usize> {
    argmax_active(active, |u| rates[u])
}

pub fn max_min_select(avg_throughput: &[f64], active: &[bool]) -> Option<usize> {
    argmax_active(active, |u| -avg_throughput[u])
}

/// `argmax I_n / max(T_n, ε)` over active UEs.
pub fn pf_select(rates: &[f64], avg_throughput: &[f64], active: &[bool]) -> Option<usize> {
    argmax_active(active, |u| rates[u] / avg_throughput[u].max(PF_EPSILON))
}

/// Exponentially windowed average throughput, updated once per TTI:
/// `T ← (W−1)/W · T + I/W`.
#[derive(Debug, Clone, PartialEq)]
pub struct PfState {
    pub avg: Vec<f64>,
    pub window: u32,
}

impl PfState {
    pub fn new(num_ues: usize, window: u32) -> Self {
        assert!(window >= 1, "PF window must be at least 1");
        PfState {
            avg: vec![0.0; num_ues],
            window,
        }
    }

    /// `served[n]` is the rate delivered to UE `n` this TTI (0 if unserved).
    pub fn update(&mut self, served: &[f64]) {
        let w = f64::from(self.window);
        for (t, &i) in self.avg.iter_mut().zip(served) {
            *t = (w - 1.0) / w * *t + i / w;
        }
    }
}

/// A scheduler plugged into the environment loop.
pub trait Scheduler {
    fn name(&self) -> &str;

    /// Decide every RBG of the current TTI.
    fn schedule(&mut self, env: &CellEnv) -> Allocation;

    /// Called with the outcome of the allocation just returned.
    fn observe(&mut self, _outcome: &StepOutcome) {}
}

/// Plan a TTI RBG by RBG with `pick(planner) -> UE`.
fn plan(env: &CellEnv, mut pick: impl FnMut(&TtiPlanner<'_>) -> Option<usize>) -> Allocation {
    let mut p = env.planner();
    while p.next_rbg().is_some() {
        let ue = pick(&p);
        p.grant(ue);
    }
    p.finish()
}

fn rbg_rates(p: &TtiPlanner<'_>) -> Vec<f64> {
    (0..p.env().num_ues()).map(|k| f64::from(p.rate(k))).collect()
}

#[derive(Debug, Clone, Default)]
pub struct RoundRobin {
    last: Option<usize>,
}

impl Scheduler for RoundRobin {
    fn name(&self) -> &str {
        "rr"
    }

    fn schedule(&mut self, env: &CellEnv) -> Allocation {
        let last = &mut self.last;
        plan(env, |p| {
            let ue = rr_select(&p.active_mask(), *last);
            if ue.is_some() {
                *last = ue;
            }
            ue
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct MaxCi;

impl Scheduler for MaxCi {
    fn name(&self) -> &str {
        "maxci"
    }

    fn schedule(&mut self, env: &CellEnv) -> Allocation {
        plan(env, |p| max_ci_select(&rbg_rates(p), &p.active_mask()))
    }
}

/// Serves the active UE with the lowest windowed delivered throughput. Within
/// a TTI, earlier grants raise the granted UE's provisional average.
#[derive(Debug, Clone)]
pub struct MaxMin {
    state: PfState,
}

impl MaxMin {
    pub fn new(num_ues: usize, window: u32) -> Self {
        MaxMin {
            state: PfState::new(num_ues, window),
        }
    }
}

impl Scheduler for MaxMin {
    fn name(&self) -> &str {
        "maxmin"
    }

    fn schedule(&mut self, env: &CellEnv) -> Allocation {
        let w = f64::from(self.state.window);
        let mut provisional = self.state.avg.clone();
        plan(env, |p| {
            let ue = max_min_select(&provisional, &p.active_mask());
            if let Some(k) = ue {
                provisional[k] += f64::from(p.rate(k)) / w;
            }
            ue
        })
    }

    fn observe(&mut self, out: &StepOutcome) {
        let served: Vec<f64> = out.delivered_bits.iter().map(|&b| b as f64).collect();
        self.state.update(&served);
    }
}

/// Proportional fair. `I` is the achievable rate on the RBG being decided;
/// `T` is updated with delivered bits once per TTI and held fixed across the
/// RBGs of a TTI.
#[derive(Debug, Clone)]
pub struct ProportionalFair {
    pub state: PfState,
}

impl ProportionalFair {
    pub fn new(num_ues: usize, window: u32) -> Self {
        ProportionalFair {
            state: PfState::new(num_ues, window),
        }
    }
}

impl Scheduler for ProportionalFair {
    fn name(&self) -> &str {
        "pf"
    }

    fn schedule(&mut self, env: &CellEnv) -> Allocation {
        let avg = &self.state.avg;
        plan(env, |p| pf_select(&rbg_rates(p), avg, &p.active_mask()))
    }

    fn observe(&mut self, out: &StepOutcome) {
        let served: Vec<f64> = out.delivered_bits.iter().map(|&b| b as f64).collect();
        self.state.update(&served);
    }
}

/// Builds a classical scheduler by name (`rr`, `maxci`, `maxmin`, `pf`).
pub fn classical(name: &str, num_ues: usize, window: u32) -> Option<Box<dyn Scheduler + Send>> {
    Some(match name {
        "rr" => Box::new(RoundRobin::default()),
        "maxci" => Box::new(MaxCi),
        "maxmin" => Box::new(MaxMin::new(num_ues, window)),
        "pf" => Box::new(ProportionalFair::new(num_ues, window)),
        _ => return None,
    })
}
