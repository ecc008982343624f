use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sequence::{genes_to_allocation, scalarize, ScheduleSequence};
use super::sort::{crowded_cmp, crowding_distance, fast_nondominated_sort};
use crate::env::{CellEnv, RlcBuffer, Trace};
use crate::error::{ConfigError, Result};
use crate::kpi::{KpiWindow, Objectives, RewardWeights};

/// How two paths are recognized as having reached the same state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKey {
    /// Full buffer contents plus cumulative KPI counters. Merging is exact:
    /// merged paths have identical futures and objectives.
    Exact,
    /// Per UE: queued bits, HoL age bucket, delivered bits in whole packets.
    /// Merges more aggressively and may discard distinct objectives.
    Coarse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlaConfig {
    pub l_max: usize,
    pub state_key: StateKey,
    /// Bucket width of the HoL age in the coarse key.
    pub hol_bucket_ttis: u64,
    /// Scalarization used to select the final path.
    pub weights: RewardWeights,
}

impl Default for PlaConfig {
    fn default() -> Self {
        PlaConfig {
            l_max: 64,
            state_key: StateKey::Exact,
            hol_bucket_ttis: 10,
            weights: RewardWeights::default(),
        }
    }
}

impl PlaConfig {
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        if self.l_max == 0 {
            return Err(ConfigError::new("pareto.pla.l_max", "must be at least 1"));
        }
        if self.hol_bucket_ttis == 0 {
            return Err(ConfigError::new("pareto.pla.hol_bucket_ttis", "must be at least 1"));
        }
        self.weights.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Exact(Vec<RlcBuffer>, KpiWindow),
    Coarse(Vec<(u64, u64, u64)>),
}

#[derive(Clone)]
struct Path {
    env: CellEnv,
    window: KpiWindow,
    genes: Vec<usize>,
}

impl Path {
    fn key(&self, cfg: &PlaConfig) -> Key {
        match cfg.state_key {
            StateKey::Exact => Key::Exact(self.env.buffers().to_vec(), self.window.clone()),
            StateKey::Coarse => {
                let now = self.env.tti();
                let pkt = u64::from(self.env.config().packet_size_bits.max(1));
                Key::Coarse(
                    self.env
                        .buffers()
                        .iter()
                        .zip(self.window.delivered())
                        .map(|(b, &d)| {
                            (b.queued_bits(), b.hol_wait(now) / cfg.hol_bucket_ttis, d / pkt)
                        })
                        .collect(),
                )
            }
        }
    }

    /// Per-RBG choices: every admissible UE (buffer nonempty, rate > 0), and
    /// an idle choice when some UE is not admissible. Idle is encoded as the
    /// lowest inadmissible UE, which transmits nothing when replayed.
    fn choices(&self) -> Vec<Vec<usize>> {
        let env = &self.env;
        (0..env.num_rbgs())
            .map(|b| {
                let mut opts = Vec::new();
                let mut idle = None;
                for k in 0..env.num_ues() {
                    if env.is_active(k) && env.achievable_rate(k, b) > 0 {
                        opts.push(k);
                    } else if idle.is_none() {
                        idle = Some(k);
                    }
                }
                opts.extend(idle);
                opts
            })
            .collect()
    }

    fn expand(&self) -> Result<Vec<Path>> {
        let choices = self.choices();
        let mut out = Vec::new();
        let mut pick = vec![0usize; choices.len()];
        loop {
            let genes: Vec<usize> = pick.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
            let mut next = self.clone();
            let o = next.env.step(&genes_to_allocation(&self.env, &genes))?;
            next.window.update(&o);
            next.genes.extend(genes);
            out.push(next);
            // odometer over the per-RBG choices
            let mut b = choices.len();
            loop {
                if b == 0 {
                    return Ok(out);
                }
                b -= 1;
                pick[b] += 1;
                if pick[b] < choices[b].len() {
                    break;
                }
                pick[b] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaPath {
    /// Flat TTI-major genes.
    pub genes: Vec<usize>,
    pub objectives: Objectives,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaResult {
    /// Surviving paths after the last TTI.
    pub paths: Vec<PlaPath>,
    /// Index into `paths` of the selected path.
    pub best: usize,
    /// Survivor count after pruning at every TTI.
    pub survivors: Vec<usize>,
    pub num_ues: usize,
    pub num_rbgs: usize,
}

impl PlaResult {
    pub fn best_path(&self) -> &PlaPath {
        &self.paths[self.best]
    }

    pub fn best_sequence(&self) -> ScheduleSequence {
        ScheduleSequence::from_flat(self.num_ues, self.num_rbgs, &self.best_path().genes)
    }

    /// Nondominated members of the final list.
    pub fn nondominated(&self) -> Vec<&PlaPath> {
        let objs: Vec<Objectives> = self.paths.iter().map(|p| p.objectives).collect();
        let fronts = fast_nondominated_sort(&objs);
        fronts
            .first()
            .map(|f| f.iter().map(|&i| &self.paths[i]).collect())
            .unwrap_or_default()
    }
}

fn prune(paths: Vec<Path>, l_max: usize) -> Vec<Path> {
    let objs: Vec<Objectives> = paths.iter().map(|p| p.window.finalize()).collect();
    let fronts = fast_nondominated_sort(&objs);
    let mut order = Vec::with_capacity(paths.len());
    for (rank, f) in fronts.iter().enumerate() {
        for (&i, d) in f.iter().zip(crowding_distance(&objs, f)) {
            if d > 0.0 {
                order.push((rank, d, i));
            }
        }
    }
    order.sort_by(|&a, &b| crowded_cmp(a, b));
    order.truncate(l_max);
    let mut slots: Vec<Option<Path>> = paths.into_iter().map(Some).collect();
    order
        .into_iter()
        .map(|(_, _, i)| slots[i].take().expect("each path kept once"))
        .collect()
}

/// Pareto list algorithm: expand, merge and prune paths TTI by TTI over a
/// recorded trace, then pick the best surviving path by scalarized reward.
pub fn pla_run(trace: &Arc<Trace>, cfg: &PlaConfig) -> Result<PlaResult> {
    cfg.validate()?;
    let root = Path {
        env: CellEnv::replay(trace.clone())?,
        window: KpiWindow::new(trace.num_ues(), 0),
        genes: Vec::new(),
    };
    let mut paths = vec![root];
    let mut survivors = Vec::with_capacity(trace.len());
    for _ in 0..trace.len() {
        let expanded: Vec<Vec<Path>> = paths.par_iter().map(Path::expand).collect::<Result<_>>()?;
        let mut seen = HashSet::new();
        let mut next: Vec<Path> = expanded
            .into_iter()
            .flatten()
            .filter(|p| seen.insert(p.key(cfg)))
            .collect();
        if next.len() > cfg.l_max {
            next = prune(next, cfg.l_max);
        }
        survivors.push(next.len());
        paths = next;
    }
    let paths: Vec<PlaPath> = paths
        .into_iter()
        .map(|p| {
            let objectives = p.window.finalize();
            PlaPath {
                score: scalarize(&objectives, &cfg.weights, trace),
                genes: p.genes,
                objectives,
            }
        })
        .collect();
    let best = paths
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if p.score > paths[b].score { i } else { b });
    Ok(PlaResult {
        paths,
        best,
        survivors,
        num_ues: trace.num_ues(),
        num_rbgs: trace.num_rbgs(),
    })
}
