use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sequence::{replay_flat, ScheduleSequence};
use super::sort::{crowded_cmp, crowding_distance, fast_nondominated_sort, ranks};
use crate::env::Trace;
use crate::error::{ConfigError, Result};
use crate::kpi::Objectives;
use crate::seed::{derive_rng, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variation {
    /// Simulated binary crossover and polynomial mutation on a real-valued
    /// genotype in `[0, K)`; the UE index is its floor.
    SbxPolynomial,
    /// Uniform crossover and random-reset mutation on the integer genes.
    UniformReset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene probability that SBX (or uniform swap) touches a gene pair.
    pub gene_crossover_prob: f64,
    pub mutation_prob: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    pub variation: Variation,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 40,
            generations: 200,
            crossover_prob: 0.95,
            gene_crossover_prob: 0.5,
            mutation_prob: 0.05,
            eta_c: 5.0,
            eta_m: 20.0,
            variation: Variation::UniformReset,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        let err = |f: &str, r: &str| Err(ConfigError::new(format!("pareto.ga.{f}"), r));
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return err("population", "must be even and at least 2");
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("gene_crossover_prob", self.gene_crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return err(name, "must be in [0, 1]");
            }
        }
        if !(self.eta_c >= 0.0 && self.eta_m >= 0.0) {
            return err("eta_c", "distribution indices must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Individual {
    /// Flat TTI-major genes.
    pub genes: Vec<usize>,
    pub objectives: Objectives,
    pub rank: usize,
    pub crowding: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub population: Vec<Individual>,
    pub num_ues: usize,
    pub num_rbgs: usize,
}

impl GaResult {
    /// Nondominated members of the final population.
    pub fn first_front(&self) -> Vec<&Individual> {
        self.population.iter().filter(|i| i.rank == 0).collect()
    }

    pub fn sequence(&self, ind: &Individual) -> ScheduleSequence {
        ScheduleSequence::from_flat(self.num_ues, self.num_rbgs, &ind.genes)
    }
}

fn evaluate_all(trace: &Arc<Trace>, pop: &[Vec<f64>]) -> Result<Vec<Objectives>> {
    pop.par_iter()
        .map(|g| Ok(replay_flat(trace, &decode(g))?.finalize()))
        .collect()
}

/// Rank and crowding of every member of `objs`.
fn rank_and_crowd(objs: &[Objectives]) -> (Vec<usize>, Vec<f64>, Vec<Vec<usize>>) {
    let fronts = fast_nondominated_sort(objs);
    let r = ranks(&fronts, objs.len());
    let mut c = vec![0.0; objs.len()];
    for f in &fronts {
        for (&i, d) in f.iter().zip(crowding_distance(objs, f)) {
            c[i] = d;
        }
    }
    (r, c, fronts)
}

fn tournament(rank: &[usize], crowd: &[f64], rng: &mut Rng) -> usize {
    let n = rank.len();
    let a = rng.random_range(0..n);
    let b = if n > 1 {
        let x = rng.random_range(0..n - 1);
        if x >= a { x + 1 } else { x }
    } else {
        a
    };
    if crowded_cmp((rank[a], crowd[a], a), (rank[b], crowd[b], b)).is_le() {
        a
    } else {
        b
    }
}

fn sbx_pair(x1: f64, x2: f64, eta: f64, rng: &mut Rng) -> (f64, f64) {
    let u: f64 = rng.random();
    let e = 1.0 / (eta + 1.0);
    let beta = if u <= 0.5 {
        (2.0 * u).powf(e)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(e)
    };
    (
        0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2),
        0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2),
    )
}

fn poly_delta(eta: f64, rng: &mut Rng) -> f64 {
    let u: f64 = rng.random();
    let e = 1.0 / (eta + 1.0);
    if u < 0.5 {
        (2.0 * u).powf(e) - 1.0
    } else {
        1.0 - (2.0 * (1.0 - u)).powf(e)
    }
}

fn vary(cfg: &GaConfig, k: usize, p1: &[f64], p2: &[f64], rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let hi = k as f64;
    let clamp = |x: f64| x.clamp(0.0, hi - 1e-9);
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.random_bool(cfg.crossover_prob) {
        for i in 0..c1.len() {
            if !rng.random_bool(cfg.gene_crossover_prob) {
                continue;
            }
            match cfg.variation {
                Variation::SbxPolynomial => {
                    let (a, b) = sbx_pair(p1[i], p2[i], cfg.eta_c, rng);
                    c1[i] = clamp(a);
                    c2[i] = clamp(b);
                }
                Variation::UniformReset => std::mem::swap(&mut c1[i], &mut c2[i]),
            }
        }
    }
    for c in [&mut c1, &mut c2] {
        for g in c.iter_mut() {
            if !rng.random_bool(cfg.mutation_prob) {
                continue;
            }
            *g = match cfg.variation {
                Variation::SbxPolynomial => clamp(*g + poly_delta(cfg.eta_m, rng) * hi),
                Variation::UniformReset => rng.random_range(0..k) as f64 + 0.5,
            };
        }
    }
    (c1, c2)
}

fn decode(x: &[f64]) -> Vec<usize> {
    x.iter().map(|&v| v as usize).collect()
}

/// NSGA-II over decision sequences replayed on `trace`.
pub fn nsga2_run(trace: &Arc<Trace>, cfg: &GaConfig, seed: u64) -> Result<GaResult> {
    cfg.validate()?;
    let k = trace.num_ues();
    let len = trace.len() * trace.num_rbgs();
    let mut rng = derive_rng(seed, "nsga2", 0);
    // real-valued genotype on [0, K); the UE index is its floor
    let mut genes: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| (0..len).map(|_| rng.random_range(0..k) as f64 + 0.5).collect())
        .collect();
    let mut objs = evaluate_all(trace, &genes)?;
    let (mut rank, mut crowd, _) = rank_and_crowd(&objs);
    for _ in 0..cfg.generations {
        let mut offspring = Vec::with_capacity(cfg.population);
        while offspring.len() < cfg.population {
            let a = tournament(&rank, &crowd, &mut rng);
            let b = tournament(&rank, &crowd, &mut rng);
            let (c1, c2) = vary(cfg, k, &genes[a], &genes[b], &mut rng);
            offspring.push(c1);
            offspring.push(c2);
        }
        let off_objs = evaluate_all(trace, &offspring)?;
        genes.extend(offspring);
        objs.extend(off_objs);
        let (r, c, fronts) = rank_and_crowd(&objs);
        let mut keep: Vec<usize> = Vec::with_capacity(cfg.population);
        for f in &fronts {
            if keep.len() + f.len() <= cfg.population {
                keep.extend(f);
            } else {
                let mut last = f.clone();
                last.sort_by(|&x, &y| crowded_cmp((r[x], c[x], x), (r[y], c[y], y)));
                keep.extend(&last[..cfg.population - keep.len()]);
            }
            if keep.len() == cfg.population {
                break;
            }
        }
        genes = keep.iter().map(|&i| std::mem::take(&mut genes[i])).collect();
        objs = keep.iter().map(|&i| objs[i]).collect();
        rank = keep.iter().map(|&i| r[i]).collect();
        crowd = keep.iter().map(|&i| c[i]).collect();
    }
    // ranks within the final population
    let (rank, crowd, _) = rank_and_crowd(&objs);
    let population = genes
        .into_iter()
        .zip(objs)
        .zip(rank.into_iter().zip(crowd))
        .map(|((genes, objectives), (rank, crowding))| Individual {
            genes: decode(&genes),
            objectives,
            rank,
            crowding,
        })
        .collect();
    Ok(GaResult {
        population,
        num_ues: k,
        num_rbgs: trace.num_rbgs(),
    })
}
