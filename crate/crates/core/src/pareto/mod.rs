//! Offline multi-objective oracles over recorded traces.
//!
//! With the exogenous stream fixed by a trace, a scheduling episode is a pure
//! function of its decision sequence. Sequences are scored by
//! `(THP, JFI, PDR)` and compared by domination (more throughput, no worse
//! fairness, no worse drop rate). Three searches are provided: exhaustive
//! enumeration for tiny traces, NSGA-II, and a pruned list search that grows
//! paths TTI by TTI.

mod exhaustive;
mod nsga2;
mod pla;
mod sequence;
mod sort;

pub use exhaustive::{
    distinct, enumerate_all, exhaustive_pareto, objective_key, pareto_set, MAX_ENUMERATION,
};
pub use nsga2::{nsga2_run, GaConfig, GaResult, Individual, Variation};
pub use pla::{pla_run, PlaConfig, PlaPath, PlaResult, StateKey};
pub use sequence::{
    evaluate_sequence, genes_to_allocation, replay_flat, scalarize, ScheduleSequence,
    SEQUENCE_FORMAT,
};
pub use sort::{crowded_cmp, crowding_distance, dominates, fast_nondominated_sort, ranks};

use crate::kpi::Objectives;

/// CSV of labelled objective points: `set,index,thp,jfi,pdr`.
pub fn fronts_csv<'a>(sets: impl IntoIterator<Item = (&'a str, &'a [Objectives])>) -> String {
    let mut s = String::from("set,index,thp,jfi,pdr\n");
    for (name, pts) in sets {
        for (i, o) in pts.iter().enumerate() {
            s.push_str(&format!("{name},{i},{},{},{}\n", o.thp, o.jfi, o.pdr));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::env::{EnvConfig, SnrProfile, Trace};

    fn toy(seed: u64, k: usize, n: u64) -> Arc<Trace> {
        let cfg = EnvConfig {
            num_ues: k,
            num_rbgs: 1,
            duration_ttis: n,
            arrival_rate: 600.0,
            packet_size_bits: 3000,
            buffer_capacity_bits: 12_000,
            max_delay_ttis: 3,
            snr: SnrProfile::Uniform { min_db: -5.0, max_db: 20.0 },
            ..EnvConfig::default()
        };
        Arc::new(Trace::record(&cfg, seed, n).unwrap())
    }

    #[test]
    fn evaluation_is_pure() {
        let t = toy(3, 3, 6);
        let seq = ScheduleSequence::from_flat(3, 1, &[0, 1, 2, 2, 1, 0]);
        let a = evaluate_sequence(&t, &seq).unwrap();
        let b = evaluate_sequence(&t, &seq).unwrap();
        assert_eq!(objective_key(&a), objective_key(&b));
    }

    #[test]
    fn wrong_length_is_rejected() {
        let t = toy(3, 3, 6);
        let seq = ScheduleSequence::from_flat(3, 1, &[0, 1]);
        assert!(evaluate_sequence(&t, &seq).is_err());
    }

    #[test]
    fn ga_without_generations_returns_initial_population() {
        let t = toy(4, 3, 5);
        let cfg = GaConfig { population: 10, generations: 0, ..GaConfig::default() };
        let r = nsga2_run(&t, &cfg, 1).unwrap();
        assert_eq!(r.population.len(), 10);
        for ind in &r.population {
            let o = replay_flat(&t, &ind.genes).unwrap().finalize();
            assert_eq!(objective_key(&o), objective_key(&ind.objectives));
        }
    }

    #[test]
    fn odd_population_rejected() {
        let cfg = GaConfig { population: 5, ..GaConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_ue_keeps_one_path() {
        let t = toy(5, 1, 8);
        let r = pla_run(&t, &PlaConfig::default()).unwrap();
        assert!(r.survivors.iter().all(|&s| s == 1));
    }

    #[test]
    fn unbounded_list_matches_enumeration() {
        let t = toy(6, 3, 4);
        let cfg = PlaConfig { l_max: 81, ..PlaConfig::default() };
        let r = pla_run(&t, &cfg).unwrap();
        let got = pareto_set(&r.paths.iter().map(|p| p.objectives).collect::<Vec<_>>());
        assert_eq!(got, exhaustive_pareto(&t).unwrap());
    }

    #[test]
    fn single_path_is_bounded_by_enumeration() {
        let t = toy(7, 3, 4);
        let cfg = PlaConfig { l_max: 1, ..PlaConfig::default() };
        let r = pla_run(&t, &cfg).unwrap();
        let best = enumerate_all(&t)
            .unwrap()
            .iter()
            .map(|(_, o)| scalarize(o, &cfg.weights, &t))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(r.best_path().score <= best + 1e-12);
    }
}
