use std::sync::Arc;

use smartsched::baselines::{classical, Scheduler};
use smartsched::compare::{compare, run_episode, CompareSpec, EpisodeEnvs};
use smartsched::env::{CellEnv, EnvConfig, SnrProfile, Trace, Traffic};
use smartsched::error::Result;
use smartsched::kpi::RewardWeights;
use smartsched::seed::derive;

fn named(name: &'static str) -> impl Fn(&CellEnv) -> Result<Box<dyn Scheduler + Send>> {
    move |env| Ok(classical(name, env.num_ues(), env.config().avg_window).unwrap())
}

#[test]
fn maxci_beats_rr_on_asymmetric_trace() {
    let cfg = EnvConfig {
        num_ues: 2,
        traffic: Traffic::FullBuffer,
        snr: SnrProfile::Fixed { mean_db: vec![18.0, 2.0] },
        duration_ttis: 400,
        ..EnvConfig::default()
    };
    let trace = Arc::new(Trace::record(&cfg, 3, 400).unwrap());
    let run = |name| {
        let mut s = classical(name, 2, 100).unwrap();
        run_episode(CellEnv::replay(trace.clone()).unwrap(), s.as_mut(), RewardWeights::default(), 100)
            .unwrap()
    };
    let (mc, rr) = (run("maxci"), run("rr"));
    assert_eq!(mc.exogenous_digest, rr.exogenous_digest);
    assert!(mc.objectives.thp >= rr.objectives.thp);
}

fn variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[test]
fn pairing_reduces_ratio_variance() {
    let cfg = EnvConfig { duration_ttis: 300, ..EnvConfig::default() };
    let (pf, rr) = (named("pf"), named("rr"));
    let spec = CompareSpec {
        scheme: "pf",
        baseline: "rr",
        make_scheme: &pf,
        make_baseline: &rr,
        weights: RewardWeights::default(),
        window_ttis: 100,
    };
    let eps = |paired: bool| -> Vec<EpisodeEnvs> {
        (0..20)
            .map(|i| {
                let s = derive(40, "pair", i);
                EpisodeEnvs {
                    seed: s,
                    scheme_env: CellEnv::reset(&cfg, s).unwrap(),
                    baseline_env: (!paired)
                        .then(|| CellEnv::reset(&cfg, derive(s, "independent", 0)).unwrap()),
                }
            })
            .collect()
    };
    let ratios = |paired| -> Vec<f64> {
        let r = compare(&spec, eps(paired)).unwrap();
        assert_eq!(r.episodes.iter().all(|e| e.exogenous_identical), paired);
        r.episodes.iter().map(|e| e.ratios.thp.unwrap()).collect()
    };
    assert!(variance(&ratios(true)) < variance(&ratios(false)));
}
