//! PF against a straight-line recomputation of its selection rule.

use std::sync::Arc;

use smartsched::baselines::{classical, PF_EPSILON};
use smartsched::env::{CellEnv, EnvConfig, Trace};

fn check(cfg: &EnvConfig, seed: u64, ttis: u64) {
    let trace = Arc::new(Trace::record(cfg, seed, ttis).unwrap());
    let mut env = CellEnv::replay(trace).unwrap();
    let k = cfg.num_ues;
    let w = f64::from(cfg.avg_window);
    let mut pf = classical("pf", k, cfg.avg_window).unwrap();
    let mut t = vec![0.0f64; k];
    let mut tti = 0;
    while !env.is_done() {
        let alloc = pf.schedule(&env);
        let mut left: Vec<u64> = (0..k).map(|u| env.buffer(u).queued_bits()).collect();
        for (b, &got) in alloc.grants().iter().enumerate() {
            let mut best: Option<(usize, f64)> = None;
            for u in 0..k {
                if left[u] == 0 {
                    continue;
                }
                let m = f64::from(env.achievable_rate(u, b)) / t[u].max(PF_EPSILON);
                if best.is_none_or(|(_, bm)| m > bm) {
                    best = Some((u, m));
                }
            }
            let want = best.map(|(u, _)| u);
            assert_eq!(got, want, "TTI {tti} RBG {b}");
            if let Some(u) = want {
                left[u] = left[u].saturating_sub(u64::from(env.achievable_rate(u, b)));
            }
        }
        let out = env.step(&alloc).unwrap();
        pf.observe(&out);
        for u in 0..k {
            t[u] = (w - 1.0) / w * t[u] + out.delivered_bits[u] as f64 / w;
        }
        tti += 1;
    }
}

#[test]
fn single_rbg_matches() {
    let cfg = EnvConfig { duration_ttis: 2_000, ..EnvConfig::default() };
    check(&cfg, 11, 2_000);
}

#[test]
fn multi_rbg_matches() {
    let cfg = EnvConfig {
        num_ues: 6,
        num_rbgs: 4,
        arrival_rate: 100.0,
        duration_ttis: 1_000,
        ..EnvConfig::default()
    };
    check(&cfg, 12, 1_000);
}
