use std::sync::Arc;

use proptest::prelude::*;
use smartsched::env::{Allocation, CellEnv, EnvConfig, RateLadder, SnrProfile, Trace};
use smartsched::kpi::KpiWindow;

fn stressed(k: usize, b: usize) -> EnvConfig {
    EnvConfig {
        num_ues: k,
        num_rbgs: b,
        duration_ttis: 150,
        arrival_rate: 900.0,
        packet_size_bits: 4_000,
        buffer_capacity_bits: 20_000,
        max_delay_ttis: 6,
        snr: SnrProfile::Uniform { min_db: -8.0, max_db: 25.0 },
        ..EnvConfig::default()
    }
}

/// Grant each RBG to the active UE picked by `choice`, or leave it idle.
fn alloc_from(env: &CellEnv, choice: &[u8]) -> Allocation {
    let active: Vec<usize> = (0..env.num_ues()).filter(|&k| env.is_active(k)).collect();
    Allocation::from_grants(
        (0..env.num_rbgs())
            .map(|b| {
                let c = choice[b % choice.len()] as usize;
                (!active.is_empty() && !c.is_multiple_of(4)).then(|| active[c % active.len()])
            })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ledger_bound_and_activity(seed in any::<u64>(), k in 1usize..5, b in 1usize..3,
                                 choices in prop::collection::vec(any::<u8>(), 1..16)) {
        let cfg = stressed(k, b);
        let mut env = CellEnv::reset(&cfg, seed).unwrap();
        let mut i = 0;
        while !env.is_done() {
            let a = alloc_from(&env, &choices[i % choices.len()..]);
            env.step(&a).unwrap();
            i += 1;
            prop_assert!(env.ledger_balances());
            for u in 0..k {
                let buf = env.buffer(u);
                prop_assert!(buf.queued_bits() <= buf.capacity_bits());
                prop_assert_eq!(env.is_active(u), buf.queued_packets() > 0);
                prop_assert_eq!(env.observe().ues[u].active, buf.queued_packets() > 0);
            }
        }
    }

    #[test]
    fn same_seed_same_stream(seed in any::<u64>(), choices in prop::collection::vec(any::<u8>(), 1..8)) {
        let cfg = stressed(3, 2);
        let mut a = CellEnv::reset(&cfg, seed).unwrap();
        let mut b = CellEnv::reset(&cfg, seed).unwrap();
        let mut i = 0;
        while !a.is_done() {
            prop_assert_eq!(a.observe(), b.observe());
            let alloc = alloc_from(&a, &choices[i % choices.len()..]);
            prop_assert_eq!(a.step(&alloc).unwrap(), b.step(&alloc).unwrap());
            i += 1;
        }
    }

    #[test]
    fn replay_matches_live(seed in any::<u64>(), choices in prop::collection::vec(any::<u8>(), 1..8)) {
        let cfg = stressed(3, 1);
        let trace = Arc::new(Trace::record(&cfg, seed, cfg.duration_ttis).unwrap());
        let mut live = CellEnv::reset(&cfg, seed).unwrap();
        let mut replay = CellEnv::replay(trace).unwrap();
        let (mut wl, mut wr) = (KpiWindow::new(3, 0), KpiWindow::new(3, 0));
        let mut i = 0;
        while !live.is_done() {
            let alloc = alloc_from(&live, &choices[i % choices.len()..]);
            wl.update(&live.step(&alloc).unwrap());
            wr.update(&replay.step(&alloc).unwrap());
            i += 1;
        }
        prop_assert!(replay.is_done());
        prop_assert_eq!(wl, wr);
    }
}

#[test]
fn ladder_is_monotone_in_snr() {
    let ladder = RateLadder::lte_default(6);
    let mut prev = 0;
    for i in -400..=600 {
        let r = ladder.rate(f64::from(i) * 0.1);
        assert!(r >= prev, "rate fell at {} dB", f64::from(i) * 0.1);
        prev = r;
    }
    assert_eq!(prev, ladder.top_rate());
    assert_eq!(ladder.top_rate(), 5599);
}
