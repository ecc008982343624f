use proptest::prelude::*;
use smartsched::baselines::classical;
use smartsched::env::{CellEnv, EnvConfig};
use smartsched::kpi::{drop_rate, jain_index, step_reward, KpiWindow, RewardWeights};

proptest! {
    #[test]
    fn jfi_bounds(bits in prop::collection::vec(0u64..1_000_000_000, 1..12)) {
        let j = jain_index(&bits);
        if bits.iter().all(|&b| b == 0) {
            prop_assert_eq!(j, 0.0);
        } else {
            let k = bits.len() as f64;
            prop_assert!(j >= 1.0 / k - 1e-12 && j <= 1.0 + 1e-12);
            let equal = bits.iter().all(|&b| b == bits[0]);
            prop_assert_eq!(equal, (j - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pdr_bounds(arrived in 0u64..10_000, frac in 0.0f64..=1.0) {
        let sent = (arrived as f64 * frac) as u64;
        let p = drop_rate(arrived, sent);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(drop_rate(arrived, arrived), 0.0);
    }

    #[test]
    fn reward_is_linear(a in 0.0f64..1.0, b in 0.0f64..1.0, d in 0.0f64..1.0,
                        x in 0.0f64..1.0, j in 0.0f64..1.0, drops in 0.0f64..20.0, k in 1usize..10) {
        let w = RewardWeights::new(a, b, d);
        let r = step_reward(&w, x, j, drops, k);
        let base = step_reward(&w, 0.0, 0.0, 0.0, k);
        prop_assert!((step_reward(&w, x + 1.0, j, drops, k) - r - a).abs() < 1e-12);
        prop_assert!((step_reward(&w, x, j + 1.0, drops, k) - r - b).abs() < 1e-12);
        prop_assert!((step_reward(&w, x, j, drops + 1.0, k) - r + d / k as f64).abs() < 1e-12);
        prop_assert_eq!(base, 0.0);
    }
}

#[test]
fn throughput_is_additive() {
    let cfg = EnvConfig { duration_ttis: 300, ..EnvConfig::default() };
    let mut env = CellEnv::reset(&cfg, 5).unwrap();
    let mut pf = classical("pf", cfg.num_ues, cfg.avg_window).unwrap();
    let mut window = KpiWindow::new(cfg.num_ues, 0);
    let mut total = 0u64;
    while !env.is_done() {
        let out = env.step(&pf.schedule(&env)).unwrap();
        pf.observe(&out);
        total += out.total_delivered();
        window.update(&out);
    }
    assert_eq!(window.finalize().thp, total);
}
