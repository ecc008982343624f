//! Long-term KPIs (throughput, Jain's fairness, packet drop rate) and the
//! per-TTI reward.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::StepOutcome;
use crate::error::{ConfigError, Error, Result};

/// Jain's index `(Σx)² / (K Σx²)` over per-UE delivered bits, computed from
/// exact integer sums so it does not depend on UE order. Returns 0 when
/// nothing has been delivered.
pub fn jain_index(bits: &[u64]) -> f64 {
    let (s, sq) = bits.iter().fold((0u128, 0u128), |(s, sq), &x| {
        let x = u128::from(x);
        (s + x, sq + x * x)
    });
    jain_from_sums(s, sq, bits.len())
}

fn jain_from_sums(s: u128, sq: u128, k: usize) -> f64 {
    if sq == 0 {
        return 0.0;
    }
    // (s²/sq) lies in [1, K] exactly; dividing by K afterwards keeps the
    // rounded result inside [1/K, 1].
    ((s * s) as f64 / sq as f64) / k as f64
}

/// `(a - s) / a`, or 0 without arrivals.
pub fn drop_rate(arrived: u64, transmitted: u64) -> f64 {
    if arrived == 0 {
        0.0
    } else {
        (arrived - transmitted) as f64 / arrived as f64
    }
}

/// Final KPIs of a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    /// Total delivered bits.
    pub thp: u64,
    pub jfi: f64,
    pub pdr: f64,
}

/// Cumulative KPI accumulator for one scheduling duration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KpiWindow {
    delivered: Vec<u64>,
    sum: u128,
    sum_sq: u128,
    pub arrived: u64,
    pub transmitted: u64,
    pub dropped: u64,
    pub start_tti: u64,
    pub steps: u64,
}

impl KpiWindow {
    pub fn new(num_ues: usize, start_tti: u64) -> Self {
        KpiWindow {
            delivered: vec![0; num_ues],
            sum: 0,
            sum_sq: 0,
            arrived: 0,
            transmitted: 0,
            dropped: 0,
            start_tti,
            steps: 0,
        }
    }

    pub fn update(&mut self, out: &StepOutcome) {
        for (d, &x) in self.delivered.iter_mut().zip(&out.delivered_bits) {
            if x > 0 {
                let old = u128::from(*d);
                *d += x;
                let new = u128::from(*d);
                self.sum += new - old;
                self.sum_sq = self.sum_sq + new * new - old * old;
            }
        }
        self.arrived += out.arrived.iter().map(|&x| u64::from(x)).sum::<u64>();
        self.transmitted += out.completed.iter().map(|&x| u64::from(x)).sum::<u64>();
        self.dropped += out.total_dropped();
        self.steps += 1;
    }

    pub fn delivered(&self) -> &[u64] {
        &self.delivered
    }

    pub fn thp(&self) -> u64 {
        self.sum as u64
    }

    pub fn jfi(&self) -> f64 {
        jain_from_sums(self.sum, self.sum_sq, self.delivered.len())
    }

    pub fn pdr(&self) -> f64 {
        drop_rate(self.arrived, self.transmitted)
    }

    pub fn finalize(&self) -> Objectives {
        Objectives {
            thp: self.thp(),
            jfi: self.jfi(),
            pdr: self.pdr(),
        }
    }
}

/// Reward weights `(α, β, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            alpha: 0.07,
            beta: 0.71,
            delta: 0.22,
        }
    }
}

impl RewardWeights {
    pub fn new(alpha: f64, beta: f64, delta: f64) -> Self {
        RewardWeights { alpha, beta, delta }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("delta", self.delta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::new(
                    format!("reward.{name}"),
                    "must be finite and >= 0",
                ));
            }
        }
        Ok(())
    }
}

/// `α·thp_norm + β·jfi_to_date − δ·dropped_step/K`.
pub fn step_reward(
    w: &RewardWeights,
    thp_norm: f64,
    jfi_to_date: f64,
    dropped_step: f64,
    num_ues: usize,
) -> f64 {
    w.alpha * thp_norm + w.beta * jfi_to_date - w.delta * dropped_step / num_ues as f64
}

/// One CSV row per scheduled TTI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiRow {
    pub tti: u64,
    pub thp_step: u64,
    pub jfi_to_date: f64,
    pub dropped_step: u64,
    pub reward: f64,
}

/// Accumulates a window and scores every step.
#[derive(Debug, Clone)]
pub struct RewardTracker {
    pub weights: RewardWeights,
    pub window: KpiWindow,
    /// `K · top ladder rate`, the step-throughput normalizer.
    thp_scale: f64,
    reward_sum: f64,
}

impl RewardTracker {
    pub fn new(weights: RewardWeights, num_ues: usize, top_rate: u32, start_tti: u64) -> Self {
        RewardTracker {
            weights,
            window: KpiWindow::new(num_ues, start_tti),
            thp_scale: num_ues as f64 * f64::from(top_rate),
            reward_sum: 0.0,
        }
    }

    pub fn record(&mut self, out: &StepOutcome) -> KpiRow {
        self.window.update(out);
        let thp = out.total_delivered();
        let dropped = out.total_dropped();
        let reward = step_reward(
            &self.weights,
            thp as f64 / self.thp_scale,
            self.window.jfi(),
            dropped as f64,
            self.window.delivered().len(),
        );
        self.reward_sum += reward;
        KpiRow {
            tti: out.tti,
            thp_step: thp,
            jfi_to_date: self.window.jfi(),
            dropped_step: dropped,
            reward,
        }
    }

    pub fn mean_reward(&self) -> f64 {
        if self.window.steps == 0 {
            0.0
        } else {
            self.reward_sum / self.window.steps as f64
        }
    }
}

pub fn write_kpi_csv<W: Write>(w: W, rows: &[KpiRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)
            .map_err(|e| Error::format("<kpi csv>", e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io("<kpi csv>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(delivered: Vec<u64>, arrived: Vec<u32>, completed: Vec<u32>) -> StepOutcome {
        let k = delivered.len();
        StepOutcome {
            tti: 0,
            delivered_bits: delivered,
            completed,
            expired: vec![0; k],
            overflow: vec![0; k],
            arrived,
            done: false,
        }
    }

    #[test]
    fn jain_examples() {
        assert_eq!(jain_index(&[7, 7]), 1.0);
        assert_eq!(jain_index(&[0, 0, 9, 0]), 0.25);
        let j = jain_index(&[10, 20, 30]);
        assert!((j - 3600.0 / (3.0 * 1400.0)).abs() < 1e-15);
        assert_eq!(jain_index(&[0, 0]), 0.0);
    }

    #[test]
    fn pdr_examples() {
        assert!((drop_rate(10, 8) - 0.2).abs() < 1e-15);
        assert_eq!(drop_rate(0, 0), 0.0);
    }

    #[test]
    fn idle_step_leaves_thp() {
        let mut w = KpiWindow::new(2, 0);
        w.update(&outcome(vec![5, 0], vec![0, 0], vec![0, 0]));
        w.update(&outcome(vec![0, 0], vec![0, 0], vec![0, 0]));
        assert_eq!(w.thp(), 5);
    }

    #[test]
    fn incremental_jfi_matches_direct() {
        let mut w = KpiWindow::new(3, 0);
        w.update(&outcome(vec![10, 0, 5], vec![1, 0, 0], vec![0, 0, 0]));
        w.update(&outcome(vec![0, 20, 25], vec![0, 0, 0], vec![1, 0, 0]));
        assert_eq!(w.jfi(), jain_index(&[10, 20, 30]));
        assert_eq!(w.finalize().pdr, 0.0);
    }

    #[test]
    fn reward_examples() {
        let w = RewardWeights::default();
        assert!((step_reward(&w, 1.0, 1.0, 0.0, 5) - 0.78).abs() < 1e-12);
        assert_eq!(step_reward(&w, 0.0, 0.0, 0.0, 5), 0.0);
        assert!((step_reward(&w, 0.0, 0.0, 5.0, 5) + 0.22).abs() < 1e-15);
    }

    #[test]
    fn negative_weight_rejected() {
        let w = RewardWeights::new(1.0, -0.1, 0.0);
        assert_eq!(w.validate().unwrap_err().field, "reward.beta");
    }
}
