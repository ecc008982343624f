//! Per-(UE, RBG) channel: Gauss-Markov fading around a mean SNR, mapped to
//! bits per TTI through a discrete rate ladder.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::seed::Rng;

/// Spectral efficiencies (bits/symbol) of the 15 LTE CQI levels.
const CQI_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223,
    3.9023, 4.5234, 5.1152, 5.5547,
];
const LADDER_FIRST_THRESHOLD_DB: f64 = -6.0;
const LADDER_SPACING_DB: f64 = 2.0;
/// 12 subcarriers x 14 OFDM symbols per RB per 1 ms TTI.
const RES_PER_RB: f64 = 168.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderStep {
    pub threshold_db: f64,
    pub bits: u32,
}

/// SNR to bits-per-TTI-per-RBG lookup. Thresholds strictly increase and the
/// rate never decreases with SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct RateLadder {
    steps: Vec<LadderStep>,
}

impl RateLadder {
    pub fn new(steps: Vec<LadderStep>) -> Result<Self, ConfigError> {
        if steps.is_empty() {
            return Err(ConfigError::new("ladder", "needs at least one step"));
        }
        for w in steps.windows(2) {
            if !(w[0].threshold_db < w[1].threshold_db) {
                return Err(ConfigError::new("ladder", "thresholds must strictly increase"));
            }
            if w[0].bits > w[1].bits {
                return Err(ConfigError::new("ladder", "rates must not decrease with SNR"));
            }
        }
        if steps.iter().any(|s| !s.threshold_db.is_finite()) {
            return Err(ConfigError::new("ladder", "thresholds must be finite"));
        }
        if steps.last().map_or(0, |s| s.bits) == 0 {
            return Err(ConfigError::new("ladder", "top rate must be positive"));
        }
        Ok(RateLadder { steps })
    }

    /// 15 levels, 2 dB apart from -6 dB, CQI efficiencies scaled by the
    /// resource elements of one RBG.
    pub fn lte_default(rbs_per_rbg: u32) -> Self {
        let res = RES_PER_RB * f64::from(rbs_per_rbg);
        let steps = CQI_EFFICIENCY
            .iter()
            .enumerate()
            .map(|(i, eff)| LadderStep {
                threshold_db: LADDER_FIRST_THRESHOLD_DB + LADDER_SPACING_DB * i as f64,
                bits: (eff * res).round() as u32,
            })
            .collect();
        RateLadder { steps }
    }

    /// Largest rate whose threshold is at or below `snr_db`; 0 below the ladder.
    pub fn rate(&self, snr_db: f64) -> u32 {
        let idx = self.steps.partition_point(|s| s.threshold_db <= snr_db);
        if idx == 0 {
            0
        } else {
            self.steps[idx - 1].bits
        }
    }

    pub fn top_rate(&self) -> u32 {
        self.steps.last().map_or(0, |s| s.bits)
    }

    pub fn steps(&self) -> &[LadderStep] {
        &self.steps
    }
}

/// AR(1) fading state for every (UE, RBG) pair, row-major by UE.
#[derive(Debug, Clone)]
pub struct ChannelProcess {
    mean_snr_db: Vec<f64>,
    fading: Vec<f64>,
    num_rbgs: usize,
    correlation: f64,
    fading_std_db: f64,
    ladder: RateLadder,
}

impl ChannelProcess {
    /// Fading drawn from the stationary N(0, 1) distribution.
    pub fn stationary(
        mean_snr_db: Vec<f64>,
        num_rbgs: usize,
        correlation: f64,
        fading_std_db: f64,
        ladder: RateLadder,
        rng: &mut Rng,
    ) -> Self {
        let fading = (0..mean_snr_db.len() * num_rbgs)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        ChannelProcess {
            mean_snr_db,
            fading,
            num_rbgs,
            correlation,
            fading_std_db,
            ladder,
        }
    }

    /// Explicit initial fading state (length `K * B`).
    pub fn with_fading(
        mean_snr_db: Vec<f64>,
        num_rbgs: usize,
        correlation: f64,
        fading_std_db: f64,
        ladder: RateLadder,
        fading: Vec<f64>,
    ) -> Self {
        assert_eq!(fading.len(), mean_snr_db.len() * num_rbgs);
        ChannelProcess {
            mean_snr_db,
            fading,
            num_rbgs,
            correlation,
            fading_std_db,
            ladder,
        }
    }

    /// `f' = ρ f + sqrt(1 - ρ²) ε`, one standard normal draw per pair.
    pub fn advance(&mut self, rng: &mut Rng) {
        let rho = self.correlation;
        let innov = (1.0 - rho * rho).max(0.0).sqrt();
        for f in &mut self.fading {
            let eps: f64 = rng.sample(StandardNormal);
            *f = rho * *f + innov * eps;
        }
    }

    pub fn fading(&self, ue: usize, rbg: usize) -> f64 {
        self.fading[ue * self.num_rbgs + rbg]
    }

    pub fn snr_db(&self, ue: usize, rbg: usize) -> f64 {
        self.mean_snr_db[ue] + self.fading_std_db * self.fading(ue, rbg)
    }

    pub fn achievable_rate(&self, ue: usize, rbg: usize) -> u32 {
        self.ladder.rate(self.snr_db(ue, rbg))
    }

    /// All rates, row-major `[ue * B + rbg]`.
    pub fn rates(&self) -> Vec<u32> {
        (0..self.mean_snr_db.len())
            .flat_map(|k| (0..self.num_rbgs).map(move |b| (k, b)))
            .map(|(k, b)| self.achievable_rate(k, b))
            .collect()
    }

    pub fn ladder(&self) -> &RateLadder {
        &self.ladder
    }
}
