use serde::{Deserialize, Serialize};

use super::channel::{LadderStep, RateLadder};
use crate::error::ConfigError;

/// How packets reach the RLC buffers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Traffic {
    /// Poisson arrivals at `arrival_rate` packets per second per UE.
    #[default]
    Poisson,
    /// Buffers are topped up to capacity at every TTI.
    FullBuffer,
}

/// Starting value of a UE's average-rate tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AvgInit {
    /// Start at 0, the plain windowed average of delivered bits.
    #[default]
    Zero,
    /// Start at the UE's aggregate achievable rate when it first holds data.
    FirstRate,
}

/// Long-term mean SNR of each UE (the "deployment").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SnrProfile {
    /// One mean SNR per UE, in dB.
    Fixed { mean_db: Vec<f64> },
    /// Per-UE means drawn uniformly from `[min_db, max_db]` from the
    /// environment seed, so every seed is a different deployment.
    Uniform { min_db: f64, max_db: f64 },
}

impl Default for SnrProfile {
    fn default() -> Self {
        SnrProfile::Uniform {
            min_db: 0.0,
            max_db: 20.0,
        }
    }
}

/// Everything needed to build a [`CellEnv`](super::CellEnv).
///
/// Defaults follow the single-RBG simulation settings: 1 ms TTI, 500-TTI
/// scheduling duration, 200 packets/s of 8000 bits, 10^6-bit FIFO buffers and
/// a 2 s (2000 TTI) maximum delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub num_ues: usize,
    pub num_rbgs: usize,
    /// Scheduling duration N in TTIs.
    pub duration_ttis: u64,
    pub tti_seconds: f64,
    /// λ, packets per second per UE.
    pub arrival_rate: f64,
    pub packet_size_bits: u32,
    pub buffer_capacity_bits: u64,
    pub max_delay_ttis: u64,
    pub traffic: Traffic,
    pub snr: SnrProfile,
    pub fading_std_db: f64,
    /// AR(1) coefficient ρ of the per-(UE, RBG) fading process.
    pub fading_correlation: f64,
    /// Resource blocks per RBG; scales the default ladder.
    pub rbs_per_rbg: u32,
    /// Explicit rate ladder. `None` selects the default 15-level ladder.
    pub ladder: Option<Vec<LadderStep>>,
    /// Averaging window W of the per-UE average-rate tracker.
    pub avg_window: u32,
    pub avg_init: AvgInit,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            num_ues: 5,
            num_rbgs: 1,
            duration_ttis: 500,
            tti_seconds: 1e-3,
            arrival_rate: 200.0,
            packet_size_bits: 8_000,
            buffer_capacity_bits: 1_000_000,
            max_delay_ttis: 2_000,
            traffic: Traffic::Poisson,
            snr: SnrProfile::default(),
            fading_std_db: 4.0,
            fading_correlation: 0.9,
            rbs_per_rbg: 6,
            ladder: None,
            avg_window: 100,
            avg_init: AvgInit::Zero,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_ues < 1 {
            return Err(ConfigError::new("num_ues", "must be at least 1"));
        }
        if self.num_rbgs < 1 {
            return Err(ConfigError::new("num_rbgs", "must be at least 1"));
        }
        if self.duration_ttis < 1 {
            return Err(ConfigError::new("duration_ttis", "must be at least 1"));
        }
        if !(self.tti_seconds.is_finite() && self.tti_seconds > 0.0) {
            return Err(ConfigError::new("tti_seconds", "must be positive"));
        }
        if !(self.arrival_rate.is_finite() && self.arrival_rate >= 0.0) {
            return Err(ConfigError::new("arrival_rate", "must be finite and >= 0"));
        }
        if self.packet_size_bits == 0 {
            return Err(ConfigError::new("packet_size_bits", "must be positive"));
        }
        if self.buffer_capacity_bits < u64::from(self.packet_size_bits) {
            return Err(ConfigError::new(
                "buffer_capacity_bits",
                "must hold at least one packet",
            ));
        }
        if !(self.fading_std_db.is_finite() && self.fading_std_db >= 0.0) {
            return Err(ConfigError::new("fading_std_db", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.fading_correlation) {
            return Err(ConfigError::new("fading_correlation", "must lie in [0, 1]"));
        }
        if self.avg_window < 1 {
            return Err(ConfigError::new("avg_window", "must be at least 1"));
        }
        if self.rbs_per_rbg < 1 {
            return Err(ConfigError::new("rbs_per_rbg", "must be at least 1"));
        }
        match &self.snr {
            SnrProfile::Fixed { mean_db } => {
                if mean_db.len() != self.num_ues {
                    return Err(ConfigError::new(
                        "snr.fixed.mean_db",
                        format!("expected {} entries, got {}", self.num_ues, mean_db.len()),
                    ));
                }
                if mean_db.iter().any(|v| !v.is_finite()) {
                    return Err(ConfigError::new("snr.fixed.mean_db", "entries must be finite"));
                }
            }
            SnrProfile::Uniform { min_db, max_db } => {
                if !(min_db.is_finite() && max_db.is_finite() && min_db <= max_db) {
                    return Err(ConfigError::new("snr.uniform", "need finite min_db <= max_db"));
                }
            }
        }
        self.rate_ladder()?;
        Ok(())
    }

    pub fn rate_ladder(&self) -> Result<RateLadder, ConfigError> {
        match &self.ladder {
            Some(steps) => RateLadder::new(steps.clone()),
            None => Ok(RateLadder::lte_default(self.rbs_per_rbg)),
        }
    }

    /// Mean packet arrivals per UE per TTI.
    pub fn arrivals_per_tti(&self) -> f64 {
        self.arrival_rate * self.tti_seconds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_ues_names_the_field() {
        let cfg = EnvConfig {
            num_ues: 0,
            ..EnvConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.field, "num_ues");
    }

    #[test]
    fn fixed_profile_length_checked() {
        let cfg = EnvConfig {
            num_ues: 3,
            snr: SnrProfile::Fixed {
                mean_db: vec![1.0, 2.0],
            },
            ..EnvConfig::default()
        };
        assert_eq!(cfg.validate().unwrap_err().field, "snr.fixed.mean_db");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<EnvConfig>(r#"{"num_ues": 3, "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn defaults_validate() {
        EnvConfig::default().validate().unwrap();
        assert!((EnvConfig::default().arrivals_per_tti() - 0.2).abs() < 1e-12);
    }
}
