//! Exogenous processes and their recorded form.
//!
//! Channel rates and packet arrivals never depend on scheduling decisions, so
//! they can be generated once and replayed against any decision stream. The
//! live generator and the trace replayer produce the same [`TtiRecord`]s.
//!
//! Trace file layout (JSON lines):
//!
//! ```text
//! {"format":"smartsched-trace","version":1,"seed":7,"config":{...}}
//! {"tti":0,"rates":[[r_00,...],...],"arrivals":[[],...]}
//! {"tti":1,"rates":[[...],...],"arrivals":[[8000],[],...]}
//! ```
//!
//! `rates[k][b]` is the achievable rate of UE `k` on RBG `b` in bits per TTI;
//! `arrivals[k]` lists the sizes of packets arriving at UE `k` at that TTI.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::channel::ChannelProcess;
use super::config::{EnvConfig, SnrProfile, Traffic};
use crate::error::{ConfigError, Error, Result};
use crate::seed::{derive_rng, Rng};

pub const TRACE_FORMAT: &str = "smartsched-trace";
pub const TRACE_VERSION: u32 = 1;

/// Exogenous inputs of one TTI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtiRecord {
    pub tti: u64,
    pub rates: Vec<Vec<u32>>,
    pub arrivals: Vec<Vec<u32>>,
}

impl TtiRecord {
    pub fn rate(&self, ue: usize, rbg: usize) -> u32 {
        self.rates[ue][rbg]
    }
}

/// Draws the per-UE mean SNRs for a seed.
pub fn deployment(cfg: &EnvConfig, seed: u64) -> Vec<f64> {
    match &cfg.snr {
        SnrProfile::Fixed { mean_db } => mean_db.clone(),
        SnrProfile::Uniform { min_db, max_db } => {
            let mut rng = derive_rng(seed, "deployment", 0);
            (0..cfg.num_ues)
                .map(|_| min_db + (max_db - min_db) * rng.random::<f64>())
                .collect()
        }
    }
}

/// Live generator of channel rates and Poisson arrivals.
#[derive(Debug, Clone)]
pub struct LiveProcess {
    channel: ChannelProcess,
    channel_rng: Rng,
    arrival_rng: Rng,
    poisson: Option<Poisson<f64>>,
    packet_size_bits: u32,
    traffic: Traffic,
    num_ues: usize,
    num_rbgs: usize,
    next_tti: u64,
}

impl LiveProcess {
    pub fn new(cfg: &EnvConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let mut channel_rng = derive_rng(seed, "channel", 0);
        let channel = ChannelProcess::stationary(
            deployment(cfg, seed),
            cfg.num_rbgs,
            cfg.fading_correlation,
            cfg.fading_std_db,
            cfg.rate_ladder()?,
            &mut channel_rng,
        );
        let mean = cfg.arrivals_per_tti();
        let poisson = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|e| ConfigError::new("arrival_rate", e.to_string()))?)
        } else {
            None
        };
        Ok(LiveProcess {
            channel,
            channel_rng,
            arrival_rng: derive_rng(seed, "arrivals", 0),
            poisson,
            packet_size_bits: cfg.packet_size_bits,
            traffic: cfg.traffic,
            num_ues: cfg.num_ues,
            num_rbgs: cfg.num_rbgs,
            next_tti: 0,
        })
    }

    /// Poisson arrival count for every UE this TTI (all zero when λ = 0).
    pub fn draw_arrival_counts(&mut self, num_ues: usize) -> Vec<u32> {
        match &self.poisson {
            Some(p) => (0..num_ues)
                .map(|_| p.sample(&mut self.arrival_rng) as u32)
                .collect(),
            None => vec![0; num_ues],
        }
    }

    /// Next TTI's record. TTI 0 carries the stationary channel draw and no
    /// arrivals; later TTIs first advance the channel, then draw arrivals.
    pub fn next_record(&mut self) -> TtiRecord {
        let tti = self.next_tti;
        self.next_tti += 1;
        let k = self.num_ues;
        if tti > 0 {
            self.channel.advance(&mut self.channel_rng);
        }
        let arrivals = if tti == 0 || self.traffic == Traffic::FullBuffer {
            vec![Vec::new(); k]
        } else {
            self.draw_arrival_counts(k)
                .into_iter()
                .map(|n| vec![self.packet_size_bits; n as usize])
                .collect()
        };
        let flat = self.channel.rates();
        let b = self.num_rbgs;
        let rates = flat.chunks(b).map(<[u32]>::to_vec).collect();
        TtiRecord {
            tti,
            rates,
            arrivals,
        }
    }

    pub fn channel(&self) -> &ChannelProcess {
        &self.channel
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config: EnvConfig,
}

/// A recorded exogenous stream: header plus one record per TTI.
#[derive(Debug, Clone)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<TtiRecord>,
    digest: OnceLock<String>,
}

impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        self.header == other.header && self.records == other.records
    }
}

impl Trace {
    pub fn new(header: TraceHeader, records: Vec<TtiRecord>) -> Result<Self> {
        let t = Trace {
            header,
            records,
            digest: OnceLock::new(),
        };
        t.check().map_err(|r| Error::format("<trace>", r))?;
        Ok(t)
    }

    /// Record `steps` TTIs of the live process for `(cfg, seed)`.
    pub fn record(cfg: &EnvConfig, seed: u64, steps: u64) -> Result<Self> {
        let mut live = LiveProcess::new(cfg, seed)?;
        let records = (0..steps).map(|_| live.next_record()).collect();
        Trace::new(
            TraceHeader {
                format: TRACE_FORMAT.to_string(),
                version: TRACE_VERSION,
                seed,
                config: cfg.clone(),
            },
            records,
        )
    }

    pub fn config(&self) -> &EnvConfig {
        &self.header.config
    }

    pub fn num_ues(&self) -> usize {
        self.header.config.num_ues
    }

    pub fn num_rbgs(&self) -> usize {
        self.header.config.num_rbgs
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.header.format != TRACE_FORMAT {
            return Err(format!("unexpected format tag `{}`", self.header.format));
        }
        if self.header.version != TRACE_VERSION {
            return Err(format!("unsupported version {}", self.header.version));
        }
        self.header.config.validate().map_err(|e| e.to_string())?;
        let (k, b) = (self.num_ues(), self.num_rbgs());
        for (i, r) in self.records.iter().enumerate() {
            if r.tti != i as u64 {
                return Err(format!("record {i} has tti {}", r.tti));
            }
            if r.rates.len() != k || r.rates.iter().any(|row| row.len() != b) {
                return Err(format!("record {i}: rates must be {k} x {b}"));
            }
            if r.arrivals.len() != k {
                return Err(format!("record {i}: arrivals must have {k} rows"));
            }
            if r.arrivals.iter().flatten().any(|&s| s == 0) {
                return Err(format!("record {i}: zero-size packet"));
            }
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file)).map_err(|e| match e {
            Error::Format { reason, .. } => Error::format(path, reason),
            other => other,
        })
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let bad = |r: String| Error::format("<trace>", r);
        let header_line = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .map_err(|e| bad(e.to_string()))?;
        let header: TraceHeader =
            serde_json::from_str(&header_line).map_err(|e| bad(format!("header: {e}")))?;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TtiRecord =
                serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
            records.push(rec);
        }
        Trace::new(header, records)
    }

    /// SHA-256 over the serialized records; identical exogenous streams have
    /// identical digests.
    pub fn digest(&self) -> &str {
        self.digest.get_or_init(|| {
            let mut h = Sha256::new();
            for r in &self.records {
                h.update(serde_json::to_vec(r).expect("records serialize"));
                h.update(b"\n");
            }
            hex::encode(h.finalize())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrival_mean_matches_poisson_rate() {
        let cfg = EnvConfig::default();
        let mut live = LiveProcess::new(&cfg, 11).unwrap();
        let n = 1_000_000u64;
        let total: u64 = (0..n)
            .map(|_| u64::from(live.draw_arrival_counts(1)[0]))
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 0.2).abs() < 0.01, "mean arrivals/TTI {mean}");
    }

    #[test]
    fn zero_rate_never_arrives() {
        let cfg = EnvConfig {
            arrival_rate: 0.0,
            ..EnvConfig::default()
        };
        let mut live = LiveProcess::new(&cfg, 3).unwrap();
        for _ in 0..100 {
            assert!(live.next_record().arrivals.iter().all(Vec::is_empty));
        }
    }

    #[test]
    fn save_load_round_trip_and_digest() {
        let cfg = EnvConfig {
            num_ues: 3,
            num_rbgs: 2,
            ..EnvConfig::default()
        };
        let trace = Trace::record(&cfg, 5, 50).unwrap();
        let mut buf = Vec::new();
        trace.write_to(&mut buf).unwrap();
        let back = Trace::read_from(&buf[..]).unwrap();
        assert_eq!(back, trace);
        assert_eq!(back.digest(), trace.digest());
        let other = Trace::record(&cfg, 6, 50).unwrap();
        assert_ne!(other.digest(), trace.digest());
    }

    #[test]
    fn malformed_shapes_rejected() {
        let cfg = EnvConfig {
            num_ues: 2,
            ..EnvConfig::default()
        };
        let mut trace = Trace::record(&cfg, 1, 3).unwrap();
        trace.records[1].rates.pop();
        assert!(Trace::new(trace.header.clone(), trace.records.clone()).is_err());
    }
}
