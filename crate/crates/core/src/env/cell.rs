use std::sync::Arc;

use super::buffer::{Packet, RlcBuffer};
use super::config::{AvgInit, EnvConfig, Traffic};
use super::trace::{LiveProcess, Trace, TtiRecord};
use crate::error::{ConfigError, Error, Result};

/// Source of exogenous records: generated on the fly or replayed.
#[derive(Debug, Clone)]
enum Exogenous {
    Live(Box<LiveProcess>),
    Replay { trace: Arc<Trace>, next: usize },
}

impl Exogenous {
    fn next(&mut self) -> TtiRecord {
        match self {
            Exogenous::Live(p) => p.next_record(),
            Exogenous::Replay { trace, next } => {
                let r = trace.records[*next].clone();
                *next += 1;
                r
            }
        }
    }
}

/// One RBG-to-UE assignment per RBG; `None` leaves the RBG unused.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    grants: Vec<Option<usize>>,
}

impl Allocation {
    pub fn idle(num_rbgs: usize) -> Self {
        Allocation {
            grants: vec![None; num_rbgs],
        }
    }

    /// Every RBG to the same UE.
    pub fn single(ue: usize, num_rbgs: usize) -> Self {
        Allocation {
            grants: vec![Some(ue); num_rbgs],
        }
    }

    pub fn from_grants(grants: Vec<Option<usize>>) -> Self {
        Allocation { grants }
    }

    /// From a `K x B` 0/1 decision matrix `d[k][b]`. Fails if any RBG is
    /// assigned to more than one UE.
    pub fn from_matrix(d: &[Vec<bool>]) -> Result<Self> {
        let num_rbgs = d.first().map_or(0, Vec::len);
        if d.iter().any(|row| row.len() != num_rbgs) {
            return Err(Error::contract("decision matrix rows differ in length"));
        }
        let mut grants = vec![None; num_rbgs];
        for (k, row) in d.iter().enumerate() {
            for (b, &on) in row.iter().enumerate() {
                if on {
                    if let Some(prev) = grants[b] {
                        return Err(Error::contract(format!(
                            "RBG {b} assigned to both UE {prev} and UE {k}"
                        )));
                    }
                    grants[b] = Some(k);
                }
            }
        }
        Ok(Allocation { grants })
    }

    pub fn grants(&self) -> &[Option<usize>] {
        &self.grants
    }

    pub fn is_idle(&self) -> bool {
        self.grants.iter().all(Option::is_none)
    }
}

/// What one call to [`CellEnv::step`] did, per UE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    /// The TTI that was scheduled.
    pub tti: u64,
    pub delivered_bits: Vec<u64>,
    /// Packets whose last bit was sent this TTI.
    pub completed: Vec<u32>,
    pub expired: Vec<u32>,
    pub overflow: Vec<u32>,
    /// Arrivals enqueued (or dropped on overflow) for the next TTI.
    pub arrived: Vec<u32>,
    /// The scheduling duration ended with this step.
    pub done: bool,
}

impl StepOutcome {
    pub fn total_delivered(&self) -> u64 {
        self.delivered_bits.iter().sum()
    }

    pub fn total_dropped(&self) -> u64 {
        self.expired
            .iter()
            .chain(&self.overflow)
            .map(|&x| u64::from(x))
            .sum()
    }
}

/// Raw per-UE state features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeObservation {
    /// Bits/TTI the UE could receive now (all RBGs, or the RBG being decided).
    pub estimated_rate: f64,
    /// Windowed average delivered rate, bits/TTI.
    pub average_rate: f64,
    /// Free buffer space, bits.
    pub spare_buffer: f64,
    /// Age of the head-of-line packet in TTIs, 0 when empty.
    pub hol_wait: f64,
    pub active: bool,
}

/// Fixed divisors mapping raw features into roughly `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScale {
    pub rate: f64,
    pub average_rate: f64,
    pub buffer: f64,
    pub delay: f64,
}

impl UeObservation {
    pub fn normalized(&self, scale: &FeatureScale) -> [f64; 4] {
        [
            self.estimated_rate / scale.rate,
            self.average_rate / scale.average_rate,
            self.spare_buffer / scale.buffer,
            self.hol_wait / scale.delay,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub ues: Vec<UeObservation>,
}

impl Observation {
    pub fn mask(&self) -> Vec<bool> {
        self.ues.iter().map(|u| u.active).collect()
    }

    pub fn any_active(&self) -> bool {
        self.ues.iter().any(|u| u.active)
    }

    pub fn features(&self, scale: &FeatureScale) -> Vec<[f64; 4]> {
        self.ues.iter().map(|u| u.normalized(scale)).collect()
    }
}

/// TTI-stepped single-cell downlink environment.
///
/// Within a step the order is: transmit, update average rates, advance the
/// clock, expire, then enqueue the next TTI's arrivals. The scheduler always
/// acts on the state it observed.
#[derive(Debug, Clone)]
pub struct CellEnv {
    cfg: EnvConfig,
    seed: u64,
    tti: u64,
    duration: u64,
    buffers: Vec<RlcBuffer>,
    avg_rate: Vec<f64>,
    /// The UE has held data at some point; its tracker is initialized.
    seen: Vec<bool>,
    /// Arrivals made while building the env, reported with the first step.
    initial_arrivals: Vec<u32>,
    current: TtiRecord,
    source: Exogenous,
    top_rate: u32,
}

impl CellEnv {
    /// Fresh live environment: empty buffers, stationary fading, TTI 0.
    pub fn reset(cfg: &EnvConfig, seed: u64) -> Result<Self, ConfigError> {
        let live = LiveProcess::new(cfg, seed)?;
        Ok(Self::build(
            cfg.clone(),
            seed,
            cfg.duration_ttis,
            Exogenous::Live(Box::new(live)),
            cfg.rate_ladder()?.top_rate(),
        ))
    }

    /// Environment driven by a recorded trace. Rates and arrivals are taken
    /// from the trace; buffers are re-simulated against the decisions. The
    /// scheduling duration is the trace length.
    pub fn replay(trace: Arc<Trace>) -> Result<Self> {
        if trace.is_empty() {
            return Err(Error::contract("cannot replay an empty trace"));
        }
        let cfg = trace.config().clone();
        let top = cfg.rate_ladder()?.top_rate();
        let duration = trace.len() as u64;
        let seed = trace.header.seed;
        Ok(Self::build(
            cfg,
            seed,
            duration,
            Exogenous::Replay { trace, next: 0 },
            top,
        ))
    }

    fn build(cfg: EnvConfig, seed: u64, duration: u64, mut source: Exogenous, top: u32) -> Self {
        let current = source.next();
        let mut env = CellEnv {
            buffers: vec![RlcBuffer::new(cfg.buffer_capacity_bits); cfg.num_ues],
            avg_rate: vec![0.0; cfg.num_ues],
            seen: vec![false; cfg.num_ues],
            initial_arrivals: Vec::new(),
            cfg,
            seed,
            tti: 0,
            duration,
            current,
            source,
            top_rate: top,
        };
        if env.cfg.traffic == Traffic::FullBuffer {
            env.initial_arrivals = env.top_up();
            for k in 0..env.num_ues() {
                env.first_activation(k);
            }
        }
        env
    }

    fn first_activation(&mut self, k: usize) {
        self.seen[k] = true;
        if self.cfg.avg_init == AvgInit::FirstRate {
            self.avg_rate[k] = self.aggregate_rate(k);
        }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_ues(&self) -> usize {
        self.cfg.num_ues
    }

    pub fn num_rbgs(&self) -> usize {
        self.cfg.num_rbgs
    }

    pub fn tti(&self) -> u64 {
        self.tti
    }

    pub fn duration(&self) -> u64 {
        self.duration
    }

    pub fn is_done(&self) -> bool {
        self.tti >= self.duration
    }

    pub fn top_rate(&self) -> u32 {
        self.top_rate
    }

    pub fn buffer(&self, ue: usize) -> &RlcBuffer {
        &self.buffers[ue]
    }

    pub fn buffers(&self) -> &[RlcBuffer] {
        &self.buffers
    }

    /// The exogenous record in force for the current TTI.
    pub fn current_record(&self) -> &TtiRecord {
        &self.current
    }

    pub fn achievable_rate(&self, ue: usize, rbg: usize) -> u32 {
        self.current.rate(ue, rbg)
    }

    pub fn aggregate_rate(&self, ue: usize) -> f64 {
        self.current.rates[ue].iter().map(|&r| f64::from(r)).sum()
    }

    pub fn is_active(&self, ue: usize) -> bool {
        self.buffers[ue].is_active()
    }

    pub fn active_mask(&self) -> Vec<bool> {
        self.buffers.iter().map(RlcBuffer::is_active).collect()
    }

    pub fn average_rates(&self) -> &[f64] {
        &self.avg_rate
    }

    pub fn feature_scale(&self) -> FeatureScale {
        let top = f64::from(self.top_rate);
        FeatureScale {
            rate: top,
            average_rate: top * self.num_rbgs() as f64,
            buffer: self.cfg.buffer_capacity_bits as f64,
            delay: self.cfg.max_delay_ttis as f64,
        }
    }

    /// TTI-level observation with the RBG-aggregate estimated rate.
    pub fn observe(&self) -> Observation {
        let ues = (0..self.num_ues())
            .map(|k| {
                let b = &self.buffers[k];
                UeObservation {
                    estimated_rate: self.aggregate_rate(k),
                    average_rate: self.avg_rate[k],
                    spare_buffer: b.spare_bits() as f64,
                    hol_wait: b.hol_wait(self.tti) as f64,
                    active: b.is_active(),
                }
            })
            .collect();
        Observation { ues }
    }

    /// Start planning the current TTI RBG by RBG.
    pub fn planner(&self) -> TtiPlanner<'_> {
        TtiPlanner {
            env: self,
            grants: Vec::with_capacity(self.num_rbgs()),
            granted_bits: vec![0; self.num_ues()],
        }
    }

    /// Apply one TTI of decisions.
    pub fn step(&mut self, alloc: &Allocation) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::contract(format!(
                "step called at TTI {} after the scheduling duration ended",
                self.tti
            )));
        }
        let k_count = self.num_ues();
        if alloc.grants.len() != self.num_rbgs() {
            return Err(Error::contract(format!(
                "allocation covers {} RBGs, environment has {}",
                alloc.grants.len(),
                self.num_rbgs()
            )));
        }
        let mut offered = vec![0u64; k_count];
        for (b, g) in alloc.grants.iter().enumerate() {
            if let Some(k) = *g {
                if k >= k_count {
                    return Err(Error::contract(format!("RBG {b} granted to unknown UE {k}")));
                }
                if !self.buffers[k].is_active() {
                    return Err(Error::contract(format!(
                        "RBG {b} granted to inactive UE {k} at TTI {}",
                        self.tti
                    )));
                }
                offered[k] += u64::from(self.current.rate(k, b));
            }
        }

        let scheduled_tti = self.tti;
        let mut delivered = vec![0u64; k_count];
        let mut completed = vec![0u32; k_count];
        for k in 0..k_count {
            if offered[k] > 0 {
                let (sent, done) = self.buffers[k].drain(offered[k]);
                delivered[k] = sent;
                completed[k] = done;
            }
        }
        let w = f64::from(self.cfg.avg_window);
        for (avg, &d) in self.avg_rate.iter_mut().zip(&delivered) {
            *avg = (w - 1.0) / w * *avg + d as f64 / w;
        }

        self.tti += 1;
        let mut expired = vec![0u32; k_count];
        let mut overflow = vec![0u32; k_count];
        let mut arrived = vec![0u32; k_count];
        let done = self.is_done();
        if !done {
            expired = self.expire_packets();
            self.current = self.source.next();
            let (a, o) = match self.cfg.traffic {
                Traffic::Poisson => {
                    let arrivals = std::mem::take(&mut self.current.arrivals);
                    let res = self.enqueue_arrivals(&arrivals);
                    self.current.arrivals = arrivals;
                    res
                }
                Traffic::FullBuffer => (self.top_up(), vec![0; k_count]),
            };
            arrived = a;
            overflow = o;
            for k in 0..k_count {
                if !self.seen[k] && self.buffers[k].is_active() {
                    self.first_activation(k);
                }
            }
        }
        for (a, i) in arrived.iter_mut().zip(std::mem::take(&mut self.initial_arrivals)) {
            *a += i;
        }

        Ok(StepOutcome {
            tti: scheduled_tti,
            delivered_bits: delivered,
            completed,
            expired,
            overflow,
            arrived,
            done,
        })
    }

    /// Remove packets older than the maximum delay at the current TTI.
    pub fn expire_packets(&mut self) -> Vec<u32> {
        let (now, max) = (self.tti, self.cfg.max_delay_ttis);
        self.buffers.iter_mut().map(|b| b.expire(now, max)).collect()
    }

    /// Enqueue per-UE arrivals stamped with the current TTI. Returns
    /// `(arrived, overflow)` counts.
    pub fn enqueue_arrivals(&mut self, sizes: &[Vec<u32>]) -> (Vec<u32>, Vec<u32>) {
        let tti = self.tti;
        let mut arrived = vec![0; self.num_ues()];
        let mut overflow = vec![0; self.num_ues()];
        for (k, list) in sizes.iter().enumerate() {
            for &s in list {
                arrived[k] += 1;
                if !self.buffers[k].enqueue(Packet::new(s, tti)) {
                    overflow[k] += 1;
                }
            }
        }
        (arrived, overflow)
    }

    fn top_up(&mut self) -> Vec<u32> {
        let size = self.cfg.packet_size_bits;
        let tti = self.tti;
        self.buffers
            .iter_mut()
            .map(|b| {
                let mut n = 0;
                while b.spare_bits() >= u64::from(size) {
                    b.enqueue(Packet::new(size, tti));
                    n += 1;
                }
                n
            })
            .collect()
    }

    pub fn ledger_balances(&self) -> bool {
        self.buffers.iter().all(RlcBuffer::ledger_balances)
    }
}

/// RBG-by-RBG planning of one TTI against a provisional state: after each
/// grant the granted UE's remaining bits, HoL and provisional average rate are
/// updated before the next RBG is decided.
#[derive(Debug, Clone)]
pub struct TtiPlanner<'a> {
    env: &'a CellEnv,
    grants: Vec<Option<usize>>,
    granted_bits: Vec<u64>,
}

impl TtiPlanner<'_> {
    pub fn env(&self) -> &CellEnv {
        self.env
    }

    /// RBG to decide next, or `None` when all are planned.
    pub fn next_rbg(&self) -> Option<usize> {
        (self.grants.len() < self.env.num_rbgs()).then_some(self.grants.len())
    }

    fn remaining(&self, ue: usize) -> u64 {
        self.env.buffers[ue]
            .queued_bits()
            .saturating_sub(self.granted_bits[ue])
    }

    pub fn is_active(&self, ue: usize) -> bool {
        self.remaining(ue) > 0
    }

    pub fn active_mask(&self) -> Vec<bool> {
        (0..self.env.num_ues()).map(|k| self.is_active(k)).collect()
    }

    pub fn any_active(&self) -> bool {
        (0..self.env.num_ues()).any(|k| self.is_active(k))
    }

    /// Provisional observation for the next RBG; `estimated_rate` is the
    /// rate on that RBG.
    pub fn observe(&self) -> Observation {
        let rbg = self.next_rbg().unwrap_or(self.env.num_rbgs() - 1);
        let w = f64::from(self.env.cfg.avg_window);
        let now = self.env.tti;
        let ues = (0..self.env.num_ues())
            .map(|k| {
                let buf = &self.env.buffers[k];
                let granted = self.granted_bits[k].min(buf.queued_bits());
                let mut covered = granted;
                let mut hol = 0;
                for p in buf.packets() {
                    let r = u64::from(p.remaining_bits);
                    if covered >= r {
                        covered -= r;
                    } else {
                        hol = now.saturating_sub(p.arrival_tti);
                        break;
                    }
                }
                UeObservation {
                    estimated_rate: f64::from(self.env.current.rate(k, rbg)),
                    average_rate: self.env.avg_rate[k] + granted as f64 / w,
                    spare_buffer: (buf.spare_bits() + granted) as f64,
                    hol_wait: hol as f64,
                    active: self.is_active(k),
                }
            })
            .collect();
        Observation { ues }
    }

    pub fn rate(&self, ue: usize) -> u32 {
        let rbg = self.next_rbg().expect("all RBGs planned");
        self.env.current.rate(ue, rbg)
    }

    /// Assign the next RBG. Granting a provisionally drained UE is allowed
    /// (the grant is wasted) as long as it was active at the TTI start.
    pub fn grant(&mut self, ue: Option<usize>) {
        let rbg = self.next_rbg().expect("all RBGs planned");
        if let Some(k) = ue {
            self.granted_bits[k] += u64::from(self.env.current.rate(k, rbg));
        }
        self.grants.push(ue);
    }

    pub fn finish(mut self) -> Allocation {
        self.grants.resize(self.env.num_rbgs(), None);
        Allocation {
            grants: self.grants,
        }
    }
}
