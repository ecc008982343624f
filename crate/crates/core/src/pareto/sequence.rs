use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::{Allocation, CellEnv, Trace};
use crate::error::{Error, Result};
use crate::kpi::{KpiWindow, Objectives, RewardWeights};

pub const SEQUENCE_FORMAT: &str = "smartsched-sequence";

/// A full decision sequence: one UE index per (TTI, RBG), TTI-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScheduleSequence {
    pub num_ues: usize,
    pub num_rbgs: usize,
    /// `genes[t][b]` is the UE given RBG `b` at TTI `t`.
    pub genes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceFile {
    format: String,
    version: u32,
    trace_digest: String,
    #[serde(flatten)]
    sequence: ScheduleSequence,
}

impl ScheduleSequence {
    /// From a flat TTI-major gene list.
    pub fn from_flat(num_ues: usize, num_rbgs: usize, flat: &[usize]) -> Self {
        ScheduleSequence {
            num_ues,
            num_rbgs,
            genes: flat.chunks(num_rbgs).map(<[usize]>::to_vec).collect(),
        }
    }

    pub fn flat(&self) -> Vec<usize> {
        self.genes.iter().flatten().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn check(&self, trace: &Trace) -> Result<()> {
        if self.num_ues != trace.num_ues() || self.num_rbgs != trace.num_rbgs() {
            return Err(Error::contract(format!(
                "sequence is for {} UEs x {} RBGs, trace has {} x {}",
                self.num_ues,
                self.num_rbgs,
                trace.num_ues(),
                trace.num_rbgs()
            )));
        }
        if self.genes.len() != trace.len() {
            return Err(Error::contract(format!(
                "sequence covers {} TTIs, trace has {}",
                self.genes.len(),
                trace.len()
            )));
        }
        for (t, g) in self.genes.iter().enumerate() {
            if g.len() != self.num_rbgs || g.iter().any(|&k| k >= self.num_ues) {
                return Err(Error::contract(format!("invalid genes at TTI {t}: {g:?}")));
            }
        }
        Ok(())
    }

    /// Save alongside the digest of the trace it was computed on.
    pub fn save(&self, path: impl AsRef<Path>, trace: &Trace) -> Result<()> {
        let path = path.as_ref();
        let f = SequenceFile {
            format: SEQUENCE_FORMAT.into(),
            version: 1,
            trace_digest: trace.digest().to_string(),
            sequence: self.clone(),
        };
        let text = serde_json::to_string(&f).expect("sequence serializes") + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Load and return the sequence with the trace digest it was saved with.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, String)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: SequenceFile =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if f.format != SEQUENCE_FORMAT || f.version != 1 {
            return Err(Error::format(path, "not a version-1 sequence file"));
        }
        Ok((f.sequence, f.trace_digest))
    }
}

/// Allocation for one TTI: a gene pointing at a UE whose buffer is empty at
/// the start of the TTI leaves that RBG unused.
pub fn genes_to_allocation(env: &CellEnv, genes: &[usize]) -> Allocation {
    Allocation::from_grants(
        genes
            .iter()
            .map(|&k| env.is_active(k).then_some(k))
            .collect(),
    )
}

/// Replay `genes` (flat, TTI-major) on `trace`. Returns the final KPI window.
pub fn replay_flat(trace: &Arc<Trace>, genes: &[usize]) -> Result<KpiWindow> {
    let mut env = CellEnv::replay(trace.clone())?;
    let b = env.num_rbgs();
    if genes.len() != trace.len() * b {
        return Err(Error::contract(format!(
            "{} genes for {} TTIs x {b} RBGs",
            genes.len(),
            trace.len()
        )));
    }
    let mut window = KpiWindow::new(env.num_ues(), 0);
    for chunk in genes.chunks(b) {
        if chunk.iter().any(|&k| k >= env.num_ues()) {
            return Err(Error::contract(format!("gene out of range: {chunk:?}")));
        }
        let out = env.step(&genes_to_allocation(&env, chunk))?;
        window.update(&out);
    }
    Ok(window)
}

/// `(THP, JFI, PDR)` of a decision sequence replayed on a trace.
pub fn evaluate_sequence(trace: &Arc<Trace>, seq: &ScheduleSequence) -> Result<Objectives> {
    seq.check(trace)?;
    Ok(replay_flat(trace, &seq.flat())?.finalize())
}

/// Scalarization used to pick one path: `α·THP/(N·K·top) + β·JFI − δ·PDR`.
pub fn scalarize(o: &Objectives, w: &RewardWeights, trace: &Trace) -> f64 {
    let top = trace
        .config()
        .rate_ladder()
        .map(|l| f64::from(l.top_rate()))
        .unwrap_or(1.0);
    let norm = trace.len() as f64 * trace.num_ues() as f64 * top;
    w.alpha * o.thp as f64 / norm + w.beta * o.jfi - w.delta * o.pdr
}
