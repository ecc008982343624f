//! JSON checkpoint of an [`ActorCritic`]: architecture, layer shapes and
//! row-major (`in x out`) weights.
//!
//! ```text
//! {"format":"smartsched-checkpoint","version":1,
//!  "architecture":{"kind":"one_pass","num_ues":5},"hidden_per_ue":128,"updates":2000,
//!  "policy":[{"rows":20,"cols":640,"weights":[...],"bias":[...]}, ...],
//!  "value":[...]}
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::mlp::{Dense, Mlp};
use super::policy::{ActorCritic, Architecture};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "smartsched-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    architecture: Architecture,
    hidden_per_ue: usize,
    updates: u64,
    policy: Vec<LayerRecord>,
    value: Vec<LayerRecord>,
}

fn to_records(net: &Mlp) -> Vec<LayerRecord> {
    net.layers
        .iter()
        .map(|l| LayerRecord {
            rows: l.w.nrows(),
            cols: l.w.ncols(),
            weights: l.w.iter().copied().collect(),
            bias: l.b.to_vec(),
        })
        .collect()
}

fn from_records(name: &str, recs: Vec<LayerRecord>, expected: &[usize]) -> Result<Mlp> {
    let shapes: Vec<(usize, usize)> = expected.windows(2).map(|w| (w[0], w[1])).collect();
    if recs.len() != shapes.len() {
        return Err(Error::ShapeMismatch(format!(
            "{name} network has {} layers, architecture needs {}",
            recs.len(),
            shapes.len()
        )));
    }
    let mut layers = Vec::with_capacity(recs.len());
    for (i, (r, &(rows, cols))) in recs.into_iter().zip(&shapes).enumerate() {
        if (r.rows, r.cols) != (rows, cols) || r.weights.len() != rows * cols || r.bias.len() != cols
        {
            return Err(Error::ShapeMismatch(format!(
                "{name} layer {i}: stored {}x{} ({} weights, {} biases), expected {rows}x{cols}",
                r.rows,
                r.cols,
                r.weights.len(),
                r.bias.len()
            )));
        }
        if r.weights.iter().chain(&r.bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{name} layer {i} parameters")));
        }
        layers.push(Dense {
            w: Array2::from_shape_vec((rows, cols), r.weights).expect("checked"),
            b: Array1::from(r.bias),
        });
    }
    Ok(Mlp { layers })
}

/// A saved agent plus the number of updates it has seen.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub agent: ActorCritic,
    pub updates: u64,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            architecture: self.agent.arch,
            hidden_per_ue: self.agent.hidden_per_ue,
            updates: self.updates,
            policy: to_records(&self.agent.policy),
            value: to_records(&self.agent.value),
        };
        serde_json::to_string(&file).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)
            .map_err(|e| Error::format("<checkpoint>", e.to_string()))?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(Error::format("<checkpoint>", format!("format tag `{}`", file.format)));
        }
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::format("<checkpoint>", format!("version {}", file.version)));
        }
        if file.hidden_per_ue == 0 {
            return Err(Error::format("<checkpoint>", "hidden_per_ue must be positive"));
        }
        let (p, v) = file.architecture.layer_sizes(file.hidden_per_ue);
        Ok(Checkpoint {
            agent: ActorCritic {
                arch: file.architecture,
                hidden_per_ue: file.hidden_per_ue,
                policy: from_records("policy", file.policy, &p)?,
                value: from_records("value", file.value, &v)?,
            },
            updates: file.updates,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        w.write_all(self.to_json().as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let text = std::io::read_to_string(BufReader::new(f)).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format { reason, .. } => Error::format(path, reason),
            other => other,
        })
    }
}
