use std::sync::Arc;

use rayon::prelude::*;

use super::sequence::replay_flat;
use super::sort::fast_nondominated_sort;
use crate::env::Trace;
use crate::error::{Error, Result};
use crate::kpi::Objectives;

/// Refuse enumerations beyond this many sequences.
pub const MAX_ENUMERATION: u64 = 1 << 22;

/// Every decision sequence with its objectives, in lexicographic gene order.
pub fn enumerate_all(trace: &Arc<Trace>) -> Result<Vec<(Vec<usize>, Objectives)>> {
    let k = trace.num_ues() as u64;
    let len = (trace.len() * trace.num_rbgs()) as u32;
    let total = k
        .checked_pow(len)
        .filter(|&n| n <= MAX_ENUMERATION)
        .ok_or_else(|| {
            Error::contract(format!("{k}^{len} sequences is too many to enumerate"))
        })?;
    (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut genes = vec![0usize; len as usize];
            for g in genes.iter_mut().rev() {
                *g = (idx % k) as usize;
                idx /= k;
            }
            let o = replay_flat(trace, &genes)?.finalize();
            Ok((genes, o))
        })
        .collect()
}

/// Distinct objective triples, sorted by (THP, JFI, PDR) bit patterns.
pub fn distinct(objs: impl IntoIterator<Item = Objectives>) -> Vec<Objectives> {
    let mut v: Vec<Objectives> = objs.into_iter().collect();
    v.sort_by_key(objective_key);
    v.dedup_by_key(|o| objective_key(o));
    v
}

pub fn objective_key(o: &Objectives) -> (u64, u64, u64) {
    (o.thp, o.jfi.to_bits(), o.pdr.to_bits())
}

/// Distinct nondominated objective triples among `objs`.
pub fn pareto_set(objs: &[Objectives]) -> Vec<Objectives> {
    let d = distinct(objs.iter().copied());
    let fronts = fast_nondominated_sort(&d);
    let first = fronts.into_iter().next().unwrap_or_default();
    first.into_iter().map(|i| d[i]).collect()
}

/// True Pareto set of a trace by enumeration.
pub fn exhaustive_pareto(trace: &Arc<Trace>) -> Result<Vec<Objectives>> {
    let all = enumerate_all(trace)?;
    Ok(pareto_set(&all.iter().map(|(_, o)| *o).collect::<Vec<_>>()))
}
