//! Episode runner and paired scheduler comparison.
//!
//! In paired mode both schemes run on clones of one environment, so they see
//! the same channel and arrival stream while keeping separate buffers. Every
//! run hashes the exogenous records it consumed; the report carries both
//! digests so the pairing can be verified.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baselines::Scheduler;
use crate::env::CellEnv;
use crate::error::Result;
use crate::kpi::{jain_index, KpiRow, Objectives, RewardTracker, RewardWeights};

/// KPIs of a block of consecutive TTIs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRow {
    pub window: usize,
    pub start_tti: u64,
    pub thp: u64,
    pub jfi: f64,
    pub dropped: u64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub objectives: Objectives,
    pub dropped: u64,
    pub mean_reward: f64,
    pub rows: Vec<KpiRow>,
    pub windows: Vec<WindowRow>,
    pub exogenous_digest: String,
}

/// Run `sched` until the environment's scheduling duration ends.
pub fn run_episode(
    mut env: CellEnv,
    sched: &mut dyn Scheduler,
    weights: RewardWeights,
    window_ttis: u64,
) -> Result<EpisodeResult> {
    let k = env.num_ues();
    let mut tracker = RewardTracker::new(weights, k, env.top_rate(), env.tti());
    let mut hasher = Sha256::new();
    let mut rows = Vec::with_capacity(env.duration() as usize);
    let mut windows = Vec::new();
    let mut win_bits = vec![0u64; k];
    let (mut win_dropped, mut win_reward, mut win_len) = (0u64, 0.0, 0u64);
    let mut win_start = env.tti();
    while !env.is_done() {
        hasher.update(serde_json::to_vec(env.current_record()).expect("record serializes"));
        let alloc = sched.schedule(&env);
        let out = env.step(&alloc)?;
        sched.observe(&out);
        let row = tracker.record(&out);
        for (w, &d) in win_bits.iter_mut().zip(&out.delivered_bits) {
            *w += d;
        }
        win_dropped += row.dropped_step;
        win_reward += row.reward;
        win_len += 1;
        rows.push(row);
        if win_len == window_ttis || env.is_done() {
            windows.push(WindowRow {
                window: windows.len(),
                start_tti: win_start,
                thp: win_bits.iter().sum(),
                jfi: jain_index(&win_bits),
                dropped: win_dropped,
                mean_reward: win_reward / win_len as f64,
            });
            win_bits.iter_mut().for_each(|b| *b = 0);
            (win_dropped, win_reward, win_len) = (0, 0.0, 0);
            win_start = env.tti();
        }
    }
    Ok(EpisodeResult {
        objectives: tracker.window.finalize(),
        dropped: tracker.window.dropped,
        mean_reward: tracker.mean_reward(),
        rows,
        windows,
        exogenous_digest: hex::encode(hasher.finalize()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    /// Both schemes see the identical exogenous stream.
    Paired,
    /// The baseline runs on an independently seeded stream.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub thp: f64,
    pub jfi: f64,
    pub pdr: f64,
    pub dropped: f64,
    pub mean_reward: f64,
}

impl SchemeSummary {
    fn of(r: &EpisodeResult) -> Self {
        SchemeSummary {
            thp: r.objectives.thp as f64,
            jfi: r.objectives.jfi,
            pdr: r.objectives.pdr,
            dropped: r.dropped as f64,
            mean_reward: r.mean_reward,
        }
    }

    fn mean(items: &[SchemeSummary]) -> Self {
        let n = items.len().max(1) as f64;
        let avg = |f: fn(&SchemeSummary) -> f64| items.iter().map(f).sum::<f64>() / n;
        SchemeSummary {
            thp: avg(|s| s.thp),
            jfi: avg(|s| s.jfi),
            pdr: avg(|s| s.pdr),
            dropped: avg(|s| s.dropped),
            mean_reward: avg(|s| s.mean_reward),
        }
    }
}

/// `scheme / baseline`, present only when the baseline value is positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ratios {
    pub thp: Option<f64>,
    pub jfi: Option<f64>,
    pub pdr: Option<f64>,
    pub dropped: Option<f64>,
    pub mean_reward: Option<f64>,
}

pub fn ratio(x: f64, base: f64) -> Option<f64> {
    (base > 0.0).then(|| x / base)
}

impl Ratios {
    pub fn of(s: &SchemeSummary, b: &SchemeSummary) -> Self {
        Ratios {
            thp: ratio(s.thp, b.thp),
            jfi: ratio(s.jfi, b.jfi),
            pdr: ratio(s.pdr, b.pdr),
            dropped: ratio(s.dropped, b.dropped),
            mean_reward: ratio(s.mean_reward, b.mean_reward),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeComparison {
    pub seed: u64,
    pub scheme: SchemeSummary,
    pub baseline: SchemeSummary,
    pub ratios: Ratios,
    pub scheme_digest: String,
    pub baseline_digest: String,
    pub exogenous_identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub mode: CompareMode,
    pub scheme: String,
    pub baseline: String,
    pub episodes: Vec<EpisodeComparison>,
    pub scheme_mean: SchemeSummary,
    pub baseline_mean: SchemeSummary,
    /// Ratios of the per-episode means.
    pub ratios: Ratios,
    #[serde(skip)]
    pub windows: Vec<(String, u64, WindowRow)>,
}

/// One episode's environments.
pub struct EpisodeEnvs {
    pub seed: u64,
    pub scheme_env: CellEnv,
    /// `None` pairs the baseline with a clone of `scheme_env`.
    pub baseline_env: Option<CellEnv>,
}

pub type SchedulerFactory<'a> = &'a dyn Fn(&CellEnv) -> Result<Box<dyn Scheduler + Send>>;

pub struct CompareSpec<'a> {
    pub scheme: &'a str,
    pub baseline: &'a str,
    pub make_scheme: SchedulerFactory<'a>,
    pub make_baseline: SchedulerFactory<'a>,
    pub weights: RewardWeights,
    pub window_ttis: u64,
}

pub fn compare(spec: &CompareSpec<'_>, episodes: Vec<EpisodeEnvs>) -> Result<ComparisonReport> {
    let mut mode = CompareMode::Paired;
    let mut out = Vec::with_capacity(episodes.len());
    let mut windows = Vec::new();
    for ep in episodes {
        let base_env = match ep.baseline_env {
            Some(e) => {
                mode = CompareMode::Independent;
                e
            }
            None => ep.scheme_env.clone(),
        };
        let mut a = (spec.make_scheme)(&ep.scheme_env)?;
        let mut b = (spec.make_baseline)(&base_env)?;
        let ra = run_episode(ep.scheme_env, a.as_mut(), spec.weights, spec.window_ttis)?;
        let rb = run_episode(base_env, b.as_mut(), spec.weights, spec.window_ttis)?;
        for w in &ra.windows {
            windows.push((spec.scheme.to_string(), ep.seed, w.clone()));
        }
        for w in &rb.windows {
            windows.push((spec.baseline.to_string(), ep.seed, w.clone()));
        }
        let (sa, sb) = (SchemeSummary::of(&ra), SchemeSummary::of(&rb));
        out.push(EpisodeComparison {
            seed: ep.seed,
            ratios: Ratios::of(&sa, &sb),
            scheme: sa,
            baseline: sb,
            exogenous_identical: ra.exogenous_digest == rb.exogenous_digest,
            scheme_digest: ra.exogenous_digest,
            baseline_digest: rb.exogenous_digest,
        });
    }
    let sm = SchemeSummary::mean(&out.iter().map(|e| e.scheme.clone()).collect::<Vec<_>>());
    let bm = SchemeSummary::mean(&out.iter().map(|e| e.baseline.clone()).collect::<Vec<_>>());
    Ok(ComparisonReport {
        mode,
        scheme: spec.scheme.to_string(),
        baseline: spec.baseline.to_string(),
        episodes: out,
        ratios: Ratios::of(&sm, &bm),
        scheme_mean: sm,
        baseline_mean: bm,
        windows,
    })
}

impl ComparisonReport {
    /// Per-window CSV: `scheme,seed,window,start_tti,thp,jfi,dropped,mean_reward`.
    pub fn windows_csv(&self) -> String {
        let mut s = String::from("scheme,seed,window,start_tti,thp,jfi,dropped,mean_reward\n");
        for (name, seed, w) in &self.windows {
            s.push_str(&format!(
                "{name},{seed},{},{},{},{},{},{}\n",
                w.window, w.start_tti, w.thp, w.jfi, w.dropped, w.mean_reward
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::classical;
    use crate::env::EnvConfig;

    fn pf_factory(env: &CellEnv) -> Result<Box<dyn Scheduler + Send>> {
        Ok(classical("pf", env.num_ues(), env.config().avg_window).unwrap())
    }

    #[test]
    fn pf_against_pf_is_exactly_one() {
        let cfg = EnvConfig {
            duration_ttis: 200,
            ..EnvConfig::default()
        };
        let spec = CompareSpec {
            scheme: "pf",
            baseline: "pf",
            make_scheme: &pf_factory,
            make_baseline: &pf_factory,
            weights: RewardWeights::default(),
            window_ttis: 50,
        };
        let eps = (0..3)
            .map(|s| EpisodeEnvs {
                seed: s,
                scheme_env: CellEnv::reset(&cfg, s).unwrap(),
                baseline_env: None,
            })
            .collect();
        let r = compare(&spec, eps).unwrap();
        assert_eq!(r.ratios.thp, Some(1.0));
        assert_eq!(r.ratios.jfi, Some(1.0));
        assert_eq!(r.ratios.mean_reward, Some(1.0));
        assert!(r.episodes.iter().all(|e| e.exogenous_identical));
        assert_eq!(r.windows.len(), 3 * 2 * 4);
    }

    #[test]
    fn ratio_needs_positive_base() {
        assert_eq!(ratio(3.0, 0.0), None);
        assert_eq!(ratio(3.0, 2.0), Some(1.5));
    }
}
