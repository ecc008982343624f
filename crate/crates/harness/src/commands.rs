use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use smartsched::a2c::{curve_csv, train, DrlScheduler, EvalSpec, LiveEnvFactory, TraceEnvFactory};
use smartsched::baselines::{classical, Scheduler};
use smartsched::compare::{compare, run_episode, CompareSpec, ComparisonReport, EpisodeEnvs};
use smartsched::env::{CellEnv, Trace};
use smartsched::kpi::{write_kpi_csv, Objectives};
use smartsched::neural::gradcheck::{run_gradcheck, GradCheckConfig};
use smartsched::neural::{ActorCritic, Checkpoint};
use smartsched::pareto::{
    enumerate_all, fronts_csv, nsga2_run, pareto_set, pla_run, scalarize, ScheduleSequence,
};
use smartsched::seed::derive;

use crate::config::ExperimentConfig;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Eval,
    Compare,
    Pareto,
    TraceRecord,
    TraceReplay,
    Gradcheck,
}

/// Files written by a command, and the lines it printed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

const CLASSICAL: [&str; 4] = ["rr", "maxci", "maxmin", "pf"];

struct Out<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl Out<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<(), HarnessError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), HarnessError> {
        let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
        self.write(name, &text)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.outcome.files.push(p.clone());
        p
    }

    fn say(&mut self, line: String) {
        self.outcome.summary.push(line);
    }
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| HarnessError::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    let mut out = Out {
        dir: &cfg.output_dir,
        outcome: Outcome::default(),
    };
    match cmd {
        Command::Train => cmd_train(cfg, &mut out)?,
        Command::Eval => cmd_eval(cfg, &mut out)?,
        Command::Compare => cmd_compare(cfg, &mut out)?,
        Command::Pareto => cmd_pareto(cfg, &mut out)?,
        Command::TraceRecord => cmd_trace_record(cfg, &mut out)?,
        Command::TraceReplay => cmd_trace_replay(cfg, &mut out)?,
        Command::Gradcheck => cmd_gradcheck(&mut out)?,
    }
    Ok(out.outcome)
}

fn load_agent(cfg: &ExperimentConfig) -> Result<Option<Arc<ActorCritic>>, HarnessError> {
    match &cfg.scheduler.checkpoint {
        Some(p) => Ok(Some(Arc::new(Checkpoint::load(p)?.agent))),
        None => Ok(None),
    }
}

fn check_name(name: &str, field: &str, agent: &Option<Arc<ActorCritic>>) -> Result<(), HarnessError> {
    if CLASSICAL.contains(&name) {
        return Ok(());
    }
    if name == "drl" {
        return match agent {
            Some(_) => Ok(()),
            None => Err(HarnessError::Config(format!(
                "{field} = \"drl\" needs scheduler.checkpoint"
            ))),
        };
    }
    Err(HarnessError::Config(format!(
        "{field}: unknown scheduler `{name}` (expected rr, maxci, maxmin, pf or drl)"
    )))
}

fn make_scheduler(
    name: &str,
    env: &CellEnv,
    agent: &Option<Arc<ActorCritic>>,
) -> smartsched::Result<Box<dyn Scheduler + Send>> {
    match (name, agent) {
        ("drl", Some(a)) => Ok(Box::new(DrlScheduler::greedy(a.clone(), env.num_ues())?)),
        _ => Ok(classical(name, env.num_ues(), env.config().avg_window)
            .expect("scheduler names are checked before running")),
    }
}

fn episode_envs(cfg: &ExperimentConfig, independent: bool) -> Result<Vec<EpisodeEnvs>, HarnessError> {
    (0..cfg.evaluation.episodes)
        .map(|i| {
            let seed = derive(cfg.seed, "episode", i);
            let baseline_env = if independent {
                Some(CellEnv::reset(&cfg.env, derive(cfg.seed, "independent-episode", i))?)
            } else {
                None
            };
            Ok(EpisodeEnvs {
                seed,
                scheme_env: CellEnv::reset(&cfg.env, seed)?,
                baseline_env,
            })
        })
        .collect()
}

fn report_lines(out: &mut Out<'_>, r: &ComparisonReport) {
    let f = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    out.say(format!(
        "{} vs {} ({:?}, {} episodes): reward {:.4} vs {:.4}",
        r.scheme,
        r.baseline,
        r.mode,
        r.episodes.len(),
        r.scheme_mean.mean_reward,
        r.baseline_mean.mean_reward
    ));
    out.say(format!(
        "ratios: thp {} jfi {} pdr {} reward {}",
        f(r.ratios.thp),
        f(r.ratios.jfi),
        f(r.ratios.pdr),
        f(r.ratios.mean_reward)
    ));
}

fn run_comparison(
    cfg: &ExperimentConfig,
    scheme: &str,
    baseline: &str,
    agent: &Option<Arc<ActorCritic>>,
    episodes: Vec<EpisodeEnvs>,
) -> Result<ComparisonReport, HarnessError> {
    let make_a = |env: &CellEnv| make_scheduler(scheme, env, agent);
    let make_b = |env: &CellEnv| make_scheduler(baseline, env, agent);
    let spec = CompareSpec {
        scheme,
        baseline,
        make_scheme: &make_a,
        make_baseline: &make_b,
        weights: cfg.training.reward,
        window_ttis: cfg.evaluation.window_ttis,
    };
    Ok(compare(&spec, episodes)?)
}

fn cmd_train(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), HarnessError> {
    let t = &cfg.training;
    let eval_seeds: Vec<u64> = (0..t.eval_episodes).map(|i| derive(cfg.seed, "train-eval", i as u64)).collect();
    let eval = EvalSpec::live(&cfg.env, &eval_seeds, t.reward)?;
    let init = match &cfg.scheduler.checkpoint {
        Some(p) => Some(Checkpoint::load(p)?),
        None => None,
    };
    let seed = derive(cfg.seed, "train", 0);
    let result = if cfg.training_traces.is_empty() {
        let factory = LiveEnvFactory {
            cfg: cfg.env.clone(),
            seed: derive(cfg.seed, "train-envs", 0),
        };
        train(t, &factory, Some(&eval), init, seed)?
    } else {
        let traces = cfg
            .training_traces
            .iter()
            .map(|p| Ok(Arc::new(Trace::load(p)?)))
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let factory = TraceEnvFactory::new(traces)?;
        train(t, &factory, Some(&eval), init, seed)?
    };
    result.checkpoint.save(out.path("checkpoint.json"))?;
    out.write("curve.csv", &curve_csv(&result.curve))?;
    let mut rewards = String::from("update,mean_reward\n");
    for (i, r) in result.batch_rewards.iter().enumerate() {
        rewards.push_str(&format!("{i},{r}\n"));
    }
    out.write("training_rewards.csv", &rewards)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        updates: u64,
        final_eval: Option<&'a smartsched::a2c::CurveRow>,
    }
    out.json(
        "train_summary.json",
        &Summary {
            updates: result.checkpoint.updates,
            final_eval: result.curve.last(),
        },
    )?;
    out.say(format!("trained {} updates", result.checkpoint.updates));
    if let Some(last) = result.curve.last() {
        out.say(format!(
            "greedy eval at update {}: mean reward {:.4}, thp ratio vs pf {:?}",
            last.update_index, last.mean_reward, last.thp_ratio_vs_pf
        ));
    }
    Ok(())
}

fn cmd_eval(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), HarnessError> {
    let agent = load_agent(cfg)?;
    if agent.is_none() {
        return Err(HarnessError::Config("eval needs scheduler.checkpoint".into()));
    }
    check_name(&cfg.scheduler.baseline, "scheduler.baseline", &agent)?;
    let r = run_comparison(cfg, "drl", &cfg.scheduler.baseline, &agent, episode_envs(cfg, false)?)?;
    out.json("eval_report.json", &r)?;
    out.write("eval_windows.csv", &r.windows_csv())?;
    report_lines(out, &r);
    Ok(())
}

fn cmd_compare(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), HarnessError> {
    let agent = load_agent(cfg)?;
    check_name(&cfg.scheduler.name, "scheduler.name", &agent)?;
    check_name(&cfg.scheduler.baseline, "scheduler.baseline", &agent)?;
    let episodes = match &cfg.trace {
        Some(p) => {
            let trace = Arc::new(Trace::load(p)?);
            vec![EpisodeEnvs {
                seed: trace.header.seed,
                scheme_env: CellEnv::replay(trace)?,
                baseline_env: None,
            }]
        }
        None => episode_envs(cfg, cfg.evaluation.independent)?,
    };
    let r = run_comparison(cfg, &cfg.scheduler.name, &cfg.scheduler.baseline, &agent, episodes)?;
    out.json("compare_report.json", &r)?;
    out.write("compare_windows.csv", &r.windows_csv())?;
    report_lines(out, &r);
    Ok(())
}

fn require_trace(cfg: &ExperimentConfig) -> Result<Arc<Trace>, HarnessError> {
    let p = cfg
        .trace
        .as_ref()
        .ok_or_else(|| HarnessError::Config("this command needs `trace`".into()))?;
    Ok(Arc::new(Trace::load(p)?))
}

#[derive(Serialize)]
struct Point {
    genes: Vec<usize>,
    objectives: Objectives,
    score: f64,
}

#[derive(Serialize)]
struct ExhaustiveOut {
    sequences: usize,
    pareto_set: Vec<Objectives>,
}

#[derive(Serialize)]
struct GaOut {
    config: smartsched::pareto::GaConfig,
    seed: u64,
    first_front: Vec<Point>,
    best: Point,
}

#[derive(Serialize)]
struct PlaOut {
    config: smartsched::pareto::PlaConfig,
    max_survivors: usize,
    final_paths: usize,
    nondominated: Vec<Point>,
    best: Point,
}

#[derive(Serialize)]
struct ParetoReport {
    trace_digest: String,
    num_ues: usize,
    num_rbgs: usize,
    ttis: usize,
    exhaustive: Option<ExhaustiveOut>,
    ga: Option<GaOut>,
    pla: Option<PlaOut>,
}

fn cmd_pareto(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), HarnessError> {
    let trace = require_trace(cfg)?;
    let p = &cfg.pareto;
    let w = p.pla.weights;
    let point = |genes: &[usize], o: Objectives| Point {
        genes: genes.to_vec(),
        objectives: o,
        score: scalarize(&o, &w, &trace),
    };
    let best_of = |pts: &[Point]| -> usize {
        pts.iter()
            .enumerate()
            .fold(0, |b, (i, x)| if x.score > pts[b].score { i } else { b })
    };
    let mut report = ParetoReport {
        trace_digest: trace.digest().to_string(),
        num_ues: trace.num_ues(),
        num_rbgs: trace.num_rbgs(),
        ttis: trace.len(),
        exhaustive: None,
        ga: None,
        pla: None,
    };
    let mut fronts: Vec<(&str, Vec<Objectives>)> = Vec::new();
    if p.exhaustive {
        let all = enumerate_all(&trace)?;
        let set = pareto_set(&all.iter().map(|(_, o)| *o).collect::<Vec<_>>());
        out.say(format!("exhaustive: {} sequences, {} Pareto points", all.len(), set.len()));
        fronts.push(("exhaustive", set.clone()));
        report.exhaustive = Some(ExhaustiveOut {
            sequences: all.len(),
            pareto_set: set,
        });
    }
    if p.run_ga {
        let seed = derive(cfg.seed, "pareto-ga", 0);
        let r = nsga2_run(&trace, &p.ga, seed)?;
        let front: Vec<Point> = r.first_front().iter().map(|i| point(&i.genes, i.objectives)).collect();
        let b = best_of(&front);
        let best = point(&front[b].genes, front[b].objectives);
        ScheduleSequence::from_flat(r.num_ues, r.num_rbgs, &best.genes)
            .save(out.path("ga_best_sequence.json"), &trace)?;
        out.say(format!("nsga2: first front of {} members, best score {:.4}", front.len(), best.score));
        fronts.push(("ga", front.iter().map(|x| x.objectives).collect()));
        report.ga = Some(GaOut {
            config: p.ga.clone(),
            seed,
            first_front: front,
            best,
        });
    }
    if p.run_pla {
        let r = pla_run(&trace, &p.pla)?;
        let nd: Vec<Point> = r.nondominated().iter().map(|x| point(&x.genes, x.objectives)).collect();
        let best_path = r.best_path();
        let best = point(&best_path.genes, best_path.objectives);
        r.best_sequence().save(out.path("pla_best_sequence.json"), &trace)?;
        out.say(format!(
            "pla: {} final paths, {} nondominated, best score {:.4}",
            r.paths.len(),
            nd.len(),
            best.score
        ));
        fronts.push(("pla", nd.iter().map(|x| x.objectives).collect()));
        report.pla = Some(PlaOut {
            config: p.pla.clone(),
            max_survivors: r.survivors.iter().copied().max().unwrap_or(0),
            final_paths: r.paths.len(),
            nondominated: nd,
            best,
        });
    }
    out.json("pareto_report.json", &report)?;
    out.write(
        "fronts.csv",
        &fronts_csv(fronts.iter().map(|(n, v)| (*n, v.as_slice()))),
    )?;
    Ok(())
}

fn cmd_trace_record(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), HarnessError> {
    let seed = derive(cfg.seed, "trace-record", 0);
    let trace = Trace::record(&cfg.env, seed, cfg.env.duration_ttis)?;
    trace.save(out.path("trace.jsonl"))?;
    out.say(format!("recorded {} TTIs, digest {}", trace.len(), trace.digest()));
    Ok(())
}

fn cmd_trace_replay(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), HarnessError> {
    let trace = require_trace(cfg)?;
    let agent = load_agent(cfg)?;
    check_name(&cfg.scheduler.name, "scheduler.name", &agent)?;
    let env = CellEnv::replay(trace.clone())?;
    let mut s = make_scheduler(&cfg.scheduler.name, &env, &agent)?;
    let r = run_episode(env, s.as_mut(), cfg.training.reward, cfg.evaluation.window_ttis)?;
    let mut buf = Vec::new();
    write_kpi_csv(&mut buf, &r.rows)?;
    out.write("replay_kpi.csv", &String::from_utf8(buf).expect("csv is utf-8"))?;
    #[derive(Serialize)]
    struct Summary<'a> {
        scheduler: &'a str,
        trace_digest: &'a str,
        exogenous_digest: &'a str,
        objectives: Objectives,
        dropped: u64,
        mean_reward: f64,
    }
    out.json(
        "replay_summary.json",
        &Summary {
            scheduler: &cfg.scheduler.name,
            trace_digest: trace.digest(),
            exogenous_digest: &r.exogenous_digest,
            objectives: r.objectives,
            dropped: r.dropped,
            mean_reward: r.mean_reward,
        },
    )?;
    out.say(format!(
        "{} on trace: thp {} jfi {:.4} pdr {:.4} reward {:.4}",
        cfg.scheduler.name, r.objectives.thp, r.objectives.jfi, r.objectives.pdr, r.mean_reward
    ));
    Ok(())
}

fn cmd_gradcheck(out: &mut Out<'_>) -> Result<(), HarnessError> {
    let report = run_gradcheck(&GradCheckConfig::default());
    out.json("gradcheck_report.json", &report)?;
    for (arch, err) in report.max_error_by_architecture() {
        out.say(format!("{arch}: max relative error {err:.3e}"));
    }
    if !report.passed {
        return Err(HarnessError::CheckFailed(format!(
            "gradient check above tolerance {:e}",
            report.tolerance
        )));
    }
    Ok(())
}
