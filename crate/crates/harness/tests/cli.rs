use std::path::Path;
use std::process::{Command, Output};

fn smartsched(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smartsched"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn train_tiny(dir: &Path, out: &str, arch: &str, k: usize) {
    let o = smartsched(
        dir,
        &[
            "train",
            "--set", &format!("training.architecture={arch}"),
            "--set", "training.max_updates=3",
            "--set", "training.eval_every=0",
            "--set", "training.eval_episodes=1",
            "--set", &format!("env.num_ues={k}"),
            "--set", "env.duration_ttis=50",
            "--set", &format!("output_dir={out}"),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn missing_trace_names_the_path() {
    let d = tempfile::tempdir().unwrap();
    let o = smartsched(d.path(), &["pareto", "--set", "trace=missing/trace.jsonl"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("missing/trace.jsonl"), "{}", stderr(&o));
}

#[test]
fn pareto_without_trace_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = smartsched(d.path(), &["pareto"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unknown_key_and_bad_value_are_config_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&smartsched(d.path(), &["compare", "--set", "env.bogus=1"])), 1);
    assert_eq!(code(&smartsched(d.path(), &["compare", "--set", "env.num_ues=0"])), 1);
    assert_eq!(code(&smartsched(d.path(), &["compare", "--set", "scheduler.name=nope"])), 1);
}

#[test]
fn config_file_and_overrides_combine() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("exp.json"),
        r#"{"seed": 7, "env": {"duration_ttis": 40}, "evaluation": {"episodes": 2}}"#,
    )
    .unwrap();
    let o = smartsched(
        d.path(),
        &["compare", "--config", "exp.json", "--set", "scheduler.name=rr", "--set", "output_dir=c"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("c/compare_report.json")).unwrap()).unwrap();
    assert_eq!(report["episodes"].as_array().unwrap().len(), 2);
    assert_eq!(report["scheme"], "rr");
}

#[test]
fn pf_against_pf_ratios_are_one() {
    let d = tempfile::tempdir().unwrap();
    let o = smartsched(
        d.path(),
        &["compare", "--set", "evaluation.episodes=3", "--set", "env.duration_ttis=100"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("out/compare_report.json")).unwrap()).unwrap();
    assert_eq!(r["mode"], "paired");
    for key in ["thp", "jfi", "pdr", "mean_reward"] {
        assert_eq!(r["ratios"][key].as_f64(), Some(1.0), "{key}");
    }
}

#[test]
fn independent_mode_is_reported() {
    let d = tempfile::tempdir().unwrap();
    let o = smartsched(
        d.path(),
        &[
            "compare",
            "--set", "evaluation.episodes=2",
            "--set", "evaluation.independent=true",
            "--set", "env.duration_ttis=60",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("out/compare_report.json")).unwrap()).unwrap();
    assert_eq!(r["mode"], "independent");
    assert_eq!(r["episodes"][0]["exogenous_identical"], false);
}

#[test]
fn one_pass_checkpoint_rejects_other_ue_counts() {
    let d = tempfile::tempdir().unwrap();
    train_tiny(d.path(), "op", "one_pass", 5);
    let o = smartsched(
        d.path(),
        &[
            "eval",
            "--set", "scheduler.checkpoint=op/checkpoint.json",
            "--set", "env.num_ues=8",
            "--set", "evaluation.episodes=1",
            "--set", "env.duration_ttis=20",
        ],
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn scalable_checkpoint_runs_on_fifty_ues() {
    let d = tempfile::tempdir().unwrap();
    train_tiny(d.path(), "sc", "scalable", 5);
    let o = smartsched(
        d.path(),
        &[
            "eval",
            "--set", "scheduler.checkpoint=sc/checkpoint.json",
            "--set", "env.num_ues=50",
            "--set", "evaluation.episodes=1",
            "--set", "env.duration_ttis=30",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(d.path().join("out/eval_report.json").exists());
}

#[test]
fn eval_needs_a_checkpoint() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&smartsched(d.path(), &["eval"])), 1);
}

#[test]
fn trace_roundtrip_through_cli() {
    let d = tempfile::tempdir().unwrap();
    let rec = smartsched(
        d.path(),
        &["trace-record", "--set", "env.duration_ttis=40", "--set", "output_dir=t"],
    );
    assert_eq!(code(&rec), 0, "{}", stderr(&rec));
    for dir in ["r1", "r2"] {
        let o = smartsched(
            d.path(),
            &["trace-replay", "--set", "trace=t/trace.jsonl", "--set", &format!("output_dir={dir}")],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = std::fs::read(d.path().join("r1/replay_kpi.csv")).unwrap();
    let b = std::fs::read(d.path().join("r2/replay_kpi.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(std::str::from_utf8(&a).unwrap().lines().count(), 41);
}

#[test]
fn pareto_reports_all_three_searches() {
    let d = tempfile::tempdir().unwrap();
    let rec = smartsched(
        d.path(),
        &[
            "trace-record",
            "--set", "env.num_ues=3",
            "--set", "env.duration_ttis=5",
            "--set", "output_dir=t",
        ],
    );
    assert_eq!(code(&rec), 0, "{}", stderr(&rec));
    let o = smartsched(
        d.path(),
        &[
            "pareto",
            "--set", "trace=t/trace.jsonl",
            "--set", "pareto.exhaustive=true",
            "--set", "pareto.ga.generations=20",
            "--set", "pareto.pla.l_max=243",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("out/pareto_report.json")).unwrap()).unwrap();
    assert_eq!(r["exhaustive"]["sequences"], 243);
    let set = r["exhaustive"]["pareto_set"].as_array().unwrap().len();
    let pla = r["pla"]["nondominated"].as_array().unwrap();
    let mut distinct: Vec<String> = pla.iter().map(|p| p["objectives"].to_string()).collect();
    distinct.sort();
    distinct.dedup();
    assert_eq!(distinct.len(), set);
    let csv = std::fs::read_to_string(d.path().join("out/fronts.csv")).unwrap();
    assert!(csv.starts_with("set,index,thp,jfi,pdr\n"));
}
