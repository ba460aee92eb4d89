use std::fs;
use std::path::{Path, PathBuf};

use ecodispatch::agents::{
    fit_forecaster, run_episode, train, Controller, Heuristic, ObservationSpec, PpoPolicy, QTable, RuleBased, TabularQ,
};
use ecodispatch::harness::{AgentKind, ExperimentPlan, Harness, HarnessError, ReportTable, SweepAxis, SweepPlan};
use ecodispatch::metrics::MetricReport;
use ecodispatch::nn::grad_check_suite;
use ecodispatch::sim::{Scenario, ScenarioFile};
use ecodispatch::traces::{load_csv, preprocess, series_to_records, synthesize, write_csv};
use serde::{Deserialize, Serialize};

use crate::{AgentArgs, CliError, Command, RunConfig};

/// Saved tabular Q controller.
#[derive(Debug, Serialize, Deserialize)]
struct QFile {
    soc_bins: usize,
    table: QTable,
}

pub fn execute(command: Command, mut cfg: RunConfig) -> Result<(), CliError> {
    match command {
        Command::GenTraces { preset, days } => {
            if let Some(p) = preset {
                cfg.preset = p;
            }
            if days == 0 {
                return Err(CliError::Usage("--days must be positive".into()));
            }
            let series = synthesize(cfg.preset, days, cfg.seed).map_err(CliError::runtime)?;
            let path = cfg.out.join(format!("traces-{}-{days}d-seed{}.csv", cfg.preset, cfg.seed));
            create_dir(&cfg.out)?;
            let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            write_csv(&series_to_records(&series), std::io::BufWriter::new(file)).map_err(CliError::runtime)?;
            cfg.echo(&cfg.out)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Preprocess { input, interval_minutes } => {
            if interval_minutes <= 0 {
                return Err(CliError::Usage("--interval-minutes must be positive".into()));
            }
            let raw = load_csv(&input).map_err(CliError::runtime)?;
            let data = preprocess(&raw, chrono::Duration::minutes(interval_minutes)).map_err(CliError::runtime)?;
            create_dir(&cfg.out)?;
            let path = cfg.out.join("preprocessed.csv");
            let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            data.write_csv(std::io::BufWriter::new(file)).map_err(CliError::runtime)?;
            let stats = cfg.out.join("normalization.json");
            let text = serde_json::to_string_pretty(&data.stats).map_err(CliError::runtime)?;
            fs::write(&stats, text).map_err(|e| CliError::io(&stats, e))?;
            cfg.echo(&cfg.out)?;
            println!("{} records -> {}", data.records.len(), path.display());
            Ok(())
        }
        Command::Train(args) => {
            apply_agent_args(&mut cfg, &args);
            train_agent(&cfg)
        }
        Command::Evaluate { agent, policy } => {
            apply_agent_args(&mut cfg, &agent);
            evaluate_agent(&cfg, policy)
        }
        Command::Compare => {
            let mut cfg = cfg;
            cfg.experiment.ablations.clear();
            cfg.experiment.sweep = None;
            run_harness(&cfg, |h| Ok(vec![h.run_comparison()?]))
        }
        Command::Ablate => {
            if cfg.experiment.ablations.is_empty() {
                return Err(CliError::Usage("the config lists no ablations".into()));
            }
            run_harness(&cfg, |h| Ok(vec![h.run_ablation()?]))
        }
        Command::Sweep { axis, values } => {
            match axis {
                Some(a) => {
                    let axis: SweepAxis = a.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
                    let values = if values.is_empty() {
                        cfg.experiment.sweep.as_ref().map(|s| s.values.clone()).unwrap_or_default()
                    } else {
                        values
                    };
                    cfg.experiment.sweep = Some(SweepPlan { axis, values });
                }
                None if !values.is_empty() => {
                    return Err(CliError::Usage("--values needs --axis".into()));
                }
                None => {}
            }
            if cfg.experiment.sweep.is_none() {
                return Err(CliError::Usage("no sweep axis: pass --axis or set [experiment.sweep]".into()));
            }
            run_harness(&cfg, |h| Ok(vec![h.run_sweep()?]))
        }
        Command::GradCheck => {
            let spec = ObservationSpec::default();
            let suite = grad_check_suite(spec.window, spec.features(), 11, cfg.seed).map_err(CliError::runtime)?;
            let mut ok = true;
            for case in &suite {
                println!("{} (bound {:e}):", case.name, case.tolerance);
                for l in &case.report.layers {
                    println!(
                        "  {:<24} {:<10} checked {:>3} skipped {:>3} max rel err {:.3e}",
                        l.layer, l.group, l.checked, l.skipped, l.max_rel_err
                    );
                }
                let pass = case.passed();
                ok &= pass;
                println!("  {}", if pass { "pass" } else { "FAIL" });
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::Runtime("gradient check failed".into()))
            }
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn apply_agent_args(cfg: &mut RunConfig, args: &AgentArgs) {
    if let Some(a) = args.agent {
        cfg.agent = a;
    }
    if let Some(p) = args.preset {
        cfg.preset = p;
        cfg.scenario = None;
    }
    if let Some(s) = &args.scenario {
        cfg.scenario = Some(s.clone());
    }
    if let Some(u) = args.updates {
        cfg.experiment.train.ppo.updates = u;
    }
}

/// Training scenarios and the evaluation scenario. A scenario file is used
/// for both; a preset trains on generated traces and evaluates on a
/// held-out one.
fn scenarios(cfg: &RunConfig) -> Result<(Vec<Scenario>, Scenario), CliError> {
    match &cfg.scenario {
        Some(path) => {
            let file = ScenarioFile::load(path).map_err(|e| CliError::Usage(e.to_string()))?;
            let base = path.parent().unwrap_or(Path::new("."));
            let sc = file.to_scenario(base).map_err(CliError::runtime)?;
            Ok((vec![sc.clone()], sc))
        }
        None => {
            let plan = &cfg.experiment;
            let training = plan.training_scenarios(cfg.preset, cfg.seed).map_err(CliError::runtime)?;
            let eval = plan.evaluation_scenario(cfg.preset, cfg.seed).map_err(CliError::runtime)?;
            Ok((training, eval))
        }
    }
}

fn default_model_path(cfg: &RunConfig) -> Option<PathBuf> {
    match cfg.agent {
        AgentKind::Ppo => Some(cfg.out.join("policy.json")),
        AgentKind::TabularQ => Some(cfg.out.join("q_table.json")),
        _ => None,
    }
}

fn train_agent(cfg: &RunConfig) -> Result<(), CliError> {
    let plan = &cfg.experiment;
    plan.train.ppo.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let (training, _) = scenarios(cfg)?;
    create_dir(&cfg.out)?;
    let path = default_model_path(cfg)
        .ok_or_else(|| CliError::Usage(format!("agent {} has nothing to train", cfg.agent)))?;
    match cfg.agent {
        AgentKind::Ppo => {
            let out = train(&training, &plan.train, cfg.ablation, cfg.seed).map_err(CliError::runtime)?;
            out.policy.save(&path).map_err(CliError::runtime)?;
            let curve = cfg.out.join("curve.csv");
            let mut buf = Vec::new();
            out.write_curve(&mut buf).map_err(|e| CliError::io(&curve, e))?;
            fs::write(&curve, buf).map_err(|e| CliError::io(&curve, e))?;
            if let Some(last) = out.curve.last() {
                println!(
                    "trained {} updates; last rollout mean reward {:.3}, mean cost {:.3}",
                    plan.train.ppo.updates, last.mean_cumulative_reward, last.mean_cost
                );
            }
        }
        AgentKind::TabularQ => {
            let q = TabularQ::train(&training, &plan.q, cfg.ablation, cfg.seed).map_err(CliError::runtime)?;
            let file = QFile { soc_bins: q.soc_bins, table: q.table };
            let text = serde_json::to_string(&file).map_err(CliError::runtime)?;
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            println!("trained {} episodes", plan.q.episodes);
        }
        _ => unreachable!("agents without a model path are rejected above"),
    }
    cfg.echo(&cfg.out)?;
    println!("{}", path.display());
    Ok(())
}

fn evaluate_agent(cfg: &RunConfig, policy: Option<PathBuf>) -> Result<(), CliError> {
    let (training, eval) = scenarios(cfg)?;
    let model = policy.or_else(|| default_model_path(cfg));
    let mut controller: Box<dyn Controller> = match cfg.agent {
        AgentKind::Ppo => {
            let path = model.expect("ppo has a model path");
            Box::new(PpoPolicy::load(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?)
        }
        AgentKind::TabularQ => {
            let path = model.expect("tabular_q has a model path");
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let file: QFile =
                serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            Box::new(TabularQ::from_table(file.table, file.soc_bins, cfg.seed).map_err(CliError::runtime)?)
        }
        AgentKind::RuleBased => Box::new(RuleBased),
        AgentKind::Heuristic => {
            let fc = fit_forecaster(cfg.experiment.train.forecast, &training).map_err(CliError::runtime)?;
            Box::new(Heuristic::new(fc))
        }
    };
    let log = run_episode(&eval, controller.as_mut(), cfg.seed).map_err(CliError::runtime)?;
    let report = MetricReport::from_log(&log).map_err(CliError::runtime)?;
    create_dir(&cfg.out)?;
    let episode = cfg.out.join("episode.jsonl");
    log.save_jsonl(&episode).map_err(CliError::runtime)?;
    let metrics = cfg.out.join("metrics.csv");
    let mut buf = format!("agent,scenario,{}\n{},{},", MetricReport::CSV_HEADER, cfg.agent, eval.label).into_bytes();
    report.write_csv_row(&mut buf).map_err(|e| CliError::io(&metrics, e))?;
    fs::write(&metrics, buf).map_err(|e| CliError::io(&metrics, e))?;
    cfg.echo(&cfg.out)?;
    println!(
        "{} on {}: cost {:.3}, reward {:.3}, SLA rate {:.4}, efficiency {:.4}, emissions {:.3} kg",
        cfg.agent,
        eval.label,
        report.energy_cost,
        report.cumulative_reward,
        report.sla_rate,
        report.energy_efficiency,
        report.carbon_emissions_kg
    );
    Ok(())
}

fn run_harness(
    cfg: &RunConfig,
    f: impl FnOnce(&mut Harness) -> Result<Vec<ReportTable>, HarnessError>,
) -> Result<(), CliError> {
    let plan: ExperimentPlan = cfg.experiment.clone();
    let mut h = Harness::new(plan, Some(&cfg.out)).map_err(|e| CliError::Usage(e.to_string()))?;
    let tables = f(&mut h).map_err(CliError::runtime)?;
    h.emit(&tables).map_err(CliError::runtime)?;
    let dir = h.out_dir().expect("output root was given").to_path_buf();
    cfg.echo(&dir)?;
    for t in &tables {
        println!("== {} ==\n{}", t.name, t.render());
    }
    println!("{}", dir.display());
    Ok(())
}
