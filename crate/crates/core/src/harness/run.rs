use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::plan::ablation_flags;
use super::{emit_report, AgentKind, ExperimentPlan, HarnessError, ReportTable, Stats, SweepAxis};
use crate::agents::{
    fit_forecaster, run_episode, train, write_curve, AblationFlags, CurvePoint, Heuristic, RuleBased, TabularQ, TrainConfig,
};
use crate::metrics::{success_rate, MetricReport};
use crate::sim::EpisodeLog;
use crate::traces::Preset;

/// One trained-and-evaluated (variant, scenario, seed) combination.
#[derive(Debug, Clone)]
pub struct Cell {
    pub variant: String,
    pub preset: Preset,
    pub seed: u64,
    pub report: MetricReport,
    pub log: EpisodeLog,
    /// PPO learning curve; empty for other agents.
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone)]
struct Variant {
    label: String,
    agent: AgentKind,
    flags: AblationFlags,
    train: TrainConfig,
}

type Key = (String, Preset, u64);

/// Runs a plan's cells once each and assembles report tables from them.
/// Cells are memoized by (variant, scenario, seed), so a comparison, an
/// ablation and a sweep over the same plan share their trained models.
#[derive(Debug)]
pub struct Harness {
    plan: ExperimentPlan,
    out_dir: Option<PathBuf>,
    cells: BTreeMap<Key, Cell>,
}

impl Harness {
    /// `out_root` of `None` keeps everything in memory; otherwise logs and
    /// reports go under `out_root/<plan label>/`.
    pub fn new(plan: ExperimentPlan, out_root: Option<&Path>) -> Result<Self, HarnessError> {
        plan.validate()?;
        let out_dir = out_root.map(|r| r.join(&plan.label));
        Ok(Self { plan, out_dir, cells: BTreeMap::new() })
    }

    pub fn plan(&self) -> &ExperimentPlan {
        &self.plan
    }

    pub fn out_dir(&self) -> Option<&Path> {
        self.out_dir.as_deref()
    }

    pub fn cell(&self, variant: &str, preset: Preset, seed: u64) -> Option<&Cell> {
        self.cells.get(&(variant.to_string(), preset, seed))
    }

    fn agent_variant(&self, agent: AgentKind) -> Variant {
        Variant {
            label: agent.label().to_string(),
            agent,
            flags: AblationFlags::NONE,
            train: self.plan.train,
        }
    }

    fn ablation_variant(&self, name: &str) -> Result<Variant, HarnessError> {
        let flags = ablation_flags(name)?;
        let label = if name == "full" { "ppo".to_string() } else { format!("ppo-{name}") };
        Ok(Variant { label, agent: AgentKind::Ppo, flags, train: self.plan.train })
    }

    fn sweep_variant(&self, axis: SweepAxis, value: f64) -> Result<Variant, HarnessError> {
        let train = axis.apply(&self.plan.train, value)?;
        let label = if train == self.plan.train { "ppo".to_string() } else { format!("ppo-{axis}={value}") };
        Ok(Variant { label, agent: AgentKind::Ppo, flags: AblationFlags::NONE, train })
    }

    fn compute(&self, v: &Variant, preset: Preset, seed: u64) -> Result<Cell, HarnessError> {
        let plan = &self.plan;
        let training = plan.training_scenarios(preset, seed)?;
        let eval = plan.evaluation_scenario(preset, seed)?;
        let mut curve = Vec::new();
        let log = match v.agent {
            AgentKind::Ppo => {
                let out = train(&training, &v.train, v.flags, seed)?;
                curve = out.curve;
                let mut policy = out.policy;
                run_episode(&eval, &mut policy, seed)?
            }
            AgentKind::RuleBased => run_episode(&eval, &mut RuleBased, seed)?,
            AgentKind::Heuristic => {
                let forecaster = fit_forecaster(v.train.forecast, &training)?;
                run_episode(&eval, &mut Heuristic::new(forecaster), seed)?
            }
            AgentKind::TabularQ => {
                let mut q = TabularQ::train(&training, &plan.q, v.flags, seed)?;
                run_episode(&eval, &mut q, seed)?
            }
        };
        Ok(Cell {
            variant: v.label.clone(),
            preset,
            seed,
            report: MetricReport::from_log(&log)?,
            log,
            curve,
        })
    }

    /// Compute the missing cells in parallel, then archive them in order.
    fn ensure(&mut self, wanted: Vec<(Variant, Preset, u64)>) -> Result<(), HarnessError> {
        let mut todo: Vec<(Variant, Preset, u64)> = Vec::new();
        for (v, p, s) in wanted {
            let key = (v.label.clone(), p, s);
            if !self.cells.contains_key(&key) && !todo.iter().any(|(tv, tp, ts)| tv.label == v.label && *tp == p && *ts == s) {
                todo.push((v, p, s));
            }
        }
        let done: Vec<Cell> = todo
            .par_iter()
            .map(|(v, p, s)| self.compute(v, *p, *s))
            .collect::<Result<_, _>>()?;
        for cell in done {
            self.archive(&cell)?;
            self.cells.insert((cell.variant.clone(), cell.preset, cell.seed), cell);
        }
        Ok(())
    }

    fn archive(&self, cell: &Cell) -> Result<(), HarnessError> {
        let Some(root) = &self.out_dir else {
            return Ok(());
        };
        let dir = root.join(&cell.variant).join(cell.preset.label()).join(cell.seed.to_string());
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| HarnessError::Io { path, source }
        };
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        cell.log.save_jsonl(&dir.join("episode.jsonl"))?;
        if !cell.curve.is_empty() {
            let path = dir.join("curve.csv");
            let mut buf = Vec::new();
            write_curve(&cell.curve, &mut buf).map_err(io(&path))?;
            fs::write(&path, buf).map_err(io(&path))?;
        }
        Ok(())
    }

    fn reports(&self, label: &str, preset: Preset, seeds: &[u64]) -> Vec<&MetricReport> {
        seeds
            .iter()
            .filter_map(|&s| self.cell(label, preset, s))
            .map(|c| &c.report)
            .collect()
    }

    /// Agent × scenario table of metric means and standard deviations over
    /// the plan's seeds, with cost improvement relative to the rule-based
    /// agent (or the first listed agent when rule-based is absent).
    pub fn run_comparison(&mut self) -> Result<ReportTable, HarnessError> {
        let plan = self.plan.clone();
        let variants: Vec<Variant> = plan.agents.iter().map(|&a| self.agent_variant(a)).collect();
        let wanted = cross(&variants, &plan.presets, &plan.seeds);
        self.ensure(wanted)?;
        let baseline = if plan.agents.contains(&AgentKind::RuleBased) {
            AgentKind::RuleBased.label()
        } else {
            plan.agents[0].label()
        };
        let mut t = ReportTable::new("comparison", COMPARISON_HEADER);
        for &preset in &plan.presets {
            let base = Stats::of(&column(&self.reports(baseline, preset, &plan.seeds), |r| r.energy_cost));
            for v in &variants {
                let rs = self.reports(&v.label, preset, &plan.seeds);
                let cost = Stats::of(&column(&rs, |r| r.energy_cost));
                let mut row = vec![preset.label().to_string(), v.label.clone(), rs.len().to_string(), rs[0].steps.to_string()];
                push_stats(&mut row, cost);
                row.push(fmt(improvement_pct(base.mean, cost.mean)));
                push_metric_stats(&mut row, &rs);
                t.push(row);
            }
        }
        Ok(t)
    }

    /// Full system and each planned single-flag ablation per scenario, over
    /// the ablation seeds. Ordering columns record whether the full system is
    /// weakly best; a violated ordering is reported, not raised.
    pub fn run_ablation(&mut self) -> Result<ReportTable, HarnessError> {
        let plan = self.plan.clone();
        let seeds = plan.ablation_seeds().to_vec();
        let names: Vec<String> = std::iter::once("full".to_string()).chain(plan.ablations.iter().cloned()).collect();
        let variants: Vec<Variant> = names.iter().map(|n| self.ablation_variant(n)).collect::<Result<_, _>>()?;
        self.ensure(cross(&variants, &plan.presets, &seeds))?;
        let mut t = ReportTable::new("ablation", ABLATION_HEADER);
        for &preset in &plan.presets {
            let full = self.reports("ppo", preset, &seeds);
            let full_cost = Stats::of(&column(&full, |r| r.energy_cost)).mean;
            let full_reward = Stats::of(&column(&full, |r| r.cumulative_reward)).mean;
            for (name, v) in names.iter().zip(&variants) {
                let rs = self.reports(&v.label, preset, &seeds);
                let cost = Stats::of(&column(&rs, |r| r.energy_cost));
                let mut row = vec![preset.label().to_string(), name.clone(), rs.len().to_string(), rs[0].steps.to_string()];
                push_stats(&mut row, cost);
                row.push(fmt(improvement_pct(full_cost, cost.mean)));
                push_metric_stats(&mut row, &rs);
                let reward = Stats::of(&column(&rs, |r| r.cumulative_reward)).mean;
                let cost_ok = full_cost <= cost.mean;
                let reward_ok = full_reward >= reward;
                row.push(cost_ok.to_string());
                row.push(reward_ok.to_string());
                t.push(row);
            }
        }
        Ok(t)
    }

    /// PPO with one hyperparameter varied, every other setting at the plan's
    /// values; success rate is over all scenarios and seeds.
    pub fn run_sweep(&mut self) -> Result<ReportTable, HarnessError> {
        let plan = self.plan.clone();
        let Some(sweep) = &plan.sweep else {
            return Err(HarnessError::InvalidPlan("plan has no sweep".into()));
        };
        let variants: Vec<Variant> = sweep
            .values
            .iter()
            .map(|&x| self.sweep_variant(sweep.axis, x))
            .collect::<Result<_, _>>()?;
        self.ensure(cross(&variants, &plan.presets, &plan.seeds))?;
        let mut t = ReportTable::new(format!("sweep_{}", sweep.axis), SWEEP_HEADER);
        for (&value, v) in sweep.values.iter().zip(&variants) {
            let rs: Vec<MetricReport> = plan
                .presets
                .iter()
                .flat_map(|&p| self.reports(&v.label, p, &plan.seeds))
                .cloned()
                .collect();
            let refs: Vec<&MetricReport> = rs.iter().collect();
            let mut row = vec![fmt(value), rs.len().to_string(), fmt(success_rate(&rs, &plan.goals)?)];
            for f in [
                (|r: &MetricReport| r.energy_cost) as fn(&MetricReport) -> f64,
                |r| r.cumulative_reward,
                |r| r.sla_rate,
                |r| r.energy_efficiency,
            ] {
                row.push(fmt(Stats::of(&column(&refs, f)).mean));
            }
            t.push(row);
        }
        Ok(t)
    }

    /// Comparison, then the ablation and sweep when the plan has them; writes
    /// the report files when an output root was given.
    pub fn run_all(&mut self) -> Result<Vec<ReportTable>, HarnessError> {
        let mut tables = vec![self.run_comparison()?];
        if !self.plan.ablations.is_empty() {
            tables.push(self.run_ablation()?);
        }
        if self.plan.sweep.is_some() {
            tables.push(self.run_sweep()?);
        }
        self.emit(&tables)?;
        Ok(tables)
    }

    /// Write `tables` and `summary.txt` into the plan's output directory, if any.
    pub fn emit(&self, tables: &[ReportTable]) -> Result<Vec<PathBuf>, HarnessError> {
        match &self.out_dir {
            Some(dir) => emit_report(tables, dir),
            None => Ok(Vec::new()),
        }
    }
}

const COMPARISON_HEADER: &[&str] = &[
    "scenario",
    "agent",
    "seeds",
    "horizon_steps",
    "energy_cost_mean",
    "energy_cost_std",
    "cost_improvement_pct",
    "cumulative_reward_mean",
    "cumulative_reward_std",
    "sla_rate_mean",
    "sla_rate_std",
    "energy_efficiency_mean",
    "energy_efficiency_std",
    "carbon_emissions_kg_mean",
    "carbon_emissions_kg_std",
];

const ABLATION_HEADER: &[&str] = &[
    "scenario",
    "variant",
    "seeds",
    "horizon_steps",
    "energy_cost_mean",
    "energy_cost_std",
    "cost_change_vs_full_pct",
    "cumulative_reward_mean",
    "cumulative_reward_std",
    "sla_rate_mean",
    "sla_rate_std",
    "energy_efficiency_mean",
    "energy_efficiency_std",
    "carbon_emissions_kg_mean",
    "carbon_emissions_kg_std",
    "full_cost_not_higher",
    "full_reward_not_lower",
];

const SWEEP_HEADER: &[&str] = &[
    "value",
    "episodes",
    "success_rate",
    "energy_cost_mean",
    "cumulative_reward_mean",
    "sla_rate_mean",
    "energy_efficiency_mean",
];

fn cross(variants: &[Variant], presets: &[Preset], seeds: &[u64]) -> Vec<(Variant, Preset, u64)> {
    let mut out = Vec::new();
    for v in variants {
        for &p in presets {
            for &s in seeds {
                out.push((v.clone(), p, s));
            }
        }
    }
    out
}

fn column(reports: &[&MetricReport], f: impl Fn(&MetricReport) -> f64) -> Vec<f64> {
    reports.iter().map(|r| f(r)).collect()
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn push_stats(row: &mut Vec<String>, s: Stats) {
    row.push(fmt(s.mean));
    row.push(fmt(s.std));
}

fn push_metric_stats(row: &mut Vec<String>, rs: &[&MetricReport]) {
    for f in [
        (|r: &MetricReport| r.cumulative_reward) as fn(&MetricReport) -> f64,
        |r| r.sla_rate,
        |r| r.energy_efficiency,
        |r| r.carbon_emissions_kg,
    ] {
        push_stats(row, Stats::of(&column(rs, f)));
    }
}

/// Percent by which `cost` undercuts `baseline`.
pub(crate) fn improvement_pct(baseline: f64, cost: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        100.0 * (baseline - cost) / baseline
    }
}
