//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//! `ACCEPTANCE_ONLY=4,5` runs a subset; `ACCEPTANCE_STRICT=1` exits non-zero
//! when any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Duration;
use ecodispatch::agents::{run_episode, train, AblationFlags, Controller, TrainConfig};
use ecodispatch::harness::{ExperimentPlan, Harness};
use ecodispatch::metrics::MetricReport;
use ecodispatch::nn::grad_check_suite;
use ecodispatch::agents::ObservationSpec;
use ecodispatch::sim::{
    dp_optimal_dispatch, exhaustive_min_cost, Action, BatterySpec, EnvState, Environment, EpisodeLog, Scenario,
    SocGrid,
};
use ecodispatch::traces::{
    aggregate, preprocess, preset_battery, series_to_records, synthesize, synthesize_with, Preset, RawRecord,
    SynthConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().map_or(true, |o| o.contains(&n));
    let scratch = tempfile::tempdir().expect("scratch dir");
    let mut failed = Vec::new();
    let mut report = |n: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(n) {
            return;
        }
        let t0 = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} {verdict} {name}: {} [{:.1}s]", o.detail, t0.elapsed().as_secs_f64());
        if !o.pass {
            failed.push(n);
        }
    };

    report(5, "gradient correctness", &mut gradients);
    report(6, "dynamics invariants", &mut invariants);
    report(7, "metric oracle equivalence", &mut || metric_oracle(scratch.path()));
    report(8, "preprocessing", &mut preprocessing);
    report(9, "determinism", &mut || determinism(scratch.path()));
    report(4, "optimality gap", &mut optimality_gap);

    let mut harness: Option<Harness> = None;
    let mut comparison_secs = 0.0;
    if wanted(1) || wanted(2) || wanted(3) {
        let t0 = Instant::now();
        let mut h = Harness::new(experiment_plan(), Some(scratch.path())).expect("valid plan");
        let table = h.run_comparison();
        comparison_secs = t0.elapsed().as_secs_f64();
        match table {
            Ok(t) => {
                println!("comparison ({comparison_secs:.0}s):\n{}", t.render());
                harness = Some(h);
            }
            Err(e) => println!("comparison failed: {e}"),
        }
    }
    report(1, "cost reduction vs rule-based", &mut || match &harness {
        Some(h) => cost_reduction(h, comparison_secs),
        None => outcome(false, "comparison did not run"),
    });
    report(2, "baseline ordering", &mut || match &harness {
        Some(h) => baseline_ordering(h),
        None => outcome(false, "comparison did not run"),
    });
    report(3, "ablation direction", &mut || match &mut harness {
        Some(h) => ablation_direction(h),
        None => outcome(false, "comparison did not run"),
    });

    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        if std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}

/// The default protocol: three presets, five seeds, all four agents, every
/// single-flag ablation.
fn experiment_plan() -> ExperimentPlan {
    ExperimentPlan { label: "acceptance".into(), ..Default::default() }
}

fn cost_reduction(h: &Harness, secs: f64) -> Outcome {
    let plan = h.plan();
    let mut lines = Vec::new();
    let mut pass = secs <= 3600.0;
    for &p in &plan.presets {
        let mut wins = 0;
        let (mut ppo_sum, mut rule_sum) = (0.0, 0.0);
        let mut per_seed = Vec::new();
        for &s in &plan.seeds {
            let ppo = h.cell("ppo", p, s).expect("ppo cell").report.energy_cost;
            let rule = h.cell("rule_based", p, s).expect("rule cell").report.energy_cost;
            let red = 1.0 - ppo / rule;
            per_seed.push(format!("{:.1}", 100.0 * red));
            wins += usize::from(red >= 0.15);
            ppo_sum += ppo;
            rule_sum += rule;
        }
        let mean_red = 1.0 - ppo_sum / rule_sum;
        let ok = wins >= 4 && mean_red >= 0.15;
        pass &= ok;
        lines.push(format!("{p} mean {:.1}% seeds [{}] {wins}/5", 100.0 * mean_red, per_seed.join(" ")));
    }
    outcome(pass, format!("{}; runtime {:.1} min", lines.join("; "), secs / 60.0))
}

fn mean_of(h: &Harness, agent: &str, p: Preset, f: impl Fn(&MetricReport) -> f64) -> f64 {
    let seeds = &h.plan().seeds;
    seeds.iter().map(|&s| f(&h.cell(agent, p, s).expect("cell").report)).sum::<f64>() / seeds.len() as f64
}

fn baseline_ordering(h: &Harness) -> Outcome {
    let mut ok_count = 0;
    let mut lines = Vec::new();
    for &p in &h.plan().presets {
        let r = |a: &str| mean_of(h, a, p, |m| m.cumulative_reward);
        let sla = |a: &str| mean_of(h, a, p, |m| m.sla_rate);
        let (rp, rq, rr) = (r("ppo"), r("tabular_q"), r("rule_based"));
        let others = ["tabular_q", "heuristic", "rule_based"].map(sla);
        let sla_ok = others.iter().all(|&o| sla("ppo") <= o);
        let ok = rp >= rq && rq >= rr && sla_ok;
        ok_count += usize::from(ok);
        lines.push(format!(
            "{p} reward ppo {rp:.0} q {rq:.0} rule {rr:.0}, sla ppo {:.4} others {:?} -> {}",
            sla("ppo"),
            others,
            if ok { "ok" } else { "no" }
        ));
    }
    outcome(ok_count >= 2, format!("{ok_count}/3 scenarios; {}", lines.join("; ")))
}

fn ablation_direction(h: &mut Harness) -> Outcome {
    let table = match h.run_ablation() {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("ablation failed: {e}")),
    };
    println!("ablation:\n{}", table.render());
    let (cost_ok, reward_ok) = (table.column("full_cost_not_higher").unwrap(), table.column("full_reward_not_lower").unwrap());
    let mut cells = 0;
    let mut good = 0;
    let mut bad = Vec::new();
    for row in &table.rows {
        if row[1] == "full" {
            continue;
        }
        cells += 1;
        if row[cost_ok] == "true" && row[reward_ok] == "true" {
            good += 1;
        } else {
            bad.push(format!("{}/{}", row[0], row[1]));
        }
    }
    outcome(cells == 9 && good >= 8, format!("{good}/{cells} cells ordered; violations {bad:?}"))
}

fn gradients() -> Outcome {
    let t0 = Instant::now();
    let spec = ObservationSpec::default();
    let suite = match grad_check_suite(spec.window, spec.features(), 11, 2024) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = t0.elapsed().as_secs_f64();
    let all_100 = suite.iter().all(|c| c.report.layers.iter().all(|l| l.checked == 100));
    let pass = suite.iter().all(|c| c.passed()) && all_100 && secs < 60.0;
    let detail: Vec<String> = suite
        .iter()
        .map(|c| format!("{} max {:.2e} (< {:e})", c.name, c.report.max_rel_err(), c.tolerance))
        .collect();
    outcome(pass, format!("{}; 100 coords per layer: {all_100}", detail.join(", ")))
}

fn random_scenario(rng: &mut ChaCha8Rng, days: usize) -> Scenario {
    let preset = Preset::ALL[rng.gen_range(0..3)];
    let mut series = synthesize(preset, days, rng.gen()).expect("synthetic series");
    let mean = series.demand_kw.iter().sum::<f64>() / series.len() as f64;
    let cap_factor = rng.gen_range(0.3..1.5);
    for c in series.grid_cap_kw.iter_mut() {
        *c *= cap_factor;
    }
    let capacity = mean * rng.gen_range(0.5..8.0);
    let soc_min = capacity * rng.gen_range(0.0..0.3);
    let battery = BatterySpec {
        soc_min_kwh: soc_min,
        soc_max_kwh: capacity,
        charge_eff: rng.gen_range(0.7..=1.0),
        discharge_eff: rng.gen_range(0.7..=1.0),
        max_charge_kw: mean * rng.gen_range(0.1..2.0),
        max_discharge_kw: mean * rng.gen_range(0.1..2.0),
        initial_soc_kwh: rng.gen_range(soc_min..=capacity),
    };
    let mut sc = Scenario::new(format!("{preset}"), series, battery);
    sc.grid_charging = rng.gen();
    sc.action_levels = rng.gen_range(2..=21);
    sc
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut steps, mut soc_bad, mut energy_bad) = (0usize, 0usize, 0usize);
    let mut worst: f64 = 0.0;
    while steps < 1_000_000 {
        let sc = random_scenario(&mut rng, 7);
        let b = sc.battery.clone();
        let mut state = sc.reset(0).expect("reset");
        while !state.done {
            let a = Action::new(rng.gen_range(0..sc.action_levels));
            let (next, o) = sc.step(&state, a).expect("step");
            if next.soc_kwh < b.soc_min_kwh - 1e-9 || next.soc_kwh > b.soc_max_kwh + 1e-9 {
                soc_bad += 1;
            }
            let scale = o.demand_kwh.max(o.renewable_kwh).max(1.0);
            let residuals = [
                o.renewable_kwh - (o.renewable_used_kwh + o.curtailed_kwh + o.charge_kwh - o.grid_charge_kwh),
                o.demand_kwh - (o.renewable_used_kwh + o.discharge_kwh + (o.grid_kwh - o.grid_charge_kwh) + o.unserved_kwh),
                next.soc_kwh - (state.soc_kwh + b.charge_eff * o.charge_kwh - o.discharge_kwh / b.discharge_eff),
            ];
            let r = residuals.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
            let negative = [o.renewable_used_kwh, o.curtailed_kwh, o.charge_kwh, o.grid_charge_kwh, o.discharge_kwh, o.grid_kwh, o.unserved_kwh]
                .iter()
                .any(|&v| v < -1e-9);
            worst = worst.max(r);
            if r > 1e-9 || negative {
                energy_bad += 1;
            }
            state = next;
            steps += 1;
        }
    }
    outcome(
        soc_bad == 0 && energy_bad == 0,
        format!("{steps} steps, {soc_bad} SOC violations, {energy_bad} conservation violations, worst relative residual {worst:.1e}"),
    )
}

struct RandomPolicy(ChaCha8Rng);

impl Controller for RandomPolicy {
    fn act(&mut self, scenario: &Scenario, _: &EnvState, _: &[f64]) -> Action {
        Action::new(self.0.gen_range(0..scenario.action_levels))
    }
}

/// Metrics straight from the JSON text, without the crate's log types.
fn brute_force(path: &Path) -> [f64; 6] {
    let text = fs::read_to_string(path).expect("log");
    let (mut cost, mut count, mut steps, mut renew, mut served, mut reward, mut emis) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).expect("json line");
        let g = |k: &str| v[k].as_f64().unwrap_or_else(|| panic!("field {k}"));
        cost += g("grid_kwh") * g("grid_price_per_kwh") + g("discharge_kwh") * g("storage_price_per_kwh");
        let supplied = g("demand_kwh") - g("unserved_kwh");
        if g("demand_kwh") > supplied {
            count += 1.0;
        }
        steps += 1.0;
        renew += g("renewable_used_kwh");
        served += supplied;
        reward += g("reward");
        emis += g("grid_kwh") * g("emission_factor_kg_per_kwh");
    }
    [cost, count, count / steps, renew / served, reward, emis]
}

fn metric_oracle(scratch: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dir = scratch.join("oracle");
    fs::create_dir_all(&dir).expect("oracle dir");
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let days = rng.gen_range(1..=3);
        let sc = random_scenario(&mut rng, days);
        let log = run_episode(&sc, &mut RandomPolicy(ChaCha8Rng::seed_from_u64(i)), i).expect("episode");
        let path = dir.join(format!("{i}.jsonl"));
        log.save_jsonl(&path).expect("save");
        let loaded = EpisodeLog::load_jsonl(&path, sc.label.clone(), i).expect("load");
        let m = MetricReport::from_log(&loaded).expect("metrics");
        let ours = [m.energy_cost, m.sla_violations as f64, m.sla_rate, m.energy_efficiency, m.cumulative_reward, m.carbon_emissions_kg];
        for (a, b) in ours.iter().zip(brute_force(&path)) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    outcome(worst <= 1e-9, format!("100 episodes, worst relative difference {worst:.1e}"))
}

fn preprocessing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_round_trip: f64 = 0.0;
    let mut out_of_range = 0;
    let mut energy_ok = true;
    let mut worst_energy_ratio: f64 = 0.0;
    for trial in 0..20 {
        let cfg = SynthConfig { timestep_hours: 5.0 / 60.0, ..Default::default() };
        let series = synthesize_with(&cfg, Preset::ALL[trial % 3], rng.gen_range(1..=3), rng.gen()).expect("series");
        let mut records = series_to_records(&series);
        records.truncate(records.len() - rng.gen_range(0..6));
        let data = preprocess(&records, Duration::minutes(15)).expect("preprocess");
        for rec in &data.records {
            for (j, (&x, &raw)) in rec.features.iter().zip(&rec.raw).enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    out_of_range += 1;
                }
                let range = data.stats.get(&data.feature_names[j]).expect("range");
                worst_round_trip = worst_round_trip.max((range.denormalize(x) - raw).abs());
            }
        }
        let interval = Duration::minutes(15);
        let agg = aggregate(&records, interval).expect("aggregate");
        let (dt, big_dt) = (5.0 / 60.0, 0.25);
        let demand = |r: &RawRecord| r.demand_kw.unwrap_or(0.0);
        let raw_energy: f64 = records.iter().map(|r| demand(r) * dt).sum();
        let agg_energy: f64 = agg.iter().map(|r| demand(r) * big_dt).sum();
        let slack = records.iter().map(|r| demand(r).abs()).fold(0.0, f64::max) * big_dt;
        worst_energy_ratio = worst_energy_ratio.max((raw_energy - agg_energy).abs() / slack);
        energy_ok &= (raw_energy - agg_energy).abs() <= slack;
    }
    outcome(
        out_of_range == 0 && worst_round_trip <= 1e-12 && energy_ok,
        format!(
            "{out_of_range} normalized values outside [0,1], worst round trip {worst_round_trip:.1e}, worst energy gap {:.2} of slack",
            worst_energy_ratio
        ),
    )
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).expect("read dir") {
            let p = e.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).expect("prefix").to_path_buf(), fs::read(&p).expect("read"));
            }
        }
    }
    out
}

fn determinism(scratch: &Path) -> Outcome {
    let mut plan = ExperimentPlan {
        label: "determinism".into(),
        presets: vec![Preset::High, Preset::Mixed],
        seeds: vec![3, 4],
        days: 2,
        train_episodes: 2,
        ablations: vec!["no_energy_prediction".into()],
        ..Default::default()
    };
    plan.train.ppo.updates = 3;
    plan.train.ppo.rollout = 256;
    plan.q.episodes = 20;
    let run = |name: &str| {
        let root = scratch.join(name);
        Harness::new(plan.clone(), Some(&root)).and_then(|mut h| h.run_all()).map(|_| tree(&root))
    };
    match (run("det-a"), run("det-b")) {
        (Ok(a), Ok(b)) => {
            let logs = a.keys().filter(|p| p.extension().is_some_and(|e| e == "jsonl")).count();
            let csvs = a.keys().filter(|p| p.extension().is_some_and(|e| e == "csv")).count();
            let differing: Vec<_> = a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k.display().to_string()).collect();
            outcome(
                differing.is_empty() && a.len() == b.len() && logs > 0,
                format!("{} files ({logs} episode logs, {csvs} CSVs), {} differ", a.len(), differing.len()),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e.to_string()),
    }
}

fn tiny_instance(hours: usize, levels: usize, seed: u64) -> Scenario {
    let cfg = SynthConfig { timestep_hours: 1.0, ..Default::default() };
    let series = synthesize_with(&cfg, Preset::Mixed, 1, seed).expect("series").slice(0..hours);
    let mean = series.demand_kw.iter().sum::<f64>() / series.len() as f64;
    let mut sc = Scenario::new("tiny", series, preset_battery(mean));
    sc.grid_charging = true;
    sc.action_levels = levels;
    sc
}

fn optimality_gap() -> Outcome {
    let small = tiny_instance(6, 3, 11);
    let grid = SocGrid::new(small.battery.soc_min_kwh, small.battery.soc_max_kwh, 21);
    let dp_small = dp_optimal_dispatch(&small, 21, 6).expect("dp");
    let (brute, _) = exhaustive_min_cost(&small, 6, Some(&grid));
    let exact = (dp_small.objective() - brute).abs() <= 1e-9 * brute.abs().max(1.0);

    let sc = tiny_instance(24, 5, 12);
    let dp = dp_optimal_dispatch(&sc, 21, 24).expect("dp");
    let mut cfg = TrainConfig::default();
    cfg.ppo.updates = 150;
    cfg.ppo.rollout = 960;
    let out = match train(std::slice::from_ref(&sc), &cfg, AblationFlags::NONE, 4) {
        Ok(o) => o,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut policy = out.policy;
    let log = run_episode(&sc, &mut policy, 0).expect("episode");
    let env_check = Environment::new(&sc, 0).is_ok();
    let ppo_cost = MetricReport::from_log(&log).expect("metrics").energy_cost;
    let ratio = ppo_cost / dp.objective();
    outcome(
        exact && ratio <= 1.2 && env_check,
        format!(
            "T=6 K=3: DP {:.6} vs exhaustive {brute:.6} ({}); T=24 K=5: PPO {ppo_cost:.3} vs DP {:.3}, ratio {ratio:.3}",
            dp_small.objective(),
            if exact { "equal" } else { "differ" },
            dp.objective()
        ),
    )
}
