use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::observation::{ObservationBuilder, ObservationSpec};
use super::ppo::{act, ppo_update, ActMode, PpoConfig, PpoPolicy, RolloutBuffer, UpdateStats};
use super::{AblationFlags, AgentError};
use crate::forecast::{ForecastKind, ForecastModel};
use crate::nn::{Adam, Network, NetworkConfig};
use crate::sim::{EpisodeLog, Scenario, StepRecord};

pub const CURVE_HEADER: &str = "update_index,episodes,mean_cumulative_reward,mean_cost,sla_rate";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub ppo: PpoConfig,
    pub observation: ObservationSpec,
    pub forecast: ForecastKind,
    /// Filters of the second (strided) convolution.
    pub conv_filters: usize,
    pub recurrent_units: usize,
    /// Train on the reward minus what the same step earns with the battery
    /// idle. That term depends only on the exogenous series, so it shifts
    /// every episode return by the same amount and leaves the optimal policy
    /// unchanged while removing the demand-driven part of the variance.
    pub idle_baseline: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ppo: PpoConfig::default(),
            observation: ObservationSpec::default(),
            forecast: ForecastKind::default(),
            conv_filters: 16,
            recurrent_units: 16,
            idle_baseline: true,
        }
    }
}

impl TrainConfig {
    pub fn network(&self, actions: usize) -> NetworkConfig {
        NetworkConfig::with_sizes(
            self.observation.window,
            self.observation.features(),
            actions,
            self.conv_filters,
            self.recurrent_units,
        )
    }
}

/// Learning-curve row: episodes finished during one update's rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub update_index: usize,
    /// Episodes completed so far.
    pub episodes: usize,
    pub mean_cumulative_reward: f64,
    pub mean_cost: f64,
    pub sla_rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub policy: PpoPolicy,
    pub curve: Vec<CurvePoint>,
    /// Cumulative training reward of every finished episode, in order.
    pub episode_rewards: Vec<f64>,
    /// Log of the last finished training episode.
    pub last_episode: Option<EpisodeLog>,
    pub last_stats: Option<UpdateStats>,
    /// Updates abandoned on a non-finite loss.
    pub failed_updates: usize,
}

impl TrainOutput {
    pub fn write_curve<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_curve(&self.curve, out)
    }
}

/// Learning curve as CSV under [`CURVE_HEADER`].
pub fn write_curve<W: Write>(curve: &[CurvePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for p in curve {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.update_index, p.episodes, p.mean_cumulative_reward, p.mean_cost, p.sla_rate
        )?;
    }
    Ok(())
}

/// Running variance of the discounted return, used to scale rewards for the
/// value function.
#[derive(Debug, Clone)]
struct ReturnScaler {
    gamma: f64,
    ret: f64,
    count: f64,
    mean: f64,
    m2: f64,
}

impl ReturnScaler {
    fn new(gamma: f64) -> Self {
        Self { gamma, ret: 0.0, count: 0.0, mean: 0.0, m2: 0.0 }
    }

    fn scale(&mut self, reward: f64, done: bool) -> f64 {
        self.ret = self.ret * self.gamma + reward;
        self.count += 1.0;
        let d = self.ret - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (self.ret - self.mean);
        if done {
            self.ret = 0.0;
        }
        let var = if self.count > 1.0 { self.m2 / self.count } else { 1.0 };
        reward / (var.sqrt() + 1e-8)
    }
}

fn renewables(sc: &Scenario) -> Vec<f64> {
    let s = &sc.series;
    (0..s.len()).map(|t| s.solar_kw[t] + s.wind_kw[t]).collect()
}

/// Fit the forecaster on the concatenated renewable series of `scenarios`.
pub fn fit_forecaster(kind: ForecastKind, scenarios: &[Scenario]) -> Result<ForecastModel, AgentError> {
    let all: Vec<f64> = scenarios.iter().flat_map(renewables).collect();
    Ok(ForecastModel::fit(kind, &all)?)
}

/// Per-step reward with the battery held idle; independent of the state of charge.
pub(crate) fn idle_rewards(sc: &Scenario) -> Vec<f64> {
    (0..sc.horizon()).map(|t| sc.dispatch(t, sc.battery.soc_min_kwh, 0.0).1.reward).collect()
}

struct Episode {
    scenario: usize,
    t: usize,
    soc: f64,
    soc_history: Vec<f64>,
    log: EpisodeLog,
    reward: f64,
}

impl Episode {
    fn start(scenarios: &[Scenario], index: usize, seed: u64) -> Result<Self, AgentError> {
        let sc = &scenarios[index];
        let state = sc.reset(seed)?;
        Ok(Self {
            scenario: index,
            t: 0,
            soc: state.soc_kwh,
            soc_history: Vec::with_capacity(sc.horizon()),
            log: EpisodeLog::new(sc.label.clone(), seed),
            reward: 0.0,
        })
    }
}

/// PPO training over `scenarios`, visited round-robin one episode at a time.
/// Each update collects `rollout` steps with the current parameters, then
/// runs the clipped-surrogate update. Deterministic for a given seed.
pub fn train(
    scenarios: &[Scenario],
    cfg: &TrainConfig,
    flags: AblationFlags,
    seed: u64,
) -> Result<TrainOutput, AgentError> {
    cfg.ppo.validate()?;
    let Some(first) = scenarios.first() else {
        return Err(AgentError::NoScenarios);
    };
    let actions = first.action_levels;
    if scenarios.iter().any(|s| s.action_levels != actions) {
        return Err(AgentError::Config("scenarios disagree on action levels".into()));
    }
    let net = Network::new(cfg.network(actions))?;
    let forecaster = fit_forecaster(cfg.forecast, scenarios)?;
    let training: Vec<Scenario> = scenarios
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.weights = flags.training_weights(s.weights);
            s
        })
        .collect();
    let baselines: Vec<Vec<f64>> = training
        .iter()
        .map(|s| if cfg.idle_baseline { idle_rewards(s) } else { vec![0.0; s.horizon()] })
        .collect();
    let builders: Vec<ObservationBuilder> = training
        .iter()
        .map(|s| ObservationBuilder::new(s, &forecaster, cfg.observation, flags))
        .collect();

    let mut ppo = cfg.ppo;
    let mode = if flags.no_exploration {
        ppo.entropy_coef = 0.0;
        ActMode::Greedy
    } else {
        ActMode::Sample
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = net.init_params(&mut rng);
    let mut adam = Adam::new(ppo.adam, net.param_count());
    let mut scaler = ReturnScaler::new(ppo.gamma);
    let mut buffer = RolloutBuffer::new(cfg.observation.len());
    let mut obs = vec![0.0; cfg.observation.len()];

    let mut episodes_started = 0usize;
    let mut ep = Episode::start(&training, 0, seed)?;
    let mut curve = Vec::new();
    let mut episode_rewards = Vec::new();
    let mut last_episode = None;
    let mut last_stats = None;
    let mut failed_updates = 0;

    for update in 0..ppo.updates {
        buffer.clear();
        let (mut n_eps, mut sum_reward, mut sum_cost, mut sum_sla) = (0usize, 0.0, 0.0, 0.0);
        for _ in 0..ppo.rollout {
            let sc = &training[ep.scenario];
            ep.soc_history.push(ep.soc);
            builders[ep.scenario].build_into(ep.t, &ep.soc_history, &mut obs);
            let (action, logp, value) = act(&net, &params, &obs, mode, &mut rng)?;
            let state = crate::sim::EnvState { t: ep.t, soc_kwh: ep.soc, done: false };
            let (next, outcome) = sc.step(&state, action)?;
            ep.log.steps.push(StepRecord { state, action, outcome });
            ep.reward += outcome.reward;
            let scaled = scaler.scale(outcome.reward - baselines[ep.scenario][state.t], next.done);
            buffer.push(&obs, action.battery_setpoint_index, logp, scaled, value, next.done);
            ep.t = next.t;
            ep.soc = next.soc_kwh;
            if next.done {
                let cost = crate::metrics::energy_cost(&ep.log);
                let (_, sla) = crate::metrics::sla_violations(&ep.log);
                n_eps += 1;
                sum_reward += ep.reward;
                sum_cost += cost;
                sum_sla += sla;
                episode_rewards.push(ep.reward);
                episodes_started += 1;
                let finished = std::mem::replace(
                    &mut ep,
                    Episode::start(&training, episodes_started % training.len(), seed)?,
                );
                last_episode = Some(finished.log);
            }
        }
        let last_value = if buffer.dones.last() == Some(&true) {
            0.0
        } else {
            let mut hist = ep.soc_history.clone();
            hist.push(ep.soc);
            builders[ep.scenario].build_into(ep.t, &hist, &mut obs);
            net.forward(&params, &obs)?.value
        };
        buffer.finish(last_value, ppo.gamma, ppo.lambda)?;
        match ppo_update(&net, &mut params, &mut adam, &buffer, &ppo, &mut rng) {
            Ok(stats) => last_stats = Some(stats),
            Err(AgentError::NonFiniteLoss(_)) => failed_updates += 1,
            Err(e) => return Err(e),
        }
        if n_eps > 0 {
            let n = n_eps as f64;
            curve.push(CurvePoint {
                update_index: update,
                episodes: episode_rewards.len(),
                mean_cumulative_reward: sum_reward / n,
                mean_cost: sum_cost / n,
                sla_rate: sum_sla / n,
            });
        }
    }

    Ok(TrainOutput {
        policy: PpoPolicy::new(net, params, cfg.observation, forecaster, flags),
        curve,
        episode_rewards,
        last_episode,
        last_stats,
        failed_updates,
    })
}
