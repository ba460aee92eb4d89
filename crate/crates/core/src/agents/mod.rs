//! Dispatch controllers: the PPO agent and its trainer, plus rule-based,
//! myopic heuristic and tabular Q-learning baselines. All controllers run
//! through [`run_episode`].

mod baselines;
mod observation;
mod ppo;
mod qlearn;
mod train;

pub use baselines::{heuristic_act, rule_based_act, Heuristic, RuleBased};
pub use observation::{build_observation, ObservationBuilder, ObservationSpec, BASE_FEATURES};
pub use ppo::{act, compute_gae, ppo_update, surrogate, ActMode, PolicyFile, PpoConfig, PpoPolicy, RolloutBuffer, UpdateStats};
pub use qlearn::{
    q_learning, DispatchStates, QConfig, QTable, TabularEnv, TabularQ, PRICE_TERCILES, RATIO_EDGES,
};
pub use train::{fit_forecaster, train, write_curve, CurvePoint, TrainConfig, TrainOutput, CURVE_HEADER};

use serde::{Deserialize, Serialize};

use crate::forecast::ForecastError;
use crate::nn::NnError;
use crate::sim::{Action, EnvState, Environment, EpisodeLog, RewardWeights, Scenario, SimError};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("non-finite loss during update {0}; parameters left unchanged")]
    NonFiniteLoss(usize),
    #[error("training needs at least one scenario")]
    NoScenarios,
}

/// Single-component removals used by the ablation study.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationFlags {
    /// Train on the plain cost/emissions reward: α = β = 1, no SLA penalty.
    pub no_reward_tuning: bool,
    /// Greedy rollouts and no entropy bonus.
    pub no_exploration: bool,
    /// Zero the renewable forecast block of the observation.
    pub no_energy_prediction: bool,
}

impl AblationFlags {
    pub const NONE: AblationFlags = AblationFlags {
        no_reward_tuning: false,
        no_exploration: false,
        no_energy_prediction: false,
    };

    /// The three single-flag variants, labelled.
    pub fn singles() -> [(&'static str, AblationFlags); 3] {
        [
            ("no_reward_tuning", AblationFlags { no_reward_tuning: true, ..Self::NONE }),
            ("no_exploration", AblationFlags { no_exploration: true, ..Self::NONE }),
            ("no_energy_prediction", AblationFlags { no_energy_prediction: true, ..Self::NONE }),
        ]
    }

    /// Reward weights the agent trains against.
    pub fn training_weights(&self, base: RewardWeights) -> RewardWeights {
        if self.no_reward_tuning {
            RewardWeights { alpha: 1.0, beta: 1.0, sla_penalty: 0.0 }
        } else {
            base
        }
    }
}

/// A policy that picks one action per step.
pub trait Controller {
    /// Called once before the first step of an episode.
    fn begin(&mut self, _scenario: &Scenario) -> Result<(), AgentError> {
        Ok(())
    }

    /// `soc_history[τ]` is the state of charge at the start of step τ, for
    /// every τ ≤ `state.t`.
    fn act(&mut self, scenario: &Scenario, state: &EnvState, soc_history: &[f64]) -> Action;
}

/// Run one full episode from reset and return its log.
pub fn run_episode<C: Controller + ?Sized>(
    scenario: &Scenario,
    controller: &mut C,
    seed: u64,
) -> Result<EpisodeLog, AgentError> {
    controller.begin(scenario)?;
    let mut env = Environment::new(scenario, seed)?;
    let mut soc_history = Vec::with_capacity(scenario.horizon());
    while !env.state().done {
        let state = env.state();
        soc_history.push(state.soc_kwh);
        let action = controller.act(scenario, &state, &soc_history);
        env.step(action)?;
    }
    Ok(env.into_log())
}
