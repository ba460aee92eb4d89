//! Data-center energy environment: exogenous signals, battery dynamics,
//! rule-ordered dispatch, reward, constraint audit and an exact dynamic
//! programming oracle for small instances.

mod constraints;
mod dp;
mod env;
mod log;
mod scenario_file;
mod types;

pub use constraints::{validate_constraints, Violation, ViolationKind};
pub use dp::{dp_optimal_dispatch, exhaustive_min_cost, replay_cost, DpSolution, SocGrid};
pub use env::{Environment, Scenario};
pub use log::{EpisodeLog, StepRecord};
pub use scenario_file::{ScenarioFile, ScenarioFileError};
pub use types::{
    setpoint_kw, Action, BatterySpec, EnvState, ExogenousSeries, LoadMode, LoadModel,
    RewardWeights, StepOutcome, DEFAULT_ACTION_LEVELS,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid load model: {0}")]
    InvalidLoad(String),
    #[error("invalid battery: {0}")]
    InvalidBattery(String),
    #[error("invalid reward weights {0:?}")]
    InvalidWeights(RewardWeights),
    #[error("invalid action space: {0}")]
    InvalidActionSpace(String),
    #[error("step {t} out of range for series of length {len}")]
    StepOutOfRange { t: usize, len: usize },
    #[error("action index {index} out of range for {levels} levels")]
    ActionOutOfRange { index: usize, levels: usize },
    #[error("episode is already done at step {0}")]
    EpisodeDone(usize),
    #[error("instance too large for the dynamic programming oracle: {0}")]
    InstanceTooLarge(String),
    #[error("episode log i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("episode log line {line}: {source}")]
    LogParse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}
