//! Experiment protocol: scenario comparisons across agents, single-flag
//! ablations and one-axis hyperparameter sweeps, with CSV and plain-text
//! reports.

mod plan;
mod run;
pub mod seed_serde;
mod table;

pub use plan::{AgentKind, ExperimentPlan, SweepAxis, SweepPlan};
pub use run::{Cell, Harness};
pub use table::{emit_report, Stats, ReportTable};

use std::path::PathBuf;

use crate::agents::AgentError;
use crate::metrics::MetricsError;
use crate::sim::SimError;
use crate::traces::TraceError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("unknown sweep axis `{0}` (expected recurrent_units, conv_filters, minibatch or learning_rate)")]
    UnknownAxis(String),
}
