//! A small policy/value network with hand-written backpropagation:
//! 1-D convolutions over the observation window, a recurrent cell, dense
//! layers, a softmax policy head and a linear value head. Includes an Adam
//! optimizer, a finite-difference gradient checker and JSON checkpoints.

mod adam;
mod checkpoint;
mod config;
mod gradcheck;
mod network;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::{Activation, CellKind, LayerSpec, NetworkConfig};
pub use gradcheck::{grad_check, grad_check_suite, grad_check_with, GradCheckReport, LayerCheck, SuiteCase};
pub use network::{log_softmax, softmax, ForwardPass, Network, ParamBlock};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
}
