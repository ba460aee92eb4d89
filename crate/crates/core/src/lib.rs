//! Green-energy dispatch for data centers: a battery/renewable/grid
//! simulator, preprocessing for energy traces, a small neural policy
//! trained with PPO, comparison baselines, episode metrics and an
//! experiment harness.

pub mod agents;
pub mod forecast;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod sim;
pub mod traces;
