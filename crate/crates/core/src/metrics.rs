//! Episode metrics computed directly from an [`EpisodeLog`]: energy cost,
//! SLA violations, renewable efficiency, cumulative reward, carbon emissions
//! and the cross-scenario success rate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::sim::EpisodeLog;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("episode served no energy; efficiency is undefined")]
    ZeroConsumption,
    #[error("success rate needs at least one scenario report")]
    NoReports,
}

/// Σ (grid · grid price + discharge · storage price).
pub fn energy_cost(log: &EpisodeLog) -> f64 {
    log.outcomes()
        .map(|o| o.grid_kwh * o.grid_price_per_kwh + o.discharge_kwh * o.storage_price_per_kwh)
        .sum()
}

/// Number of steps where served energy fell short of demand, and that count
/// over the horizon.
pub fn sla_violations(log: &EpisodeLog) -> (usize, f64) {
    let count = log.outcomes().filter(|o| o.demand_kwh > o.served_kwh()).count();
    let rate = if log.is_empty() {
        0.0
    } else {
        count as f64 / log.len() as f64
    };
    (count, rate)
}

/// Share of served energy that came straight from renewables, as a ratio of
/// episode sums.
pub fn energy_efficiency(log: &EpisodeLog) -> Result<f64, MetricsError> {
    let (renewable, served) = log
        .outcomes()
        .fold((0.0, 0.0), |(r, s), o| (r + o.renewable_used_kwh, s + o.served_kwh()));
    if served <= 0.0 {
        return Err(MetricsError::ZeroConsumption);
    }
    Ok(renewable / served)
}

pub fn cumulative_reward(log: &EpisodeLog) -> f64 {
    log.outcomes().map(|o| o.reward).sum()
}

/// Σ grid · emission factor, in kg CO₂.
pub fn carbon_emissions(log: &EpisodeLog) -> f64 {
    log.outcomes()
        .map(|o| o.grid_kwh * o.emission_factor_kg_per_kwh)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessGoals {
    pub min_efficiency: f64,
    pub max_sla_rate: f64,
}

impl Default for SuccessGoals {
    fn default() -> Self {
        Self {
            min_efficiency: 0.80,
            max_sla_rate: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub steps: usize,
    pub energy_cost: f64,
    pub sla_violations: usize,
    pub sla_rate: f64,
    pub energy_efficiency: f64,
    pub cumulative_reward: f64,
    pub carbon_emissions_kg: f64,
}

impl MetricReport {
    /// Column order of [`MetricReport::write_csv_row`].
    pub const CSV_HEADER: &'static str =
        "steps,energy_cost,sla_violations,sla_rate,energy_efficiency,cumulative_reward,carbon_emissions_kg";

    pub fn from_log(log: &EpisodeLog) -> Result<Self, MetricsError> {
        let (sla_violations, sla_rate) = sla_violations(log);
        Ok(Self {
            steps: log.len(),
            energy_cost: energy_cost(log),
            sla_violations,
            sla_rate,
            energy_efficiency: energy_efficiency(log)?,
            cumulative_reward: cumulative_reward(log),
            carbon_emissions_kg: carbon_emissions(log),
        })
    }

    pub fn meets(&self, goals: &SuccessGoals) -> bool {
        self.energy_efficiency >= goals.min_efficiency && self.sla_rate <= goals.max_sla_rate
    }

    pub fn write_csv_row<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.steps,
            self.energy_cost,
            self.sla_violations,
            self.sla_rate,
            self.energy_efficiency,
            self.cumulative_reward,
            self.carbon_emissions_kg
        )
    }
}

/// Fraction of scenario reports that meet both goals.
pub fn success_rate(reports: &[MetricReport], goals: &SuccessGoals) -> Result<f64, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::NoReports);
    }
    let ok = reports.iter().filter(|r| r.meets(goals)).count();
    Ok(ok as f64 / reports.len() as f64)
}
