use std::path::{Path, PathBuf};

use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::env::Scenario;
use super::types::{BatterySpec, RewardWeights, DEFAULT_ACTION_LEVELS};
use super::SimError;
use crate::traces::{self, Preset, SeriesDefaults, TraceError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("scenario needs exactly one of `traces` or `preset`")]
    Source,
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Key/value scenario description.
///
/// ```toml
/// label = "site-a"
/// traces = "site_a.csv"        # or: preset = "high", days = 7, seed = 3
/// timestep_hours = 0.25
/// grid_charging = false
///
/// [battery]
/// soc_min_kwh = 40.0
/// soc_max_kwh = 400.0
/// charge_eff = 0.95
/// discharge_eff = 0.95
/// max_charge_kw = 100.0
/// max_discharge_kw = 100.0
/// initial_soc_kwh = 200.0
/// ```
///
/// Trace paths are relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub label: Option<String>,
    pub traces: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub days: usize,
    pub seed: u64,
    pub timestep_hours: f64,
    pub storage_price_per_kwh: f64,
    pub emission_factor_kg_per_kwh: f64,
    pub grid_cap_kw: Option<f64>,
    pub grid_cap_factor: f64,
    pub grid_charging: bool,
    pub action_levels: usize,
    pub battery: Option<BatterySpec>,
    pub weights: RewardWeights,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        let d = SeriesDefaults::default();
        Self {
            label: None,
            traces: None,
            preset: None,
            days: 7,
            seed: 0,
            timestep_hours: 0.25,
            storage_price_per_kwh: d.storage_price_per_kwh,
            emission_factor_kg_per_kwh: d.emission_factor_kg_per_kwh,
            grid_cap_kw: None,
            grid_cap_factor: d.grid_cap_factor,
            grid_charging: false,
            action_levels: DEFAULT_ACTION_LEVELS,
            battery: None,
            weights: RewardWeights::default(),
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ScenarioFileError> {
        toml::from_str(text).map_err(|source| ScenarioFileError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Resolve the series (from CSV through clean and aggregate, or from the
    /// synthetic generator) and assemble a validated scenario.
    pub fn to_scenario(&self, base_dir: &Path) -> Result<Scenario, ScenarioFileError> {
        let series = match (&self.traces, self.preset) {
            (Some(path), None) => {
                let path = base_dir.join(path);
                let raw = traces::load_csv(&path)?;
                let cleaned = traces::clean(&raw)?;
                let step = Duration::milliseconds((self.timestep_hours * 3_600_000.0).round() as i64);
                let aggregated = traces::aggregate(&cleaned, step)?;
                let defaults = SeriesDefaults {
                    storage_price_per_kwh: self.storage_price_per_kwh,
                    emission_factor_kg_per_kwh: self.emission_factor_kg_per_kwh,
                    grid_cap_kw: self.grid_cap_kw,
                    grid_cap_factor: self.grid_cap_factor,
                };
                traces::records_to_series(&aggregated, self.timestep_hours, &defaults)?
            }
            (None, Some(preset)) => {
                let cfg = traces::SynthConfig {
                    timestep_hours: self.timestep_hours,
                    storage_price_per_kwh: self.storage_price_per_kwh,
                    emission_factor_kg_per_kwh: self.emission_factor_kg_per_kwh,
                    grid_cap_factor: self.grid_cap_factor,
                    ..Default::default()
                };
                let mut s = traces::synthesize_with(&cfg, preset, self.days, self.seed)?;
                if let Some(cap) = self.grid_cap_kw {
                    s.grid_cap_kw = vec![cap; s.len()];
                }
                s
            }
            _ => return Err(ScenarioFileError::Source),
        };
        let mean_demand = series.demand_kw.iter().sum::<f64>() / series.len() as f64;
        let label = self.label.clone().unwrap_or_else(|| match self.preset {
            Some(p) => format!("{p}-{}", self.seed),
            None => "custom".into(),
        });
        let scenario = Scenario {
            label,
            series,
            battery: self
                .battery
                .clone()
                .unwrap_or_else(|| traces::preset_battery(mean_demand)),
            weights: self.weights,
            action_levels: self.action_levels,
            grid_charging: self.grid_charging,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
