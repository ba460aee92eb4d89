use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agents::{AblationFlags, QConfig, TrainConfig};
use crate::metrics::SuccessGoals;
use crate::sim::Scenario;
use crate::traces::{preset_battery, synthesize, Preset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Ppo,
    RuleBased,
    Heuristic,
    TabularQ,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Ppo, AgentKind::TabularQ, AgentKind::Heuristic, AgentKind::RuleBased];

    pub fn label(self) -> &'static str {
        match self {
            AgentKind::Ppo => "ppo",
            AgentKind::RuleBased => "rule_based",
            AgentKind::Heuristic => "heuristic",
            AgentKind::TabularQ => "tabular_q",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AgentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| HarnessError::InvalidPlan(format!("unknown agent `{s}`")))
    }
}

/// Hyperparameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    RecurrentUnits,
    ConvFilters,
    Minibatch,
    LearningRate,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [
        SweepAxis::RecurrentUnits,
        SweepAxis::ConvFilters,
        SweepAxis::Minibatch,
        SweepAxis::LearningRate,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::RecurrentUnits => "recurrent_units",
            SweepAxis::ConvFilters => "conv_filters",
            SweepAxis::Minibatch => "minibatch",
            SweepAxis::LearningRate => "learning_rate",
        }
    }

    /// `cfg` with this axis set to `value`.
    pub fn apply(self, cfg: &TrainConfig, value: f64) -> Result<TrainConfig, HarnessError> {
        let mut cfg = *cfg;
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(HarnessError::InvalidPlan(format!("{} needs a positive integer, got {value}", self.label())))
            }
        };
        match self {
            SweepAxis::RecurrentUnits => cfg.recurrent_units = count()?,
            SweepAxis::ConvFilters => cfg.conv_filters = count()?,
            SweepAxis::Minibatch => cfg.ppo.minibatch = count()?,
            SweepAxis::LearningRate => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(HarnessError::InvalidPlan(format!("learning_rate must be positive, got {value}")));
                }
                cfg.ppo.adam.learning_rate = value;
            }
        }
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| HarnessError::UnknownAxis(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// What to run: presets × agents × seeds, plus the ablation matrix and an
/// optional sweep. Each seed trains on `train_episodes` synthetic traces and
/// evaluates greedily on one held-out trace of the same preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentPlan {
    /// Names the output directory.
    pub label: String,
    pub presets: Vec<Preset>,
    pub agents: Vec<AgentKind>,
    #[serde(with = "super::seed_serde::vec")]
    pub seeds: Vec<u64>,
    /// Episode length in days.
    pub days: usize,
    pub train_episodes: usize,
    /// Single-flag ablations to run; empty means none.
    pub ablations: Vec<String>,
    /// Seeds for ablations; empty means `seeds`.
    #[serde(with = "super::seed_serde::vec")]
    pub ablation_seeds: Vec<u64>,
    pub sweep: Option<SweepPlan>,
    pub grid_charging: bool,
    pub train: TrainConfig,
    pub q: QConfig,
    pub goals: SuccessGoals,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            label: "default".into(),
            presets: Preset::ALL.to_vec(),
            agents: AgentKind::ALL.to_vec(),
            seeds: (0..5).collect(),
            days: 7,
            train_episodes: 4,
            ablations: AblationFlags::singles().iter().map(|(n, _)| n.to_string()).collect(),
            ablation_seeds: Vec::new(),
            sweep: None,
            grid_charging: true,
            train: TrainConfig::default(),
            q: QConfig::default(),
            goals: SuccessGoals::default(),
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidPlan(m));
        if self.label.is_empty() || self.label.contains(['/', '\\']) || self.label.starts_with('.') {
            return bad(format!("label `{}` is not a plain directory name", self.label));
        }
        if self.presets.is_empty() {
            return bad("at least one scenario preset is required".into());
        }
        if self.agents.is_empty() {
            return bad("at least one agent is required".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.days == 0 || self.train_episodes == 0 {
            return bad("days and train_episodes must be positive".into());
        }
        for name in &self.ablations {
            ablation_flags(name)?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return bad("sweep needs at least one value".into());
            }
            for &v in &sweep.values {
                sweep.axis.apply(&self.train, v)?;
            }
        }
        self.train.ppo.validate()?;
        Ok(())
    }

    pub fn ablation_seeds(&self) -> &[u64] {
        if self.ablation_seeds.is_empty() {
            &self.seeds
        } else {
            &self.ablation_seeds
        }
    }

    fn scenario(&self, preset: Preset, trace_seed: u64) -> Result<Scenario, HarnessError> {
        let series = synthesize(preset, self.days, trace_seed)?;
        let mean = series.demand_kw.iter().sum::<f64>() / series.len() as f64;
        let mut sc = Scenario::new(preset.label(), series, preset_battery(mean));
        sc.grid_charging = self.grid_charging;
        Ok(sc)
    }

    /// Training traces for `seed`: trace seeds `1000·seed + 1 ..= 1000·seed + n`.
    pub fn training_scenarios(&self, preset: Preset, seed: u64) -> Result<Vec<Scenario>, HarnessError> {
        (1..=self.train_episodes as u64)
            .map(|k| self.scenario(preset, seed.wrapping_mul(1000).wrapping_add(k)))
            .collect()
    }

    /// Held-out evaluation trace for `seed`: trace seed `1000·seed`.
    pub fn evaluation_scenario(&self, preset: Preset, seed: u64) -> Result<Scenario, HarnessError> {
        self.scenario(preset, seed.wrapping_mul(1000))
    }
}

/// Flags of a named single-flag ablation; `full` is the unablated system.
pub(crate) fn ablation_flags(name: &str) -> Result<AblationFlags, HarnessError> {
    if name == "full" {
        return Ok(AblationFlags::NONE);
    }
    AblationFlags::singles()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f)
        .ok_or_else(|| HarnessError::InvalidPlan(format!("unknown ablation `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_is_valid_and_round_trips_through_toml() {
        let plan = ExperimentPlan::default();
        plan.validate().unwrap();
        let text = toml::to_string(&plan).unwrap();
        let back: ExperimentPlan = toml::from_str(&text).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn empty_rosters_are_rejected() {
        for f in [
            |p: &mut ExperimentPlan| p.presets.clear(),
            |p: &mut ExperimentPlan| p.agents.clear(),
            |p: &mut ExperimentPlan| p.seeds.clear(),
        ] {
            let mut p = ExperimentPlan::default();
            f(&mut p);
            assert!(matches!(p.validate(), Err(HarnessError::InvalidPlan(_))));
        }
    }

    #[test]
    fn unknown_axis_and_ablation_are_errors() {
        assert!(matches!("dropout".parse::<SweepAxis>(), Err(HarnessError::UnknownAxis(_))));
        let mut p = ExperimentPlan::default();
        p.ablations = vec!["no_such".into()];
        assert!(p.validate().is_err());
        assert!(toml::from_str::<ExperimentPlan>("[sweep]\naxis = \"dropout\"\nvalues = [1.0]").is_err());
    }

    #[test]
    fn axes_apply_to_the_right_field() {
        let base = TrainConfig::default();
        assert_eq!(SweepAxis::RecurrentUnits.apply(&base, 8.0).unwrap().recurrent_units, 8);
        assert_eq!(SweepAxis::ConvFilters.apply(&base, 4.0).unwrap().conv_filters, 4);
        assert_eq!(SweepAxis::Minibatch.apply(&base, 32.0).unwrap().ppo.minibatch, 32);
        assert_eq!(SweepAxis::LearningRate.apply(&base, 1e-3).unwrap().ppo.adam.learning_rate, 1e-3);
        assert!(SweepAxis::Minibatch.apply(&base, 2.5).is_err());
        assert!(SweepAxis::LearningRate.apply(&base, -1.0).is_err());
    }

    #[test]
    fn evaluation_trace_is_held_out() {
        let plan = ExperimentPlan { days: 1, ..Default::default() };
        let train = plan.training_scenarios(Preset::Mixed, 2).unwrap();
        let eval = plan.evaluation_scenario(Preset::Mixed, 2).unwrap();
        assert_eq!(train.len(), 4);
        assert!(train.iter().all(|s| s.series.demand_kw != eval.series.demand_kw && s.grid_charging));
    }
}
