use std::fs;
use std::path::{Path, PathBuf};

use ecodispatch::agents::AblationFlags;
use ecodispatch::harness::{AgentKind, ExperimentPlan};
use ecodispatch::traces::Preset;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run needs. Absent keys take their defaults; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(with = "ecodispatch::harness::seed_serde")]
    pub seed: u64,
    pub out: PathBuf,
    /// Synthetic scenario used by `train` and `evaluate` when no scenario
    /// file is given.
    pub preset: Preset,
    /// Scenario spec file; relative paths resolve against the config file.
    pub scenario: Option<PathBuf>,
    pub agent: AgentKind,
    pub ablation: AblationFlags,
    /// Episode lengths, training budgets and the plan for `compare`,
    /// `ablate` and `sweep`.
    pub experiment: ExperimentPlan,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            preset: Preset::Mixed,
            scenario: None,
            agent: AgentKind::Ppo,
            ablation: AblationFlags::NONE,
            experiment: ExperimentPlan::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// Write the effective config into `dir` as `config.toml`.
    pub fn echo(&self, dir: &Path) -> Result<PathBuf, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("config.toml");
        fs::write(&path, self.to_toml()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Read a TOML config. Parse errors carry the line and column; a relative
/// scenario path is made relative to the config file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Some(sc) = &cfg.scenario {
        if sc.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.scenario = Some(base.join(sc));
        }
    }
    Ok(cfg)
}
