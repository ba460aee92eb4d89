use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{Action, EnvState, StepOutcome};
use super::SimError;

/// One line of an episode log: the state before the step, the action and
/// the resulting accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(flatten)]
    pub state: EnvState,
    #[serde(flatten)]
    pub action: Action,
    #[serde(flatten)]
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub scenario: String,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
}

impl EpisodeLog {
    pub fn new(scenario: impl Into<String>, seed: u64) -> Self {
        Self {
            scenario: scenario.into(),
            seed,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &StepOutcome> {
        self.steps.iter().map(|s| &s.outcome)
    }

    /// JSON-lines, one step per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), SimError> {
        for step in &self.steps {
            serde_json::to_writer(&mut out, step).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), SimError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(
        input: R,
        scenario: impl Into<String>,
        seed: u64,
    ) -> Result<Self, SimError> {
        let mut log = EpisodeLog::new(scenario, seed);
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let step = serde_json::from_str(&line).map_err(|source| SimError::LogParse {
                line: i + 1,
                source,
            })?;
            log.steps.push(step);
        }
        Ok(log)
    }

    pub fn load_jsonl(path: &Path, scenario: impl Into<String>, seed: u64) -> Result<Self, SimError> {
        Self::read_jsonl(BufReader::new(File::open(path)?), scenario, seed)
    }
}
