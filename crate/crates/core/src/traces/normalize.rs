use serde::{Deserialize, Serialize};

/// Observed range of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    pub fn new(name: impl Into<String>, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            min,
            max,
        }
    }

    pub fn of(name: impl Into<String>, values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if values.is_empty() {
            Self::new(name, 0.0, 0.0)
        } else {
            Self::new(name, min, max)
        }
    }

    pub fn normalize(&self, x: f64) -> f64 {
        minmax_normalize(x, self.min, self.max)
    }

    pub fn denormalize(&self, x: f64) -> f64 {
        denormalize(x, self.min, self.max)
    }
}

/// Per-feature min/max used to scale a dataset into `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub features: Vec<FeatureRange>,
}

impl NormalizationStats {
    pub fn get(&self, name: &str) -> Option<&FeatureRange> {
        self.features.iter().find(|f| f.name == name)
    }
}

/// `(x - min) / (max - min)`; a degenerate range maps everything to 0.
pub fn minmax_normalize(x: f64, min: f64, max: f64) -> f64 {
    if max > min {
        (x - min) / (max - min)
    } else {
        0.0
    }
}

pub fn denormalize(x: f64, min: f64, max: f64) -> f64 {
    if max > min {
        min + x * (max - min)
    } else {
        min
    }
}
