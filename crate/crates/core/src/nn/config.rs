use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    /// Single update gate `f`: `h' = (1 - f) h + f tanh(W x + U (f h) + b)`.
    #[default]
    Gated,
    /// Elman cell: `h' = tanh(W x + U h + b)`.
    Simple,
}

/// One hidden layer. Convolutions and the recurrent cell operate on the
/// time window; dense layers see a flat vector (a window reaching a dense
/// layer is flattened time-major).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    /// "Same"-padded convolution with ReLU; output length `ceil(len / stride)`.
    Conv1d { filters: usize, width: usize, stride: usize },
    /// Runs over the window and emits the last hidden state.
    Recurrent {
        units: usize,
        #[serde(default)]
        cell: CellKind,
    },
    Dense { units: usize, activation: Activation },
}

/// Layer stack between a `window × features` observation and the two heads
/// (softmax policy over `actions`, scalar linear value), both fed by the last
/// hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub window: usize,
    pub features: usize,
    pub actions: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkConfig {
    /// Conv 8×3/1, conv 16×3/2, gated recurrent 16, dense 32, dense 16.
    pub fn standard(window: usize, features: usize, actions: usize) -> Self {
        Self::with_sizes(window, features, actions, 8, 16)
    }

    /// The standard stack with the second conv's filter count and the
    /// recurrent width overridden.
    pub fn with_sizes(window: usize, features: usize, actions: usize, conv_filters: usize, units: usize) -> Self {
        Self {
            window,
            features,
            actions,
            layers: vec![
                LayerSpec::Conv1d { filters: 8, width: 3, stride: 1 },
                LayerSpec::Conv1d { filters: conv_filters, width: 3, stride: 2 },
                LayerSpec::Recurrent { units, cell: CellKind::Gated },
                LayerSpec::Dense { units: 32, activation: Activation::Relu },
                LayerSpec::Dense { units: 16, activation: Activation::Relu },
            ],
        }
    }

    pub fn input_len(&self) -> usize {
        self.window * self.features
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: String| Err(NnError::InvalidConfig(m));
        if self.window == 0 || self.features == 0 {
            return bad("window and features must be ≥ 1".into());
        }
        if self.actions < 2 {
            return bad("policy head needs at least 2 actions".into());
        }
        if self.layers.is_empty() {
            return bad("at least one hidden layer is required".into());
        }
        let mut sequence = true;
        for (i, layer) in self.layers.iter().enumerate() {
            match *layer {
                LayerSpec::Conv1d { filters, width, stride } => {
                    if !sequence {
                        return bad(format!("layer {i}: convolution after the window was reduced"));
                    }
                    if filters == 0 || width == 0 || stride == 0 {
                        return bad(format!("layer {i}: convolution sizes must be ≥ 1"));
                    }
                }
                LayerSpec::Recurrent { units, .. } => {
                    if !sequence {
                        return bad(format!("layer {i}: recurrent layer after the window was reduced"));
                    }
                    if units == 0 {
                        return bad(format!("layer {i}: recurrent units must be ≥ 1"));
                    }
                    sequence = false;
                }
                LayerSpec::Dense { units, .. } => {
                    if units == 0 {
                        return bad(format!("layer {i}: dense units must be ≥ 1"));
                    }
                    sequence = false;
                }
            }
        }
        Ok(())
    }
}
