//! Short-horizon renewable forecasters: persistence, seasonal-naive and a
//! least-squares autoregressive model.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Eigenvalue ratio below which the AR normal equations count as singular.
const SINGULAR_RATIO: f64 = 1e-12;

pub const DEFAULT_AR_ORDER: usize = 4;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ForecastError {
    #[error("need more than {needed} samples to fit, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no held-out points to score")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ForecastKind {
    Persistence,
    SeasonalNaive { period: usize },
    Autoregressive { order: usize },
}

impl Default for ForecastKind {
    fn default() -> Self {
        ForecastKind::Autoregressive { order: DEFAULT_AR_ORDER }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub kind: ForecastKind,
    /// AR weights, `coefficients[i]` multiplies the value `i + 1` steps back.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    /// Set when the AR fit was singular and the model degraded to persistence.
    pub fallback: bool,
}

impl ForecastModel {
    pub fn persistence() -> Self {
        Self {
            kind: ForecastKind::Persistence,
            coefficients: Vec::new(),
            bias: 0.0,
            fallback: false,
        }
    }

    pub fn fit(kind: ForecastKind, series: &[f64]) -> Result<Self, ForecastError> {
        match kind {
            ForecastKind::Persistence => Ok(Self::persistence()),
            ForecastKind::SeasonalNaive { period } => {
                if period == 0 {
                    return Err(ForecastError::InvalidModel("seasonal period must be ≥ 1".into()));
                }
                if series.len() <= period {
                    return Err(ForecastError::InsufficientHistory { needed: period, got: series.len() });
                }
                Ok(Self { kind, coefficients: Vec::new(), bias: 0.0, fallback: false })
            }
            ForecastKind::Autoregressive { order } => fit_ar(order, series),
        }
    }

    /// Samples of history `predict` needs.
    pub fn required_history(&self) -> usize {
        match self.kind {
            ForecastKind::Persistence => 1,
            ForecastKind::SeasonalNaive { period } => period,
            ForecastKind::Autoregressive { order } => order,
        }
    }

    /// Forecast the next `horizon` values after `history`. Outputs are
    /// clamped at zero. With too little history the last value (or zero) is
    /// repeated.
    pub fn predict(&self, history: &[f64], horizon: usize) -> Vec<f64> {
        let Some(&last) = history.last() else {
            return vec![0.0; horizon];
        };
        if history.len() < self.required_history() {
            return vec![last.max(0.0); horizon];
        }
        match self.kind {
            ForecastKind::Persistence => vec![last.max(0.0); horizon],
            ForecastKind::SeasonalNaive { period } => {
                let base = history.len() - period;
                (0..horizon).map(|h| history[base + h % period].max(0.0)).collect()
            }
            ForecastKind::Autoregressive { order } => {
                let mut window: Vec<f64> = history[history.len() - order..].to_vec();
                let mut out = Vec::with_capacity(horizon);
                for _ in 0..horizon {
                    let next = self.ar_next(&window).max(0.0);
                    out.push(next);
                    window.remove(0);
                    window.push(next);
                }
                out
            }
        }
    }

    fn ar_next(&self, window: &[f64]) -> f64 {
        let n = window.len();
        self.bias
            + self
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, a)| a * window[n - 1 - i])
                .sum::<f64>()
    }

    /// Mean absolute error of one-step-ahead rolling forecasts over `series`,
    /// starting once enough history is available.
    pub fn evaluate_mae(&self, series: &[f64]) -> Result<f64, ForecastError> {
        let start = self.required_history().max(1);
        if series.len() <= start {
            return Err(ForecastError::Empty);
        }
        let total: f64 = (start..series.len())
            .map(|t| (self.predict(&series[..t], 1)[0] - series[t]).abs())
            .sum();
        Ok(total / (series.len() - start) as f64)
    }
}

fn fit_ar(order: usize, series: &[f64]) -> Result<ForecastModel, ForecastError> {
    if order == 0 {
        return Err(ForecastError::InvalidModel("autoregressive order must be ≥ 1".into()));
    }
    if series.len() <= order {
        return Err(ForecastError::InsufficientHistory { needed: order, got: series.len() });
    }
    let kind = ForecastKind::Autoregressive { order };
    // Design matrix rows: [x_{t-1}, …, x_{t-p}, 1].
    let rows = series.len() - order;
    let cols = order + 1;
    let x = DMatrix::from_fn(rows, cols, |r, c| {
        let t = r + order;
        if c < order {
            series[t - 1 - c]
        } else {
            1.0
        }
    });
    let y = DVector::from_iterator(rows, series[order..].iter().copied());
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;

    let eig = SymmetricEigen::new(xtx.clone()).eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let solution = if max > 0.0 && min / max >= SINGULAR_RATIO {
        xtx.cholesky().map(|c| c.solve(&xty))
    } else {
        None
    };
    match solution {
        Some(beta) if beta.iter().all(|v| v.is_finite()) => Ok(ForecastModel {
            kind,
            coefficients: beta.iter().take(order).copied().collect(),
            bias: beta[order],
            fallback: false,
        }),
        _ => {
            let mut coefficients = vec![0.0; order];
            coefficients[0] = 1.0;
            Ok(ForecastModel { kind, coefficients, bias: 0.0, fallback: true })
        }
    }
}
