use serde::{Deserialize, Serialize};

use super::AblationFlags;
use crate::forecast::ForecastModel;
use crate::sim::{EnvState, Scenario};
use crate::traces::encode_hour;

/// Per-row features before the forecast block: demand, solar, wind, state of
/// charge, grid price, sin(hour), cos(hour).
pub const BASE_FEATURES: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationSpec {
    /// Rows of history, the last one being the current step.
    pub window: usize,
    /// Renewable forecast steps appended to every row.
    pub horizon: usize,
}

impl Default for ObservationSpec {
    fn default() -> Self {
        Self { window: 8, horizon: 4 }
    }
}

impl ObservationSpec {
    pub fn features(&self) -> usize {
        BASE_FEATURES + self.horizon
    }

    pub fn len(&self) -> usize {
        self.window * self.features()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Precomputes the exogenous part of every row for one scenario, so a step
/// only fills in the state of charge.
#[derive(Debug, Clone)]
pub struct ObservationBuilder {
    spec: ObservationSpec,
    rows: Vec<f64>,
    soc_min: f64,
    soc_range: f64,
}

fn scale(max: f64) -> f64 {
    if max > 0.0 {
        1.0 / max
    } else {
        0.0
    }
}

impl ObservationBuilder {
    /// Features are divided by the scenario's maxima; forecasts by the
    /// maximum total renewable power and clipped to [0, 1].
    pub fn new(scenario: &Scenario, forecaster: &ForecastModel, spec: ObservationSpec, flags: AblationFlags) -> Self {
        let s = &scenario.series;
        let n = s.len();
        let f = spec.features();
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let (kd, ks, kw, kp) = (
            scale(max(&s.demand_kw)),
            scale(max(&s.solar_kw)),
            scale(max(&s.wind_kw)),
            scale(max(&s.grid_price_per_kwh)),
        );
        let renew: Vec<f64> = (0..n).map(|t| s.solar_kw[t] + s.wind_kw[t]).collect();
        let kr = scale(max(&renew));
        let mut rows = vec![0.0; n * f];
        for t in 0..n {
            let row = &mut rows[t * f..(t + 1) * f];
            row[0] = s.demand_kw[t] * kd;
            row[1] = s.solar_kw[t] * ks;
            row[2] = s.wind_kw[t] * kw;
            row[4] = s.grid_price_per_kwh[t] * kp;
            let (sin, cos) = encode_hour(s.hour_of_day(t));
            row[5] = sin;
            row[6] = cos;
            if !flags.no_energy_prediction && spec.horizon > 0 {
                let fc = forecaster.predict(&renew[..=t], spec.horizon);
                for (h, v) in fc.into_iter().enumerate() {
                    row[BASE_FEATURES + h] = (v * kr).clamp(0.0, 1.0);
                }
            }
        }
        Self {
            spec,
            rows,
            soc_min: scenario.battery.soc_min_kwh,
            soc_range: scenario.battery.range_kwh(),
        }
    }

    pub fn spec(&self) -> ObservationSpec {
        self.spec
    }

    /// Observation at step `t`: rows `t - window + 1 ..= t`, zero rows before
    /// the episode start.
    pub fn build(&self, t: usize, soc_history: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.len()];
        self.build_into(t, soc_history, &mut out);
        out
    }

    pub fn build_into(&self, t: usize, soc_history: &[f64], out: &mut [f64]) {
        let f = self.spec.features();
        let w = self.spec.window;
        out.fill(0.0);
        for slot in 0..w {
            let Some(tau) = (t + slot + 1).checked_sub(w) else {
                continue;
            };
            let dst = &mut out[slot * f..(slot + 1) * f];
            dst.copy_from_slice(&self.rows[tau * f..(tau + 1) * f]);
            let soc = soc_history.get(tau).copied().unwrap_or(self.soc_min);
            dst[3] = ((soc - self.soc_min) / self.soc_range).clamp(0.0, 1.0);
        }
    }
}

/// One-off observation for `state`; prefer a reused [`ObservationBuilder`]
/// inside episode loops.
pub fn build_observation(
    state: &EnvState,
    soc_history: &[f64],
    scenario: &Scenario,
    forecaster: &ForecastModel,
    spec: ObservationSpec,
    flags: AblationFlags,
) -> Vec<f64> {
    ObservationBuilder::new(scenario, forecaster, spec, flags).build(state.t, soc_history)
}
