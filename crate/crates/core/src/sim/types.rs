use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Exogenous signals that drive one simulated horizon.
///
/// Every sequence is indexed by step and shares the same length. Powers are
/// average kW over the step, prices are per kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousSeries {
    /// Wall-clock time of step 0; only the hour of day is used downstream.
    pub start: NaiveDateTime,
    pub timestep_hours: f64,
    pub demand_kw: Vec<f64>,
    pub solar_kw: Vec<f64>,
    pub wind_kw: Vec<f64>,
    pub grid_price_per_kwh: Vec<f64>,
    /// Either one value for the whole horizon or one per step.
    pub storage_price_per_kwh: Vec<f64>,
    pub grid_cap_kw: Vec<f64>,
    pub emission_factor_kg_per_kwh: f64,
}

impl ExogenousSeries {
    pub fn len(&self) -> usize {
        self.demand_kw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand_kw.is_empty()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.demand_kw.len();
        if n == 0 {
            return Err(SimError::InvalidSeries("series is empty".into()));
        }
        if !(self.timestep_hours > 0.0 && self.timestep_hours.is_finite()) {
            return Err(SimError::InvalidSeries(format!(
                "timestep_hours must be > 0, got {}",
                self.timestep_hours
            )));
        }
        let named: [(&str, &[f64]); 5] = [
            ("demand_kw", &self.demand_kw),
            ("solar_kw", &self.solar_kw),
            ("wind_kw", &self.wind_kw),
            ("grid_price_per_kwh", &self.grid_price_per_kwh),
            ("grid_cap_kw", &self.grid_cap_kw),
        ];
        for (name, values) in named {
            if values.len() != n {
                return Err(SimError::InvalidSeries(format!(
                    "{name} has length {}, expected {n}",
                    values.len()
                )));
            }
            check_nonnegative(name, values)?;
        }
        let sp = self.storage_price_per_kwh.len();
        if sp != 1 && sp != n {
            return Err(SimError::InvalidSeries(format!(
                "storage_price_per_kwh has length {sp}, expected 1 or {n}"
            )));
        }
        check_nonnegative("storage_price_per_kwh", &self.storage_price_per_kwh)?;
        check_nonnegative(
            "emission_factor_kg_per_kwh",
            &[self.emission_factor_kg_per_kwh],
        )?;
        Ok(())
    }

    fn index(&self, t: usize) -> Result<usize, SimError> {
        if t < self.len() {
            Ok(t)
        } else {
            Err(SimError::StepOutOfRange { t, len: self.len() })
        }
    }

    /// Total renewable power available at step `t` (solar plus wind).
    pub fn renewable_at(&self, t: usize) -> Result<f64, SimError> {
        let t = self.index(t)?;
        Ok(self.solar_kw[t] + self.wind_kw[t])
    }

    pub fn demand_at(&self, t: usize) -> Result<f64, SimError> {
        Ok(self.demand_kw[self.index(t)?])
    }

    pub fn storage_price(&self, t: usize) -> f64 {
        if self.storage_price_per_kwh.len() == 1 {
            self.storage_price_per_kwh[0]
        } else {
            self.storage_price_per_kwh[t]
        }
    }

    /// Hour of day (0..24) at the start of step `t`.
    pub fn hour_of_day(&self, t: usize) -> f64 {
        use chrono::Timelike;
        let start = self.start.time().num_seconds_from_midnight() as f64 / 3600.0;
        (start + t as f64 * self.timestep_hours).rem_euclid(24.0)
    }

    /// Keep only steps `range`, re-basing the start time.
    pub fn slice(&self, range: std::ops::Range<usize>) -> ExogenousSeries {
        let offset_secs = (range.start as f64 * self.timestep_hours * 3600.0).round() as i64;
        let storage = if self.storage_price_per_kwh.len() == 1 {
            self.storage_price_per_kwh.clone()
        } else {
            self.storage_price_per_kwh[range.clone()].to_vec()
        };
        ExogenousSeries {
            start: self.start + chrono::Duration::seconds(offset_secs),
            timestep_hours: self.timestep_hours,
            demand_kw: self.demand_kw[range.clone()].to_vec(),
            solar_kw: self.solar_kw[range.clone()].to_vec(),
            wind_kw: self.wind_kw[range.clone()].to_vec(),
            grid_price_per_kwh: self.grid_price_per_kwh[range.clone()].to_vec(),
            storage_price_per_kwh: storage,
            grid_cap_kw: self.grid_cap_kw[range].to_vec(),
            emission_factor_kg_per_kwh: self.emission_factor_kg_per_kwh,
        }
    }
}

fn check_nonnegative(name: &str, values: &[f64]) -> Result<(), SimError> {
    match values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(i) => Err(SimError::InvalidSeries(format!(
            "{name}[{i}] = {} is not a finite nonnegative value",
            values[i]
        ))),
        None => Ok(()),
    }
}

/// How the activity component of the load model is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadMode {
    /// `activity_load` is in kW and adds to the base load.
    #[default]
    Additive,
    /// `activity_load` is a unitless utilization factor that scales the base load.
    Utilization,
}

/// Data-center power draw: base load, activity-driven load, cooling overhead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadModel {
    pub base_load_kw: f64,
    pub activity_load: Vec<f64>,
    pub cooling_overhead_kw: Vec<f64>,
    #[serde(default)]
    pub mode: LoadMode,
}

impl LoadModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.activity_load.len() != self.cooling_overhead_kw.len() {
            return Err(SimError::InvalidLoad(format!(
                "activity_load has length {}, cooling_overhead_kw has length {}",
                self.activity_load.len(),
                self.cooling_overhead_kw.len()
            )));
        }
        let bad = std::iter::once(self.base_load_kw)
            .chain(self.activity_load.iter().copied())
            .chain(self.cooling_overhead_kw.iter().copied())
            .find(|v| !(v.is_finite() && *v >= 0.0));
        match bad {
            Some(v) => Err(SimError::InvalidLoad(format!(
                "load component {v} is not a finite nonnegative value"
            ))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.activity_load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activity_load.is_empty()
    }

    /// Data-center power demand at step `t`.
    pub fn demand_at(&self, t: usize) -> Result<f64, SimError> {
        if t >= self.len() {
            return Err(SimError::StepOutOfRange { t, len: self.len() });
        }
        let activity = self.activity_load[t];
        let cooling = self.cooling_overhead_kw[t];
        Ok(match self.mode {
            LoadMode::Additive => self.base_load_kw + activity + cooling,
            LoadMode::Utilization => self.base_load_kw * activity + cooling,
        })
    }

    pub fn demand_series(&self) -> Result<Vec<f64>, SimError> {
        (0..self.len()).map(|t| self.demand_at(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub soc_min_kwh: f64,
    pub soc_max_kwh: f64,
    pub charge_eff: f64,
    pub discharge_eff: f64,
    pub max_charge_kw: f64,
    pub max_discharge_kw: f64,
    pub initial_soc_kwh: f64,
}

impl BatterySpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |msg: String| Err(SimError::InvalidBattery(msg));
        let all = [
            self.soc_min_kwh,
            self.soc_max_kwh,
            self.charge_eff,
            self.discharge_eff,
            self.max_charge_kw,
            self.max_discharge_kw,
            self.initial_soc_kwh,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return err("battery parameters must be finite".into());
        }
        if !(0.0 <= self.soc_min_kwh && self.soc_min_kwh < self.soc_max_kwh) {
            return err(format!(
                "need 0 <= soc_min ({}) < soc_max ({})",
                self.soc_min_kwh, self.soc_max_kwh
            ));
        }
        if !(self.soc_min_kwh <= self.initial_soc_kwh && self.initial_soc_kwh <= self.soc_max_kwh)
        {
            return err(format!(
                "initial soc {} outside [{}, {}]",
                self.initial_soc_kwh, self.soc_min_kwh, self.soc_max_kwh
            ));
        }
        for (name, eff) in [("charge_eff", self.charge_eff), ("discharge_eff", self.discharge_eff)] {
            if !(eff > 0.0 && eff <= 1.0) {
                return err(format!("{name} must lie in (0, 1], got {eff}"));
            }
        }
        if !(self.max_charge_kw > 0.0 && self.max_discharge_kw > 0.0) {
            return err("power ratings must be > 0".into());
        }
        Ok(())
    }

    pub fn range_kwh(&self) -> f64 {
        self.soc_max_kwh - self.soc_min_kwh
    }

    /// Fraction of the usable range currently stored, in [0, 1].
    pub fn soc_fraction(&self, soc_kwh: f64) -> f64 {
        ((soc_kwh - self.soc_min_kwh) / self.range_kwh()).clamp(0.0, 1.0)
    }
}

/// Weights of the per-step reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    /// Penalty per kWh of unserved demand. Zero gives the cost/emission reward alone.
    pub sla_penalty: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            sla_penalty: 10.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = [self.alpha, self.beta, self.sla_penalty]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidWeights(*self))
        }
    }
}

pub const DEFAULT_ACTION_LEVELS: usize = 11;

/// A discrete battery setpoint.
///
/// Index `k` of `K` levels: levels below the midpoint `K / 2` discharge in
/// equal steps down to `-max_discharge_kw`, levels above it charge in equal
/// steps up to `+max_charge_kw`, and the midpoint is idle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub battery_setpoint_index: usize,
}

impl Action {
    pub fn new(index: usize) -> Self {
        Self {
            battery_setpoint_index: index,
        }
    }

    pub fn idle(levels: usize) -> Self {
        Self::new(levels / 2)
    }

    /// Signed battery power in kW; positive charges, negative discharges.
    pub fn setpoint_kw(&self, battery: &BatterySpec, levels: usize) -> f64 {
        setpoint_kw(self.battery_setpoint_index, battery, levels)
    }
}

pub fn setpoint_kw(index: usize, battery: &BatterySpec, levels: usize) -> f64 {
    let mid = levels / 2;
    if index < mid {
        -battery.max_discharge_kw * (mid - index) as f64 / mid as f64
    } else if index > mid {
        battery.max_charge_kw * (index - mid) as f64 / (levels - 1 - mid) as f64
    } else {
        0.0
    }
}

/// MDP state: step index and stored energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub t: usize,
    pub soc_kwh: f64,
    pub done: bool,
}

/// Full accounting of one dispatch step. Energies are kWh over the step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepOutcome {
    pub demand_kwh: f64,
    pub renewable_kwh: f64,
    pub grid_price_per_kwh: f64,
    pub storage_price_per_kwh: f64,
    pub emission_factor_kg_per_kwh: f64,
    pub renewable_used_kwh: f64,
    pub curtailed_kwh: f64,
    /// Energy drawn into the battery, from surplus and (optionally) grid.
    pub charge_kwh: f64,
    /// Part of `charge_kwh` that came from the grid.
    pub grid_charge_kwh: f64,
    /// Energy delivered to the load by the battery.
    pub discharge_kwh: f64,
    /// Grid import, including any grid charging.
    pub grid_kwh: f64,
    pub unserved_kwh: f64,
    pub energy_cost: f64,
    pub emissions_kg: f64,
    pub sla_violated: bool,
    pub reward: f64,
}

impl StepOutcome {
    pub fn charge_from_surplus_kwh(&self) -> f64 {
        self.charge_kwh - self.grid_charge_kwh
    }

    /// Demand energy actually delivered during the step.
    pub fn served_kwh(&self) -> f64 {
        self.demand_kwh - self.unserved_kwh
    }
}
