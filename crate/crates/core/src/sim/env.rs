use serde::{Deserialize, Serialize};

use super::log::{EpisodeLog, StepRecord};
use super::types::{
    setpoint_kw, Action, BatterySpec, EnvState, ExogenousSeries, RewardWeights, StepOutcome,
    DEFAULT_ACTION_LEVELS,
};
use super::SimError;

/// Everything needed to simulate one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub series: ExogenousSeries,
    pub battery: BatterySpec,
    pub weights: RewardWeights,
    /// Number of discrete battery setpoints.
    pub action_levels: usize,
    /// Allow a positive setpoint to charge the battery from the grid on steps
    /// without renewable surplus.
    pub grid_charging: bool,
}

impl Scenario {
    pub fn new(label: impl Into<String>, series: ExogenousSeries, battery: BatterySpec) -> Self {
        Self {
            label: label.into(),
            series,
            battery,
            weights: RewardWeights::default(),
            action_levels: DEFAULT_ACTION_LEVELS,
            grid_charging: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.series.validate()?;
        self.battery.validate()?;
        self.weights.validate()?;
        if self.action_levels < 2 {
            return Err(SimError::InvalidActionSpace(format!(
                "need at least 2 setpoint levels, got {}",
                self.action_levels
            )));
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.series.len()
    }

    pub fn idle_action(&self) -> Action {
        Action::idle(self.action_levels)
    }

    pub fn setpoint_kw(&self, action: Action) -> f64 {
        setpoint_kw(action.battery_setpoint_index, &self.battery, self.action_levels)
    }

    /// Start an episode. The dynamics are deterministic, so the seed only
    /// labels the episode.
    pub fn reset(&self, _seed: u64) -> Result<EnvState, SimError> {
        self.validate()?;
        Ok(EnvState {
            t: 0,
            soc_kwh: self.battery.initial_soc_kwh,
            done: false,
        })
    }

    /// Advance one step under `action`.
    pub fn step(&self, state: &EnvState, action: Action) -> Result<(EnvState, StepOutcome), SimError> {
        if state.done {
            return Err(SimError::EpisodeDone(state.t));
        }
        if state.t >= self.horizon() {
            return Err(SimError::StepOutOfRange {
                t: state.t,
                len: self.horizon(),
            });
        }
        if action.battery_setpoint_index >= self.action_levels {
            return Err(SimError::ActionOutOfRange {
                index: action.battery_setpoint_index,
                levels: self.action_levels,
            });
        }
        let (soc, outcome) = self.dispatch(state.t, state.soc_kwh, self.setpoint_kw(action));
        let t = state.t + 1;
        Ok((
            EnvState {
                t,
                soc_kwh: soc,
                done: t >= self.horizon(),
            },
            outcome,
        ))
    }

    /// Dispatch one step from `soc_kwh` with a signed battery setpoint.
    ///
    /// Order: renewables serve demand; surplus charges the battery, the rest
    /// is curtailed; the battery covers deficit; the grid covers what is left
    /// up to its cap; anything beyond is unserved. With grid charging enabled
    /// and no surplus, a positive setpoint draws from the grid's remaining
    /// capacity.
    ///
    /// Returns the next state of charge and the step accounting. The caller
    /// guarantees `t` is in range.
    pub fn dispatch(&self, t: usize, soc_kwh: f64, setpoint_kw: f64) -> (f64, StepOutcome) {
        let renewable_kw = self.series.solar_kw[t] + self.series.wind_kw[t];
        self.dispatch_at(t, soc_kwh, setpoint_kw, renewable_kw)
    }

    /// [`Scenario::dispatch`] with the step's renewable power replaced, for
    /// planning against a forecast.
    pub fn dispatch_at(&self, t: usize, soc_kwh: f64, setpoint_kw: f64, renewable_kw: f64) -> (f64, StepOutcome) {
        let s = &self.series;
        let b = &self.battery;
        let dt = s.timestep_hours;

        let demand = s.demand_kw[t] * dt;
        let renewable = renewable_kw * dt;
        let renewable_used = demand.min(renewable);
        let surplus = renewable - renewable_used;
        let mut deficit = demand - renewable_used;

        // Energy the battery can still absorb, measured at its terminals.
        let intake_room = ((b.soc_max_kwh - soc_kwh) / b.charge_eff).max(0.0);
        let charge_limit = setpoint_kw.clamp(0.0, b.max_charge_kw) * dt;
        let charge_surplus = surplus.min(charge_limit).min(intake_room);
        let curtailed = surplus - charge_surplus;

        let mut discharge = 0.0;
        if setpoint_kw < 0.0 && deficit > 0.0 {
            let available = (b.discharge_eff * (soc_kwh - b.soc_min_kwh)).max(0.0);
            let limit = (-setpoint_kw).min(b.max_discharge_kw) * dt;
            discharge = deficit.min(limit).min(available);
            deficit -= discharge;
        }

        let grid_room = s.grid_cap_kw[t] * dt;
        let grid_serve = deficit.min(grid_room);
        let unserved = deficit - grid_serve;

        let grid_charge = if self.grid_charging && setpoint_kw > 0.0 && surplus == 0.0 {
            (charge_limit - charge_surplus)
                .min(intake_room - charge_surplus)
                .min(grid_room - grid_serve)
                .max(0.0)
        } else {
            0.0
        };

        let charge = charge_surplus + grid_charge;
        let grid = grid_serve + grid_charge;
        let next_soc = (soc_kwh + b.charge_eff * charge - discharge / b.discharge_eff)
            .clamp(b.soc_min_kwh, b.soc_max_kwh);

        let price = s.grid_price_per_kwh[t];
        let storage_price = s.storage_price(t);
        let energy_cost = price * grid + storage_price * discharge;
        let emissions = grid * s.emission_factor_kg_per_kwh;
        let w = &self.weights;
        let reward = -(w.alpha * energy_cost + w.beta * emissions) - w.sla_penalty * unserved;

        (
            next_soc,
            StepOutcome {
                demand_kwh: demand,
                renewable_kwh: renewable,
                grid_price_per_kwh: price,
                storage_price_per_kwh: storage_price,
                emission_factor_kg_per_kwh: s.emission_factor_kg_per_kwh,
                renewable_used_kwh: renewable_used,
                curtailed_kwh: curtailed,
                charge_kwh: charge,
                grid_charge_kwh: grid_charge,
                discharge_kwh: discharge,
                grid_kwh: grid,
                unserved_kwh: unserved,
                energy_cost,
                emissions_kg: emissions,
                sla_violated: unserved > 0.0,
                reward,
            },
        )
    }

    /// Replay a fixed action sequence from reset and record every step.
    pub fn rollout(&self, actions: &[Action], seed: u64) -> Result<EpisodeLog, SimError> {
        let mut env = Environment::new(self, seed)?;
        for &a in actions {
            if env.state().done {
                break;
            }
            env.step(a)?;
        }
        Ok(env.into_log())
    }
}

/// A running episode over a borrowed scenario that records its own log.
#[derive(Debug)]
pub struct Environment<'a> {
    scenario: &'a Scenario,
    state: EnvState,
    log: EpisodeLog,
}

impl<'a> Environment<'a> {
    pub fn new(scenario: &'a Scenario, seed: u64) -> Result<Self, SimError> {
        let state = scenario.reset(seed)?;
        Ok(Self {
            scenario,
            state,
            log: EpisodeLog::new(scenario.label.clone(), seed),
        })
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn state(&self) -> EnvState {
        self.state
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, SimError> {
        let (next, outcome) = self.scenario.step(&self.state, action)?;
        self.log.steps.push(StepRecord {
            state: self.state,
            action,
            outcome,
        });
        self.state = next;
        Ok(outcome)
    }

    pub fn into_log(self) -> EpisodeLog {
        self.log
    }
}
