use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::record::RawRecord;
use super::TraceError;
use crate::sim::{BatterySpec, ExogenousSeries};

/// Renewable availability regime of a synthetic trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    High,
    Low,
    Mixed,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::High, Preset::Low, Preset::Mixed];

    /// Mean renewable power over mean demand.
    pub fn renewable_ratio(self) -> f64 {
        match self {
            Preset::High => 1.3,
            Preset::Low => 0.5,
            Preset::Mixed => 0.9,
        }
    }

    /// Share of renewable energy that comes from solar.
    pub fn solar_share(self) -> f64 {
        match self {
            Preset::High => 0.6,
            Preset::Low => 0.6,
            Preset::Mixed => 0.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Preset::High => "high",
            Preset::Low => "low",
            Preset::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Preset {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(Preset::High),
            "low" => Ok(Preset::Low),
            "mixed" => Ok(Preset::Mixed),
            other => Err(TraceError::UnknownPreset(other.to_string())),
        }
    }
}

/// Shape parameters of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub timestep_hours: f64,
    pub start: NaiveDateTime,
    pub mean_demand_kw: f64,
    /// Relative amplitude of the diurnal demand swing.
    pub demand_swing: f64,
    /// Hour of peak demand.
    pub demand_peak_hour: f64,
    pub demand_noise: f64,
    pub sunrise_hour: f64,
    pub sunset_hour: f64,
    /// Time-of-use tariff as `(start hour, price per kWh)`, sorted by hour.
    pub tariff: Vec<(f64, f64)>,
    pub storage_price_per_kwh: f64,
    pub emission_factor_kg_per_kwh: f64,
    /// Grid cap as a multiple of peak demand.
    pub grid_cap_factor: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            timestep_hours: 0.25,
            start: NaiveDate::from_ymd_opt(2024, 6, 3)
                .expect("valid date")
                .and_hms_opt(0, 0, 0)
                .expect("valid time"),
            mean_demand_kw: 100.0,
            demand_swing: 0.25,
            demand_peak_hour: 19.0,
            demand_noise: 0.03,
            sunrise_hour: 6.0,
            sunset_hour: 18.0,
            tariff: vec![
                (0.0, 0.07),
                (7.0, 0.24),
                (10.0, 0.14),
                (17.0, 0.34),
                (22.0, 0.12),
            ],
            storage_price_per_kwh: 0.02,
            emission_factor_kg_per_kwh: 0.4,
            grid_cap_factor: 1.2,
        }
    }
}

impl SynthConfig {
    pub fn tariff_at(&self, hour: f64) -> f64 {
        self.tariff
            .iter()
            .rev()
            .find(|(h, _)| hour >= *h)
            .or_else(|| self.tariff.last())
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }
}

/// Battery sized to the site: four hours of mean demand, one-hour power rating.
pub fn preset_battery(mean_demand_kw: f64) -> BatterySpec {
    let capacity = 4.0 * mean_demand_kw;
    BatterySpec {
        soc_min_kwh: 0.1 * capacity,
        soc_max_kwh: capacity,
        charge_eff: 0.95,
        discharge_eff: 0.95,
        max_charge_kw: mean_demand_kw,
        max_discharge_kw: mean_demand_kw,
        initial_soc_kwh: 0.5 * capacity,
    }
}

pub fn synthesize(preset: Preset, days: usize, seed: u64) -> Result<ExogenousSeries, TraceError> {
    synthesize_with(&SynthConfig::default(), preset, days, seed)
}

/// Generate `days` of demand, solar, wind and tariff signals.
///
/// Solar is a clear-sky bell between sunrise and sunset scaled by a random
/// daily clearness and is exactly zero at night. Wind is a mean-reverting
/// AR(1) process. Demand swings diurnally around its mean with small
/// autocorrelated noise. Renewables are finally scaled so that their mean
/// over the whole trace is the preset's ratio of mean demand.
pub fn synthesize_with(
    cfg: &SynthConfig,
    preset: Preset,
    days: usize,
    seed: u64,
) -> Result<ExogenousSeries, TraceError> {
    if days == 0 {
        return Err(TraceError::Empty("days must be at least 1".into()));
    }
    let per_day = (24.0 / cfg.timestep_hours).round() as usize;
    let n = per_day * days;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let clearness = Uniform::new_inclusive(0.45, 1.0);

    let hour = |t: usize| ((t % per_day) as f64 + 0.5) * cfg.timestep_hours;

    let mut demand = Vec::with_capacity(n);
    let mut noise = 0.0;
    for t in 0..n {
        noise = 0.8 * noise + 0.6 * unit.sample(&mut rng);
        let phase = std::f64::consts::TAU * (hour(t) - cfg.demand_peak_hour) / 24.0;
        let weekly = if (t / per_day) % 7 >= 5 { 1.05 } else { 1.0 };
        let d = cfg.mean_demand_kw * weekly * (1.0 + cfg.demand_swing * phase.cos() + cfg.demand_noise * noise);
        demand.push(d.max(0.0));
    }

    let mut solar = Vec::with_capacity(n);
    let daylight = cfg.sunset_hour - cfg.sunrise_hour;
    let mut clear = 1.0;
    for t in 0..n {
        if t % per_day == 0 {
            clear = clearness.sample(&mut rng);
        }
        let h = hour(t);
        let v = if h > cfg.sunrise_hour && h < cfg.sunset_hour {
            let x = (std::f64::consts::PI * (h - cfg.sunrise_hour) / daylight).sin();
            let flicker = (1.0 + 0.05 * unit.sample(&mut rng)).max(0.0);
            x.powf(1.5) * clear * flicker
        } else {
            0.0
        };
        solar.push(v);
    }

    let mut wind = Vec::with_capacity(n);
    let mut w = 0.0;
    for _ in 0..n {
        w = 0.97 * w + 0.12 * unit.sample(&mut rng);
        wind.push((1.0 + w).max(0.0));
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let target = preset.renewable_ratio() * mean(&demand);
    let solar_mean = mean(&solar);
    let wind_mean = mean(&wind);
    let share = preset.solar_share();
    let (solar_scale, wind_scale) = match (solar_mean > 0.0, wind_mean > 0.0) {
        (true, true) => (share * target / solar_mean, (1.0 - share) * target / wind_mean),
        (true, false) => (target / solar_mean, 0.0),
        (false, true) => (0.0, target / wind_mean),
        (false, false) => (0.0, 0.0),
    };
    solar.iter_mut().for_each(|v| *v *= solar_scale);
    wind.iter_mut().for_each(|v| *v *= wind_scale);

    let price = (0..n).map(|t| cfg.tariff_at(hour(t))).collect();
    let peak = demand.iter().cloned().fold(0.0, f64::max);

    Ok(ExogenousSeries {
        start: cfg.start,
        timestep_hours: cfg.timestep_hours,
        demand_kw: demand,
        solar_kw: solar,
        wind_kw: wind,
        grid_price_per_kwh: price,
        storage_price_per_kwh: vec![cfg.storage_price_per_kwh],
        grid_cap_kw: vec![cfg.grid_cap_factor * peak; n],
        emission_factor_kg_per_kwh: cfg.emission_factor_kg_per_kwh,
    })
}

/// Render a series as trace records at its own resolution.
pub fn series_to_records(series: &ExogenousSeries) -> Vec<RawRecord> {
    let step_ms = (series.timestep_hours * 3_600_000.0).round() as i64;
    (0..series.len())
        .map(|t| {
            RawRecord::new(
                series.start + Duration::milliseconds(step_ms * t as i64),
                series.solar_kw[t],
                series.wind_kw[t],
                series.demand_kw[t],
                series.grid_price_per_kwh[t],
            )
        })
        .collect()
}

/// Defaults applied when turning uniform trace records into a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDefaults {
    pub storage_price_per_kwh: f64,
    pub emission_factor_kg_per_kwh: f64,
    /// Fixed cap; `None` means `grid_cap_factor` times peak demand.
    pub grid_cap_kw: Option<f64>,
    pub grid_cap_factor: f64,
}

impl Default for SeriesDefaults {
    fn default() -> Self {
        let cfg = SynthConfig::default();
        Self {
            storage_price_per_kwh: cfg.storage_price_per_kwh,
            emission_factor_kg_per_kwh: cfg.emission_factor_kg_per_kwh,
            grid_cap_kw: None,
            grid_cap_factor: cfg.grid_cap_factor,
        }
    }
}

/// Build a series from records that are already uniformly spaced and complete
/// (the output of cleaning and aggregation).
pub fn records_to_series(
    records: &[RawRecord],
    timestep_hours: f64,
    defaults: &SeriesDefaults,
) -> Result<ExogenousSeries, TraceError> {
    let first = records
        .first()
        .ok_or_else(|| TraceError::Empty("no records for series".into()))?;
    let get = |r: &RawRecord, v: Option<f64>, name: &str| {
        v.ok_or_else(|| TraceError::Empty(format!("missing {name} at {}", r.timestamp)))
    };
    let mut demand = Vec::with_capacity(records.len());
    let mut solar = Vec::with_capacity(records.len());
    let mut wind = Vec::with_capacity(records.len());
    let mut price = Vec::with_capacity(records.len());
    for r in records {
        demand.push(get(r, r.demand_kw, "demand_kw")?);
        solar.push(get(r, r.solar_kw, "solar_kw")?);
        wind.push(get(r, r.wind_kw, "wind_kw")?);
        price.push(get(r, r.grid_price_per_kwh, "grid_price_per_kwh")?);
    }
    let peak = demand.iter().cloned().fold(0.0, f64::max);
    let cap = defaults.grid_cap_kw.unwrap_or(defaults.grid_cap_factor * peak);
    Ok(ExogenousSeries {
        start: first.timestamp,
        timestep_hours,
        grid_cap_kw: vec![cap; demand.len()],
        demand_kw: demand,
        solar_kw: solar,
        wind_kw: wind,
        grid_price_per_kwh: price,
        storage_price_per_kwh: vec![defaults.storage_price_per_kwh],
        emission_factor_kg_per_kwh: defaults.emission_factor_kg_per_kwh,
    })
}
