use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::TraceError;

/// Data-quality annotations attached during cleaning and aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QualityFlags {
    /// At least one field was clamped to the outlier bound.
    pub winsorized: bool,
    /// The record was carried forward into an interval with no samples.
    pub forward_filled: bool,
}

/// One raw trace sample. Missing values are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub timestamp: NaiveDateTime,
    pub solar_kw: Option<f64>,
    pub wind_kw: Option<f64>,
    pub demand_kw: Option<f64>,
    pub grid_price_per_kwh: Option<f64>,
    pub soc_kwh: Option<f64>,
    pub quality: QualityFlags,
}

impl RawRecord {
    pub fn new(timestamp: NaiveDateTime, solar: f64, wind: f64, demand: f64, price: f64) -> Self {
        Self {
            timestamp,
            solar_kw: Some(solar),
            wind_kw: Some(wind),
            demand_kw: Some(demand),
            grid_price_per_kwh: Some(price),
            soc_kwh: None,
            quality: QualityFlags::default(),
        }
    }

    pub fn renewable_kw(&self) -> Option<f64> {
        Some(self.solar_kw? + self.wind_kw?)
    }
}

/// The numeric columns cleaning and aggregation operate on, in schema order.
pub(crate) const NUMERIC_FIELDS: usize = 4;

impl RawRecord {
    pub(crate) fn field(&self, i: usize) -> Option<f64> {
        match i {
            0 => self.solar_kw,
            1 => self.wind_kw,
            2 => self.demand_kw,
            3 => self.grid_price_per_kwh,
            _ => unreachable!("field index {i}"),
        }
    }

    pub(crate) fn field_mut(&mut self, i: usize) -> &mut Option<f64> {
        match i {
            0 => &mut self.solar_kw,
            1 => &mut self.wind_kw,
            2 => &mut self.demand_kw,
            3 => &mut self.grid_price_per_kwh,
            _ => unreachable!("field index {i}"),
        }
    }
}

const TIMESTAMP_WRITE: &str = "%Y-%m-%dT%H:%M:%S%.fZ";
const TIMESTAMP_FORMATS: [&str; 2] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"];

/// ISO-8601 in UTC; the trailing `Z` is optional on input.
pub fn parse_timestamp(text: &str) -> Result<NaiveDateTime, TraceError> {
    let trimmed = text.trim();
    let body = trimmed.strip_suffix('Z').unwrap_or(trimmed);
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(body, f).ok())
        .ok_or_else(|| TraceError::BadTimestamp(text.to_string()))
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_WRITE).to_string()
}

/// Hour-of-day on the unit circle: `(sin, cos)` of `2*pi*hour/24`.
pub fn encode_time(ts: &NaiveDateTime) -> (f64, f64) {
    let secs = ts.time().num_seconds_from_midnight() as f64 + ts.time().nanosecond() as f64 * 1e-9;
    encode_hour(secs / 3600.0)
}

pub fn encode_hour(hour: f64) -> (f64, f64) {
    let angle = std::f64::consts::TAU * hour / 24.0;
    angle.sin_cos()
}
