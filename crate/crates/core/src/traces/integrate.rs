use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::aggregate::aggregate;
use super::clean::clean;
use super::normalize::{FeatureRange, NormalizationStats};
use super::record::{encode_time, format_timestamp, RawRecord};
use super::TraceError;

/// One named signal keyed by absolute step index (`floor(t / interval)`
/// since the Unix epoch).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStream {
    pub name: String,
    pub points: BTreeMap<i64, f64>,
}

impl FeatureStream {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            points: BTreeMap::new(),
        }
    }
}

/// A merged, normalized row ready for model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnifiedRecord {
    pub step: i64,
    pub timestamp: NaiveDateTime,
    /// Min-max scaled features, same order as [`IntegratedDataset::feature_names`].
    pub features: Vec<f64>,
    pub raw: Vec<f64>,
    pub time_sin: f64,
    pub time_cos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratedDataset {
    pub interval_ms: i64,
    pub feature_names: Vec<String>,
    pub stats: NormalizationStats,
    pub records: Vec<UnifiedRecord>,
}

pub fn step_index(ts: &NaiveDateTime, interval: Duration) -> i64 {
    ts.and_utc().timestamp_millis().div_euclid(interval.num_milliseconds())
}

fn step_time(step: i64, interval: Duration) -> NaiveDateTime {
    chrono::DateTime::from_timestamp_millis(step * interval.num_milliseconds())
        .expect("step within chrono range")
        .naive_utc()
}

/// Split aggregated records into renewable, demand, price and (when every
/// record has it) SOC streams.
pub fn streams_from_records(records: &[RawRecord], interval: Duration) -> Vec<FeatureStream> {
    let mut renew = FeatureStream::new("renewable_kw");
    let mut demand = FeatureStream::new("demand_kw");
    let mut price = FeatureStream::new("grid_price_per_kwh");
    let mut soc = FeatureStream::new("soc_kwh");
    for r in records {
        let k = step_index(&r.timestamp, interval);
        if let Some(v) = r.renewable_kw() {
            renew.points.insert(k, v);
        }
        if let Some(v) = r.demand_kw {
            demand.points.insert(k, v);
        }
        if let Some(v) = r.grid_price_per_kwh {
            price.points.insert(k, v);
        }
        if let Some(v) = r.soc_kwh {
            soc.points.insert(k, v);
        }
    }
    let mut out = vec![renew, demand, price];
    if !records.is_empty() && soc.points.len() == records.len() {
        out.push(soc);
    }
    out
}

/// Inner-join streams on step index and min-max scale every feature with
/// statistics taken from the joined rows.
pub fn integrate(streams: &[FeatureStream], interval: Duration) -> Result<IntegratedDataset, TraceError> {
    if streams.is_empty() {
        return Err(TraceError::Empty("no streams to integrate".into()));
    }
    let steps: Vec<i64> = streams[0]
        .points
        .keys()
        .copied()
        .filter(|k| streams[1..].iter().all(|s| s.points.contains_key(k)))
        .collect();
    if steps.is_empty() {
        return Err(TraceError::Empty("streams share no common step".into()));
    }

    let raw_columns: Vec<Vec<f64>> = streams
        .iter()
        .map(|s| steps.iter().map(|k| s.points[k]).collect())
        .collect();
    let stats = NormalizationStats {
        features: streams
            .iter()
            .zip(&raw_columns)
            .map(|(s, col)| FeatureRange::of(s.name.clone(), col))
            .collect(),
    };

    let records = steps
        .iter()
        .enumerate()
        .map(|(row, &step)| {
            let timestamp = step_time(step, interval);
            let raw: Vec<f64> = raw_columns.iter().map(|c| c[row]).collect();
            let features = raw
                .iter()
                .zip(&stats.features)
                .map(|(&x, range)| range.normalize(x))
                .collect();
            let (time_sin, time_cos) = encode_time(&timestamp);
            UnifiedRecord {
                step,
                timestamp,
                features,
                raw,
                time_sin,
                time_cos,
            }
        })
        .collect();

    Ok(IntegratedDataset {
        interval_ms: interval.num_milliseconds(),
        feature_names: streams.iter().map(|s| s.name.clone()).collect(),
        stats,
        records,
    })
}

/// Full preprocessing: clean, aggregate, split into streams, integrate.
pub fn preprocess(raw: &[RawRecord], interval: Duration) -> Result<IntegratedDataset, TraceError> {
    let cleaned = clean(raw)?;
    let aggregated = aggregate(&cleaned, interval)?;
    integrate(&streams_from_records(&aggregated, interval), interval)
}

impl IntegratedDataset {
    /// CSV with step, timestamp, time encodings, normalized then raw columns.
    pub fn write_csv<W: Write>(&self, output: W) -> Result<(), TraceError> {
        let mut w = csv::Writer::from_writer(output);
        let mut header = vec![
            "step".to_string(),
            "timestamp".to_string(),
            "time_sin".to_string(),
            "time_cos".to_string(),
        ];
        header.extend(self.feature_names.iter().map(|n| format!("{n}_norm")));
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![
                r.step.to_string(),
                format_timestamp(&r.timestamp),
                r.time_sin.to_string(),
                r.time_cos.to_string(),
            ];
            row.extend(r.features.iter().map(|v| v.to_string()));
            row.extend(r.raw.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> TraceError {
    TraceError::Csv {
        line: 0,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};

    fn stream(name: &str, range: std::ops::Range<i64>, f: impl Fn(i64) -> f64) -> FeatureStream {
        FeatureStream {
            name: name.into(),
            points: range.map(|k| (k, f(k))).collect(),
        }
    }

    #[test]
    fn identical_ranges_join_fully() {
        let a = stream("a", 0..10, |k| k as f64);
        let b = stream("b", 0..10, |k| 2.0 * k as f64);
        let ds = integrate(&[a, b], Duration::minutes(15)).unwrap();
        assert_eq!(ds.records.len(), 10);
        assert_eq!(ds.records[9].features, vec![1.0, 1.0]);
    }

    #[test]
    fn missing_last_step_shortens_by_one() {
        let a = stream("a", 0..10, |k| k as f64);
        let b = stream("b", 0..9, |k| k as f64);
        assert_eq!(integrate(&[a, b], Duration::minutes(15)).unwrap().records.len(), 9);
    }

    #[test]
    fn disjoint_streams_fail() {
        let a = stream("a", 0..5, |k| k as f64);
        let b = stream("b", 5..9, |k| k as f64);
        assert!(integrate(&[a, b], Duration::minutes(15)).is_err());
    }

    #[test]
    fn randomized_join_is_in_unit_interval() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let streams: Vec<FeatureStream> = (0..4)
                .map(|i| {
                    let mut s = FeatureStream::new(format!("f{i}"));
                    for k in 0..200 {
                        if rng.gen_bool(0.9) {
                            s.points.insert(k, rng.gen_range(-50.0..500.0));
                        }
                    }
                    s
                })
                .collect();
            let ds = integrate(&streams, Duration::minutes(15)).unwrap();
            for r in &ds.records {
                assert!(r.features.iter().all(|v| (0.0..=1.0).contains(v)));
                for ((n, raw), range) in r.features.iter().zip(&r.raw).zip(&ds.stats.features) {
                    assert!((range.denormalize(*n) - raw).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn preprocess_runs_end_to_end() {
        let t0 = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let raw: Vec<RawRecord> = (0..180)
            .map(|m| RawRecord::new(t0 + Duration::minutes(m), m as f64, 1.0, 50.0 + (m % 5) as f64, 0.1))
            .collect();
        let ds = preprocess(&raw, Duration::minutes(15)).unwrap();
        assert_eq!(ds.records.len(), 12);
        assert_eq!(ds.feature_names, vec!["renewable_kw", "demand_kw", "grid_price_per_kwh"]);
        assert_eq!(ds.records[0].timestamp, t0);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 13);
    }
}
