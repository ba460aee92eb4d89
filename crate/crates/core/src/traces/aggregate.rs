use chrono::Duration;

use super::record::{QualityFlags, RawRecord, NUMERIC_FIELDS};
use super::TraceError;

/// Resample sorted records onto a uniform grid of width `interval` starting
/// at the first timestamp.
///
/// Each output interval holds the mean of every numeric field over the
/// samples that fall in it; intervals without samples repeat the previous
/// interval's values. The covered span runs from the first sample to the
/// last sample plus the smallest sampling gap, and the output has
/// `ceil(span / interval)` entries.
pub fn aggregate(records: &[RawRecord], interval: Duration) -> Result<Vec<RawRecord>, TraceError> {
    if records.is_empty() {
        return Err(TraceError::Empty("nothing to aggregate".into()));
    }
    let width = interval.num_milliseconds();
    if width <= 0 {
        return Err(TraceError::InvalidInterval(interval.to_string()));
    }
    if records.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(TraceError::Unsorted);
    }

    let first = records[0].timestamp;
    let last = records[records.len() - 1].timestamp;
    let gap = records
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp).num_milliseconds())
        .filter(|&g| g > 0)
        .min()
        .unwrap_or(width);
    let span = (last - first).num_milliseconds() + gap;
    let bins = ((span + width - 1) / width) as usize;

    let mut sums = vec![[0.0f64; NUMERIC_FIELDS]; bins];
    let mut counts = vec![[0usize; NUMERIC_FIELDS]; bins];
    let mut soc = vec![(0.0f64, 0usize); bins];
    let mut winsorized = vec![false; bins];
    for r in records {
        let b = ((r.timestamp - first).num_milliseconds() / width) as usize;
        winsorized[b] |= r.quality.winsorized;
        for f in 0..NUMERIC_FIELDS {
            if let Some(v) = r.field(f) {
                sums[b][f] += v;
                counts[b][f] += 1;
            }
        }
        if let Some(s) = r.soc_kwh {
            soc[b].0 += s;
            soc[b].1 += 1;
        }
    }

    let mut out: Vec<RawRecord> = Vec::with_capacity(bins);
    for b in 0..bins {
        let timestamp = first + Duration::milliseconds(width * b as i64);
        let prev = out.last();
        let mut rec = RawRecord {
            timestamp,
            solar_kw: None,
            wind_kw: None,
            demand_kw: None,
            grid_price_per_kwh: None,
            soc_kwh: None,
            quality: QualityFlags::default(),
        };
        let mut filled = false;
        for f in 0..NUMERIC_FIELDS {
            *rec.field_mut(f) = if counts[b][f] > 0 {
                Some(sums[b][f] / counts[b][f] as f64)
            } else {
                filled = true;
                prev.and_then(|p| p.field(f))
            };
        }
        rec.soc_kwh = if soc[b].1 > 0 {
            Some(soc[b].0 / soc[b].1 as f64)
        } else {
            prev.and_then(|p| p.soc_kwh)
        };
        rec.quality.forward_filled = filled;
        rec.quality.winsorized = winsorized[b];
        out.push(rec);
    }
    Ok(out)
}
