use super::record::{RawRecord, NUMERIC_FIELDS};
use super::TraceError;

/// Outlier bound in standard deviations from the mean.
pub const OUTLIER_SIGMAS: f64 = 5.0;

const MAX_WINSOR_PASSES: usize = 10_000;

/// Remove unusable samples and tame outliers.
///
/// Drops records with a missing, non-finite or negative power or price
/// field, sorts chronologically, keeps the first record of each timestamp,
/// then winsorizes every numeric column at mean ± 5σ. Winsorizing is
/// repeated until no value lies outside the bound of the data it produced,
/// so `clean(clean(x)) == clean(x)`.
pub fn clean(raw: &[RawRecord]) -> Result<Vec<RawRecord>, TraceError> {
    let mut kept: Vec<RawRecord> = raw
        .iter()
        .filter(|r| (0..NUMERIC_FIELDS).all(|i| matches!(r.field(i), Some(v) if v.is_finite() && v >= 0.0)))
        .cloned()
        .collect();
    kept.sort_by_key(|r| r.timestamp);
    kept.dedup_by(|later, earlier| later.timestamp == earlier.timestamp);
    if kept.is_empty() {
        return Err(TraceError::Empty("no usable records after cleaning".into()));
    }
    for field in 0..NUMERIC_FIELDS {
        winsorize_field(&mut kept, field);
    }
    Ok(kept)
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One clamp pass at mean ± `sigmas`·σ of `values`. Returns how many changed.
pub fn winsorize_once(values: &mut [f64], sigmas: f64, tolerance: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let (mean, std) = mean_std(values);
    let (lo, hi) = (mean - sigmas * std, mean + sigmas * std);
    let mut changed = 0;
    for v in values.iter_mut() {
        if *v > hi + tolerance {
            *v = hi;
            changed += 1;
        } else if *v < lo - tolerance {
            *v = lo;
            changed += 1;
        }
    }
    changed
}

fn winsorize_field(records: &mut [RawRecord], field: usize) {
    let mut values: Vec<f64> = records.iter().map(|r| r.field(field).unwrap_or(0.0)).collect();
    let original = values.clone();
    let (mean, std) = mean_std(&values);
    let tolerance = 1e-9 * (std + mean.abs()) + f64::MIN_POSITIVE;
    for _ in 0..MAX_WINSOR_PASSES {
        if winsorize_once(&mut values, OUTLIER_SIGMAS, tolerance) == 0 {
            break;
        }
    }
    for ((rec, new), old) in records.iter_mut().zip(&values).zip(&original) {
        if new != old {
            *rec.field_mut(field) = Some(*new);
            rec.quality.winsorized = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate, NaiveDateTime};

    fn t0() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2024, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    fn rec(min: i64, demand: f64) -> RawRecord {
        RawRecord::new(t0() + Duration::minutes(min), 1.0, 2.0, demand, 0.1)
    }

    #[test]
    fn negative_demand_is_dropped() {
        let out = clean(&[rec(0, 10.0), rec(1, -5.0), rec(2, 11.0)]).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|r| r.demand_kw.unwrap() >= 0.0));
    }

    #[test]
    fn missing_and_nan_are_dropped() {
        let mut a = rec(0, 10.0);
        a.solar_kw = None;
        let mut b = rec(1, 10.0);
        b.grid_price_per_kwh = Some(f64::NAN);
        let out = clean(&[a, b, rec(2, 3.0)]).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn clean_input_is_unchanged() {
        let input: Vec<RawRecord> = (0..50).map(|m| rec(m, 100.0 + (m % 7) as f64)).collect();
        assert_eq!(clean(&input).unwrap(), input);
    }

    #[test]
    fn sorts_and_keeps_first_duplicate() {
        let out = clean(&[rec(5, 1.0), rec(0, 2.0), rec(5, 3.0)]).unwrap();
        let demand: Vec<f64> = out.iter().map(|r| r.demand_kw.unwrap()).collect();
        assert_eq!(demand, vec![2.0, 1.0]);
    }

    #[test]
    fn all_invalid_is_an_error() {
        assert!(matches!(clean(&[rec(0, -1.0)]), Err(TraceError::Empty(_))));
    }

    /// 199 alternating values plus one sample 10σ above the brute-force mean.
    fn outlier_vector() -> Vec<f64> {
        let mut v: Vec<f64> = (0..199).map(|i| if i % 2 == 0 { 9.0 } else { 11.0 }).collect();
        // Solve x - mean(v ∪ {x}) = 10·std(v ∪ {x}) by bisection on the brute-force stats.
        let (mut lo, mut hi) = (11.0, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let mut w = v.clone();
            w.push(mid);
            let (m, s) = brute_mean_std(&w);
            if mid - m > 10.0 * s { hi = mid } else { lo = mid }
        }
        v.push(0.5 * (lo + hi));
        v
    }

    fn brute_mean_std(v: &[f64]) -> (f64, f64) {
        let mut sum = 0.0;
        for x in v {
            sum += x;
        }
        let m = sum / v.len() as f64;
        let mut ss = 0.0;
        for x in v {
            ss += (x - m) * (x - m);
        }
        (m, (ss / v.len() as f64).sqrt())
    }

    #[test]
    fn first_pass_clamps_ten_sigma_to_five_sigma() {
        let mut v = outlier_vector();
        let (m, s) = brute_mean_std(&v);
        assert!(((v[199] - m) / s - 10.0).abs() < 1e-6);
        assert_eq!(winsorize_once(&mut v, 5.0, 0.0), 1);
        assert!((v[199] - (m + 5.0 * s)).abs() < 1e-9);
    }

    #[test]
    fn clean_reaches_a_five_sigma_fixed_point() {
        let values = outlier_vector();
        let input: Vec<RawRecord> = values.iter().enumerate().map(|(i, &d)| rec(i as i64, d)).collect();
        let out = clean(&input).unwrap();
        let demand: Vec<f64> = out.iter().map(|r| r.demand_kw.unwrap()).collect();
        let (m, s) = brute_mean_std(&demand);
        assert!(out[199].quality.winsorized);
        assert!((demand[199] - (m + 5.0 * s)).abs() < 1e-6 * s);
        assert!(demand[..199].iter().zip(&values).all(|(a, b)| a == b));
        assert_eq!(clean(&out).unwrap(), out);
    }
}
