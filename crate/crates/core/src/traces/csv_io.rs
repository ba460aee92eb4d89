use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::record::{format_timestamp, parse_timestamp, QualityFlags, RawRecord};
use super::TraceError;

/// Exact header of a trace CSV.
pub const TRACE_HEADER: [&str; 5] = [
    "timestamp",
    "solar_kw",
    "wind_kw",
    "demand_kw",
    "grid_price_per_kwh",
];

pub fn load_csv(path: &Path) -> Result<Vec<RawRecord>, TraceError> {
    read_csv(File::open(path)?)
}

pub fn save_csv(records: &[RawRecord], path: &Path) -> Result<(), TraceError> {
    write_csv(records, File::create(path)?)
}

/// Parse a trace CSV. Columns may appear in any order but the set must match
/// [`TRACE_HEADER`] exactly. Empty numeric cells are read as missing values.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<RawRecord>, TraceError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers().map_err(|e| csv_error(e, 1))?.clone();

    for h in headers.iter() {
        if !TRACE_HEADER.contains(&h) {
            return Err(TraceError::UnknownColumn(h.to_string()));
        }
    }
    let mut columns = [0usize; 5];
    for (slot, name) in columns.iter_mut().zip(TRACE_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TraceError::MissingColumn(name.to_string()))?;
    }

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            csv_error(e, line)
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let ts_text = &row[columns[0]];
        let timestamp = parse_timestamp(ts_text).map_err(|_| TraceError::BadValue {
            line,
            column: TRACE_HEADER[0].to_string(),
            value: ts_text.to_string(),
        })?;
        let mut values = [None; 4];
        for (k, value) in values.iter_mut().enumerate() {
            let text = row[columns[k + 1]].trim();
            if text.is_empty() {
                continue;
            }
            *value = Some(text.parse::<f64>().map_err(|_| TraceError::BadValue {
                line,
                column: TRACE_HEADER[k + 1].to_string(),
                value: text.to_string(),
            })?);
        }
        out.push(RawRecord {
            timestamp,
            solar_kw: values[0],
            wind_kw: values[1],
            demand_kw: values[2],
            grid_price_per_kwh: values[3],
            soc_kwh: None,
            quality: QualityFlags::default(),
        });
    }
    Ok(out)
}

pub fn write_csv<W: Write>(records: &[RawRecord], output: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(TRACE_HEADER).map_err(|e| csv_error(e, 0))?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            format_timestamp(&r.timestamp),
            cell(r.solar_kw),
            cell(r.wind_kw),
            cell(r.demand_kw),
            cell(r.grid_price_per_kwh),
        ])
        .map_err(|e| csv_error(e, 0))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error, line: usize) -> TraceError {
    TraceError::Csv {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn missing_column_is_named() {
        let text = "timestamp,solar_kw,wind_kw,demand_kw\n2024-01-01T00:00:00Z,1,2,3\n";
        match read_csv(text.as_bytes()) {
            Err(TraceError::MissingColumn(c)) => assert_eq!(c, "grid_price_per_kwh"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_column_is_named() {
        let text = "timestamp,solar_kw,wind_kw,demand_kw,grid_price_per_kwh,humidity\n";
        match read_csv(text.as_bytes()) {
            Err(TraceError::UnknownColumn(c)) => assert_eq!(c, "humidity"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn text_in_numeric_column_reports_line() {
        let text = "timestamp,solar_kw,wind_kw,demand_kw,grid_price_per_kwh\n\
                    2024-01-01T00:00:00Z,1,2,3,0.1\n\
                    2024-01-01T00:01:00Z,1,windy,3,0.1\n";
        match read_csv(text.as_bytes()) {
            Err(TraceError::BadValue { line, column, value }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "wind_kw");
                assert_eq!(value, "windy");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_cells_are_missing() {
        let text = "timestamp,solar_kw,wind_kw,demand_kw,grid_price_per_kwh\n\
                    2024-01-01T00:00:00Z,,2,3,0.1\n";
        let recs = read_csv(text.as_bytes()).unwrap();
        assert_eq!(recs[0].solar_kw, None);
        assert_eq!(recs[0].wind_kw, Some(2.0));
    }

    fn arb_value() -> impl Strategy<Value = Option<f64>> {
        prop_oneof![
            1 => Just(None),
            8 => (0.0f64..1e6).prop_map(Some),
            1 => any::<f64>().prop_filter("finite", |x| x.is_finite()).prop_map(Some),
        ]
    }

    proptest! {
        #[test]
        fn save_then_load_is_lossless(
            rows in prop::collection::vec((0i64..10_000_000, arb_value(), arb_value(), arb_value(), arb_value()), 0..40)
        ) {
            let base = chrono::NaiveDate::from_ymd_opt(2023, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
            let records: Vec<RawRecord> = rows
                .into_iter()
                .map(|(secs, a, b, c, d)| RawRecord {
                    timestamp: base + chrono::Duration::seconds(secs),
                    solar_kw: a,
                    wind_kw: b,
                    demand_kw: c,
                    grid_price_per_kwh: d,
                    soc_kwh: None,
                    quality: QualityFlags::default(),
                })
                .collect();
            let mut buf = Vec::new();
            write_csv(&records, &mut buf).unwrap();
            let back = read_csv(&buf[..]).unwrap();
            prop_assert_eq!(back, records);
        }
    }
}
