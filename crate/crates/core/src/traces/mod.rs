//! Trace ingestion and preprocessing: CSV I/O, cleaning, min-max scaling,
//! time encoding, interval aggregation, stream integration, and a synthetic
//! trace generator.

mod aggregate;
mod clean;
mod csv_io;
mod integrate;
mod normalize;
mod record;
mod synth;

pub use aggregate::aggregate;
pub use clean::{clean, mean_std, winsorize_once, OUTLIER_SIGMAS};
pub use csv_io::{load_csv, read_csv, save_csv, write_csv, TRACE_HEADER};
pub use integrate::{
    integrate, preprocess, step_index, streams_from_records, FeatureStream, IntegratedDataset,
    UnifiedRecord,
};
pub use normalize::{denormalize, minmax_normalize, FeatureRange, NormalizationStats};
pub use record::{encode_hour, encode_time, format_timestamp, parse_timestamp, QualityFlags, RawRecord};
pub use synth::{
    preset_battery, records_to_series, series_to_records, synthesize, synthesize_with, Preset,
    SeriesDefaults, SynthConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("line {line}: column `{column}` has invalid value `{value}`")]
    BadValue {
        line: usize,
        column: String,
        value: String,
    },
    #[error("invalid timestamp `{0}`")]
    BadTimestamp(String),
    #[error("records are not sorted by timestamp")]
    Unsorted,
    #[error("invalid aggregation interval {0}")]
    InvalidInterval(String),
    #[error("unknown preset `{0}` (expected high, low or mixed)")]
    UnknownPreset(String),
    #[error("{0}")]
    Empty(String),
}
