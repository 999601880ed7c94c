//! On-disk formats: CSV tables with a header row, TOML metadata, every number
//! printed with 17 significant digits.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use lsqtomo_core::kernels::{SmearingWindows, TimeSampling};
use lsqtomo_core::lsq::CMatrix;
use lsqtomo_core::simulator::{DensityMatrix, MeasurementDataset, MeasurementRecord};

use crate::config::{MeasurementMode, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const METADATA_FILE: &str = "metadata.toml";
pub const EVENTS_FILE: &str = "events.csv";
pub const COUNTS_FILE: &str = "counts.csv";
pub const DENSITY_FILE: &str = "density.csv";

pub const EVENTS_HEADER: [&str; 3] = ["time_index", "time", "position"];
pub const COUNTS_HEADER: [&str; 5] = ["time_index", "position_index", "time", "position", "count"];
pub const DENSITY_HEADER: [&str; 5] = ["time_index", "position_index", "time", "position", "density"];

/// Round-trip formatting for floating-point output.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes a CSV file from a header and string rows.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a CSV file whose header must equal `header`; returns the data rows.
pub fn read_csv(path: &Path, header: &[&str]) -> CliResult<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let found = r.headers().map_err(|e| CliError::format(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::format(path, format!("expected header {}, found {}", header.join(","), found.iter().collect::<Vec<_>>().join(","))));
    }
    r.records().map(|rec| rec.map_err(|e| CliError::format(path, e))).collect()
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).ok_or_else(|| CliError::format(path, format!("missing column {i}")))?;
    raw.trim().parse().map_err(|e| CliError::format(path, format!("column {i} value {raw:?}: {e}")))
}

/// Reads a TOML file carrying a `schema_version` field, rejecting unknown versions.
pub fn read_versioned<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: toml::Table = toml::from_str(&text).map_err(|e| CliError::format(path, e))?;
    match value.get("schema_version").and_then(toml::Value::as_integer) {
        Some(v) if v == i64::from(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(CliError::format(path, format!("unsupported schema version {v} (expected {SCHEMA_VERSION})")))
        }
        None => return Err(CliError::format(path, "missing schema_version")),
    }
    toml::from_str(&text).map_err(|e| CliError::format(path, e))
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = toml::to_string(value).map_err(|e| CliError::format(path, e))?;
    write_text(path, &text)
}

/// Density matrix stored as separate real and imaginary row lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredMatrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl StoredMatrix {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self { re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    pub fn to_density(&self) -> CliResult<DensityMatrix> {
        let d = self.re.len();
        if self.im.len() != d || self.re.iter().chain(&self.im).any(|r| r.len() != d) {
            return Err(CliError::Validation("stored matrix is not square".into()));
        }
        let m = CMatrix::from_fn(d, d, |i, j| num_complex::Complex64::new(self.re[i][j], self.im[i][j]));
        Ok(DensityMatrix::new(m)?)
    }
}

/// Description of a dataset directory; everything except the data table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMetadata {
    pub schema_version: u32,
    pub mode: MeasurementMode,
    pub seed: u64,
    pub period: f64,
    pub times: Vec<f64>,
    pub time_weights: Vec<f64>,
    pub sigma_t: f64,
    pub sigma_x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_counts: Option<f64>,
    /// Ground-truth initial state of a simulated run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<StoredMatrix>,
}

impl DatasetMetadata {
    pub fn time_sampling(&self) -> CliResult<TimeSampling> {
        Ok(TimeSampling::new(self.times.clone(), self.time_weights.clone(), self.period)?)
    }

    pub fn windows(&self) -> CliResult<SmearingWindows> {
        Ok(SmearingWindows::new(self.sigma_t, self.sigma_x)?)
    }
}

/// Data read back from a dataset directory.
#[derive(Debug, Clone)]
pub enum StoredData {
    Measured(MeasurementDataset),
    /// Expected distribution, rows are times, on the listed positions.
    Exact { positions: Vec<f64>, density: DMatrix<f64> },
}

pub fn data_file(mode: MeasurementMode) -> &'static str {
    match mode {
        MeasurementMode::Events => EVENTS_FILE,
        MeasurementMode::Counts => COUNTS_FILE,
        MeasurementMode::Exact => DENSITY_FILE,
    }
}

/// Writes the data table of `dataset` into `dir`.
pub fn write_dataset(dir: &Path, dataset: &MeasurementDataset) -> CliResult<()> {
    let times = dataset.times.times();
    match &dataset.record {
        MeasurementRecord::RawEvents { events, .. } => {
            let rows = events
                .iter()
                .enumerate()
                .flat_map(|(s, ev)| ev.iter().map(move |&x| vec![s.to_string(), num(times[s]), num(x)]));
            write_csv(&dir.join(EVENTS_FILE), &EVENTS_HEADER, rows)
        }
        MeasurementRecord::GridCounts { positions, counts, .. } => {
            let rows = counts.iter().enumerate().flat_map(|(s, row)| {
                row.iter().enumerate().map(move |(l, &c)| {
                    vec![s.to_string(), l.to_string(), num(times[s]), num(positions[l]), c.to_string()]
                })
            });
            write_csv(&dir.join(COUNTS_FILE), &COUNTS_HEADER, rows)
        }
    }
}

pub fn write_density(dir: &Path, positions: &[f64], times: &[f64], density: &DMatrix<f64>) -> CliResult<()> {
    let rows = (0..times.len()).flat_map(|s| {
        (0..positions.len())
            .map(move |l| vec![s.to_string(), l.to_string(), num(times[s]), num(positions[l]), num(density[(s, l)])])
    });
    write_csv(&dir.join(DENSITY_FILE), &DENSITY_HEADER, rows)
}

fn check_time(path: &Path, meta: &DatasetMetadata, s: usize, t: f64) -> CliResult<()> {
    match meta.times.get(s) {
        Some(&expected) if expected == t => Ok(()),
        Some(&expected) => Err(CliError::format(path, format!("time index {s} has time {t}, metadata says {expected}"))),
        None => Err(CliError::format(path, format!("time index {s} out of range"))),
    }
}

/// Gridded table `(time_index, position_index, time, position, value)` into a
/// dense matrix; every cell must appear exactly once.
fn read_grid<T: std::str::FromStr + Copy + Default>(
    path: &Path,
    header: &[&str],
    meta: &DatasetMetadata,
) -> CliResult<(Vec<f64>, Vec<Vec<T>>)>
where
    T::Err: std::fmt::Display,
{
    let records = read_csv(path, header)?;
    let n_t = meta.times.len();
    if records.is_empty() || records.len() % n_t != 0 {
        return Err(CliError::format(path, format!("{} rows do not tile {n_t} times", records.len())));
    }
    let n_x = records.len() / n_t;
    let mut positions = vec![f64::NAN; n_x];
    let mut values = vec![vec![T::default(); n_x]; n_t];
    let mut seen = vec![false; n_t * n_x];
    for rec in &records {
        let s: usize = field(path, rec, 0)?;
        let l: usize = field(path, rec, 1)?;
        check_time(path, meta, s, field(path, rec, 2)?)?;
        if l >= n_x || std::mem::replace(&mut seen[s * n_x + l], true) {
            return Err(CliError::format(path, format!("cell ({s}, {l}) out of range or repeated")));
        }
        let x: f64 = field(path, rec, 3)?;
        if !positions[l].is_nan() && positions[l] != x {
            return Err(CliError::format(path, format!("position index {l} has inconsistent positions")));
        }
        positions[l] = x;
        values[s][l] = field(path, rec, 4)?;
    }
    Ok((positions, values))
}

/// Reads a dataset directory written by [`write_metadata`] and the matching data writer.
pub fn read_dataset(dir: &Path) -> CliResult<(DatasetMetadata, StoredData)> {
    let meta: DatasetMetadata = read_versioned(&dir.join(METADATA_FILE))?;
    if meta.times.len() != meta.time_weights.len() || meta.times.is_empty() {
        return Err(CliError::format(dir.join(METADATA_FILE), "times and time_weights must be nonempty and equally long"));
    }
    let path = dir.join(data_file(meta.mode));
    let times = meta.time_sampling()?;
    let windows = meta.windows()?;
    let data = match meta.mode {
        MeasurementMode::Events => {
            let bounds = meta.bounds.ok_or_else(|| CliError::format(dir.join(METADATA_FILE), "event data needs bounds"))?;
            let mut events = vec![Vec::new(); meta.times.len()];
            for rec in read_csv(&path, &EVENTS_HEADER)? {
                let s: usize = field(&path, &rec, 0)?;
                check_time(&path, &meta, s, field(&path, &rec, 1)?)?;
                events[s].push(field(&path, &rec, 2)?);
            }
            let record = MeasurementRecord::RawEvents { events, bounds: (bounds[0], bounds[1]) };
            StoredData::Measured(MeasurementDataset::new(times, record, windows, meta.seed)?)
        }
        MeasurementMode::Counts => {
            let missing = |f: &str| CliError::format(dir.join(METADATA_FILE), format!("count data needs {f}"));
            let spacing = meta.spacing.ok_or_else(|| missing("spacing"))?;
            let total = meta.total_counts.ok_or_else(|| missing("total_counts"))?;
            let (positions, counts) = read_grid::<u64>(&path, &COUNTS_HEADER, &meta)?;
            let record = MeasurementRecord::GridCounts { positions, spacing, counts, total };
            StoredData::Measured(MeasurementDataset::new(times, record, windows, meta.seed)?)
        }
        MeasurementMode::Exact => {
            let (positions, rows) = read_grid::<f64>(&path, &DENSITY_HEADER, &meta)?;
            let density = DMatrix::from_fn(rows.len(), positions.len(), |s, l| rows[s][l]);
            StoredData::Exact { positions, density }
        }
    };
    Ok((meta, data))
}

pub fn write_metadata(dir: &Path, meta: &DatasetMetadata) -> CliResult<()> {
    write_toml(&dir.join(METADATA_FILE), meta)
}
