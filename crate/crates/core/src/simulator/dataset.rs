//! Measurement records in the two supported acquisition modes.

use crate::error::{Error, Result};
use crate::kernels::{SmearingWindows, SpatialMeasure, TimeSampling};

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementRecord {
    /// Sampled positions per observation time.
    RawEvents { events: Vec<Vec<f64>>, bounds: (f64, f64) },
    /// Counts `n[s][l]` at positions `x_l` and observation times `t_s`.
    GridCounts { positions: Vec<f64>, spacing: f64, counts: Vec<Vec<u64>>, total: f64 },
}

/// One simulated or recorded experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDataset {
    pub times: TimeSampling,
    pub record: MeasurementRecord,
    pub windows: SmearingWindows,
    pub seed: u64,
}

impl MeasurementDataset {
    pub fn new(times: TimeSampling, record: MeasurementRecord, windows: SmearingWindows, seed: u64) -> Result<Self> {
        windows.validate()?;
        match &record {
            MeasurementRecord::RawEvents { events, bounds } => {
                if events.len() != times.len() {
                    return Err(Error::DimensionMismatch { expected: times.len(), found: events.len() });
                }
                if let Some(x) = events.iter().flatten().find(|&&x| !(x >= bounds.0 && x <= bounds.1)) {
                    return Err(Error::InvalidParameter(format!(
                        "event at {x} outside [{}, {}]",
                        bounds.0, bounds.1
                    )));
                }
            }
            MeasurementRecord::GridCounts { positions, spacing, counts, total } => {
                if counts.len() != times.len() {
                    return Err(Error::DimensionMismatch { expected: times.len(), found: counts.len() });
                }
                if let Some(row) = counts.iter().find(|r| r.len() != positions.len()) {
                    return Err(Error::DimensionMismatch { expected: positions.len(), found: row.len() });
                }
                if !(*spacing > 0.0) || !(*total > 0.0) {
                    return Err(Error::InvalidParameter("grid spacing and total must be positive".into()));
                }
                if !(times.period() > 0.0) {
                    return Err(Error::InvalidParameter("grid counts need a positive observation period".into()));
                }
            }
        }
        Ok(Self { times, record, windows, seed })
    }

    /// Recorded events per observation time.
    pub fn totals(&self) -> Vec<u64> {
        match &self.record {
            MeasurementRecord::RawEvents { events, .. } => events.iter().map(|e| e.len() as u64).collect(),
            MeasurementRecord::GridCounts { counts, .. } => counts.iter().map(|r| r.iter().sum()).collect(),
        }
    }

    /// For grid counts, the factor mapping the smeared density to a mean count:
    /// `N_tot Δx w_s / (T ∫W ∫V)`. Zero for raw events.
    pub fn cell_scale(&self, s: usize) -> f64 {
        match &self.record {
            MeasurementRecord::RawEvents { .. } => 0.0,
            MeasurementRecord::GridCounts { spacing, total, .. } => {
                total * spacing * self.times.weights()[s]
                    / (self.times.period() * self.windows.space_mass() * self.windows.time_mass())
            }
        }
    }

    /// Point measure of a grid-count record.
    pub fn measure(&self) -> Option<SpatialMeasure> {
        match &self.record {
            MeasurementRecord::RawEvents { .. } => None,
            MeasurementRecord::GridCounts { positions, spacing, .. } => {
                Some(SpatialMeasure::Points { positions: positions.clone(), spacing: *spacing })
            }
        }
    }

    pub fn is_raw(&self) -> bool {
        matches!(self.record, MeasurementRecord::RawEvents { .. })
    }
}
