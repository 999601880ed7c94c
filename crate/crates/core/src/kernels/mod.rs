//! Sampling kernels mapping measured distributions to density-matrix elements.

mod index;
mod kernel_set;
mod response;
mod time;

pub use index::{frequency_classes, ElementIndexMap, FrequencyClass};
pub use kernel_set::{
    anharmonic_kernels, contamination_matrix, harmonic_kernels, spacetime_kernels, ContaminationTable, KernelKind,
    KernelTableRow, SamplingKernelSet,
};
pub use response::{
    damped_responses, response_function, smeared_responses, ResponseFamily, SmearingWindows, SpatialMeasure,
    TimeFactor,
};
pub use time::{exp_integral, time_biorthonormal, TimeBiorthonormal, TimeSampling};

/// Relative degeneracy tolerance for grouping transition frequencies.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;
