//! Ground-truth states, time evolution, position distributions and
//! simulated measurement records.

mod dataset;
mod distribution;
mod propagation;
mod sampling;
mod smearing;
mod state;

pub use dataset::{MeasurementDataset, MeasurementRecord};
pub use distribution::{
    evolve, expected_distribution, position_distribution, time_averaged_state, DistributionEvaluator, Evolution,
    NEGATIVE_FLOOR,
};
pub use propagation::{build_propagator, expm, liouvillian_matrix, Liouvillian, Propagator};
pub use sampling::{grid_counts, sample_events, InverseCdfSampler, MASS_TOLERANCE};
pub use smearing::{smear_distribution, SpaceTimeTable, SMEARING_MARGIN};
pub use state::{prepare_state, DensityMatrix};
