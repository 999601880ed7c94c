//! Density-matrix estimation from measured or simulated position data.

pub mod factorable;
pub mod result;
pub mod spacetime;
pub mod systematics;

pub use factorable::{
    fourier_project, fourier_project_table, project_state, reconstruct_factorable, ProjectedData, Projection,
    ProjectionScheme,
};
pub use result::{Diagnostics, ElementEstimate, ReconstructionResult};
pub use spacetime::{
    normal_equations, plugin_variance, reconstruct_spacetime, reconstruct_spacetime_exact, spacetime_estimate,
    statistical_errors,
};
pub use systematics::{
    default_regularization, discretization_error, matrix_from_elements, regularization_bias, truncation_error,
};
