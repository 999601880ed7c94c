//! Least-squares reconstruction of oscillator density matrices from
//! time-resolved position measurements.

// Negated float comparisons are kept so that NaN fails every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod lsq;
pub mod oscillators;
pub mod quadrature;
pub mod reconstruct;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
