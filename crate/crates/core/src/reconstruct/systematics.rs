//! Systematic error estimates: truncation leakage, regularization bias and
//! grid discretization.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{spacetime_kernels, ContaminationTable, ElementIndexMap, SamplingKernelSet, SpatialMeasure, TimeSampling};
use crate::lsq::{bias_estimate, CMatrix, CVector, Regularization};
use crate::reconstruct::spacetime::{reconstruct_spacetime_exact, spacetime_estimate};
use crate::simulator::{expected_distribution, grid_counts, DensityMatrix, MeasurementDataset, MeasurementRecord};

/// Predicted systematic offsets of the class elements caused by populations
/// and coherences above the truncation, for a reference state on levels
/// `0..=n_probe_max`.
pub fn truncation_error(reference: &DensityMatrix, table: &ContaminationTable) -> Result<CVector> {
    table.offsets(reference.matrix())
}

/// Monte Carlo bias of a gridded space-time reconstruction: the estimate is
/// pushed through the forward model (expected counts, fresh Poisson draws)
/// and reconstructed again `replicates` times. Returned in the index-map order
/// of `kernels`, as the mean of re-estimate minus estimate.
pub fn regularization_bias(
    kernels: &SamplingKernelSet,
    template: &MeasurementDataset,
    estimate: &DensityMatrix,
    replicates: usize,
    seed: u64,
) -> Result<CVector> {
    let MeasurementRecord::GridCounts { total, .. } = &template.record else {
        return Err(Error::InvalidParameter("bias estimation needs a gridded measurement".into()));
    };
    let measure = template
        .measure()
        .ok_or_else(|| Error::InvalidParameter("gridded template without positions".into()))?;
    let family = kernels.family();
    let pairs = kernels.index_map().pairs();
    let f0 = CVector::from_iterator(pairs.len(), pairs.iter().map(|&(n, m)| estimate.get(n, m)));
    let total = *total;
    let forward = |f: &CVector, rng: &mut rand_chacha::ChaCha8Rng| -> Result<MeasurementDataset> {
        let rho = matrix_from_elements(kernels.index_map(), f)?;
        let mean = expected_distribution(family, &rho, measure.positions(), &template.times)?;
        grid_counts(&mean, &measure, &template.times, total, template.windows, rng.random())
    };
    let solve = |d: &MeasurementDataset| spacetime_estimate(d, kernels);
    bias_estimate(solve, forward, &f0, replicates, seed)
}

/// Full matrix from elements listed on an index map; missing entries are
/// completed by conjugation.
pub fn matrix_from_elements(map: &ElementIndexMap, values: &CVector) -> Result<DensityMatrix> {
    if values.len() != map.len() {
        return Err(Error::DimensionMismatch { expected: map.len(), found: values.len() });
    }
    let d = map.n_max() + 1;
    let mut m = CMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    let mut set = vec![false; d * d];
    for (&(n, k), &v) in map.pairs().iter().zip(values.iter()) {
        m[(n, k)] = v;
        set[n * d + k] = true;
    }
    for n in 0..d {
        for k in 0..d {
            if !set[n * d + k] && set[k * d + n] {
                m[(n, k)] = m[(k, n)].conj();
            }
        }
    }
    DensityMatrix::new(m)
}

/// Grid-induced systematic error: reconstructs the exact expected data of
/// `state` on the given point grid and time sampling, and on versions with
/// doubled resolution, and returns the largest element difference.
pub fn discretization_error(
    kernels: &SamplingKernelSet,
    state: &DensityMatrix,
) -> Result<f64> {
    let family = kernels.family();
    let times = kernels.times();
    let coarse_measure = kernels.measure();
    let fine_measure = match coarse_measure {
        SpatialMeasure::Points { positions, .. } => {
            let (lo, hi) = (positions[0], positions[positions.len() - 1]);
            SpatialMeasure::equidistant(lo, hi, 2 * positions.len() - 1)?
        }
        SpatialMeasure::Quadrature(grid) => SpatialMeasure::Quadrature(grid.refined()),
    };
    let fine_times = TimeSampling::equidistant(times.period(), 2 * times.len())?;
    let fine = spacetime_kernels(family, &fine_measure, &fine_times, kernels.index_map(), kernels.regularization())?;
    let reconstruct = |k: &SamplingKernelSet, measure: &SpatialMeasure, ts: &TimeSampling| -> Result<DensityMatrix> {
        let p = expected_distribution(family, state, measure.positions(), ts)?;
        Ok(reconstruct_spacetime_exact(&p, k)?.estimate)
    };
    let a = reconstruct(kernels, coarse_measure, times)?;
    let b = reconstruct(&fine, &fine_measure, &fine_times)?;
    a.max_abs_diff(&b)
}

/// Regularization used when none is requested explicitly.
pub fn default_regularization() -> Regularization {
    Regularization::None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ResponseFamily, SmearingWindows};
    use crate::oscillators::OscillatorModel;
    use crate::quadrature::build_grid;
    use crate::simulator::prepare_state;
    use std::f64::consts::PI;

    fn setup(reg: Regularization) -> (SamplingKernelSet, MeasurementDataset, DensityMatrix) {
        let m = OscillatorModel::morse(0.279).unwrap();
        let n_max = 3;
        let grid = build_grid(&m, n_max, 1e-10).unwrap();
        let w01 = m.transition_frequency(1, 0).unwrap();
        let windows = SmearingWindows::new(0.2 * PI / w01, 0.3).unwrap();
        let family = ResponseFamily::smeared(&m, n_max, windows, &grid).unwrap();
        let measure = SpatialMeasure::equidistant(-2.0, 10.0, 15).unwrap();
        let times = TimeSampling::equidistant(6.0 * PI / w01, 30).unwrap();
        let k = spacetime_kernels(&family, &measure, &times, &ElementIndexMap::full(n_max), reg).unwrap();
        let rho = prepare_state(Complex64::new(-1.0, 0.0), n_max);
        let p = expected_distribution(&family, &rho, measure.positions(), &times).unwrap();
        let ds = grid_counts(&p, &measure, &times, 1e5, windows, 17).unwrap();
        (k, ds, rho)
    }

    #[test]
    fn unregularized_bias_is_statistical_noise() {
        let (k, ds, rho) = setup(Regularization::None);
        let b = regularization_bias(&k, &ds, &rho, 20, 3).unwrap();
        let (std_re, _) = crate::reconstruct::statistical_errors(&k, &ds).unwrap();
        for (a, s) in b.iter().zip(&std_re) {
            // Mean of 20 replicates: standard error s/√20.
            assert!(a.re.abs() < 5.0 * s / 20f64.sqrt() + 1e-12);
        }
        let again = regularization_bias(&k, &ds, &rho, 20, 3).unwrap();
        assert_eq!(b, again);
    }

    #[test]
    fn strong_regularization_biases_towards_zero() {
        let (k, ds, rho) = setup(Regularization::Tikhonov { lambda: 0.5 });
        let b = regularization_bias(&k, &ds, &rho, 4, 1).unwrap();
        let idx = k.index_map().position(0, 0).unwrap();
        assert!(b[idx].re < 0.0);
    }

    #[test]
    fn exact_model_has_no_discretization_error() {
        let (k, _, rho) = setup(Regularization::None);
        assert!(discretization_error(&k, &rho).unwrap() < 1e-8);
    }

    #[test]
    fn element_matrix_completion() {
        let map = ElementIndexMap::hermitian(1);
        let v = CVector::from_vec(vec![Complex64::new(0.7, 0.0), Complex64::new(0.1, 0.2), Complex64::new(0.3, 0.0)]);
        let rho = matrix_from_elements(&map, &v).unwrap();
        assert_eq!(rho.get(1, 0), Complex64::new(0.1, -0.2));
    }
}
