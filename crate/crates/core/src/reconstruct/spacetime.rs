//! Nonfactorable route: one least-squares inversion over positions and times.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, SamplingKernelSet, SpatialMeasure};
use crate::lsq::{CVector, NormalEquations};
use crate::reconstruct::factorable::BLOCK;
use crate::reconstruct::result::{ElementEstimate, ReconstructionResult};
use crate::simulator::{MeasurementDataset, MeasurementRecord};

/// Plug-in Poisson variance `Σ_i c_i² n_i` of a linear statistic `Σ_i c_i n_i`.
pub fn plugin_variance(coefficients: &[f64], counts: &[f64]) -> f64 {
    coefficients.iter().zip(counts).map(|(c, n)| c * c * n).sum()
}

/// Raw estimates in index-map order with optional standard deviations.
struct Linear {
    values: CVector,
    var_re: Vec<f64>,
    var_im: Vec<f64>,
}

fn check_geometry(dataset: &MeasurementDataset, kernels: &SamplingKernelSet) -> Result<()> {
    if kernels.kind() == KernelKind::SpatialPerClass {
        return Err(Error::InvalidParameter("space-time reconstruction needs space-time kernels".into()));
    }
    if !dataset.times.matches(kernels.times()) {
        return Err(Error::GeometryMismatch("dataset times differ from kernel times".into()));
    }
    let kw = kernels.family().windows();
    if (dataset.windows.sigma_t - kw.sigma_t).abs() > 1e-12 || (dataset.windows.sigma_x - kw.sigma_x).abs() > 1e-12 {
        return Err(Error::GeometryMismatch(format!(
            "dataset smearing (σ_t = {}, σ_x = {}) differs from kernel smearing (σ_t = {}, σ_x = {})",
            dataset.windows.sigma_t, dataset.windows.sigma_x, kw.sigma_t, kw.sigma_x
        )));
    }
    match (&dataset.record, kernels.measure()) {
        (MeasurementRecord::RawEvents { .. }, SpatialMeasure::Quadrature(_)) => Ok(()),
        (MeasurementRecord::GridCounts { .. }, m @ SpatialMeasure::Points { .. }) => {
            if dataset.measure().is_some_and(|d| d.matches(m)) {
                Ok(())
            } else {
                Err(Error::GeometryMismatch("dataset positions differ from kernel positions".into()))
            }
        }
        (MeasurementRecord::RawEvents { .. }, _) => {
            Err(Error::GeometryMismatch("raw events need kernels on a quadrature grid".into()))
        }
        (MeasurementRecord::GridCounts { .. }, _) => {
            Err(Error::GeometryMismatch("grid counts need kernels on the measurement points".into()))
        }
    }
}

/// Right-hand side `b = Σ_s w_s U_c(s)† m_s` of the normal equations.
fn moments_rhs(kernels: &SamplingKernelSet, moments: &[DVector<f64>]) -> CVector {
    let mut b = CVector::zeros(kernels.index_map().len());
    for (s, (m, &w)) in moments.iter().zip(kernels.times().weights()).enumerate() {
        let mc = m.map(|v| Complex64::new(v, 0.0));
        b += kernels.reduce_moments(s, &mc).scale(w);
    }
    b
}

/// Measured values `y_{s,l}` for grid counts: counts over the cell scale.
fn scaled_counts(dataset: &MeasurementDataset) -> Option<Vec<Vec<f64>>> {
    let MeasurementRecord::GridCounts { counts, .. } = &dataset.record else { return None };
    Some(
        counts
            .iter()
            .enumerate()
            .map(|(s, row)| {
                let scale = dataset.cell_scale(s);
                row.iter().map(|&n| n as f64 / scale).collect()
            })
            .collect(),
    )
}

fn linear_estimate(dataset: &MeasurementDataset, kernels: &SamplingKernelSet, with_errors: bool) -> Result<Linear> {
    check_geometry(dataset, kernels)?;
    let n_el = kernels.index_map().len();
    let mut var_re = vec![0.0; n_el];
    let mut var_im = vec![0.0; n_el];
    let mut moments = Vec::with_capacity(kernels.times().len());
    let mut accumulate = |k_re: &DMatrix<f64>, k_im: &DMatrix<f64>, coeff: &dyn Fn(usize) -> (f64, f64)| {
        for j in 0..k_re.ncols() {
            let (c, n) = coeff(j);
            let c2n = c * c * n;
            for a in 0..n_el {
                var_re[a] += c2n * k_re[(a, j)] * k_re[(a, j)];
                var_im[a] += c2n * k_im[(a, j)] * k_im[(a, j)];
            }
        }
    };
    match &dataset.record {
        MeasurementRecord::RawEvents { events, .. } => {
            for (s, ev) in events.iter().enumerate() {
                if ev.is_empty() {
                    return Err(Error::ZeroTotal(s));
                }
                let c = kernels.times().weights()[s] / ev.len() as f64;
                let mut m = DVector::zeros(kernels.family().elements());
                for block in ev.chunks(BLOCK) {
                    let phi = kernels.family().spatial_matrix(block)?;
                    m += phi.column_sum();
                    if with_errors {
                        let (k_re, k_im) = kernels_values(kernels, s, &phi);
                        accumulate(&k_re, &k_im, &|_| (c, 1.0));
                    }
                }
                moments.push(m / ev.len() as f64);
            }
        }
        MeasurementRecord::GridCounts { counts, spacing, .. } => {
            let y = scaled_counts(dataset).expect("grid counts");
            let basis = kernels.basis();
            for (s, row) in counts.iter().enumerate() {
                let ys = DVector::from_iterator(row.len(), y[s].iter().map(|v| v * spacing));
                moments.push(basis * ys);
                if with_errors {
                    let c = kernels.times().weights()[s] * spacing / dataset.cell_scale(s);
                    let (k_re, k_im) = kernels_values(kernels, s, basis);
                    accumulate(&k_re, &k_im, &|l| (c, row[l] as f64));
                }
            }
        }
    }
    let values = kernels.coefficients() * moments_rhs(kernels, &moments);
    Ok(Linear { values, var_re, var_im })
}

fn kernels_values(kernels: &SamplingKernelSet, s: usize, phi: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let q = kernels.operator(s);
    (q.map(|z| z.re) * phi, q.map(|z| z.im) * phi)
}

fn into_result(kernels: &SamplingKernelSet, lin: Linear) -> Result<ReconstructionResult> {
    let elements: Vec<ElementEstimate> = kernels
        .index_map()
        .pairs()
        .iter()
        .enumerate()
        .map(|(a, &(n, m))| ElementEstimate {
            n,
            m,
            value: lin.values[a],
            std_real: lin.var_re[a].sqrt(),
            std_imag: lin.var_im[a].sqrt(),
        })
        .collect();
    ReconstructionResult::assemble(
        kernels.family().n_max(),
        &elements,
        kernels.condition_estimate(),
        kernels.regularization(),
    )
}

/// Space-time reconstruction of a dataset with plug-in Poisson error bars.
pub fn reconstruct_spacetime(dataset: &MeasurementDataset, kernels: &SamplingKernelSet) -> Result<ReconstructionResult> {
    into_result(kernels, linear_estimate(dataset, kernels, true)?)
}

/// Raw estimates in index-map order, without error propagation.
pub fn spacetime_estimate(dataset: &MeasurementDataset, kernels: &SamplingKernelSet) -> Result<CVector> {
    Ok(linear_estimate(dataset, kernels, false)?.values)
}

/// Reconstruction from a noiseless density tabulated on the kernel geometry
/// (rows are times, columns are the measure positions).
pub fn reconstruct_spacetime_exact(density: &DMatrix<f64>, kernels: &SamplingKernelSet) -> Result<ReconstructionResult> {
    let n_el = kernels.index_map().len();
    let values = kernels.coefficients() * exact_rhs(density, kernels)?;
    into_result(kernels, Linear { values, var_re: vec![0.0; n_el], var_im: vec![0.0; n_el] })
}

fn exact_rhs(density: &DMatrix<f64>, kernels: &SamplingKernelSet) -> Result<CVector> {
    let measure = kernels.measure();
    if density.nrows() != kernels.times().len() || density.ncols() != measure.len() {
        return Err(Error::GeometryMismatch(format!(
            "density table is {}×{}, kernels expect {}×{}",
            density.nrows(),
            density.ncols(),
            kernels.times().len(),
            measure.len()
        )));
    }
    let mu = measure.weights();
    let moments: Vec<DVector<f64>> = (0..density.nrows())
        .map(|s| kernels.basis() * DVector::from_iterator(mu.len(), (0..mu.len()).map(|j| mu[j] * density[(s, j)])))
        .collect();
    Ok(moments_rhs(kernels, &moments))
}

/// Plug-in standard deviations `(std_re, std_im)` in index-map order.
pub fn statistical_errors(kernels: &SamplingKernelSet, dataset: &MeasurementDataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let lin = linear_estimate(dataset, kernels, true)?;
    Ok((lin.var_re.iter().map(|v| v.sqrt()).collect(), lin.var_im.iter().map(|v| v.sqrt()).collect()))
}

/// Normal equations of the gridded problem, weighted by `w_s Δx`, for
/// residual and L-curve analysis.
pub fn normal_equations(kernels: &SamplingKernelSet, dataset: &MeasurementDataset) -> Result<NormalEquations> {
    check_geometry(dataset, kernels)?;
    let Some(y) = scaled_counts(dataset) else {
        return Err(Error::InvalidParameter("residual norms need gridded counts".into()));
    };
    let MeasurementRecord::GridCounts { spacing, .. } = &dataset.record else { unreachable!() };
    let basis = kernels.basis();
    let mut data_norm_sq = 0.0;
    let mut moments = Vec::with_capacity(y.len());
    for (s, ys) in y.iter().enumerate() {
        data_norm_sq += kernels.times().weights()[s] * spacing * ys.iter().map(|v| v * v).sum::<f64>();
        moments.push(basis * DVector::from_iterator(ys.len(), ys.iter().map(|v| v * spacing)));
    }
    Ok(NormalEquations { gram: kernels.gram().clone(), rhs: moments_rhs(kernels, &moments), data_norm_sq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{spacetime_kernels, ElementIndexMap, ResponseFamily, SmearingWindows, TimeSampling};
    use crate::lsq::{l_curve, solve_normal, Regularization};
    use crate::oscillators::OscillatorModel;
    use crate::quadrature::build_grid;
    use crate::simulator::{expected_distribution, grid_counts, prepare_state};
    use std::f64::consts::PI;

    #[test]
    fn scalar_plugin_variance() {
        // K = 1, p̃ = 1, N = 100: coefficient K/N on n = 100 counts.
        let v = plugin_variance(&[0.01], &[100.0]);
        assert!((v.sqrt() - 0.1).abs() < 1e-15);
        assert_eq!(plugin_variance(&[0.0, 0.0], &[5.0, 7.0]), 0.0);
    }

    fn morse_setup(n_max: usize) -> (OscillatorModel, ResponseFamily, SpatialMeasure, TimeSampling) {
        let m = OscillatorModel::morse(0.279).unwrap();
        let grid = build_grid(&m, n_max, 1e-10).unwrap();
        let w01 = m.transition_frequency(1, 0).unwrap();
        let windows = SmearingWindows::new(0.2 * PI / w01, 0.3).unwrap();
        let family = ResponseFamily::smeared(&m, n_max, windows, &grid).unwrap();
        let measure = SpatialMeasure::equidistant(-2.0, 10.0, 15).unwrap();
        let times = TimeSampling::equidistant(6.0 * PI / w01, 30).unwrap();
        (m, family, measure, times)
    }

    #[test]
    fn exact_gridded_roundtrip() {
        let (_, family, measure, times) = morse_setup(4);
        let rho = prepare_state(Complex64::new(-1.5, 0.0), 4);
        let map = ElementIndexMap::full(4);
        let k = spacetime_kernels(&family, &measure, &times, &map, Regularization::None).unwrap();
        let p = expected_distribution(&family, &rho, measure.positions(), &times).unwrap();
        let r = reconstruct_spacetime_exact(&p, &k).unwrap();
        assert!(r.estimate.max_abs_diff(&rho).unwrap() < 1e-8);
        assert!(r.diagnostics.asymmetry < 1e-10);
    }

    #[test]
    fn linear_in_counts_and_geometry_checked() {
        let (_, family, measure, times) = morse_setup(3);
        let rho = prepare_state(Complex64::new(-1.0, 0.0), 3);
        let map = ElementIndexMap::full(3);
        let k = spacetime_kernels(&family, &measure, &times, &map, Regularization::None).unwrap();
        let p = expected_distribution(&family, &rho, measure.positions(), &times).unwrap();
        let a = grid_counts(&p, &measure, &times, 1e4, family.windows(), 1).unwrap();
        let b = grid_counts(&p, &measure, &times, 1e4, family.windows(), 2).unwrap();
        let mut sum = a.clone();
        let (MeasurementRecord::GridCounts { counts: ca, .. }, MeasurementRecord::GridCounts { counts: cb, .. }) =
            (&a.record, &b.record)
        else {
            panic!()
        };
        if let MeasurementRecord::GridCounts { counts, .. } = &mut sum.record {
            for (s, row) in counts.iter_mut().enumerate() {
                for (l, c) in row.iter_mut().enumerate() {
                    *c = ca[s][l] + cb[s][l];
                }
            }
        }
        let fa = spacetime_estimate(&a, &k).unwrap();
        let fb = spacetime_estimate(&b, &k).unwrap();
        let fs = spacetime_estimate(&sum, &k).unwrap();
        assert!((fs - fa - fb).norm() < 1e-10);
        let other_times = TimeSampling::equidistant(times.period(), 29).unwrap();
        let k2 = spacetime_kernels(&family, &measure, &other_times, &map, Regularization::None).unwrap();
        assert!(matches!(reconstruct_spacetime(&a, &k2), Err(Error::GeometryMismatch(_))));
    }

    #[test]
    fn normal_equations_reproduce_estimate_and_l_curve_runs() {
        let (_, family, measure, times) = morse_setup(3);
        let rho = prepare_state(Complex64::new(-1.5, 0.0), 3);
        let map = ElementIndexMap::full(3);
        let k = spacetime_kernels(&family, &measure, &times, &map, Regularization::None).unwrap();
        let p = expected_distribution(&family, &rho, measure.positions(), &times).unwrap();
        let ds = grid_counts(&p, &measure, &times, 1e5, family.windows(), 4).unwrap();
        let ne = normal_equations(&k, &ds).unwrap();
        let direct = spacetime_estimate(&ds, &k).unwrap();
        let via_normal = solve_normal(&ne, Regularization::None).unwrap();
        assert!((direct - via_normal).norm() < 1e-8);
        let curve = l_curve(&ne, &[1e-4, 1e-3, 1e-2, 1e-1]).unwrap();
        assert!(curve.points.windows(2).all(|w| w[1].residual_norm >= w[0].residual_norm));
    }
}
