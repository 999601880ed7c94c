//! Least-squares sampling kernels `K_α(x,t) = Σ_γ F_{α,γ} S_γ*(x,t)` with
//! `F = G⁻¹` and `G_{α,γ} = ∫∫ S_α* S_γ` over the measurement geometry.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::index::{ElementIndexMap, FrequencyClass};
use crate::kernels::response::{ResponseFamily, SpatialMeasure, TimeFactor};
use crate::kernels::time::TimeSampling;
use crate::lsq::{CMatrix, CVector, HermitianSolver, Regularization};
use crate::oscillators::OscillatorModel;
use crate::quadrature::{EigenTable, SpatialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Position-only kernels for one frequency class, applied to a time projection.
    SpatialPerClass,
    SpaceTime,
    SmearedSpaceTime,
}

/// Kernel set for one measurement geometry.
///
/// Kernels are stored through their coefficients `F` and the response
/// factorization; [`SamplingKernelSet::kernel_values`] tabulates them.
#[derive(Debug, Clone)]
pub struct SamplingKernelSet {
    kind: KernelKind,
    index_map: ElementIndexMap,
    family: ResponseFamily,
    measure: SpatialMeasure,
    times: TimeSampling,
    omega: f64,
    /// Row-major flat offsets of the reconstructed pairs.
    columns: Vec<usize>,
    /// `Φ_β(x_j)` on the measure positions.
    basis: DMatrix<f64>,
    factors: Vec<TimeFactor>,
    gram: CMatrix,
    coefficients: CMatrix,
    condition: f64,
    regularization: Regularization,
}

impl SamplingKernelSet {
    /// Builds kernels for `index_map` from the response family sampled on
    /// `measure × times`.
    pub fn build(
        kind: KernelKind,
        family: ResponseFamily,
        measure: SpatialMeasure,
        times: TimeSampling,
        index_map: ElementIndexMap,
        regularization: Regularization,
    ) -> Result<Self> {
        regularization.validate()?;
        if index_map.is_empty() {
            return Err(Error::InvalidParameter("no elements requested".into()));
        }
        if index_map.n_max() != family.n_max() {
            return Err(Error::DimensionMismatch { expected: family.n_max() + 1, found: index_map.n_max() + 1 });
        }
        let columns = index_map.flat_offsets();
        let basis = family.spatial_matrix(measure.positions())?;
        let factors = times.times().iter().map(|&t| family.time_factor(t)).collect::<Result<Vec<_>>>()?;
        let gram = assemble_gram(&basis, &measure.weights(), &factors, times.weights(), &columns);
        let solver = HermitianSolver::new(&gram, regularization)?;
        Ok(Self {
            kind,
            index_map,
            family,
            measure,
            times,
            omega: 0.0,
            columns,
            basis,
            factors,
            coefficients: solver.inverse(),
            condition: solver.condition(),
            regularization,
            gram,
        })
    }

    /// Same geometry and Gram matrix, different regularization.
    pub fn with_regularization(&self, regularization: Regularization) -> Result<Self> {
        regularization.validate()?;
        let solver = HermitianSolver::new(&self.gram, regularization)?;
        let mut out = self.clone();
        out.coefficients = solver.inverse();
        out.condition = solver.condition();
        out.regularization = regularization;
        Ok(out)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn index_map(&self) -> &ElementIndexMap {
        &self.index_map
    }

    pub fn family(&self) -> &ResponseFamily {
        &self.family
    }

    pub fn measure(&self) -> &SpatialMeasure {
        &self.measure
    }

    pub fn times(&self) -> &TimeSampling {
        &self.times
    }

    /// Transition frequency of the class (zero for space-time kernels).
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn coefficients(&self) -> &CMatrix {
        &self.coefficients
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn regularization(&self) -> Regularization {
        self.regularization
    }

    /// Spatial basis on the measure positions.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `Q_s` with `K_α(x, t_s) = Σ_β Q_s[α,β] Φ_β(x)`, i.e. `Q_s = F U_c(t_s)†`
    /// where `U_c` keeps the reconstructed columns of the time mixing.
    pub fn operator(&self, s: usize) -> CMatrix {
        let d2 = self.family.elements();
        let f = &self.coefficients;
        match &self.factors[s] {
            TimeFactor::Diagonal(u) => {
                let mut q = CMatrix::zeros(f.nrows(), d2);
                for (a, &c) in self.columns.iter().enumerate() {
                    let phase = u[c].conj();
                    for r in 0..f.nrows() {
                        q[(r, c)] = f[(r, a)] * phase;
                    }
                }
                q
            }
            TimeFactor::Full(u) => f * u.select_columns(&self.columns).adjoint(),
        }
    }

    /// `U_c(t_s)† m` for spatial moments `m_β = ∫ Φ_β p dμ`.
    pub fn reduce_moments(&self, s: usize, moments: &CVector) -> CVector {
        match &self.factors[s] {
            TimeFactor::Diagonal(u) => {
                CVector::from_iterator(self.columns.len(), self.columns.iter().map(|&c| u[c].conj() * moments[c]))
            }
            TimeFactor::Full(u) => u.select_columns(&self.columns).adjoint() * moments,
        }
    }

    /// Real and imaginary parts of `K_α(x_j, t_s)`, rows `α`, columns `j`.
    pub fn kernel_values(&self, s: usize, xs: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let phi = self.family.spatial_matrix(xs)?;
        Ok(self.kernel_values_with_basis(s, &phi))
    }

    pub(crate) fn kernel_values_with_basis(&self, s: usize, phi: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let q = self.operator(s);
        let re = q.map(|z| z.re);
        let im = q.map(|z| z.im);
        (&re * phi, &im * phi)
    }

    /// `K_α(x, t_s)` for every element.
    pub fn evaluate(&self, s: usize, x: f64) -> Result<CVector> {
        let (re, im) = self.kernel_values(s, &[x])?;
        Ok(CVector::from_fn(re.nrows(), |a, _| Complex64::new(re[(a, 0)], im[(a, 0)])))
    }

    /// Largest deviation from the identity of the tabulated kernel-response
    /// products `Σ_s w_s Σ_j μ_j K_α(x_j,t_s) S_γ(x_j,t_s)`.
    pub fn identity_deviation(&self) -> f64 {
        let weights = self.measure.weights();
        let n = self.columns.len();
        let mut acc_re = DMatrix::<f64>::zeros(n, n);
        let mut acc_im = DMatrix::<f64>::zeros(n, n);
        for (s, &ws) in self.times.weights().iter().enumerate() {
            let (k_re, k_im) = self.kernel_values_with_basis(s, &self.basis);
            let (s_re, s_im) = self.response_table(s, &weights);
            acc_re += (&k_re * &s_re - &k_im * &s_im) * ws;
            acc_im += (&k_re * &s_im + &k_im * &s_re) * ws;
        }
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for g in 0..n {
                let target = if a == g { 1.0 } else { 0.0 };
                worst = worst.max(Complex64::new(acc_re[(a, g)] - target, acc_im[(a, g)]).norm());
            }
        }
        worst
    }

    /// `μ_j S_γ(x_j, t_s)` split into real and imaginary parts, rows `j`.
    fn response_table(&self, s: usize, weights: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let phi_t = DMatrix::from_fn(self.basis.ncols(), self.basis.nrows(), |j, b| weights[j] * self.basis[(b, j)]);
        match &self.factors[s] {
            TimeFactor::Diagonal(u) => {
                let n = self.columns.len();
                let re = DMatrix::from_fn(phi_t.nrows(), n, |j, g| phi_t[(j, self.columns[g])] * u[self.columns[g]].re);
                let im = DMatrix::from_fn(phi_t.nrows(), n, |j, g| phi_t[(j, self.columns[g])] * u[self.columns[g]].im);
                (re, im)
            }
            TimeFactor::Full(u) => {
                let uc = u.select_columns(&self.columns);
                (&phi_t * uc.map(|z| z.re), &phi_t * uc.map(|z| z.im))
            }
        }
    }

    /// Kernel table on the measure positions for every sampled time, rows
    /// `(element, position, time, K)`.
    pub fn table(&self) -> Vec<KernelTableRow> {
        let mut rows = Vec::new();
        let xs = self.measure.positions();
        for (s, &t) in self.times.times().iter().enumerate() {
            let (re, im) = self.kernel_values_with_basis(s, &self.basis);
            for (a, &(n, m)) in self.index_map.pairs().iter().enumerate() {
                for (j, &x) in xs.iter().enumerate() {
                    rows.push(KernelTableRow { n, m, position: x, time: t, value: Complex64::new(re[(a, j)], im[(a, j)]) });
                }
            }
        }
        rows
    }
}

/// One tabulated kernel value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTableRow {
    pub n: usize,
    pub m: usize,
    pub position: f64,
    pub time: f64,
    pub value: Complex64,
}

/// `G = Σ_s w_s U_c(s)† O U_c(s)` with the spatial overlap `O = Φ diag(μ) Φᵀ`.
fn assemble_gram(
    basis: &DMatrix<f64>,
    space_weights: &[f64],
    factors: &[TimeFactor],
    time_weights: &[f64],
    columns: &[usize],
) -> CMatrix {
    let weighted = DMatrix::from_fn(basis.nrows(), basis.ncols(), |b, j| basis[(b, j)] * space_weights[j]);
    let overlap = &weighted * basis.transpose();
    let n = columns.len();
    let mut gram = CMatrix::zeros(n, n);
    let mut overlap_c: Option<CMatrix> = None;
    for (factor, &ws) in factors.iter().zip(time_weights) {
        match factor {
            TimeFactor::Diagonal(u) => {
                for a in 0..n {
                    let ua = u[columns[a]].conj() * ws;
                    for g in 0..n {
                        gram[(a, g)] += ua * u[columns[g]] * overlap[(columns[a], columns[g])];
                    }
                }
            }
            TimeFactor::Full(u) => {
                let o = overlap_c.get_or_insert_with(|| overlap.map(|v| Complex64::new(v, 0.0)));
                let uc = u.select_columns(columns);
                gram += (uc.adjoint() * (&*o * &uc)).scale(ws);
            }
        }
    }
    // Exact Hermitian symmetry for the downstream factorizations.
    (&gram + gram.adjoint()).unscale(2.0)
}

/// Spatial kernels for one frequency class, measured on `grid`.
pub fn anharmonic_kernels(
    model: &OscillatorModel,
    class: &FrequencyClass,
    n_max: usize,
    grid: &SpatialGrid,
) -> Result<SamplingKernelSet> {
    if class.members.is_empty() {
        return Err(Error::InvalidParameter("empty frequency class".into()));
    }
    let family = ResponseFamily::unitary(model, n_max)?;
    let index_map = ElementIndexMap::new(class.members.clone(), n_max)?;
    let mut set = SamplingKernelSet::build(
        KernelKind::SpatialPerClass,
        family,
        SpatialMeasure::Quadrature(grid.clone()),
        TimeSampling::single(0.0)?,
        index_map,
        Regularization::None,
    )?;
    set.omega = class.omega;
    Ok(set)
}

/// Kernels `K_n^{(k)}` reconstructing `ρ_{n+k,n}` for the harmonic oscillator.
pub fn harmonic_kernels(model: &OscillatorModel, n_max: usize, k: usize, grid: &SpatialGrid) -> Result<SamplingKernelSet> {
    if !matches!(model, OscillatorModel::Harmonic { .. }) {
        return Err(Error::InvalidParameter("harmonic kernels need the harmonic model".into()));
    }
    let class = FrequencyClass::harmonic(model, n_max, k)?;
    anharmonic_kernels(model, &class, n_max, grid)
}

/// Space-time kernels for a response family sampled on `measure × times`.
pub fn spacetime_kernels(
    family: &ResponseFamily,
    measure: &SpatialMeasure,
    times: &TimeSampling,
    index_map: &ElementIndexMap,
    regularization: Regularization,
) -> Result<SamplingKernelSet> {
    let kind = if family.windows().is_trivial() { KernelKind::SpaceTime } else { KernelKind::SmearedSpaceTime };
    SamplingKernelSet::build(kind, family.clone(), measure.clone(), times.clone(), index_map.clone(), regularization)
}

/// Overlaps of class kernels with level products above the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationTable {
    /// Pairs `(m, m')` with `max(m, m') > n_max` in the kernels' frequency class.
    pub probes: Vec<(usize, usize)>,
    /// `overlaps[(α, p)] = ∫ K_α(x) ψ_m(x)ψ_{m'}(x) dx`.
    pub overlaps: CMatrix,
}

/// Leakage of above-truncation elements into class kernels.
pub fn contamination_matrix(
    kernels: &SamplingKernelSet,
    model: &OscillatorModel,
    n_probe_max: usize,
) -> Result<ContaminationTable> {
    let n_max = kernels.family.n_max();
    if kernels.kind != KernelKind::SpatialPerClass {
        return Err(Error::InvalidParameter("contamination is defined for per-class spatial kernels".into()));
    }
    if n_probe_max <= n_max {
        return Err(Error::InvalidParameter(format!("probe level {n_probe_max} must exceed n_max = {n_max}")));
    }
    if let Some(n_m) = model.max_bound_level() {
        if n_probe_max > n_m {
            return Err(Error::InvalidParameter(format!(
                "probe level {n_probe_max} exceeds the bound spectrum (highest level {n_m})"
            )));
        }
    }
    let SpatialMeasure::Quadrature(grid) = &kernels.measure else {
        return Err(Error::InvalidParameter("contamination needs a quadrature grid".into()));
    };
    let energies = model.spectrum(n_probe_max)?;
    let tol = 1e-9 * energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mut probes = Vec::new();
    for m in 0..=n_probe_max {
        for k in 0..=n_probe_max {
            if m.max(k) > n_max && (energies[m] - energies[k] - kernels.omega).abs() <= tol {
                probes.push((m, k));
            }
        }
    }
    let table = EigenTable::new(model, n_probe_max, grid.nodes())?;
    let (k_re, k_im) = kernels.kernel_values_with_basis(0, &kernels.basis);
    let w = grid.weights();
    let probe_matrix = DMatrix::from_fn(grid.len(), probes.len(), |j, p| {
        let (m, k) = probes[p];
        w[j] * table.level(m)[j] * table.level(k)[j]
    });
    let re = &k_re * &probe_matrix;
    let im = &k_im * &probe_matrix;
    Ok(ContaminationTable {
        probes,
        overlaps: CMatrix::from_fn(re.nrows(), re.ncols(), |a, p| Complex64::new(re[(a, p)], im[(a, p)])),
    })
}

impl ContaminationTable {
    /// Predicted systematic offsets `Σ_p ρ_p · overlap_{α,p}` for a reference
    /// state given on levels `0..=n_probe_max`.
    pub fn offsets(&self, rho: &CMatrix) -> Result<CVector> {
        let mut coeffs = CVector::zeros(self.probes.len());
        for (p, &(m, k)) in self.probes.iter().enumerate() {
            if m >= rho.nrows() || k >= rho.ncols() {
                return Err(Error::LevelOutOfRange { n: m.max(k), max: rho.nrows().saturating_sub(1) });
            }
            coeffs[p] = rho[(m, k)];
        }
        Ok(&self.overlaps * coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::index::frequency_classes;
    use crate::kernels::response::{response_function, SmearingWindows};
    use crate::quadrature::build_grid;
    use crate::simulator::{build_propagator, Liouvillian};
    use std::f64::consts::PI;

    fn harmonic() -> OscillatorModel {
        OscillatorModel::harmonic(1.0).unwrap()
    }

    #[test]
    fn ground_kernel_closed_form() {
        let m = harmonic();
        let grid = build_grid(&m, 0, 1e-12).unwrap();
        let set = harmonic_kernels(&m, 0, 0, &grid).unwrap();
        assert!((set.gram()[(0, 0)].re - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-12);
        for x in [0.0, 0.5, -1.3] {
            let k = set.evaluate(0, x).unwrap()[0];
            assert!((k.re - 2f64.sqrt() * (-x * x).exp()).abs() < 1e-11);
        }
        assert!(set.identity_deviation() < 1e-12);
    }

    #[test]
    fn harmonic_biorthogonality_every_class() {
        let m = harmonic();
        let grid = build_grid(&m, 8, 1e-10).unwrap();
        for k in 0..=8 {
            let set = harmonic_kernels(&m, 8, k, &grid).unwrap();
            assert!(set.identity_deviation() < 1e-6, "k = {k}");
        }
        assert!(harmonic_kernels(&m, 3, 4, &grid).is_err());
    }

    #[test]
    fn singleton_kernel_is_normalized_product() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let grid = build_grid(&m, 4, 1e-10).unwrap();
        let class = FrequencyClass { omega: m.transition_frequency(3, 1).unwrap(), members: vec![(3, 1)] };
        let set = anharmonic_kernels(&m, &class, 4, &grid).unwrap();
        let norm2 = grid.integrate_fn(|x| (m.eigenfunction(3, x).unwrap() * m.eigenfunction(1, x).unwrap()).powi(2));
        let x = 0.6;
        let b = m.eigenfunction(3, x).unwrap() * m.eigenfunction(1, x).unwrap();
        assert!((set.evaluate(0, x).unwrap()[0].re - b / norm2).abs() < 1e-10);
    }

    #[test]
    fn morse_diagonal_gram_is_positive_definite() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let grid = build_grid(&m, 12, 1e-10).unwrap();
        let classes = frequency_classes(&m, 12, 1e-9).unwrap();
        let diag = classes.iter().find(|c| c.omega == 0.0).unwrap();
        let set = anharmonic_kernels(&m, diag, 12, &grid).unwrap();
        assert!(crate::lsq::min_eigenvalue(set.gram()) > 0.0);
        assert!(set.identity_deviation() < 1e-6);
    }

    #[test]
    fn tikhonov_kernels_satisfy_shifted_identity() {
        let m = harmonic();
        let grid = build_grid(&m, 4, 1e-10).unwrap();
        let set = harmonic_kernels(&m, 4, 0, &grid).unwrap();
        let lambda = 0.05;
        let reg = set.with_regularization(Regularization::Tikhonov { lambda }).unwrap();
        let n = set.gram().nrows();
        let shifted = set.gram() + CMatrix::identity(n, n).scale(lambda * lambda);
        let resid = &shifted * reg.coefficients() - CMatrix::identity(n, n);
        assert!(resid.norm() < 1e-10);
    }

    #[test]
    fn one_period_spacetime_matches_factorable() {
        let m = harmonic();
        let n_max = 3;
        let grid = build_grid(&m, n_max, 1e-10).unwrap();
        let period = 2.0 * PI;
        let times = TimeSampling::equidistant(period, 16).unwrap();
        let family = ResponseFamily::unitary(&m, n_max).unwrap();
        let map = ElementIndexMap::full(n_max);
        let st = spacetime_kernels(&family, &SpatialMeasure::Quadrature(grid.clone()), &times, &map, Regularization::None)
            .unwrap();
        assert!(st.identity_deviation() < 1e-8);
        // K_st(x, t) = e^{iω_k t} K^{(k)}(x) / T for the class of each element.
        for k in 0..=n_max {
            let fac = harmonic_kernels(&m, n_max, k, &grid).unwrap();
            for (a, &(n, l)) in fac.index_map().pairs().iter().enumerate() {
                let alpha = map.position(n, l).unwrap();
                for (s, &t) in times.times().iter().enumerate().step_by(5) {
                    for x in [-1.0, 0.2, 2.1] {
                        let expect = fac.evaluate(0, x).unwrap()[a] * Complex64::from_polar(1.0 / period, k as f64 * t);
                        let got = st.evaluate(s, x).unwrap()[alpha];
                        assert!((got - expect).norm() < 1e-6, "({n},{l}) t={t} x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn hermitian_pairing_of_spacetime_kernels() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let n_max = 3;
        let grid = build_grid(&m, n_max, 1e-10).unwrap();
        let times = TimeSampling::equidistant(12.0, 24).unwrap();
        let family = ResponseFamily::unitary(&m, n_max).unwrap();
        let map = ElementIndexMap::full(n_max);
        let st = spacetime_kernels(&family, &SpatialMeasure::Quadrature(grid), &times, &map, Regularization::None)
            .unwrap();
        let k = st.evaluate(7, 0.9).unwrap();
        for (a, &(n, l)) in map.pairs().iter().enumerate() {
            let b = map.position(l, n).unwrap();
            assert!((k[a] - k[b].conj()).norm() < 1e-9 * (1.0 + k[a].norm()));
        }
    }

    #[test]
    fn smeared_points_kernels_are_biorthogonal() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let n_max = 3;
        let grid = build_grid(&m, n_max, 1e-10).unwrap();
        let w01 = m.transition_frequency(1, 0).unwrap();
        let windows = SmearingWindows::new(0.2 * PI / w01, 0.3).unwrap();
        let family = ResponseFamily::smeared(&m, n_max, windows, &grid).unwrap();
        let measure = SpatialMeasure::equidistant(-2.0, 10.0, 15).unwrap();
        let times = TimeSampling::equidistant(6.0 * PI / w01, 30).unwrap();
        let map = ElementIndexMap::full(n_max);
        let st = spacetime_kernels(&family, &measure, &times, &map, Regularization::None).unwrap();
        assert_eq!(st.kind(), KernelKind::SmearedSpaceTime);
        assert!(st.identity_deviation() < 1e-6);
    }

    #[test]
    fn damped_kernels_reduce_to_unitary_at_zero_rate() {
        let m = harmonic();
        let n_max = 2;
        let grid = build_grid(&m, n_max, 1e-10).unwrap();
        let times = TimeSampling::equidistant(2.0 * PI, 12).unwrap();
        let p = build_propagator(&m, n_max, Liouvillian::AmplitudeDamping { gamma: 0.0 }, times.times()).unwrap();
        let damped = ResponseFamily::damped(&m, &p).unwrap();
        let unitary = ResponseFamily::unitary(&m, n_max).unwrap();
        let measure = SpatialMeasure::Quadrature(grid);
        let map = ElementIndexMap::full(n_max);
        let a = spacetime_kernels(&damped, &measure, &times, &map, Regularization::None).unwrap();
        let b = spacetime_kernels(&unitary, &measure, &times, &map, Regularization::None).unwrap();
        assert!((a.gram() - b.gram()).norm() < 1e-10);
        let damped_g =
            build_propagator(&m, n_max, Liouvillian::AmplitudeDamping { gamma: 0.2 }, times.times()).unwrap();
        let c = spacetime_kernels(&ResponseFamily::damped(&m, &damped_g).unwrap(), &measure, &times, &map, Regularization::None)
            .unwrap();
        assert!(c.identity_deviation() < 1e-8);
    }

    #[test]
    fn contamination_vanishes_inside_truncation_and_is_resolution_stable() {
        let m = harmonic();
        let n_max = 5;
        let grid = build_grid(&m, 12, 1e-12).unwrap();
        let set = harmonic_kernels(&m, n_max, 1, &grid).unwrap();
        let table = contamination_matrix(&set, &m, 12).unwrap();
        assert!(table.probes.iter().all(|&(a, b)| a == b + 1 && a > n_max));
        assert_eq!(table.probes.first(), Some(&(6, 5)));
        let fine = harmonic_kernels(&m, n_max, 1, &grid.refined()).unwrap();
        let table_fine = contamination_matrix(&fine, &m, 12).unwrap();
        assert!((&table.overlaps - &table_fine.overlaps).norm() < 1e-8);
        assert!(table.overlaps.norm() > 1e-3);
        // Inside the truncation the same quadrature gives Kronecker deltas.
        let (k_re, _) = set.kernel_values_with_basis(0, set.basis());
        for (a, _) in set.index_map().pairs().iter().enumerate() {
            for (b, &(p, q)) in set.index_map().pairs().iter().enumerate() {
                let s: f64 = (0..grid.len())
                    .map(|j| {
                        let x = grid.nodes()[j];
                        grid.weights()[j] * k_re[(a, j)] * response_function(&m, p, q, x, 0.0).unwrap().re
                    })
                    .sum();
                assert!((s - if a == b { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
        let support_limited = crate::simulator::prepare_state(Complex64::new(0.7, 0.0), 5);
        let mut padded = CMatrix::zeros(13, 13);
        padded.view_mut((0, 0), (6, 6)).copy_from(support_limited.matrix());
        assert!(table.offsets(&padded).unwrap().norm() == 0.0);
    }

    #[test]
    fn morse_probes_beyond_bound_spectrum_fail() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let grid = build_grid(&m, 4, 1e-10).unwrap();
        let class = FrequencyClass { omega: 0.0, members: (0..=4).map(|n| (n, n)).collect() };
        let set = anharmonic_kernels(&m, &class, 4, &grid).unwrap();
        assert!(contamination_matrix(&set, &m, 13).is_err());
        assert_eq!(contamination_matrix(&set, &m, 6).unwrap().probes, vec![(5, 5), (6, 6)]);
    }
}
