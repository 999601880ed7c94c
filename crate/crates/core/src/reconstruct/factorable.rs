//! Factorable route: project the time signal onto one transition frequency,
//! then apply the spatial kernels of that frequency class.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{exp_integral, KernelKind, SamplingKernelSet, SpatialMeasure, TimeBiorthonormal, TimeSampling};
use crate::oscillators::OscillatorModel;
use crate::quadrature::EigenTable;
use crate::reconstruct::result::{ElementEstimate, ReconstructionResult};
use crate::simulator::{DensityMatrix, MeasurementDataset, MeasurementRecord};

/// Events are processed in blocks of this many positions.
pub(crate) const BLOCK: usize = 4096;

/// Time weights used to isolate one frequency component `p^{(k)}(x)`.
#[derive(Debug, Clone)]
pub enum ProjectionScheme {
    /// `(1/T) ∫₀ᵀ e^{iω_k t} p(x,t) dt` over one full period.
    FullPeriod { period: f64 },
    /// `∫₀ᵀ f_k(t) p(x,t) dt` with biorthonormal weights; `index` selects `f_k`.
    Biorthonormal { functions: TimeBiorthonormal, index: usize },
    /// Infinite-time average of `e^{iω_k t} p(x,t)`; only the exact frequency survives.
    TimeAveraged,
}

impl ProjectionScheme {
    /// Weight of a component oscillating as `e^{-iΔt}` in the projection on `omega`.
    pub fn analytic_weight(&self, omega: f64, delta: f64) -> Complex64 {
        match self {
            Self::FullPeriod { period } => exp_integral(omega - delta, *period) / *period,
            Self::Biorthonormal { functions, index } => functions.overlap(*index, delta),
            Self::TimeAveraged => {
                let same = (omega - delta).abs() <= 1e-12 * (1.0 + omega.abs());
                Complex64::new(if same { 1.0 } else { 0.0 }, 0.0)
            }
        }
    }

    fn check(&self, omega: f64) -> Result<()> {
        match self {
            Self::FullPeriod { period } if !(*period > 0.0) => {
                Err(Error::InvalidParameter(format!("projection period must be positive, got {period}")))
            }
            Self::Biorthonormal { functions, index } => {
                let w = functions.frequencies().get(*index).ok_or_else(|| {
                    Error::InvalidParameter(format!("no biorthonormal function with index {index}"))
                })?;
                if (w - omega).abs() > 1e-9 * (1.0 + omega.abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "biorthonormal function {index} belongs to frequency {w}, not {omega}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Discrete weights `c_s` with `p^{(k)} ≈ Σ_s c_s p(·, t_s)`.
    fn sampled_weights(&self, omega: f64, times: &TimeSampling) -> Result<Vec<Complex64>> {
        self.check(omega)?;
        let cover = |period: f64| {
            if times.period() + 1e-9 * period < period {
                Err(Error::InvalidParameter(format!(
                    "observation interval {} is shorter than the projection interval {period}",
                    times.period()
                )))
            } else {
                Ok(())
            }
        };
        let ts = times.times().iter().zip(times.weights());
        Ok(match self {
            Self::FullPeriod { period } => {
                cover(*period)?;
                ts.map(|(&t, &w)| Complex64::from_polar(w / period, omega * t)).collect()
            }
            Self::Biorthonormal { functions, index } => {
                cover(functions.period())?;
                ts.map(|(&t, &w)| functions.value(*index, t) * w).collect()
            }
            Self::TimeAveraged => {
                let total: f64 = times.weights().iter().sum();
                ts.map(|(&t, &w)| Complex64::from_polar(w / total, omega * t)).collect()
            }
        })
    }
}

/// One frequency component of the measured distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub omega: f64,
    pub data: ProjectedData,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectedData {
    /// `p^{(k)} ≈ Σ_e c_e δ(x - x_e)`; each event is one Poisson count.
    Events { positions: Vec<f64>, weights: Vec<Complex64> },
    /// `p^{(k)}(x_j)` on quadrature positions.
    Tabulated { positions: Vec<f64>, values: Vec<Complex64> },
}

/// Projects a raw-event dataset onto `omega`.
pub fn fourier_project(dataset: &MeasurementDataset, omega: f64, scheme: &ProjectionScheme) -> Result<Projection> {
    let MeasurementRecord::RawEvents { events, .. } = &dataset.record else {
        return Err(Error::InvalidParameter("frequency projection of grid counts is not supported".into()));
    };
    let c = scheme.sampled_weights(omega, &dataset.times)?;
    let mut positions = Vec::new();
    let mut weights = Vec::new();
    for (s, ev) in events.iter().enumerate() {
        if ev.is_empty() {
            return Err(Error::ZeroTotal(s));
        }
        let per_event = c[s] / ev.len() as f64;
        positions.extend_from_slice(ev);
        weights.extend(std::iter::repeat_n(per_event, ev.len()));
    }
    Ok(Projection { omega, data: ProjectedData::Events { positions, weights } })
}

/// Projects tabulated `p(x_j, t_s)` (rows are times) onto `omega`.
pub fn fourier_project_table(
    values: &DMatrix<f64>,
    positions: &[f64],
    times: &TimeSampling,
    omega: f64,
    scheme: &ProjectionScheme,
) -> Result<Projection> {
    if values.nrows() != times.len() || values.ncols() != positions.len() {
        return Err(Error::DimensionMismatch { expected: times.len() * positions.len(), found: values.len() });
    }
    let c = scheme.sampled_weights(omega, times)?;
    let projected = (0..positions.len()).map(|j| (0..times.len()).map(|s| c[s] * values[(s, j)]).sum()).collect();
    Ok(Projection { omega, data: ProjectedData::Tabulated { positions: positions.to_vec(), values: projected } })
}

/// Exact projection of a unitarily evolving state, with the time integral in
/// closed form: `p^{(k)}(x) = Σ ρ_{n,m} ψ_nψ_m · weight(ω_n - ω_m)`.
pub fn project_state(
    state: &DensityMatrix,
    model: &OscillatorModel,
    positions: &[f64],
    omega: f64,
    scheme: &ProjectionScheme,
) -> Result<Projection> {
    scheme.check(omega)?;
    let e = model.spectrum(state.n_max())?;
    let table = EigenTable::new(model, state.n_max(), positions)?;
    let d = state.dim();
    let mut values = vec![Complex64::new(0.0, 0.0); positions.len()];
    for n in 0..d {
        for m in 0..d {
            let c = state.get(n, m) * scheme.analytic_weight(omega, e[n] - e[m]);
            if c.norm() == 0.0 {
                continue;
            }
            for (v, (a, b)) in values.iter_mut().zip(table.level(n).iter().zip(table.level(m))) {
                *v += c * (a * b);
            }
        }
    }
    Ok(Projection { omega, data: ProjectedData::Tabulated { positions: positions.to_vec(), values } })
}

/// Applies the class kernels to their projections and completes the matrix.
pub fn reconstruct_factorable(projections: &[Projection], kernels: &[SamplingKernelSet]) -> Result<ReconstructionResult> {
    let first = kernels.first().ok_or_else(|| Error::InvalidParameter("no kernel sets given".into()))?;
    let n_max = first.family().n_max();
    let scale = first.family().spectrum().iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mut elements = Vec::new();
    let mut condition: f64 = 0.0;
    for set in kernels {
        if set.kind() != KernelKind::SpatialPerClass {
            return Err(Error::InvalidParameter("factorable reconstruction needs per-class kernels".into()));
        }
        if set.family().n_max() != n_max {
            return Err(Error::DimensionMismatch { expected: n_max + 1, found: set.family().n_max() + 1 });
        }
        let proj = projections
            .iter()
            .find(|p| (p.omega - set.omega()).abs() <= 1e-9 * scale.max(1.0))
            .ok_or_else(|| Error::MissingClass(format!("no projection for frequency {}", set.omega())))?;
        condition = condition.max(set.condition_estimate());
        elements.extend(apply_class_kernels(set, proj)?);
    }
    let reg = first.regularization();
    ReconstructionResult::assemble(n_max, &elements, condition, reg)
}

fn apply_class_kernels(set: &SamplingKernelSet, proj: &Projection) -> Result<Vec<ElementEstimate>> {
    let n = set.index_map().len();
    let mut value = vec![Complex64::new(0.0, 0.0); n];
    let mut var_re = vec![0.0; n];
    let mut var_im = vec![0.0; n];
    match &proj.data {
        ProjectedData::Events { positions, weights } => {
            for (xs, cs) in positions.chunks(BLOCK).zip(weights.chunks(BLOCK)) {
                let (k_re, k_im) = set.kernel_values(0, xs)?;
                for a in 0..n {
                    for (e, c) in cs.iter().enumerate() {
                        let term = Complex64::new(k_re[(a, e)], k_im[(a, e)]) * c;
                        value[a] += term;
                        var_re[a] += term.re * term.re;
                        var_im[a] += term.im * term.im;
                    }
                }
            }
        }
        ProjectedData::Tabulated { positions, values } => {
            let SpatialMeasure::Quadrature(grid) = set.measure() else {
                return Err(Error::GeometryMismatch("tabulated projections need quadrature kernels".into()));
            };
            if positions.as_slice() != grid.nodes() {
                return Err(Error::GeometryMismatch("projection is not tabulated on the kernel grid".into()));
            }
            let (k_re, k_im) = set.kernel_values(0, positions)?;
            for a in 0..n {
                for (j, (&w, p)) in grid.weights().iter().zip(values).enumerate() {
                    value[a] += Complex64::new(k_re[(a, j)], k_im[(a, j)]) * p * w;
                }
            }
        }
    }
    Ok(set
        .index_map()
        .pairs()
        .iter()
        .enumerate()
        .map(|(a, &(n, m))| ElementEstimate {
            n,
            m,
            value: value[a],
            std_real: var_re[a].sqrt(),
            std_imag: var_im[a].sqrt(),
        })
        .collect())
}
