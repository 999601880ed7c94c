//! Density-matrix propagators `U_{m,m';n,n'}(t)` on the truncated basis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lsq::CMatrix;
use crate::oscillators::OscillatorModel;
use crate::simulator::DensityMatrix;

/// Generator of the density-matrix evolution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Liouvillian {
    #[default]
    Unitary,
    /// Ladder-form amplitude damping at rate `gamma` in the energy basis. For
    /// the Morse model this is an illustrative dissipator, not derived from a
    /// specific bath.
    AmplitudeDamping { gamma: f64 },
}

impl Liouvillian {
    pub fn gamma(&self) -> f64 {
        match *self {
            Self::Unitary => 0.0,
            Self::AmplitudeDamping { gamma } => gamma,
        }
    }
}

/// Superoperator matrix acting on row-major vectorized `ρ`:
/// `(Lρ)_{nm} = -i(ω_n - ω_m)ρ_{nm} + γ[√((n+1)(m+1)) ρ_{n+1,m+1} - (n+m)/2 ρ_{nm}]`.
/// Trace-preserving on the truncated basis.
pub fn liouvillian_matrix(model: &OscillatorModel, n_max: usize, generator: Liouvillian) -> Result<CMatrix> {
    let gamma = generator.gamma();
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("damping rate must be nonnegative, got {gamma}")));
    }
    let energies = model.spectrum(n_max)?;
    let d = n_max + 1;
    let mut l = CMatrix::zeros(d * d, d * d);
    for n in 0..d {
        for m in 0..d {
            let row = n * d + m;
            let decay = 0.5 * gamma * (n + m) as f64;
            l[(row, row)] = Complex64::new(-decay, -(energies[n] - energies[m]));
            if gamma > 0.0 && n < n_max && m < n_max {
                l[(row, (n + 1) * d + m + 1)] = Complex64::new(gamma * (((n + 1) * (m + 1)) as f64).sqrt(), 0.0);
            }
        }
    }
    Ok(l)
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = (0..n).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.unscale(2f64.powi(squarings));
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..40 {
        term = (&term * &scaled).unscale(k as f64);
        result += &term;
        let size = term.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if size < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Propagator tensors at a list of times.
#[derive(Debug, Clone)]
pub struct Propagator {
    n_max: usize,
    generator: Liouvillian,
    times: Vec<f64>,
    tensors: Vec<CMatrix>,
}

/// `U(t) = exp(L t)` for each requested time.
pub fn build_propagator(
    model: &OscillatorModel,
    n_max: usize,
    generator: Liouvillian,
    times: &[f64],
) -> Result<Propagator> {
    if times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("propagation times must be finite and nonnegative".into()));
    }
    let l = liouvillian_matrix(model, n_max, generator)?;
    let dim = l.nrows();
    // Walk the sorted times, exponentiating only the increments.
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));
    let mut tensors = vec![CMatrix::zeros(0, 0); times.len()];
    let mut current = CMatrix::identity(dim, dim);
    let mut t_prev = 0.0;
    let mut cached_step: Option<(f64, CMatrix)> = None;
    for i in order {
        let dt = times[i] - t_prev;
        if dt > 0.0 {
            let step = match &cached_step {
                Some((h, s)) if (h - dt).abs() <= 1e-14 * dt.max(1.0) => s.clone(),
                _ => {
                    let s = expm(&l.scale(dt));
                    cached_step = Some((dt, s.clone()));
                    s
                }
            };
            current = &step * &current;
            t_prev = times[i];
        }
        tensors[i] = current.clone();
    }
    Ok(Propagator { n_max, generator, times: times.to_vec(), tensors })
}

impl Propagator {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn generator(&self) -> Liouvillian {
        self.generator
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn tensor(&self, k: usize) -> &CMatrix {
        &self.tensors[k]
    }

    /// Index of the tabulated time equal to `t` within `1e-12`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }

    /// `ρ(t_k) = U(t_k) ρ(0)`.
    pub fn apply(&self, k: usize, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_max() != self.n_max {
            return Err(Error::DimensionMismatch { expected: self.n_max + 1, found: rho.dim() });
        }
        DensityMatrix::from_vector(&(&self.tensors[k] * rho.to_vector()))
    }
}
