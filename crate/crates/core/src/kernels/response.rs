//! Response families `S_{n,n'}(x,t)` linking density-matrix elements to the
//! measured distribution, `p(x,t) = Σ S_{n,n'}(x,t) ρ_{n,n'}`.
//!
//! Every family factors as `S_γ(x,t) = Σ_β Φ_β(x) U_{β,γ}(t)` over the
//! row-major pair index `β = m·d + m'`: a spatial basis `Φ` (eigenfunction
//! products, optionally smeared in position) and a time mixing `U` (pure
//! phases for unitary evolution, a full propagator otherwise).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lsq::CMatrix;
use crate::oscillators::OscillatorModel;
use crate::quadrature::{EigenTable, SpatialGrid};
use crate::simulator::{Liouvillian, Propagator};

/// Gaussian instrument windows `V(t) = exp(-t²/2σ_t²)`, `W(x) = exp(-x²/2σ_x²)`.
/// A zero width means no smearing along that axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SmearingWindows {
    pub sigma_t: f64,
    pub sigma_x: f64,
}

impl SmearingWindows {
    pub fn new(sigma_t: f64, sigma_x: f64) -> Result<Self> {
        let w = Self { sigma_t, sigma_x };
        w.validate()?;
        Ok(w)
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma_t", self.sigma_t), ("sigma_x", self.sigma_x)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.sigma_t == 0.0 && self.sigma_x == 0.0
    }

    /// `∫V dt`; unity for the delta window.
    pub fn time_mass(&self) -> f64 {
        gaussian_mass(self.sigma_t)
    }

    /// `∫W dx`; unity for the delta window.
    pub fn space_mass(&self) -> f64 {
        gaussian_mass(self.sigma_x)
    }

    /// `|V_{n,n'}| = ∫V(τ) e^{-iΔωτ} dτ` for transition frequency `Δω`.
    pub fn time_envelope(&self, delta_omega: f64) -> f64 {
        if self.sigma_t == 0.0 {
            1.0
        } else {
            gaussian_mass(self.sigma_t) * (-0.5 * (self.sigma_t * delta_omega).powi(2)).exp()
        }
    }
}

fn gaussian_mass(sigma: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else {
        (2.0 * PI).sqrt() * sigma
    }
}

/// Set of positions with integration weights.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialMeasure {
    /// Gauss-Legendre quadrature for continuous position data.
    Quadrature(SpatialGrid),
    /// Measurement points `x_l`, each carrying weight `spacing`.
    Points { positions: Vec<f64>, spacing: f64 },
}

impl SpatialMeasure {
    /// `count` inclusive equidistant points on `[lo, hi]`, spacing `(hi-lo)/(count-1)`.
    pub fn equidistant(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "measurement grid needs at least two points on a nonempty interval, got {count} on [{lo}, {hi}]"
            )));
        }
        let h = (hi - lo) / (count - 1) as f64;
        Ok(Self::Points { positions: (0..count).map(|l| lo + l as f64 * h).collect(), spacing: h })
    }

    pub fn positions(&self) -> &[f64] {
        match self {
            Self::Quadrature(g) => g.nodes(),
            Self::Points { positions, .. } => positions,
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            Self::Quadrature(g) => g.weights().to_vec(),
            Self::Points { positions, spacing } => vec![*spacing; positions.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.positions().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Quadrature(a), Self::Quadrature(b)) => a == b,
            (Self::Points { positions: a, spacing: ha }, Self::Points { positions: b, spacing: hb }) => {
                (ha - hb).abs() <= 1e-12 * ha.abs()
                    && a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
enum SpatialBasis {
    Products,
    /// Position-smeared products `Σ_j w_j ψ_m(x_j)ψ_{m'}(x_j) W(x_j - x)`.
    Smeared { sigma_x: f64, grid: SpatialGrid, table: EigenTable },
}

#[derive(Debug, Clone)]
enum TimeMixing {
    /// `U_{β,γ}(t) = δ_{β,γ} a_β e^{-iΔω_β t}`.
    Phases { envelope: Vec<f64> },
    Propagated(Propagator),
}

/// Time mixing evaluated at one instant.
#[derive(Debug, Clone)]
pub enum TimeFactor {
    Diagonal(Vec<Complex64>),
    Full(CMatrix),
}

/// Family `S_{n,n'}(x,t)` over all ordered pairs `n, n' ≤ n_max`.
#[derive(Debug, Clone)]
pub struct ResponseFamily {
    model: OscillatorModel,
    n_max: usize,
    spectrum: Vec<f64>,
    spatial: SpatialBasis,
    time: TimeMixing,
    windows: SmearingWindows,
}

impl ResponseFamily {
    /// `S_{n,n'}(x,t) = ψ_n(x)ψ_{n'}(x) e^{-i(ω_n - ω_{n'})t}`.
    pub fn unitary(model: &OscillatorModel, n_max: usize) -> Result<Self> {
        let spectrum = model.spectrum(n_max)?;
        let d = n_max + 1;
        Ok(Self {
            model: *model,
            n_max,
            spectrum,
            spatial: SpatialBasis::Products,
            time: TimeMixing::Phases { envelope: vec![1.0; d * d] },
            windows: SmearingWindows::none(),
        })
    }

    /// Smeared family `S̄ = V_{n,n'}(t) W_{n,n'}(x)`: the Gaussian time window
    /// in closed form and the position window by quadrature on `grid`.
    pub fn smeared(model: &OscillatorModel, n_max: usize, windows: SmearingWindows, grid: &SpatialGrid) -> Result<Self> {
        windows.validate()?;
        let mut family = Self::unitary(model, n_max)?;
        let d = n_max + 1;
        let spectrum = family.spectrum.clone();
        family.time = TimeMixing::Phases {
            envelope: (0..d * d).map(|b| windows.time_envelope(spectrum[b / d] - spectrum[b % d])).collect(),
        };
        if windows.sigma_x > 0.0 {
            family.spatial = SpatialBasis::Smeared {
                sigma_x: windows.sigma_x,
                grid: grid.clone(),
                table: EigenTable::new(model, n_max, grid.nodes())?,
            };
        }
        family.windows = windows;
        Ok(family)
    }

    /// `S_{n,n'}(x,t) = Σ_{m,m'} ψ_m(x)ψ_{m'}(x) U_{m,m';n,n'}(t)` for a propagator.
    pub fn damped(model: &OscillatorModel, propagator: &Propagator) -> Result<Self> {
        let mut family = Self::unitary(model, propagator.n_max())?;
        family.time = TimeMixing::Propagated(propagator.clone());
        Ok(family)
    }

    pub fn model(&self) -> &OscillatorModel {
        &self.model
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Number of ordered pairs, `(n_max + 1)²`.
    pub fn elements(&self) -> usize {
        self.dim() * self.dim()
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn windows(&self) -> SmearingWindows {
        self.windows
    }

    pub fn generator(&self) -> Liouvillian {
        match &self.time {
            TimeMixing::Phases { .. } => Liouvillian::Unitary,
            TimeMixing::Propagated(p) => p.generator(),
        }
    }

    /// Spatial basis `Φ_β(x_j)` as a `(n_max+1)² × xs.len()` matrix.
    pub fn spatial_matrix(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.dim();
        match &self.spatial {
            SpatialBasis::Products => {
                let table = EigenTable::new(&self.model, self.n_max, xs)?;
                Ok(DMatrix::from_fn(d * d, xs.len(), |b, j| table.level(b / d)[j] * table.level(b % d)[j]))
            }
            SpatialBasis::Smeared { sigma_x, grid, table } => {
                let nodes = grid.nodes();
                let w = grid.weights();
                let products =
                    DMatrix::from_fn(d * d, nodes.len(), |b, j| w[j] * table.level(b / d)[j] * table.level(b % d)[j]);
                let inv = 1.0 / (2.0 * sigma_x * sigma_x);
                let window = DMatrix::from_fn(nodes.len(), xs.len(), |j, l| (-(nodes[j] - xs[l]).powi(2) * inv).exp());
                Ok(products * window)
            }
        }
    }

    /// Time mixing at `t`. Propagated families only know their tabulated times.
    pub fn time_factor(&self, t: f64) -> Result<TimeFactor> {
        match &self.time {
            TimeMixing::Phases { envelope } => {
                let d = self.dim();
                Ok(TimeFactor::Diagonal(
                    envelope
                        .iter()
                        .enumerate()
                        .map(|(b, &a)| Complex64::from_polar(a, -(self.spectrum[b / d] - self.spectrum[b % d]) * t))
                        .collect(),
                ))
            }
            TimeMixing::Propagated(p) => {
                let k = p.index_of(t).ok_or_else(|| {
                    Error::GeometryMismatch(format!("propagator has no tensor for time {t}"))
                })?;
                Ok(TimeFactor::Full(p.tensor(k).clone()))
            }
        }
    }

    /// `S_{n,n'}(x,t)` for one element.
    pub fn value(&self, n: usize, m: usize, x: f64, t: f64) -> Result<Complex64> {
        self.model.check_level(n.max(m))?;
        if n > self.n_max || m > self.n_max {
            return Err(Error::LevelOutOfRange { n: n.max(m), max: self.n_max });
        }
        let phi = self.spatial_matrix(&[x])?;
        let col = n * self.dim() + m;
        Ok(match self.time_factor(t)? {
            TimeFactor::Diagonal(u) => u[col] * phi[(col, 0)],
            TimeFactor::Full(u) => (0..phi.nrows()).map(|b| u[(b, col)] * phi[(b, 0)]).sum(),
        })
    }
}

/// `S_{n,n'}(x,t) = ψ_n(x)ψ_{n'}(x) e^{-i(ω_n - ω_{n'})t}`.
pub fn response_function(model: &OscillatorModel, n: usize, m: usize, x: f64, t: f64) -> Result<Complex64> {
    let psi = model.eigenfunctions(n.max(m), x)?;
    let w = model.transition_frequency(n, m)?;
    Ok(Complex64::from_polar(psi[n] * psi[m], -w * t))
}

/// Smeared counterpart of a unitary family.
pub fn smeared_responses(
    model: &OscillatorModel,
    n_max: usize,
    windows: SmearingWindows,
    grid: &SpatialGrid,
) -> Result<ResponseFamily> {
    ResponseFamily::smeared(model, n_max, windows, grid)
}

/// Response family under a master-equation propagator.
pub fn damped_responses(model: &OscillatorModel, propagator: &Propagator) -> Result<ResponseFamily> {
    ResponseFamily::damped(model, propagator)
}
