//! Time sampling of the observation interval and biorthonormal time weights.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lsq::{CMatrix, HermitianSolver, Regularization};
use crate::quadrature::gauss_legendre;

/// Observation times with the weights that replace `∫₀ᵀ dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSampling {
    times: Vec<f64>,
    weights: Vec<f64>,
    period: f64,
}

impl TimeSampling {
    pub fn new(times: Vec<f64>, weights: Vec<f64>, period: f64) -> Result<Self> {
        if times.is_empty() || times.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "time sampling needs matching nonempty times and weights ({} vs {})",
                times.len(),
                weights.len()
            )));
        }
        if times.iter().chain(&weights).any(|v| !v.is_finite()) || weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidParameter("time weights must be positive and finite".into()));
        }
        if !(period >= 0.0) || times.iter().any(|&t| t < 0.0) {
            return Err(Error::InvalidParameter("times must be nonnegative".into()));
        }
        Ok(Self { times, weights, period })
    }

    /// `t_k = kT/N`, `k = 0..N`, each carrying weight `T/N` (left rectangle rule).
    pub fn equidistant(period: f64, count: usize) -> Result<Self> {
        if !(period > 0.0) || count == 0 {
            return Err(Error::InvalidParameter(format!(
                "equidistant sampling needs T > 0 and N > 0, got T = {period}, N = {count}"
            )));
        }
        let dt = period / count as f64;
        Self::new((0..count).map(|k| k as f64 * dt).collect(), vec![dt; count], period)
    }

    /// Gauss-Legendre nodes on `[0, T]`.
    pub fn gauss_legendre(period: f64, count: usize) -> Result<Self> {
        if !(period > 0.0) || count == 0 {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Legendre sampling needs T > 0 and N > 0, got T = {period}, N = {count}"
            )));
        }
        let (x, w) = gauss_legendre(count);
        let h = 0.5 * period;
        Self::new(x.iter().map(|x| h * (x + 1.0)).collect(), w.iter().map(|w| h * w).collect(), period)
    }

    /// One instant with unit weight.
    pub fn single(t: f64) -> Result<Self> {
        Self::new(vec![t], vec![1.0], 0.0)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Equal times and weights up to a relative `1e-12`.
    pub fn matches(&self, other: &Self) -> bool {
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
        };
        close(&self.times, &other.times) && close(&self.weights, &other.weights)
    }
}

/// `∫₀ᵀ e^{iδt} dt`, stable as `δT → 0`.
pub fn exp_integral(delta: f64, period: f64) -> Complex64 {
    let half = 0.5 * delta * period;
    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    Complex64::from_polar(period * sinc, half)
}

/// Functions `f_k(t) = Σ_l F_{k,l} e^{iω_l t}` with `∫₀ᵀ f_k e^{-iω_{k'}t} dt = δ_{k,k'}`.
#[derive(Debug, Clone)]
pub struct TimeBiorthonormal {
    frequencies: Vec<f64>,
    period: f64,
    coefficients: CMatrix,
    gram: CMatrix,
    condition: f64,
}

/// Builds the biorthonormal time weights for distinct `frequencies` over `[0, T]`.
pub fn time_biorthonormal(frequencies: &[f64], period: f64) -> Result<TimeBiorthonormal> {
    if !(period > 0.0) {
        return Err(Error::InvalidParameter(format!("interval length must be positive, got {period}")));
    }
    if frequencies.is_empty() {
        return Err(Error::InvalidParameter("no frequencies given".into()));
    }
    for (i, a) in frequencies.iter().enumerate() {
        if frequencies[..i].iter().any(|b| (a - b).abs() <= 1e-12 * (1.0 + a.abs())) {
            return Err(Error::InvalidParameter(format!("frequency {a} listed twice")));
        }
    }
    let n = frequencies.len();
    // G_{k,l} = ∫ g_k* g_l dt with g_k = e^{-iω_k t}.
    let gram = DMatrix::from_fn(n, n, |k, l| exp_integral(frequencies[k] - frequencies[l], period));
    let solver = match HermitianSolver::new(&gram, Regularization::None) {
        Ok(s) => s,
        Err(Error::QuasiSingular { condition }) => {
            return Err(Error::IllConditionedTimeBasis { condition, period });
        }
        Err(e) => return Err(e),
    };
    // F is Hermitian, so f_k = Σ_l F_{k,l} g_l* satisfies ∫ f_k g_{k'} = (F G)_{k,k'}.
    Ok(TimeBiorthonormal {
        frequencies: frequencies.to_vec(),
        period,
        coefficients: solver.inverse(),
        condition: solver.condition(),
        gram,
    })
}

impl TimeBiorthonormal {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coefficients(&self) -> &CMatrix {
        &self.coefficients
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `f_k(t)`.
    pub fn value(&self, k: usize, t: f64) -> Complex64 {
        self.frequencies
            .iter()
            .enumerate()
            .map(|(l, &w)| self.coefficients[(k, l)] * Complex64::from_polar(1.0, w * t))
            .sum()
    }

    /// `∫₀ᵀ f_k(t) e^{-iωt} dt` in closed form.
    pub fn overlap(&self, k: usize, omega: f64) -> Complex64 {
        self.frequencies
            .iter()
            .enumerate()
            .map(|(l, &w)| self.coefficients[(k, l)] * exp_integral(w - omega, self.period))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exp_integral_matches_quadrature() {
        let ts = TimeSampling::gauss_legendre(3.0, 40).unwrap();
        for delta in [0.0, 1e-9, 0.7, -4.0] {
            let q: Complex64 = ts
                .times()
                .iter()
                .zip(ts.weights())
                .map(|(&t, &w)| Complex64::from_polar(w, delta * t))
                .sum();
            assert!((q - exp_integral(delta, 3.0)).norm() < 1e-12, "{delta}");
        }
    }

    #[test]
    fn single_frequency_is_scaled_exponential() {
        let b = time_biorthonormal(&[0.8], 5.0).unwrap();
        for t in [0.0, 1.3, 4.9] {
            let expect = Complex64::from_polar(1.0 / 5.0, 0.8 * t);
            assert!((b.value(0, t) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn full_period_recovers_fourier_weights() {
        let freqs: Vec<f64> = (-3..=3).map(f64::from).collect();
        let b = time_biorthonormal(&freqs, 2.0 * PI).unwrap();
        for (k, &w) in freqs.iter().enumerate() {
            let expect = Complex64::from_polar(1.0 / (2.0 * PI), w * 0.9);
            assert!((b.value(k, 0.9) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn biorthonormal_on_short_interval() {
        let freqs = [0.0, 0.92, 1.84, -0.92, 2.7];
        let b = time_biorthonormal(&freqs, 4.0).unwrap();
        for k in 0..freqs.len() {
            for (l, &w) in freqs.iter().enumerate() {
                let target = if k == l { 1.0 } else { 0.0 };
                assert!((b.overlap(k, w) - target).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn condition_grows_as_interval_shrinks() {
        let freqs = [0.0, 0.5, 1.1, 1.6];
        let long = time_biorthonormal(&freqs, 8.0).unwrap();
        let short = time_biorthonormal(&freqs, 4.0).unwrap();
        assert!(short.condition() > long.condition());
    }

    #[test]
    fn near_collinear_basis_is_rejected() {
        let freqs = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05];
        assert!(matches!(time_biorthonormal(&freqs, 1.0), Err(Error::IllConditionedTimeBasis { .. })));
    }

    #[test]
    fn equidistant_sampling_layout() {
        let s = TimeSampling::equidistant(6.0, 3).unwrap();
        assert_eq!(s.times(), &[0.0, 2.0, 4.0]);
        assert_eq!(s.weights(), &[2.0, 2.0, 2.0]);
        assert!(TimeSampling::equidistant(0.0, 3).is_err());
        assert!(TimeSampling::equidistant(1.0, 0).is_err());
    }
}
