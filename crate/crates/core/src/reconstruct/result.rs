use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::lsq::{CMatrix, Regularization};
use crate::simulator::DensityMatrix;

/// Per-element output of one linear estimator, before Hermitian completion.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementEstimate {
    pub n: usize,
    pub m: usize,
    pub value: Complex64,
    pub std_real: f64,
    pub std_imag: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub trace: f64,
    pub min_eigenvalue: f64,
    /// Largest condition estimate among the Gram matrices used.
    pub condition_estimate: f64,
    pub regularization: Regularization,
    /// `max |ρ̃_{n,m} - ρ̃_{m,n}*|` over pairs estimated in both orientations.
    pub asymmetry: f64,
    /// Levels whose reconstructed population is negative.
    pub negative_diagonals: Vec<usize>,
}

/// Reconstructed density matrix with error bars.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// Hermitian-symmetrized estimate.
    pub estimate: DensityMatrix,
    /// Raw estimates; entries estimated only in one orientation are completed by conjugation.
    pub raw: CMatrix,
    /// Whether `(n, m)` or its transpose was estimated.
    pub estimated: DMatrix<bool>,
    pub std_real: DMatrix<f64>,
    pub std_imag: DMatrix<f64>,
    pub bias: Option<CMatrix>,
    pub diagnostics: Diagnostics,
}

impl ReconstructionResult {
    pub fn n_max(&self) -> usize {
        self.estimate.n_max()
    }

    /// Quadrature sum of the real and imaginary standard deviations.
    pub fn std_total(&self, n: usize, m: usize) -> f64 {
        self.std_real[(n, m)].hypot(self.std_imag[(n, m)])
    }

    /// Completes per-element estimates into a Hermitian matrix. Pairs seen in
    /// both orientations are averaged; their discrepancy is reported.
    pub fn assemble(
        n_max: usize,
        elements: &[ElementEstimate],
        condition_estimate: f64,
        regularization: Regularization,
    ) -> Result<Self> {
        let d = n_max + 1;
        let zero = Complex64::new(0.0, 0.0);
        let mut raw = CMatrix::from_element(d, d, zero);
        let mut seen = DMatrix::from_element(d, d, false);
        let mut sre = DMatrix::zeros(d, d);
        let mut sim = DMatrix::zeros(d, d);
        for e in elements {
            raw[(e.n, e.m)] = e.value;
            seen[(e.n, e.m)] = true;
            sre[(e.n, e.m)] = e.std_real;
            sim[(e.n, e.m)] = e.std_imag;
        }
        let mut asymmetry: f64 = 0.0;
        let mut sym = raw.clone();
        let mut std_real = sre.clone();
        let mut std_imag = sim.clone();
        for n in 0..d {
            for m in 0..=n {
                match (seen[(n, m)], seen[(m, n)]) {
                    (true, true) => {
                        asymmetry = asymmetry.max((raw[(n, m)] - raw[(m, n)].conj()).norm());
                        let avg = 0.5 * (raw[(n, m)] + raw[(m, n)].conj());
                        sym[(n, m)] = avg;
                        sym[(m, n)] = avg.conj();
                        let r = 0.5 * (sre[(n, m)] + sre[(m, n)]);
                        let i = 0.5 * (sim[(n, m)] + sim[(m, n)]);
                        std_real[(n, m)] = r;
                        std_real[(m, n)] = r;
                        std_imag[(n, m)] = i;
                        std_imag[(m, n)] = i;
                    }
                    (true, false) => {
                        raw[(m, n)] = raw[(n, m)].conj();
                        sym[(m, n)] = raw[(n, m)].conj();
                        std_real[(m, n)] = sre[(n, m)];
                        std_imag[(m, n)] = sim[(n, m)];
                    }
                    (false, true) => {
                        raw[(n, m)] = raw[(m, n)].conj();
                        sym[(n, m)] = raw[(m, n)].conj();
                        std_real[(n, m)] = sre[(m, n)];
                        std_imag[(n, m)] = sim[(m, n)];
                    }
                    (false, false) => {}
                }
                if n == m {
                    sym[(n, n)].im = 0.0;
                }
            }
        }
        let estimated = DMatrix::from_fn(d, d, |n, m| seen[(n, m)] || seen[(m, n)]);
        let estimate = DensityMatrix::new(sym)?;
        let negative_diagonals = (0..d).filter(|&n| estimate.get(n, n).re < 0.0).collect();
        let diagnostics = Diagnostics {
            trace: estimate.trace(),
            min_eigenvalue: estimate.min_eigenvalue(),
            condition_estimate,
            regularization,
            asymmetry,
            negative_diagonals,
        };
        Ok(Self { estimate, raw, estimated, std_real, std_imag, bias: None, diagnostics })
    }

    /// Symmetrized estimate listed in the order of `pairs`.
    pub fn values_for(&self, pairs: &[(usize, usize)]) -> Vec<Complex64> {
        pairs.iter().map(|&(n, m)| self.estimate.get(n, m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(n: usize, m: usize, re: f64, im: f64) -> ElementEstimate {
        ElementEstimate { n, m, value: Complex64::new(re, im), std_real: 0.1, std_imag: 0.2 }
    }

    #[test]
    fn completes_and_symmetrizes() {
        let elements = vec![est(0, 0, 0.6, 0.0), est(1, 1, -0.05, 0.0), est(1, 0, 0.2, 0.1), est(0, 1, 0.22, -0.1)];
        let r = ReconstructionResult::assemble(1, &elements, 3.0, Regularization::None).unwrap();
        assert!(r.estimate.hermiticity_defect() == 0.0);
        assert!((r.estimate.get(1, 0) - Complex64::new(0.21, 0.1)).norm() < 1e-15);
        assert!((r.diagnostics.asymmetry - 0.02).abs() < 1e-15);
        assert_eq!(r.diagnostics.negative_diagonals, vec![1]);
        assert!((r.std_total(0, 1) - (0.05f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_orientation_is_conjugated() {
        let elements = vec![est(0, 0, 1.0, 0.0), est(1, 0, 0.3, 0.4)];
        let r = ReconstructionResult::assemble(1, &elements, 1.0, Regularization::None).unwrap();
        assert_eq!(r.raw[(0, 1)], Complex64::new(0.3, -0.4));
        assert!(!r.estimated[(1, 1)]);
        assert_eq!(r.diagnostics.asymmetry, 0.0);
    }
}
