use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lsq::{min_eigenvalue, CMatrix, CVector};

/// Density matrix `ρ_{n,n'}` in the energy eigenbasis, levels `0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps any square matrix; reconstructions need not be physical.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: matrix.nrows().max(1), found: matrix.ncols() });
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix that must be a valid physical state.
    pub fn physical(matrix: CMatrix) -> Result<Self> {
        let rho = Self::new(matrix)?;
        let defect = rho.hermiticity_defect();
        if defect > 1e-12 {
            return Err(Error::InvalidParameter(format!("state is not Hermitian (defect {defect:.3e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::Unnormalized { mass: tr });
        }
        let lo = rho.min_eigenvalue();
        if lo < -1e-12 {
            return Err(Error::InvalidParameter(format!("state has negative eigenvalue {lo:.3e}")));
        }
        Ok(rho)
    }

    /// Pure state from amplitudes `c_n`, normalized.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || !(norm > 0.0) {
            return Err(Error::InvalidParameter("pure state needs a nonzero amplitude vector".into()));
        }
        let c = CVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|a| a / norm));
        Self::new(&c * c.adjoint())
    }

    /// `(n_max + 1)²` row-major vector to matrix.
    pub fn from_vector(v: &CVector) -> Result<Self> {
        let d = (v.len() as f64).sqrt().round() as usize;
        if d * d != v.len() {
            return Err(Error::InvalidParameter(format!("{} entries do not form a square matrix", v.len())));
        }
        Self::new(DMatrix::from_fn(d, d, |n, m| v[n * d + m]))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.matrix[(n, m)]
    }

    /// Row-major vectorization, element `(n, m)` at `n·d + m`.
    pub fn to_vector(&self) -> CVector {
        let d = self.dim();
        CVector::from_fn(d * d, |i, _| self.matrix[(i / d, i % d)])
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// `max |ρ - ρ†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for n in 0..d {
            for m in 0..=n {
                worst = worst.max((self.matrix[(n, m)] - self.matrix[(m, n)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()).unscale(2.0);
        min_eigenvalue(&h)
    }

    /// Upper-left block for levels `0..=n_max`.
    pub fn truncated(&self, n_max: usize) -> Result<Self> {
        if n_max >= self.dim() {
            return Err(Error::LevelOutOfRange { n: n_max, max: self.n_max() });
        }
        Self::new(self.matrix.view((0, 0), (n_max + 1, n_max + 1)).into_owned())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok((&self.matrix - &other.matrix).iter().fold(0.0, |m, z| m.max(z.norm())))
    }
}

/// Coherent-like pure state `c_n ∝ α^n / √(n!)`, normalized over `n ≤ n_max`.
pub fn prepare_state(alpha: Complex64, n_max: usize) -> DensityMatrix {
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut c = Complex64::new(1.0, 0.0);
    for n in 0..=n_max {
        if n > 0 {
            c *= alpha / (n as f64).sqrt();
        }
        amps.push(c);
    }
    DensityMatrix::pure(&amps).expect("leading amplitude is one")
}
