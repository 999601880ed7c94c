//! Weighted least squares with optional Tikhonov or spectral-truncation
//! regularization, L-curve diagnostics and Monte Carlo bias estimation.
//!
//! All solvers work on the normal equations `A†WA f = A†Wy`. The Hermitian
//! normal matrix is factored once (Cholesky, or an eigendecomposition for
//! spectral truncation) and then applied to any number of right-hand sides.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::task_rng;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Condition-number estimate above which an unregularized inversion is refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Default number of synthetic replicates for bias estimation.
pub const DEFAULT_BIAS_REPLICATES: usize = 20;

/// Overdetermined linear model `y = A f + noise` with optional diagonal
/// weights (inverse noise variances).
#[derive(Debug, Clone)]
pub struct LinearSystem {
    design: CMatrix,
    data: CVector,
    weights: Option<Vec<f64>>,
}

impl LinearSystem {
    pub fn new(design: CMatrix, data: CVector, weights: Option<Vec<f64>>) -> Result<Self> {
        let (m, n) = design.shape();
        if m < n {
            return Err(Error::InvalidParameter(format!(
                "underdetermined system: {m} equations for {n} unknowns"
            )));
        }
        if data.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: data.len() });
        }
        if let Some(w) = &weights {
            if w.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: w.len() });
            }
            if w.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::InvalidParameter("weights must be positive".into()));
            }
        }
        Ok(Self { design, data, weights })
    }

    pub fn design(&self) -> &CMatrix {
        &self.design
    }

    pub fn data(&self) -> &CVector {
        &self.data
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// Forms `A†WA`, `A†Wy` and `y†Wy`.
    pub fn normal_equations(&self) -> NormalEquations {
        let mut weighted = self.design.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= Complex64::from(self.weight(i));
        }
        let gram = self.design.adjoint() * &weighted;
        let mut wy = self.data.clone();
        for (i, v) in wy.iter_mut().enumerate() {
            *v *= self.weight(i);
        }
        let rhs = self.design.adjoint() * &wy;
        let data_norm_sq = self.data.iter().zip(wy.iter()).map(|(y, wy)| (y.conj() * wy).re).sum();
        NormalEquations { gram: hermitize(gram), rhs, data_norm_sq }
    }

    /// Weighted residual norm `‖W^{1/2}(y - A f)‖`.
    pub fn residual_norm(&self, f: &CVector) -> f64 {
        let r = &self.data - &self.design * f;
        r.iter().enumerate().map(|(i, v)| self.weight(i) * v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Inverse-count weights for Poisson-distributed data (zero counts get weight 1).
pub fn poisson_weights(counts: &[f64]) -> Vec<f64> {
    counts.iter().map(|&c| 1.0 / c.max(1.0)).collect()
}

/// Normal-equation form of a least-squares problem.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    pub gram: CMatrix,
    pub rhs: CVector,
    /// `y†Wy`, needed for residual norms.
    pub data_norm_sq: f64,
}

impl NormalEquations {
    /// Residual norm recovered from the normal form:
    /// `‖y - Af‖² = y†y - 2 Re(f†A†y) + f†A†Af`.
    pub fn residual_norm(&self, f: &CVector) -> f64 {
        let cross = f.dotc(&self.rhs).re;
        let quad = f.dotc(&(&self.gram * f)).re;
        (self.data_norm_sq - 2.0 * cross + quad).max(0.0).sqrt()
    }
}

/// Regularization of the normal-equation inversion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Regularization {
    #[default]
    None,
    /// Ridge penalty `λ²‖f‖²`.
    Tikhonov { lambda: f64 },
    /// Eigenmodes of the normal matrix with eigenvalue below `sigma0` are dropped.
    SvdTruncation { sigma0: f64 },
}

impl Regularization {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::None => Ok(()),
            Self::Tikhonov { lambda } if lambda > 0.0 && lambda.is_finite() => Ok(()),
            Self::Tikhonov { lambda } => Err(Error::InvalidParameter(format!(
                "Tikhonov parameter must be positive, got {lambda}"
            ))),
            Self::SvdTruncation { sigma0 } if sigma0 >= 0.0 && sigma0.is_finite() => Ok(()),
            Self::SvdTruncation { sigma0 } => Err(Error::InvalidParameter(format!(
                "truncation threshold must be nonnegative, got {sigma0}"
            ))),
        }
    }
}

enum Factor {
    Cholesky(Cholesky<Complex64, nalgebra::Dyn>),
    Spectral { vectors: CMatrix, inv_values: Vec<f64> },
}

/// Factored (possibly regularized) normal matrix.
pub struct HermitianSolver {
    factor: Factor,
    condition: f64,
    regularization: Regularization,
    dim: usize,
}

impl std::fmt::Debug for HermitianSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HermitianSolver")
            .field("dim", &self.dim)
            .field("condition", &self.condition)
            .field("regularization", &self.regularization)
            .finish()
    }
}

/// Ratio of extreme eigenvalue magnitudes of a Hermitian matrix.
pub fn condition_estimate(gram: &CMatrix) -> f64 {
    let eig = SymmetricEigen::new(gram.clone());
    condition_from_eigenvalues(eig.eigenvalues.as_slice())
}

fn condition_from_eigenvalues(values: &[f64]) -> f64 {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(v.max(0.0)));
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let eig = SymmetricEigen::new(hermitize(m.clone()));
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `(M + M†)/2`, removing rounding asymmetry.
pub fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()).scale(0.5)
}

impl HermitianSolver {
    pub fn new(gram: &CMatrix, regularization: Regularization) -> Result<Self> {
        regularization.validate()?;
        let dim = gram.nrows();
        if gram.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: gram.ncols() });
        }
        let gram = hermitize(gram.clone());
        let eig = SymmetricEigen::new(gram.clone());
        let condition = condition_from_eigenvalues(eig.eigenvalues.as_slice());
        let factor = match regularization {
            Regularization::None => {
                if !(condition <= CONDITION_LIMIT) {
                    return Err(Error::QuasiSingular { condition });
                }
                Factor::Cholesky(Cholesky::new(gram).ok_or(Error::QuasiSingular { condition })?)
            }
            Regularization::Tikhonov { lambda } => {
                let shifted = gram + CMatrix::identity(dim, dim).scale(lambda * lambda);
                let cond = condition;
                Factor::Cholesky(Cholesky::new(shifted).ok_or(Error::QuasiSingular { condition: cond })?)
            }
            Regularization::SvdTruncation { sigma0 } => {
                let inv_values = eig
                    .eigenvalues
                    .iter()
                    .map(|&v| if v.abs() < sigma0 || v == 0.0 { 0.0 } else { 1.0 / v })
                    .collect();
                Factor::Spectral { vectors: eig.eigenvectors, inv_values }
            }
        };
        Ok(Self { factor, condition, regularization, dim })
    }

    /// Condition estimate of the unregularized normal matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn regularization(&self) -> Regularization {
        self.regularization
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &CVector) -> CVector {
        match &self.factor {
            Factor::Cholesky(c) => c.solve(rhs),
            Factor::Spectral { vectors, inv_values } => {
                let mut coeffs = vectors.adjoint() * rhs;
                for (c, s) in coeffs.iter_mut().zip(inv_values) {
                    *c *= *s;
                }
                vectors * coeffs
            }
        }
    }

    pub fn solve_matrix(&self, rhs: &CMatrix) -> CMatrix {
        match &self.factor {
            Factor::Cholesky(c) => c.solve(rhs),
            Factor::Spectral { vectors, inv_values } => {
                let mut coeffs = vectors.adjoint() * rhs;
                for (mut row, s) in coeffs.row_iter_mut().zip(inv_values) {
                    row *= Complex64::from(*s);
                }
                vectors * coeffs
            }
        }
    }

    /// The (regularized) inverse applied to the identity.
    pub fn inverse(&self) -> CMatrix {
        hermitize(self.solve_matrix(&CMatrix::identity(self.dim, self.dim)))
    }
}

/// Solves normal equations with the given regularization.
pub fn solve_normal(normal: &NormalEquations, regularization: Regularization) -> Result<CVector> {
    Ok(HermitianSolver::new(&normal.gram, regularization)?.solve(&normal.rhs))
}

/// Unregularized weighted least squares `(A†WA)⁻¹A†Wy`.
pub fn ls_solve(sys: &LinearSystem) -> Result<CVector> {
    solve_normal(&sys.normal_equations(), Regularization::None)
}

/// Tikhonov-regularized solution `(λ²I + A†A)⁻¹A†y`.
pub fn tikhonov_solve(sys: &LinearSystem, lambda: f64) -> Result<CVector> {
    solve_normal(&sys.normal_equations(), Regularization::Tikhonov { lambda })
}

/// Pseudoinverse solution dropping eigenmodes of `A†A` below `sigma0`.
pub fn svd_solve(sys: &LinearSystem, sigma0: f64) -> Result<CVector> {
    solve_normal(&sys.normal_equations(), Regularization::SvdTruncation { sigma0 })
}

/// One point of an L-curve sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LCurvePoint {
    pub lambda: f64,
    pub residual_norm: f64,
    pub solution_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LCurve {
    pub points: Vec<LCurvePoint>,
    /// Per-point curvature of the log-log curve (`None` at the endpoints).
    pub curvature: Vec<Option<f64>>,
    /// λ of maximum curvature; `None` with fewer than three points.
    pub corner: Option<f64>,
}

/// Tikhonov sweep over ascending `lambdas` with the maximum-curvature corner.
pub fn l_curve(normal: &NormalEquations, lambdas: &[f64]) -> Result<LCurve> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty λ sweep".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) || lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("λ values must be positive and strictly ascending".into()));
    }
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let f = solve_normal(normal, Regularization::Tikhonov { lambda })?;
        points.push(LCurvePoint { lambda, residual_norm: normal.residual_norm(&f), solution_norm: f.norm() });
    }
    let curvature = log_log_curvature(&points);
    let corner = curvature
        .iter()
        .enumerate()
        .filter_map(|(i, k)| k.map(|k| (i, k)))
        .fold(None::<(usize, f64)>, |best, (i, k)| match best {
            Some((_, bk)) if k < bk => best,
            _ => Some((i, k)),
        })
        .map(|(i, _)| points[i].lambda);
    Ok(LCurve { points, curvature, corner })
}

/// Signed curvature of `(ln residual, ln solution)` parametrized by `ln λ`,
/// using three-point centered differences on the nonuniform parameter grid.
fn log_log_curvature(points: &[LCurvePoint]) -> Vec<Option<f64>> {
    let n = points.len();
    let s: Vec<f64> = points.iter().map(|p| p.lambda.ln()).collect();
    let u: Vec<f64> = points.iter().map(|p| p.residual_norm.max(f64::MIN_POSITIVE).ln()).collect();
    let v: Vec<f64> = points.iter().map(|p| p.solution_norm.max(f64::MIN_POSITIVE).ln()).collect();
    let mut out = vec![None; n];
    for i in 1..n.saturating_sub(1) {
        let h1 = s[i] - s[i - 1];
        let h2 = s[i + 1] - s[i];
        let d1 = |f: &[f64]| {
            -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1]
        };
        let d2 = |f: &[f64]| {
            2.0 * (f[i - 1] / (h1 * (h1 + h2)) - f[i] / (h1 * h2) + f[i + 1] / (h2 * (h1 + h2)))
        };
        let (u1, u2, v1, v2) = (d1(&u), d2(&u), d1(&v), d2(&v));
        let speed = (u1 * u1 + v1 * v1).powf(1.5);
        out[i] = Some(if speed > 0.0 { (u1 * v2 - u2 * v1) / speed } else { 0.0 });
    }
    out
}

/// Monte Carlo bias: mean over `replicates` of `solve(forward(estimate)) - estimate`.
///
/// Replicate `r` draws from a generator seeded by `(seed, r)`.
pub fn bias_estimate<D>(
    solve: impl Fn(&D) -> Result<CVector>,
    forward: impl Fn(&CVector, &mut ChaCha8Rng) -> Result<D>,
    estimate: &CVector,
    replicates: usize,
    seed: u64,
) -> Result<CVector> {
    if replicates < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 replicates, got {replicates}")));
    }
    let mut acc = CVector::zeros(estimate.len());
    for r in 0..replicates {
        let mut rng = task_rng(seed, &[r as u64]);
        let data = forward(estimate, &mut rng)?;
        let f = solve(&data)?;
        if f.len() != estimate.len() {
            return Err(Error::DimensionMismatch { expected: estimate.len(), found: f.len() });
        }
        acc += f - estimate;
    }
    Ok(acc.unscale(replicates as f64))
}
