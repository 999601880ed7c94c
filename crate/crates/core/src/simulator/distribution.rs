//! Position distributions `p(x,t) = Σ ρ_{n,n'}(t) ψ_n(x)ψ_{n'}(x)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{ResponseFamily, TimeFactor, TimeSampling};
use crate::oscillators::OscillatorModel;
use crate::quadrature::EigenTable;
use crate::simulator::{DensityMatrix, Propagator};

/// Values above this floor are numerical noise and are clipped to zero.
pub const NEGATIVE_FLOOR: f64 = -1e-12;

/// How the state moves between observation times.
#[derive(Debug, Clone, Default)]
pub enum Evolution {
    #[default]
    Unitary,
    Propagated(Propagator),
}

/// `ρ(t)` under the chosen evolution.
pub fn evolve(state: &DensityMatrix, model: &OscillatorModel, evolution: &Evolution, t: f64) -> Result<DensityMatrix> {
    match evolution {
        Evolution::Unitary => {
            let e = model.spectrum(state.n_max())?;
            let m = state.matrix();
            DensityMatrix::new(DMatrix::from_fn(m.nrows(), m.ncols(), |n, k| {
                m[(n, k)] * Complex64::from_polar(1.0, -(e[n] - e[k]) * t)
            }))
        }
        Evolution::Propagated(p) => {
            let k = p
                .index_of(t)
                .ok_or_else(|| Error::GeometryMismatch(format!("propagator has no tensor for time {t}")))?;
            p.apply(k, state)
        }
    }
}

/// Diagonal part of `ρ`: the long-time average for a spectrum whose only
/// vanishing transition frequencies are the diagonal ones.
pub fn time_averaged_state(state: &DensityMatrix) -> DensityMatrix {
    let m = state.matrix();
    DensityMatrix::new(DMatrix::from_fn(m.nrows(), m.ncols(), |n, k| if n == k { m[(n, n)] } else { Complex64::new(0.0, 0.0) }))
        .expect("square input")
}

/// Evaluates `p(x_j)` for many states on fixed positions.
#[derive(Debug, Clone)]
pub struct DistributionEvaluator {
    n_max: usize,
    table: EigenTable,
}

impl DistributionEvaluator {
    pub fn new(model: &OscillatorModel, n_max: usize, xs: &[f64]) -> Result<Self> {
        Ok(Self { n_max, table: EigenTable::new(model, n_max, xs)? })
    }

    pub fn points(&self) -> usize {
        self.table.points()
    }

    /// `Σ Re ρ_{n,k} ψ_n ψ_k`, with tiny negative noise clipped to zero.
    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.n_max() != self.n_max {
            return Err(Error::DimensionMismatch { expected: self.n_max + 1, found: rho.dim() });
        }
        let d = self.n_max + 1;
        let m = rho.matrix();
        let mut p = vec![0.0; self.table.points()];
        for n in 0..d {
            let psi_n = self.table.level(n);
            for k in 0..=n {
                // Hermitian part: off-diagonal pairs contribute twice their mean real part.
                let c = if n == k { m[(n, n)].re } else { m[(n, k)].re + m[(k, n)].re };
                if c == 0.0 {
                    continue;
                }
                let psi_k = self.table.level(k);
                for (pj, (a, b)) in p.iter_mut().zip(psi_n.iter().zip(psi_k)) {
                    *pj += c * a * b;
                }
            }
        }
        for v in &mut p {
            if *v < 0.0 && *v >= NEGATIVE_FLOOR {
                *v = 0.0;
            }
        }
        Ok(p)
    }
}

/// `p(x_j, t)` for one state and time.
pub fn position_distribution(
    state: &DensityMatrix,
    model: &OscillatorModel,
    xs: &[f64],
    t: f64,
    evolution: &Evolution,
) -> Result<Vec<f64>> {
    let eval = DistributionEvaluator::new(model, state.n_max(), xs)?;
    eval.evaluate(&evolve(state, model, evolution, t)?)
}

/// `Re Σ_α S_α(x_l, t_s) ρ_α` for a response family, rows `s`, columns `l`:
/// the expected (possibly smeared) distribution on a measurement geometry.
pub fn expected_distribution(
    family: &ResponseFamily,
    rho: &DensityMatrix,
    positions: &[f64],
    times: &TimeSampling,
) -> Result<DMatrix<f64>> {
    if rho.n_max() != family.n_max() {
        return Err(Error::DimensionMismatch { expected: family.dim(), found: rho.dim() });
    }
    let phi = family.spatial_matrix(positions)?;
    let v = rho.to_vector();
    let mut out = DMatrix::zeros(times.len(), positions.len());
    for (s, &t) in times.times().iter().enumerate() {
        let mixed: DVector<f64> = match family.time_factor(t)? {
            TimeFactor::Diagonal(u) => DVector::from_iterator(v.len(), u.iter().zip(v.iter()).map(|(a, b)| (a * b).re)),
            TimeFactor::Full(u) => (u * &v).map(|z| z.re),
        };
        let row = phi.tr_mul(&mixed);
        out.row_mut(s).copy_from(&row.transpose());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_grid;
    use crate::simulator::prepare_state;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ground_state_is_stationary() {
        let m = OscillatorModel::harmonic(1.0).unwrap();
        let rho = prepare_state(Complex64::new(0.0, 0.0), 3);
        let xs = [-1.0, 0.0, 0.7];
        let a = position_distribution(&rho, &m, &xs, 0.0, &Evolution::Unitary).unwrap();
        let b = position_distribution(&rho, &m, &xs, 4.2, &Evolution::Unitary).unwrap();
        for (j, &x) in xs.iter().enumerate() {
            let psi0 = m.eigenfunction(0, x).unwrap();
            assert!((a[j] - psi0 * psi0).abs() < 1e-15);
            assert_eq!(a[j], b[j]);
        }
    }

    #[test]
    fn normalized_at_random_times() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let grid = build_grid(&m, 12, 1e-10).unwrap();
        let rho = prepare_state(Complex64::new(-1.5, 0.0), 12);
        let eval = DistributionEvaluator::new(&m, 12, grid.nodes()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t = rng.random_range(0.0..100.0);
            let p = eval.evaluate(&evolve(&rho, &m, &Evolution::Unitary, t).unwrap()).unwrap();
            assert!((grid.integrate(&p) - 1.0).abs() < 1e-8);
            assert!(p.iter().all(|&v| !(NEGATIVE_FLOOR..0.0).contains(&v)));
        }
    }

    #[test]
    fn harmonic_half_period_mirror() {
        let m = OscillatorModel::harmonic(1.0).unwrap();
        let rho = prepare_state(Complex64::new(1.1, 0.4), 10);
        let xs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
        let mirrored: Vec<f64> = xs.iter().map(|x| -x).collect();
        let t = 0.83;
        let a = position_distribution(&rho, &m, &xs, t + std::f64::consts::PI, &Evolution::Unitary).unwrap();
        let b = position_distribution(&rho, &m, &mirrored, t, &Evolution::Unitary).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn morse_time_average_has_broader_outer_peak() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let rho = time_averaged_state(&prepare_state(Complex64::new(-1.5, 0.0), 12));
        let xs: Vec<f64> = (0..=1600).map(|i| -4.0 + i as f64 * 0.01).collect();
        let p = position_distribution(&rho, &m, &xs, 0.0, &Evolution::Unitary).unwrap();
        // Local maxima of the averaged density; the outermost two are the turning-point peaks.
        let peaks: Vec<usize> = (1..p.len() - 1).filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1]).collect();
        let (left, right) = (peaks[0], *peaks.last().unwrap());
        let half_width = |i: usize| {
            let half = 0.5 * p[i];
            let lo = (0..i).rev().find(|&j| p[j] < half).unwrap_or(0);
            let hi = (i..p.len()).find(|&j| p[j] < half).unwrap_or(p.len() - 1);
            xs[hi] - xs[lo]
        };
        assert!(xs[right] > xs[left]);
        assert!(half_width(right) > half_width(left), "{} {}", half_width(right), half_width(left));
    }

    #[test]
    fn expected_distribution_matches_direct_evaluation() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let rho = prepare_state(Complex64::new(-1.0, 0.3), 5);
        let family = ResponseFamily::unitary(&m, 5).unwrap();
        let times = TimeSampling::equidistant(10.0, 4).unwrap();
        let xs = [-0.5, 0.4, 2.0];
        let table = expected_distribution(&family, &rho, &xs, &times).unwrap();
        for (s, &t) in times.times().iter().enumerate() {
            let p = position_distribution(&rho, &m, &xs, t, &Evolution::Unitary).unwrap();
            for j in 0..3 {
                assert!((table[(s, j)] - p[j]).abs() < 1e-13);
            }
        }
    }
}
