//! Stochastic measurement records: position events and Poisson grid counts.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::kernels::{SmearingWindows, SpatialMeasure, TimeSampling};
use crate::rng::task_rng;
use crate::simulator::dataset::{MeasurementDataset, MeasurementRecord};

/// Default tolerance on the mass of a tabulated density before sampling.
pub const MASS_TOLERANCE: f64 = 1e-6;

/// Inverse-CDF sampler for a piecewise-linear density on ascending nodes.
#[derive(Debug, Clone)]
pub struct InverseCdfSampler {
    nodes: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdfSampler {
    /// Requires the trapezoid mass to be within `tolerance` of one; the
    /// density is renormalized to the exact trapezoid mass.
    pub fn new(nodes: &[f64], density: &[f64], tolerance: f64) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != density.len() {
            return Err(Error::InvalidParameter("sampler needs at least two nodes with matching density".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("sampler nodes must be strictly increasing".into()));
        }
        if let Some(bad) = density.iter().find(|&&p| !(p >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative or undefined density value {bad}")));
        }
        let mut cdf = Vec::with_capacity(nodes.len());
        cdf.push(0.0);
        for i in 1..nodes.len() {
            let area = 0.5 * (density[i] + density[i - 1]) * (nodes[i] - nodes[i - 1]);
            cdf.push(cdf[i - 1] + area);
        }
        let mass = *cdf.last().unwrap();
        if !((mass - 1.0).abs() <= tolerance) {
            return Err(Error::Unnormalized { mass });
        }
        Ok(Self {
            nodes: nodes.to_vec(),
            density: density.iter().map(|p| p / mass).collect(),
            cdf: cdf.iter().map(|c| c / mass).collect(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let (p0, p1) = (self.density[i - 1], self.density[i]);
        let r = u - self.cdf[i - 1];
        let slope = (p1 - p0) / (x1 - x0);
        // Root of p0·δ + slope·δ²/2 = r in the cancellation-free form.
        let disc = (p0 * p0 + 2.0 * slope * r).max(0.0);
        let denom = p0 + disc.sqrt();
        let delta = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (x0 + delta).clamp(x0, x1)
    }
}

/// Draws `per_time` events from each row of `densities` (rows are times,
/// columns are `nodes`). Time slice `s` uses the generator `(seed, s)`.
pub fn sample_events(
    nodes: &[f64],
    densities: &DMatrix<f64>,
    per_time: usize,
    times: &TimeSampling,
    seed: u64,
) -> Result<MeasurementDataset> {
    if per_time == 0 {
        return Err(Error::InvalidParameter("events per time must be at least 1".into()));
    }
    if densities.nrows() != times.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: densities.nrows() });
    }
    let mut events = Vec::with_capacity(times.len());
    for s in 0..times.len() {
        let row: Vec<f64> = densities.row(s).iter().copied().collect();
        let sampler = InverseCdfSampler::new(nodes, &row, MASS_TOLERANCE)?;
        let mut rng = task_rng(seed, &[s as u64]);
        events.push((0..per_time).map(|_| sampler.sample(&mut rng)).collect());
    }
    MeasurementDataset::new(
        times.clone(),
        MeasurementRecord::RawEvents { events, bounds: (nodes[0], nodes[nodes.len() - 1]) },
        SmearingWindows::none(),
        seed,
    )
}

/// Poisson counts on `positions × times` with means `scale_s · p̄(x_l, t_s)`,
/// where `scale_s = N_tot Δx w_s / (T ∫W ∫V)` so the means sum to about
/// `N_tot` when the windows tile the measured region. Cell `(s, l)` uses the
/// generator `(seed, s, l)`.
pub fn grid_counts(
    smeared: &DMatrix<f64>,
    measure: &SpatialMeasure,
    times: &TimeSampling,
    total: f64,
    windows: SmearingWindows,
    seed: u64,
) -> Result<MeasurementDataset> {
    let SpatialMeasure::Points { positions, spacing } = measure else {
        return Err(Error::InvalidParameter("grid counts need a point measurement grid".into()));
    };
    if !(total >= 1.0) {
        return Err(Error::InvalidParameter(format!("total count must be at least 1, got {total}")));
    }
    if smeared.nrows() != times.len() || smeared.ncols() != positions.len() {
        return Err(Error::DimensionMismatch { expected: times.len() * positions.len(), found: smeared.len() });
    }
    let record = MeasurementRecord::GridCounts {
        positions: positions.clone(),
        spacing: *spacing,
        counts: vec![vec![0; positions.len()]; times.len()],
        total,
    };
    let mut dataset = MeasurementDataset::new(times.clone(), record, windows, seed)?;
    let scales: Vec<f64> = (0..times.len()).map(|s| dataset.cell_scale(s)).collect();
    let MeasurementRecord::GridCounts { counts, .. } = &mut dataset.record else { unreachable!() };
    for (s, row) in counts.iter_mut().enumerate() {
        for (l, c) in row.iter_mut().enumerate() {
            let mean = scales[s] * smeared[(s, l)].max(0.0);
            *c = if mean > 0.0 {
                let mut rng = task_rng(seed, &[s as u64, l as u64]);
                Poisson::new(mean)
                    .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
                    .sample(&mut rng) as u64
            } else {
                0
            };
        }
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillators::OscillatorModel;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn ground_density(xs: &[f64]) -> Vec<f64> {
        let m = OscillatorModel::harmonic(1.0).unwrap();
        xs.iter().map(|&x| m.eigenfunction(0, x).unwrap().powi(2)).collect()
    }

    fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn gaussian_mean_and_histogram() {
        let xs = uniform(-8.0, 8.0, 1601);
        let p = ground_density(&xs);
        let sampler = InverseCdfSampler::new(&xs, &p, 1e-6).unwrap();
        let mut rng = task_rng(11, &[]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * (0.5f64).sqrt() / (n as f64).sqrt());
        // Chi-square against the exact Gaussian CDF on 20 bins of the central region.
        let edges = uniform(-2.5, 2.5, 21);
        let cdf = |x: f64| 0.5 * (1.0 + statrs::function::erf::erf(x));
        let mut chi2 = 0.0;
        let mut bins = 0;
        for w in edges.windows(2) {
            let expect = n as f64 * (cdf(w[1]) - cdf(w[0]));
            let seen = draws.iter().filter(|&&x| x >= w[0] && x < w[1]).count() as f64;
            chi2 += (seen - expect).powi(2) / expect;
            bins += 1;
        }
        let crit = ChiSquared::new(bins as f64).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "chi2 {chi2} > {crit}");
    }

    #[test]
    fn unnormalized_density_rejected() {
        let xs = uniform(-8.0, 8.0, 801);
        let p: Vec<f64> = ground_density(&xs).iter().map(|v| 1.1 * v).collect();
        assert!(matches!(InverseCdfSampler::new(&xs, &p, 1e-6), Err(Error::Unnormalized { .. })));
    }

    #[test]
    fn events_are_reproducible_and_in_bounds() {
        let xs = uniform(-8.0, 8.0, 801);
        let p = ground_density(&xs);
        let times = TimeSampling::equidistant(1.0, 3).unwrap();
        let table = DMatrix::from_fn(3, xs.len(), |_, j| p[j]);
        let a = sample_events(&xs, &table, 200, &times, 5).unwrap();
        let b = sample_events(&xs, &table, 200, &times, 5).unwrap();
        assert_eq!(a, b);
        let MeasurementRecord::RawEvents { events, .. } = &a.record else { panic!() };
        assert!(events.iter().flatten().all(|&x| (-8.0..=8.0).contains(&x)));
        assert_ne!(events[0], events[1]);
        assert!(sample_events(&xs, &table, 0, &times, 5).is_err());
    }

    #[test]
    fn count_total_matches_requested() {
        // Flat density over the measured window, no smearing: means sum to N_tot·(N_x/(N_x-1)).
        let measure = SpatialMeasure::equidistant(0.0, 1.0, 11).unwrap();
        let times = TimeSampling::equidistant(2.0, 10).unwrap();
        let flat = DMatrix::from_element(10, 11, 1.0);
        let n_tot = 1e5;
        let ds = grid_counts(&flat, &measure, &times, n_tot, SmearingWindows::none(), 9).unwrap();
        let sum: u64 = ds.totals().iter().sum();
        let expect = n_tot * 11.0 / 10.0;
        assert!((sum as f64 - expect).abs() < 3.0 * expect.sqrt(), "{sum} {expect}");
        let zero = grid_counts(&DMatrix::zeros(10, 11), &measure, &times, n_tot, SmearingWindows::none(), 9).unwrap();
        assert!(zero.totals().iter().all(|&c| c == 0));
        let again = grid_counts(&flat, &measure, &times, n_tot, SmearingWindows::none(), 9).unwrap();
        assert_eq!(ds, again);
    }
}
