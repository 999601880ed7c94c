//! Composite Gauss-Legendre grids for the position integrals.

use crate::error::{Error, Result};
use crate::oscillators::OscillatorModel;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be at least 1");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature grid on a finite position interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bounds: (f64, f64),
    panels: usize,
    order: usize,
}

impl SpatialGrid {
    /// `panels` equal Gauss-Legendre panels of `order` nodes on `[lo, hi]`.
    pub fn composite(lo: f64, hi: f64, panels: usize, order: usize) -> Result<Self> {
        if !(lo < hi) || panels == 0 || order == 0 {
            return Err(Error::InvalidParameter(format!(
                "bad composite grid [{lo}, {hi}] with {panels} panels of order {order}"
            )));
        }
        let (gx, gw) = gauss_legendre(order);
        let h = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * h;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * w);
            }
        }
        Ok(Self { nodes, weights, bounds: (lo, hi), panels, order })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Same interval with twice as many panels.
    pub fn refined(&self) -> Self {
        Self::composite(self.bounds.0, self.bounds.1, 2 * self.panels, self.order)
            .expect("refining a valid grid")
    }

    /// Quadrature sum of tabulated values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Quadrature of a function evaluated at the nodes.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, w)| w * f(x)).sum()
    }
}

/// Options for [`build_grid`].
#[derive(Debug, Clone, Copy)]
pub struct GridOptions {
    pub panels: usize,
    pub order: usize,
    /// Maximum number of panel doublings.
    pub max_refinements: usize,
    /// Orthonormality tolerance the grid must meet.
    pub tolerance: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { panels: 64, order: 8, max_refinements: 8, tolerance: 1e-8 }
    }
}

/// Eigenfunction values `ψ_n(x_j)` on a fixed set of positions.
#[derive(Debug, Clone)]
pub struct EigenTable {
    /// `values[n][j] = ψ_n(x_j)`
    values: Vec<Vec<f64>>,
}

impl EigenTable {
    pub fn new(model: &OscillatorModel, n_max: usize, xs: &[f64]) -> Result<Self> {
        let levels = model.levels(n_max)?;
        let mut values = vec![Vec::with_capacity(xs.len()); n_max + 1];
        let mut psi = vec![0.0; n_max + 1];
        for &x in xs {
            levels.fill(x, &mut psi);
            for (row, &v) in values.iter_mut().zip(&psi) {
                row.push(v);
            }
        }
        Ok(Self { values })
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.values[n]
    }

    pub fn levels(&self) -> usize {
        self.values.len()
    }

    pub fn points(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Largest deviation of the quadrature Gram matrix of `ψ_0..ψ_{n_max}`
/// from the identity.
pub fn orthonormality_deviation(model: &OscillatorModel, n_max: usize, grid: &SpatialGrid) -> Result<f64> {
    let table = EigenTable::new(model, n_max, grid.nodes())?;
    let mut worst: f64 = 0.0;
    for n in 0..=n_max {
        for m in 0..=n {
            let s: f64 = grid
                .weights()
                .iter()
                .zip(table.level(n).iter().zip(table.level(m)))
                .map(|(w, (a, b))| w * a * b)
                .sum();
            let target = if n == m { 1.0 } else { 0.0 };
            worst = worst.max((s - target).abs());
        }
    }
    Ok(worst)
}

/// Picks an interval outside of which every `|ψ_n|`, `n ≤ n_max`, stays
/// below `tail_tol`, then refines the panel count until the eigenfunctions
/// are orthonormal on the grid.
pub fn build_grid(model: &OscillatorModel, n_max: usize, tail_tol: f64) -> Result<SpatialGrid> {
    build_grid_with(model, n_max, tail_tol, GridOptions::default())
}

pub fn build_grid_with(
    model: &OscillatorModel,
    n_max: usize,
    tail_tol: f64,
    opts: GridOptions,
) -> Result<SpatialGrid> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tail tolerance must be positive, got {tail_tol}")));
    }
    model.check_level(n_max)?;
    let (left_turn, right_turn) = model.turning_points(n_max)?;
    let lo = tail_edge(model, n_max, left_turn, -1.0, tail_tol)?;
    let hi = tail_edge(model, n_max, right_turn, 1.0, tail_tol)?;
    let mut grid = SpatialGrid::composite(lo, hi, opts.panels, opts.order)?;
    for _ in 0..=opts.max_refinements {
        let dev = orthonormality_deviation(model, n_max, &grid)?;
        if dev < opts.tolerance {
            return Ok(grid);
        }
        grid = grid.refined();
    }
    Err(Error::Config(format!(
        "grid on [{lo}, {hi}] failed the orthonormality tolerance {} after {} refinements",
        opts.tolerance, opts.max_refinements
    )))
}

/// Walks outward from a turning point on a half-unit lattice until every
/// eigenfunction is below `tol`, then pads by one lattice step.
fn tail_edge(model: &OscillatorModel, n_max: usize, turn: f64, dir: f64, tol: f64) -> Result<f64> {
    const STEP: f64 = 0.5;
    let levels = model.levels(n_max)?;
    let mut psi = vec![0.0; n_max + 1];
    let mut x = (turn / STEP).round() * STEP;
    for _ in 0..100_000 {
        levels.fill(x, &mut psi);
        if psi.iter().all(|v| v.abs() < tol) {
            return Ok(x + dir * STEP);
        }
        x += dir * STEP;
    }
    Err(Error::Config(format!("eigenfunction tails do not fall below {tol}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // ∫ x^14 over [-1, 1] = 2/15
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn harmonic_ground_grid_contains_seven() {
        let m = OscillatorModel::harmonic(1.0).unwrap();
        let g = build_grid(&m, 0, 1e-10).unwrap();
        let (lo, hi) = g.bounds();
        assert!(lo <= -7.0 && hi >= 7.0, "{lo} {hi}");
    }

    #[test]
    fn doubling_changes_ground_norm_negligibly() {
        for m in [OscillatorModel::harmonic(1.0).unwrap(), OscillatorModel::morse(0.279).unwrap()] {
            let g = build_grid(&m, 3, 1e-10).unwrap();
            let f = |grid: &SpatialGrid| grid.integrate_fn(|x| m.eigenfunction(0, x).unwrap().powi(2));
            assert!((f(&g) - f(&g.refined())).abs() < 1e-10);
        }
    }

    #[test]
    fn morse_grid_covers_measurement_window() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let g = build_grid(&m, 12, 1e-10).unwrap();
        let (lo, hi) = g.bounds();
        assert!(lo <= -2.0 && hi >= 10.0);
        assert!(g.nodes().windows(2).all(|p| p[1] > p[0]));
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn rejects_nonpositive_tail_tolerance() {
        let m = OscillatorModel::harmonic(1.0).unwrap();
        assert!(build_grid(&m, 2, 0.0).is_err());
    }
}
