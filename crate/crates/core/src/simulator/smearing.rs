//! Instrument convolution `p̄(x,t) = ∬ V(t'-t) W(x'-x) p(x',t') dx' dt'`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::SmearingWindows;

/// Number of window widths of data required on each side of an output point.
pub const SMEARING_MARGIN: f64 = 6.0;

/// `p(x_j, t_i)` on uniform position and time axes; rows are times.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeTable {
    pub positions: Vec<f64>,
    pub times: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl SpaceTimeTable {
    pub fn new(positions: Vec<f64>, times: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != times.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: values.nrows() });
        }
        if values.ncols() != positions.len() {
            return Err(Error::DimensionMismatch { expected: positions.len(), found: values.ncols() });
        }
        for (name, axis) in [("position", &positions), ("time", &times)] {
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidParameter(format!("{name} axis must be strictly increasing")));
            }
        }
        Ok(Self { positions, times, values })
    }
}

/// Smears `table` with Gaussian windows and samples the result at
/// `out_positions × out_times` (rows are times). The convolution is a
/// trapezoid sum on the table axes; a zero-width axis is interpolated linearly.
pub fn smear_distribution(
    table: &SpaceTimeTable,
    windows: SmearingWindows,
    out_positions: &[f64],
    out_times: &[f64],
) -> Result<DMatrix<f64>> {
    windows.validate()?;
    let along_x = axis_operator(&table.positions, out_positions, windows.sigma_x, "position")?;
    let along_t = axis_operator(&table.times, out_times, windows.sigma_t, "time")?;
    Ok(&along_t * &table.values * along_x.transpose())
}

/// Matrix `A[o, j]` mapping samples on `axis` to smeared values at `out`.
fn axis_operator(axis: &[f64], out: &[f64], sigma: f64, name: &'static str) -> Result<DMatrix<f64>> {
    let (lo, hi) = match (axis.first(), axis.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::InvalidParameter(format!("empty {name} axis"))),
    };
    let pad = SMEARING_MARGIN * sigma;
    let (need_lo, need_hi) = out.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if need_lo - pad < lo - 1e-12 || need_hi + pad > hi + 1e-12 {
        return Err(Error::InsufficientMargin { axis: name, required: pad });
    }
    let mut op = DMatrix::zeros(out.len(), axis.len());
    if sigma == 0.0 {
        for (o, &x) in out.iter().enumerate() {
            let j = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1);
            if axis.len() == 1 {
                op[(o, 0)] = 1.0;
                continue;
            }
            let (a, b) = (axis[j - 1], axis[j]);
            let f = ((x - a) / (b - a)).clamp(0.0, 1.0);
            op[(o, j - 1)] += 1.0 - f;
            op[(o, j)] += f;
        }
        return Ok(op);
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let n = axis.len();
    for (o, &x) in out.iter().enumerate() {
        for j in 0..n {
            let left = if j > 0 { axis[j] - axis[j - 1] } else { 0.0 };
            let right = if j + 1 < n { axis[j + 1] - axis[j] } else { 0.0 };
            op[(o, j)] = 0.5 * (left + right) * (-(axis[j] - x).powi(2) * inv).exp();
        }
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gauss(x: f64, var: f64) -> f64 {
        (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_widths_reproduce_table() {
        let xs = uniform(-1.0, 1.0, 21);
        let ts = uniform(0.0, 2.0, 11);
        let values = DMatrix::from_fn(11, 21, |i, j| (ts[i] + 2.0 * xs[j]).sin());
        let table = SpaceTimeTable::new(xs.clone(), ts.clone(), values.clone()).unwrap();
        let out = smear_distribution(&table, SmearingWindows::none(), &xs, &ts).unwrap();
        assert!((out - values).norm() < 1e-14);
    }

    #[test]
    fn gaussian_widths_add_in_quadrature() {
        let (s0, sx, st) = (0.5f64, 0.3f64, 0.4f64);
        let (tau0, t_c) = (0.6f64, 5.0);
        let xs = uniform(-6.0, 6.0, 601);
        let ts = uniform(0.0, 10.0, 501);
        let values = DMatrix::from_fn(ts.len(), xs.len(), |i, j| gauss(xs[j], s0 * s0) * gauss(ts[i] - t_c, tau0 * tau0));
        let table = SpaceTimeTable::new(xs, ts, values).unwrap();
        let w = SmearingWindows::new(st, sx).unwrap();
        let out_x = [-0.7, 0.0, 1.2];
        let out_t = [4.0, 5.3];
        let got = smear_distribution(&table, w, &out_x, &out_t).unwrap();
        let mass = 2.0 * PI * sx * st;
        for (i, &t) in out_t.iter().enumerate() {
            for (j, &x) in out_x.iter().enumerate() {
                let expect = mass * gauss(x, s0 * s0 + sx * sx) * gauss(t - t_c, tau0 * tau0 + st * st);
                assert!((got[(i, j)] - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn insufficient_margin_names_axis() {
        let xs = uniform(-1.0, 1.0, 21);
        let ts = uniform(0.0, 1.0, 11);
        let table = SpaceTimeTable::new(xs, ts, DMatrix::zeros(11, 21)).unwrap();
        let w = SmearingWindows::new(0.0, 0.5).unwrap();
        match smear_distribution(&table, w, &[0.0], &[0.5]) {
            Err(Error::InsufficientMargin { axis, .. }) => assert_eq!(axis, "position"),
            other => panic!("{other:?}"),
        }
    }
}
