//! Subcommand implementations. Every command validates its configuration
//! before computing and writes only into its output directory.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use lsqtomo_core::kernels::{
    anharmonic_kernels, frequency_classes, spacetime_kernels, ElementIndexMap, ResponseFamily, SamplingKernelSet,
    SmearingWindows, SpatialMeasure, TimeSampling,
};
use lsqtomo_core::lsq::{l_curve, CMatrix, LCurve, Regularization};
use lsqtomo_core::oscillators::OscillatorModel;
use lsqtomo_core::quadrature::{build_grid, SpatialGrid};
use lsqtomo_core::reconstruct::{
    fourier_project, fourier_project_table, normal_equations, reconstruct_factorable, reconstruct_spacetime,
    reconstruct_spacetime_exact, regularization_bias, ProjectionScheme, ReconstructionResult,
};
use lsqtomo_core::simulator::{
    build_propagator, expected_distribution, grid_counts, prepare_state, sample_events, time_averaged_state,
    DensityMatrix, DistributionEvaluator, Liouvillian,
};
use lsqtomo_core::Error as CoreError;

use crate::config::{validate_sweep, ExperimentConfig, KernelChoice, MeasurementMode, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::io::{
    create_dir, num, read_dataset, write_csv, write_dataset, write_density, write_metadata, write_text, write_toml,
    DatasetMetadata, StoredData, StoredMatrix,
};
use crate::plot::{bar_chart, line_chart, Bar, LineChart, Scale, Series};

/// Eigenfunction tails beyond the grid carry less than this probability.
pub const TAIL_TOL: f64 = 1e-10;
/// Uniform nodes of the tabulated density used for event sampling.
pub const SAMPLING_NODES: usize = 40_001;
/// Kernel tables larger than this keep only the first observation time.
pub const MAX_TABLE_ROWS: usize = 2_000_000;
/// Positions at which plotted kernels are evaluated.
const PLOT_POINTS: usize = 400;

/// Command-line overrides shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub plots: bool,
    pub lambdas: Option<Vec<f64>>,
}

/// Loads the configuration, applies overrides and validates the result.
pub fn load_config(path: &Path, overrides: &Overrides) -> CliResult<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(l) = &overrides.lambdas {
        cfg.reconstruction.sweep = l.clone();
    }
    cfg.validate()?;
    let out = overrides.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    Ok((cfg, out))
}

/// Everything derived from a configuration that the commands share.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: OscillatorModel,
    pub truth: DensityMatrix,
    pub grid: SpatialGrid,
    pub times: TimeSampling,
    pub windows: SmearingWindows,
    pub family: ResponseFamily,
    pub measure: SpatialMeasure,
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> CliResult<Self> {
        let model = config.model()?;
        let n_max = config.state.n_max;
        let grid = build_grid(&model, n_max, TAIL_TOL)?;
        let times = config.times(&model)?;
        let windows = config.windows(&model)?;
        let family = if config.evolution.damping > 0.0 {
            let generator = Liouvillian::AmplitudeDamping { gamma: config.evolution.damping };
            let propagator = build_propagator(&model, n_max, generator, times.times())?;
            ResponseFamily::damped(&model, &propagator)?
        } else if windows.is_trivial() {
            ResponseFamily::unitary(&model, n_max)?
        } else {
            ResponseFamily::smeared(&model, n_max, windows, &grid)?
        };
        let measure = match (config.measurement.positions, config.measurement.bounds) {
            (Some(n), Some([lo, hi])) => SpatialMeasure::equidistant(lo, hi, n)?,
            _ => SpatialMeasure::Quadrature(grid.clone()),
        };
        Ok(Self {
            config: config.clone(),
            truth: prepare_state(config.alpha(), n_max),
            model,
            grid,
            times,
            windows,
            family,
            measure,
        })
    }

    /// Kernel sets for the configured reconstruction: one space-time set, or
    /// one position-only set for the populations.
    pub fn kernels(&self, regularization: Regularization) -> CliResult<Vec<SamplingKernelSet>> {
        let n_max = self.config.state.n_max;
        Ok(match self.config.reconstruction.kernel {
            KernelChoice::Spacetime => vec![spacetime_kernels(
                &self.family,
                &self.measure,
                &self.times,
                &ElementIndexMap::full(n_max),
                regularization,
            )?],
            KernelChoice::Diagonal => {
                let class = frequency_classes(&self.model, n_max, 1e-9)?
                    .into_iter()
                    .find(|c| c.omega == 0.0)
                    .ok_or_else(|| CoreError::MissingClass("diagonal".into()))?;
                vec![anharmonic_kernels(&self.model, &class, n_max, &self.grid)?]
            }
        })
    }

    fn sampling_nodes(&self) -> Vec<f64> {
        let (lo, hi) = self.grid.bounds();
        let n = SAMPLING_NODES;
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Directory holding the simulated dataset of a run.
pub fn dataset_dir(out: &Path) -> PathBuf {
    out.join("dataset")
}

fn write_config(out: &Path, cfg: &ExperimentConfig) -> CliResult<()> {
    create_dir(out)?;
    write_text(&out.join("config.toml"), &cfg.to_toml())
}

/// Simulates the configured measurement into `<out>/dataset`.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> CliResult<PathBuf> {
    let exp = Experiment::new(cfg)?;
    let dir = dataset_dir(out);
    write_config(out, cfg)?;
    create_dir(&dir)?;
    let ms = &cfg.measurement;
    let mut meta = DatasetMetadata {
        schema_version: SCHEMA_VERSION,
        mode: ms.mode,
        seed: cfg.seed,
        period: exp.times.period(),
        times: exp.times.times().to_vec(),
        time_weights: exp.times.weights().to_vec(),
        sigma_t: exp.windows.sigma_t,
        sigma_x: exp.windows.sigma_x,
        bounds: None,
        spacing: None,
        total_counts: None,
        truth: Some(StoredMatrix::from_matrix(exp.truth.matrix())),
    };
    let summary = match ms.mode {
        MeasurementMode::Events => {
            let nodes = exp.sampling_nodes();
            let density = if cfg.evolution.time_averaged {
                let p = DistributionEvaluator::new(&exp.model, cfg.state.n_max, &nodes)?
                    .evaluate(&time_averaged_state(&exp.truth))?;
                DMatrix::from_row_slice(1, nodes.len(), &p)
            } else {
                expected_distribution(&exp.family, &exp.truth, &nodes, &exp.times)?
            };
            let per_time = ms.events_per_time.unwrap_or_default();
            let ds = sample_events(&nodes, &density, per_time, &exp.times, cfg.seed)?;
            meta.bounds = Some([nodes[0], nodes[nodes.len() - 1]]);
            write_dataset(&dir, &ds)?;
            format!("{} events at {} times", per_time * exp.times.len(), exp.times.len())
        }
        MeasurementMode::Counts => {
            let mean = expected_distribution(&exp.family, &exp.truth, exp.measure.positions(), &exp.times)?;
            let total = ms.total_counts.unwrap_or_default();
            let ds = grid_counts(&mean, &exp.measure, &exp.times, total, exp.windows, cfg.seed)?;
            let SpatialMeasure::Points { spacing, .. } = &exp.measure else {
                unreachable!("counts mode requires a position grid")
            };
            meta.spacing = Some(*spacing);
            meta.total_counts = Some(total);
            write_dataset(&dir, &ds)?;
            let recorded: u64 = ds.totals().iter().sum();
            format!("{recorded} counts on {} positions at {} times", exp.measure.len(), exp.times.len())
        }
        MeasurementMode::Exact => {
            let density = expected_distribution(&exp.family, &exp.truth, exp.measure.positions(), &exp.times)?;
            write_density(&dir, exp.measure.positions(), exp.times.times(), &density)?;
            format!("exact distribution on {} positions at {} times", exp.measure.len(), exp.times.len())
        }
    };
    write_metadata(&dir, &meta)?;
    println!("simulate: {summary} -> {}", dir.display());
    Ok(dir)
}

#[derive(Serialize)]
struct KernelReport {
    schema_version: u32,
    kernel: KernelChoice,
    regularization: String,
    /// Observation times included in the kernel table.
    table_times: usize,
    sets: Vec<KernelSetReport>,
}

#[derive(Serialize)]
struct KernelSetReport {
    omega: f64,
    elements: usize,
    condition_estimate: f64,
    identity_deviation: f64,
}

fn describe(reg: Regularization) -> String {
    match reg {
        Regularization::None => "none".into(),
        Regularization::Tikhonov { lambda } => format!("tikhonov lambda={}", num(lambda)),
        Regularization::SvdTruncation { sigma0 } => format!("svd sigma0={}", num(sigma0)),
    }
}

/// Writes kernel tables, a condition report and optional kernel plots.
pub fn kernels(cfg: &ExperimentConfig, out: &Path, plots: bool) -> CliResult<()> {
    let exp = Experiment::new(cfg)?;
    let sets = exp.kernels(cfg.regularization())?;
    write_config(out, cfg)?;
    let xs = exp.measure.positions();
    let rows_per_time: usize = sets.iter().map(|k| k.index_map().len() * xs.len()).sum();
    let n_t = exp.times.len();
    let table_times = if rows_per_time * n_t > MAX_TABLE_ROWS { 1 } else { n_t };
    let mut rows = Vec::with_capacity(rows_per_time * table_times);
    for set in &sets {
        let ts = set.times().times();
        for (s, &t) in ts.iter().enumerate().take(table_times) {
            let (re, im) = set.kernel_values(s, xs)?;
            for (a, &(n, m)) in set.index_map().pairs().iter().enumerate() {
                for (j, &x) in xs.iter().enumerate() {
                    rows.push(vec![n.to_string(), m.to_string(), num(x), num(t), num(re[(a, j)]), num(im[(a, j)])]);
                }
            }
        }
    }
    write_csv(&out.join("kernels.csv"), &["n", "m", "position", "time", "re", "im"], rows)?;

    let mut reports = Vec::new();
    for set in &sets {
        let dev = set.identity_deviation();
        println!(
            "kernels: omega {:.6} elements {} condition estimate {:.3e} max deviation from identity {:.3e}",
            set.omega(),
            set.index_map().len(),
            set.condition_estimate(),
            dev
        );
        reports.push(KernelSetReport {
            omega: set.omega(),
            elements: set.index_map().len(),
            condition_estimate: set.condition_estimate(),
            identity_deviation: dev,
        });
    }
    if table_times < n_t {
        println!("kernels: table limited to the first observation time ({} rows per time)", rows_per_time);
    }
    let report = KernelReport {
        schema_version: SCHEMA_VERSION,
        kernel: cfg.reconstruction.kernel,
        regularization: describe(cfg.regularization()),
        table_times,
        sets: reports,
    };
    write_toml(&out.join("kernels.toml"), &report)?;

    if plots {
        let (lo, hi) = match &exp.measure {
            SpatialMeasure::Points { positions, .. } => (positions[0], positions[positions.len() - 1]),
            SpatialMeasure::Quadrature(g) => g.bounds(),
        };
        let fine: Vec<f64> = (0..PLOT_POINTS).map(|i| lo + (hi - lo) * i as f64 / (PLOT_POINTS - 1) as f64).collect();
        for &n in &cfg.reconstruction.plot_levels {
            let set = &sets[0];
            let a = set.index_map().position(n, n).ok_or_else(|| CliError::Validation(format!("no kernel for level {n}")))?;
            let (re, _) = set.kernel_values(0, &fine)?;
            let series = Series { label: format!("K_{n}{n}"), points: fine.iter().enumerate().map(|(j, &x)| (x, re[(a, j)])).collect() };
            let chart = LineChart {
                title: format!("Diagonal kernel n = {n}"),
                x_label: "x".into(),
                y_label: "K(x)".into(),
                x_scale: Scale::Linear,
                y_scale: Scale::Linear,
                markers: false,
                series: vec![series],
            };
            write_text(&out.join(format!("kernel_n{n}.svg")), &line_chart(&chart))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ResultReport {
    schema_version: u32,
    kernel: KernelChoice,
    regularization: String,
    trace: f64,
    min_eigenvalue: f64,
    condition_estimate: f64,
    asymmetry: f64,
    negative_diagonals: Vec<usize>,
    bias_replicates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<ComparisonSummary>,
}

#[derive(Serialize, Clone, Copy)]
struct ComparisonSummary {
    max_abs_error: f64,
    rms_error: f64,
    max_abs_z: f64,
}

fn check_times(meta: &DatasetMetadata, times: &TimeSampling) -> CliResult<()> {
    let same = meta.times.len() == times.len()
        && meta.times.iter().zip(times.times()).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()))
        && (meta.period - times.period()).abs() <= 1e-12 * times.period();
    if same {
        Ok(())
    } else {
        Err(CoreError::GeometryMismatch("dataset times differ from the configured time sampling".into()).into())
    }
}

fn check_positions(found: &[f64], measure: &SpatialMeasure) -> CliResult<()> {
    let expected = measure.positions();
    let same = found.len() == expected.len()
        && found.iter().zip(expected).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    if same {
        Ok(())
    } else {
        Err(CoreError::GeometryMismatch(format!(
            "dataset has {} positions, configuration expects {} different ones",
            found.len(),
            expected.len()
        ))
        .into())
    }
}

fn estimate(exp: &Experiment, sets: &[SamplingKernelSet], data: &StoredData) -> CliResult<ReconstructionResult> {
    let cfg = &exp.config;
    Ok(match (data, cfg.reconstruction.kernel) {
        (StoredData::Measured(ds), KernelChoice::Spacetime) => {
            let mut r = reconstruct_spacetime(ds, &sets[0])?;
            let reps = cfg.reconstruction.bias_replicates;
            if reps >= 2 && cfg.measurement.mode == MeasurementMode::Counts {
                let b = regularization_bias(&sets[0], ds, &r.estimate, reps, cfg.seed)?;
                let d = r.n_max() + 1;
                let mut bias = CMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
                for (&(n, m), v) in sets[0].index_map().pairs().iter().zip(b.iter()) {
                    bias[(n, m)] = *v;
                }
                r.bias = Some(bias);
            }
            r
        }
        (StoredData::Measured(ds), KernelChoice::Diagonal) => {
            let proj = fourier_project(ds, 0.0, &ProjectionScheme::TimeAveraged)?;
            reconstruct_factorable(&[proj], sets)?
        }
        (StoredData::Exact { positions, density }, KernelChoice::Spacetime) => {
            check_positions(positions, sets[0].measure())?;
            reconstruct_spacetime_exact(density, &sets[0])?
        }
        (StoredData::Exact { positions, density }, KernelChoice::Diagonal) => {
            check_positions(positions, sets[0].measure())?;
            let proj = fourier_project_table(density, positions, &exp.times, 0.0, &ProjectionScheme::TimeAveraged)?;
            reconstruct_factorable(&[proj], sets)?
        }
    })
}

fn load_matching(exp: &Experiment, dataset: &Path) -> CliResult<(DatasetMetadata, StoredData)> {
    let (meta, data) = read_dataset(dataset)?;
    if meta.mode != exp.config.measurement.mode {
        return Err(CliError::Validation(format!(
            "dataset mode {:?} does not match configured mode {:?}",
            meta.mode, exp.config.measurement.mode
        )));
    }
    check_times(&meta, &exp.times)?;
    Ok((meta, data))
}

/// Reconstructs a dataset directory and compares with its ground truth when present.
pub fn reconstruct(cfg: &ExperimentConfig, dataset: &Path, out: &Path, plots: bool) -> CliResult<()> {
    let exp = Experiment::new(cfg)?;
    let (meta, data) = load_matching(&exp, dataset)?;
    let sets = exp.kernels(cfg.regularization())?;
    let r = estimate(&exp, &sets, &data)?;
    write_config(out, cfg)?;
    let d = r.n_max() + 1;
    let pairs: Vec<(usize, usize)> =
        (0..d).flat_map(|n| (0..d).map(move |m| (n, m))).filter(|&(n, m)| r.estimated[(n, m)]).collect();
    let bias = |n: usize, m: usize, f: fn(&Complex64) -> f64| r.bias.as_ref().map_or(String::new(), |b| num(f(&b[(n, m)])));
    let rows = pairs.iter().map(|&(n, m)| {
        let v = r.estimate.get(n, m);
        vec![
            n.to_string(),
            m.to_string(),
            num(v.re),
            num(v.im),
            num(r.std_real[(n, m)]),
            num(r.std_imag[(n, m)]),
            bias(n, m, |z| z.re),
            bias(n, m, |z| z.im),
        ]
    });
    write_csv(&out.join("results.csv"), &["n", "m", "re", "im", "std_re", "std_im", "bias_re", "bias_im"], rows)?;

    let truth = meta.truth.as_ref().map(StoredMatrix::to_density).transpose()?;
    let comparison = match &truth {
        Some(t) if t.dim() == d => Some(compare(&r, t, &pairs, out)?),
        Some(t) => {
            println!("reconstruct: ground truth has {} levels, estimate {d}; comparison skipped", t.dim());
            None
        }
        None => None,
    };
    let diag = &r.diagnostics;
    let report = ResultReport {
        schema_version: SCHEMA_VERSION,
        kernel: cfg.reconstruction.kernel,
        regularization: describe(diag.regularization),
        trace: diag.trace,
        min_eigenvalue: diag.min_eigenvalue,
        condition_estimate: diag.condition_estimate,
        asymmetry: diag.asymmetry,
        negative_diagonals: diag.negative_diagonals.clone(),
        bias_replicates: if r.bias.is_some() { cfg.reconstruction.bias_replicates } else { 0 },
        comparison,
    };
    write_toml(&out.join("result.toml"), &report)?;
    println!(
        "reconstruct: trace {:.6} min eigenvalue {:.3e} condition estimate {:.3e}",
        diag.trace, diag.min_eigenvalue, diag.condition_estimate
    );
    if plots {
        plot_result(&r, truth.as_ref(), out)?;
    }
    Ok(())
}

fn z_score(diff: f64, std: f64) -> f64 {
    if std > 0.0 {
        diff / std
    } else {
        f64::NAN
    }
}

fn compare(r: &ReconstructionResult, truth: &DensityMatrix, pairs: &[(usize, usize)], out: &Path) -> CliResult<ComparisonSummary> {
    let header = ["n", "m", "estimate_re", "estimate_im", "truth_re", "truth_im", "std_re", "std_im", "z_re", "z_im"];
    let mut rows = Vec::with_capacity(pairs.len());
    let (mut max_err, mut sum_sq, mut max_z) = (0.0f64, 0.0, 0.0f64);
    println!("{:>3} {:>3} {:>14} {:>14} {:>12} {:>8}", "n", "m", "estimate", "truth", "std", "z");
    for &(n, m) in pairs {
        let (e, t) = (r.estimate.get(n, m), truth.get(n, m));
        let (zr, zi) = (z_score(e.re - t.re, r.std_real[(n, m)]), z_score(e.im - t.im, r.std_imag[(n, m)]));
        let err = (e - t).norm();
        max_err = max_err.max(err);
        sum_sq += err * err;
        for z in [zr, zi] {
            if z.is_finite() {
                max_z = max_z.max(z.abs());
            }
        }
        if n == m {
            println!("{n:>3} {m:>3} {:>14.6e} {:>14.6e} {:>12.3e} {:>8.2}", e.re, t.re, r.std_real[(n, m)], zr);
        }
        rows.push(vec![
            n.to_string(),
            m.to_string(),
            num(e.re),
            num(e.im),
            num(t.re),
            num(t.im),
            num(r.std_real[(n, m)]),
            num(r.std_imag[(n, m)]),
            num(zr),
            num(zi),
        ]);
    }
    write_csv(&out.join("comparison.csv"), &header, rows)?;
    let summary = ComparisonSummary { max_abs_error: max_err, rms_error: (sum_sq / pairs.len() as f64).sqrt(), max_abs_z: max_z };
    println!(
        "compare: max |error| {:.3e} rms error {:.3e} max |z| {:.2}",
        summary.max_abs_error, summary.rms_error, summary.max_abs_z
    );
    Ok(summary)
}

fn plot_result(r: &ReconstructionResult, truth: Option<&DensityMatrix>, out: &Path) -> CliResult<()> {
    let d = r.n_max() + 1;
    let bars: Vec<Bar> = (0..d)
        .map(|n| Bar {
            label: n.to_string(),
            value: r.estimate.get(n, n).re,
            error: r.std_real[(n, n)],
            reference: truth.map(|t| t.get(n, n).re),
        })
        .collect();
    write_text(&out.join("populations.svg"), &bar_chart("Level populations", "population", &bars))?;
    // Root-mean-square predicted std per distance from the diagonal.
    let bands: Vec<(f64, f64)> = (0..d)
        .filter_map(|k| {
            let v: Vec<f64> = (k..d).filter(|&n| r.estimated[(n, n - k)]).map(|n| r.std_total(n, n - k)).collect();
            (!v.is_empty()).then(|| (k as f64, (v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64).sqrt()))
        })
        .collect();
    let mut series = vec![Series { label: "std".into(), points: bands }];
    if let Some(b) = &r.bias {
        let pts = (0..d)
            .map(|k| {
                let v: Vec<f64> = (k..d).map(|n| b[(n, n - k)].norm()).collect();
                (k as f64, (v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64).sqrt())
            })
            .collect();
        series.push(Series { label: "|bias|".into(), points: pts });
    }
    let chart = LineChart {
        title: "Error by distance from the diagonal".into(),
        x_label: "|n - m|".into(),
        y_label: "rms".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Log,
        markers: true,
        series,
    };
    write_text(&out.join("errors_by_band.svg"), &line_chart(&chart))
}

#[derive(Serialize)]
struct LCurveReport {
    schema_version: u32,
    lambdas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corner: Option<f64>,
}

/// Tikhonov sweep over the configured λ values on a gridded dataset.
pub fn lcurve(cfg: &ExperimentConfig, dataset: &Path, out: &Path, plots: bool) -> CliResult<LCurve> {
    let lambdas = &cfg.reconstruction.sweep;
    validate_sweep("lambda sweep", lambdas, true)?;
    if cfg.measurement.mode != MeasurementMode::Counts || cfg.reconstruction.kernel != KernelChoice::Spacetime {
        return Err(CliError::Validation("the L-curve needs gridded counts and space-time kernels".into()));
    }
    let exp = Experiment::new(cfg)?;
    let (_, data) = load_matching(&exp, dataset)?;
    let StoredData::Measured(ds) = &data else { unreachable!("counts mode reads measured data") };
    let sets = exp.kernels(Regularization::Tikhonov { lambda: lambdas[0] })?;
    let ne = normal_equations(&sets[0], ds)?;
    let curve = l_curve(&ne, lambdas)?;
    write_config(out, cfg)?;
    let rows = curve.points.iter().zip(&curve.curvature).map(|(p, k)| {
        vec![num(p.lambda), num(p.residual_norm), num(p.solution_norm), k.map_or(String::new(), num)]
    });
    write_csv(&out.join("lcurve.csv"), &["lambda", "residual_norm", "solution_norm", "curvature"], rows)?;
    write_toml(
        &out.join("lcurve.toml"),
        &LCurveReport { schema_version: SCHEMA_VERSION, lambdas: lambdas.clone(), corner: curve.corner },
    )?;
    for p in &curve.points {
        println!("lcurve: lambda {:.3e} residual {:.6e} solution {:.6e}", p.lambda, p.residual_norm, p.solution_norm);
    }
    match curve.corner {
        Some(c) => println!("lcurve: maximum-curvature corner at lambda {c:.3e}"),
        None => println!("lcurve: no corner"),
    }
    if plots {
        let chart = LineChart {
            title: "L-curve".into(),
            x_label: "residual norm".into(),
            y_label: "solution norm".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            markers: true,
            series: vec![Series {
                label: "Tikhonov".into(),
                points: curve.points.iter().map(|p| (p.residual_norm, p.solution_norm)).collect(),
            }],
        };
        write_text(&out.join("lcurve.svg"), &line_chart(&chart))?;
    }
    Ok(curve)
}

/// Simulation, reconstruction and comparison in one output directory; adds
/// the L-curve when a sweep is configured for gridded counts.
pub fn pipeline(cfg: &ExperimentConfig, out: &Path, plots: bool) -> CliResult<()> {
    let dir = simulate(cfg, out)?;
    reconstruct(cfg, &dir, out, plots)?;
    let gridded = cfg.measurement.mode == MeasurementMode::Counts && cfg.reconstruction.kernel == KernelChoice::Spacetime;
    if gridded && !cfg.reconstruction.sweep.is_empty() {
        lcurve(cfg, &dir, out, plots)?;
    }
    Ok(())
}
