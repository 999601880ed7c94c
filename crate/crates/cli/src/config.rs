//! Experiment configuration: one TOML file per run, copied into every output
//! directory.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use lsqtomo_core::kernels::{SmearingWindows, TimeSampling};
use lsqtomo_core::lsq::Regularization;
use lsqtomo_core::oscillators::OscillatorModel;

use crate::error::{CliError, CliResult};

/// Version written to and required from every configuration and output file.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub output_dir: String,
    pub model: ModelSpec,
    pub state: StateSpec,
    pub evolution: EvolutionSpec,
    pub measurement: MeasurementSpec,
    pub reconstruction: ReconstructionSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Harmonic,
    Morse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Oscillator frequency (harmonic) or anharmonicity `a` (Morse).
    pub parameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub alpha_re: f64,
    #[serde(default)]
    pub alpha_im: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnits {
    /// Multiples of `π/(ω₁ - ω₀)`.
    PiOverW01,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub time_units: TimeUnits,
    /// Observation interval `T`.
    pub period: f64,
    pub time_count: usize,
    #[serde(default)]
    pub damping: f64,
    /// Observe the infinite-time average instead of sampled times.
    #[serde(default)]
    pub time_averaged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementMode {
    /// Individually sampled positions per observation time.
    Events,
    /// Poisson counts on a position grid.
    Counts,
    /// Noiseless expected distribution.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub mode: MeasurementMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events_per_time: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_counts: Option<f64>,
    /// Number of equidistant measurement positions; the quadrature grid is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    /// Time window width, in the configured time units.
    #[serde(default)]
    pub sigma_t: f64,
    #[serde(default)]
    pub sigma_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    /// Joint space-time kernels for every element.
    Spacetime,
    /// Position-only kernels for the populations, applied to the time average.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizationChoice {
    None,
    Tikhonov,
    Svd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSpec {
    pub kernel: KernelChoice,
    pub regularization: RegularizationChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    /// Tikhonov parameters for the L-curve.
    #[serde(default)]
    pub sweep: Vec<f64>,
    /// Monte Carlo replicates for the bias estimate of gridded data; zero skips it.
    #[serde(default)]
    pub bias_replicates: usize,
    /// Levels whose diagonal kernels are plotted.
    #[serde(default)]
    pub plot_levels: Vec<usize>,
}

fn invalid<T>(field: &str, msg: impl std::fmt::Display) -> CliResult<T> {
    Err(CliError::Validation(format!("{field}: {msg}")))
}

fn positive(field: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(field, format!("must be positive and finite, got {v}"))
    }
}

fn nonnegative(field: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(field, format!("must be nonnegative and finite, got {v}"))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration fields are TOML-representable")
    }

    /// Checks every invariant before any computation starts.
    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            );
        }
        if i64::try_from(self.seed).is_err() {
            return invalid("seed", format!("must not exceed {}", i64::MAX));
        }
        positive("model.parameter", self.model.parameter)?;
        let model = self.model()?;
        if let Some(n_m) = model.max_bound_level() {
            if self.state.n_max > n_m {
                return invalid("state.n_max", format!("{} exceeds the highest bound level {n_m}", self.state.n_max));
            }
        }
        if !self.state.alpha_re.is_finite() || !self.state.alpha_im.is_finite() {
            return invalid("state.alpha", "must be finite");
        }

        let ev = &self.evolution;
        positive("evolution.period", ev.period)?;
        if ev.time_count == 0 {
            return invalid("evolution.time_count", "must be positive");
        }
        nonnegative("evolution.damping", ev.damping)?;

        let ms = &self.measurement;
        nonnegative("measurement.sigma_t", ms.sigma_t)?;
        nonnegative("measurement.sigma_x", ms.sigma_x)?;
        let smeared = ms.sigma_t > 0.0 || ms.sigma_x > 0.0;
        if ms.positions.is_some() != ms.bounds.is_some() {
            return invalid("measurement.positions", "positions and bounds must be given together");
        }
        if let Some(n) = ms.positions {
            if n < 2 {
                return invalid("measurement.positions", format!("need at least 2 positions, got {n}"));
            }
        }
        if let Some([lo, hi]) = ms.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return invalid("measurement.bounds", format!("need finite lo < hi, got [{lo}, {hi}]"));
            }
        }
        match ms.mode {
            MeasurementMode::Events => {
                match ms.events_per_time {
                    Some(n) if n > 0 => {}
                    Some(n) => return invalid("measurement.events_per_time", format!("must be positive, got {n}")),
                    None => return invalid("measurement.events_per_time", "required for event mode"),
                }
                if ms.positions.is_some() {
                    return invalid("measurement.positions", "event mode integrates over the quadrature grid");
                }
                if smeared {
                    return invalid("measurement.sigma_t", "smearing needs counts or exact mode");
                }
            }
            MeasurementMode::Counts => {
                match ms.total_counts {
                    Some(n) if n >= 1.0 && n.is_finite() => {}
                    Some(n) => return invalid("measurement.total_counts", format!("must be at least 1, got {n}")),
                    None => return invalid("measurement.total_counts", "required for counts mode"),
                }
                if ms.positions.is_none() {
                    return invalid("measurement.positions", "required for counts mode");
                }
            }
            MeasurementMode::Exact => {}
        }
        if smeared && ms.positions.is_none() {
            return invalid("measurement.positions", "smearing needs an equidistant position grid");
        }
        if smeared && ev.damping > 0.0 {
            return invalid("evolution.damping", "damping cannot be combined with smearing");
        }

        let rc = &self.reconstruction;
        if ev.time_averaged {
            if rc.kernel != KernelChoice::Diagonal {
                return invalid("evolution.time_averaged", "time-averaged data needs the diagonal kernel");
            }
        } else if rc.kernel == KernelChoice::Diagonal {
            return invalid("reconstruction.kernel", "diagonal kernels need evolution.time_averaged = true");
        }
        if rc.kernel == KernelChoice::Diagonal {
            if ms.mode != MeasurementMode::Events || ev.damping > 0.0 {
                return invalid("reconstruction.kernel", "diagonal kernels need undamped event data");
            }
            if rc.regularization != RegularizationChoice::None {
                return invalid("reconstruction.regularization", "diagonal kernels are unregularized");
            }
        }
        match rc.regularization {
            RegularizationChoice::None => {}
            RegularizationChoice::Tikhonov => match rc.lambda {
                Some(l) => positive("reconstruction.lambda", l)?,
                None => return invalid("reconstruction.lambda", "required for Tikhonov regularization"),
            },
            RegularizationChoice::Svd => match rc.sigma0 {
                Some(s) => nonnegative("reconstruction.sigma0", s)?,
                None => return invalid("reconstruction.sigma0", "required for SVD truncation"),
            },
        }
        validate_sweep("reconstruction.sweep", &rc.sweep, false)?;
        if let Some(&n) = rc.plot_levels.iter().find(|&&n| n > self.state.n_max) {
            return invalid("reconstruction.plot_levels", format!("level {n} exceeds n_max = {}", self.state.n_max));
        }
        if rc.bias_replicates == 1 {
            return invalid("reconstruction.bias_replicates", "need 0 (skip) or at least 2");
        }
        Ok(())
    }

    pub fn model(&self) -> CliResult<OscillatorModel> {
        Ok(match self.model.kind {
            ModelKind::Harmonic => OscillatorModel::harmonic(self.model.parameter)?,
            ModelKind::Morse => OscillatorModel::morse(self.model.parameter)?,
        })
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.state.alpha_re, self.state.alpha_im)
    }

    /// Length of one configured time unit.
    pub fn time_unit(&self, model: &OscillatorModel) -> CliResult<f64> {
        Ok(match self.evolution.time_units {
            TimeUnits::Absolute => 1.0,
            TimeUnits::PiOverW01 => PI / model.transition_frequency(1, 0)?,
        })
    }

    pub fn times(&self, model: &OscillatorModel) -> CliResult<TimeSampling> {
        if self.evolution.time_averaged {
            return Ok(TimeSampling::single(0.0)?);
        }
        let period = self.evolution.period * self.time_unit(model)?;
        Ok(TimeSampling::equidistant(period, self.evolution.time_count)?)
    }

    pub fn windows(&self, model: &OscillatorModel) -> CliResult<SmearingWindows> {
        let sigma_t = self.measurement.sigma_t * self.time_unit(model)?;
        Ok(SmearingWindows::new(sigma_t, self.measurement.sigma_x)?)
    }

    pub fn regularization(&self) -> Regularization {
        let rc = &self.reconstruction;
        match rc.regularization {
            RegularizationChoice::None => Regularization::None,
            RegularizationChoice::Tikhonov => Regularization::Tikhonov { lambda: rc.lambda.unwrap_or_default() },
            RegularizationChoice::Svd => Regularization::SvdTruncation { sigma0: rc.sigma0.unwrap_or_default() },
        }
    }
}

/// Sweep values must be positive and strictly ascending; an L-curve needs at
/// least three of them.
pub fn validate_sweep(field: &str, lambdas: &[f64], required: bool) -> CliResult<()> {
    if lambdas.is_empty() && !required {
        return Ok(());
    }
    if lambdas.len() < 3 {
        return invalid(field, format!("need at least 3 values, got {}", lambdas.len()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) || lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid(field, "values must be positive and strictly ascending");
    }
    Ok(())
}
