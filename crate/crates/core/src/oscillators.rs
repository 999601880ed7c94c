//! Energy spectra and position-space eigenfunctions of the harmonic and
//! Morse oscillators.
//!
//! Everything is dimensionless (ħ = m = 1). The harmonic eigenfunctions use
//! the oscillator length as the unit of `x`, so the frequency only sets the
//! time scale. The Morse potential is `U(x) = (e^{-ax} - 1)^2 / (2a^2)`, whose
//! bound levels are
//!
//! ```text
//! ω_n = (n + 1/2) - (a²/2)(n + 1/2)²,   n = 0, ..., n_M,   n_M = ⌊a⁻² - 1/2⌋
//! ```
//!
//! The energy convention is the textbook Morse spectrum for this potential; it
//! reproduces the revival constant `Ω = 1 - a²/2` used for revival times.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Oscillator whose eigenbasis carries the density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OscillatorModel {
    /// Harmonic oscillator with angular frequency `ω_h`.
    Harmonic { frequency: f64 },
    /// Morse oscillator with anharmonicity `a`.
    Morse { anharmonicity: f64 },
}

impl OscillatorModel {
    pub fn harmonic(frequency: f64) -> Result<Self> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "harmonic frequency must be positive, got {frequency}"
            )));
        }
        Ok(Self::Harmonic { frequency })
    }

    pub fn morse(anharmonicity: f64) -> Result<Self> {
        if !(anharmonicity.is_finite() && anharmonicity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Morse anharmonicity must be positive, got {anharmonicity}"
            )));
        }
        Ok(Self::Morse { anharmonicity })
    }

    /// Highest bound level `n_M` of a Morse oscillator; `None` for the
    /// harmonic oscillator, whose spectrum is unbounded.
    pub fn max_bound_level(&self) -> Option<usize> {
        match *self {
            Self::Harmonic { .. } => None,
            Self::Morse { anharmonicity: a } => Some((1.0 / (a * a) - 0.5).floor() as usize),
        }
    }

    /// Checks that `n` is a valid level index for this model.
    pub fn check_level(&self, n: usize) -> Result<()> {
        match self.max_bound_level() {
            Some(max) if n > max => Err(Error::LevelOutOfRange { n, max }),
            _ => Ok(()),
        }
    }

    /// Energy of level `n` (equal to its angular frequency since ħ = 1).
    pub fn eigenfrequency(&self, n: usize) -> Result<f64> {
        self.check_level(n)?;
        Ok(self.level_energy(n))
    }

    fn level_energy(&self, n: usize) -> f64 {
        let v = n as f64 + 0.5;
        match *self {
            Self::Harmonic { frequency } => v * frequency,
            Self::Morse { anharmonicity: a } => v - 0.5 * a * a * v * v,
        }
    }

    /// Transition frequency `ω_n - ω_m`.
    pub fn transition_frequency(&self, n: usize, m: usize) -> Result<f64> {
        Ok(self.eigenfrequency(n)? - self.eigenfrequency(m)?)
    }

    /// Energies of levels `0..=n_max`.
    pub fn spectrum(&self, n_max: usize) -> Result<Vec<f64>> {
        self.check_level(n_max)?;
        Ok((0..=n_max).map(|n| self.level_energy(n)).collect())
    }

    /// First fractional revival time `2π(n_M + 1/2)/Ω`, `Ω = 1 - a²/2`.
    pub fn revival_time(&self) -> Option<f64> {
        match *self {
            Self::Harmonic { .. } => None,
            Self::Morse { anharmonicity: a } => {
                let n_m = self.max_bound_level()? as f64;
                Some(2.0 * PI * (n_m + 0.5) / (1.0 - 0.5 * a * a))
            }
        }
    }

    /// Potential energy `U(x)`.
    pub fn potential(&self, x: f64) -> f64 {
        match *self {
            Self::Harmonic { .. } => 0.5 * x * x,
            Self::Morse { anharmonicity: a } => {
                let e = (-a * x).exp() - 1.0;
                e * e / (2.0 * a * a)
            }
        }
    }

    /// Classical turning points of level `n`.
    pub fn turning_points(&self, n: usize) -> Result<(f64, f64)> {
        let e = self.eigenfrequency(n)?;
        Ok(match *self {
            Self::Harmonic { frequency } => {
                let r = (2.0 * e / frequency).sqrt();
                (-r, r)
            }
            Self::Morse { anharmonicity: a } => {
                let s = a * (2.0 * e).sqrt();
                let left = -(1.0 + s).ln() / a;
                // Levels close to dissociation have a far but finite right turning point.
                let right = -(1.0 - s).max(1e-300).ln() / a;
                (left, right)
            }
        })
    }

    /// Eigenfunction `ψ_n(x)`.
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        self.check_level(n)?;
        match *self {
            Self::Harmonic { .. } => Ok(*hermite_functions(n, x).last().unwrap()),
            Self::Morse { anharmonicity: a } => morse_eigenfunction(a, n, x),
        }
    }

    /// All eigenfunctions `ψ_0(x), ..., ψ_{n_max}(x)` at one position.
    pub fn eigenfunctions(&self, n_max: usize, x: f64) -> Result<Vec<f64>> {
        let eval = self.levels(n_max)?;
        let mut out = vec![0.0; n_max + 1];
        eval.fill(x, &mut out);
        Ok(out)
    }

    /// Evaluator for `ψ_0..ψ_{n_max}` with per-level constants precomputed.
    pub fn levels(&self, n_max: usize) -> Result<LevelSet> {
        self.check_level(n_max)?;
        let morse = match *self {
            Self::Harmonic { .. } => None,
            Self::Morse { anharmonicity: a } => Some(
                (0..=n_max)
                    .map(|n| MorseLevel::new(a, n))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(LevelSet { n_max, morse })
    }
}

/// Batch evaluator of the lowest eigenfunctions of one model.
#[derive(Debug, Clone)]
pub struct LevelSet {
    n_max: usize,
    morse: Option<Vec<MorseLevel>>,
}

impl LevelSet {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Writes `ψ_n(x)` into `out[n]` for `n = 0..=n_max`.
    pub fn fill(&self, x: f64, out: &mut [f64]) {
        match &self.morse {
            None => hermite_fill(x, &mut out[..=self.n_max]),
            Some(levels) => {
                for (o, lvl) in out.iter_mut().zip(levels) {
                    *o = lvl.value(x);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct MorseLevel {
    a: f64,
    n: usize,
    b: f64,
    ln_norm: f64,
    ln_gamma_top: f64,
}

impl MorseLevel {
    fn new(a: f64, n: usize) -> Result<Self> {
        let b = 2.0 / (a * a) - 2.0 * n as f64 - 1.0;
        if b <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Morse level {n} sits at the dissociation threshold (b = {b}) and is not normalizable"
            )));
        }
        let nf = n as f64;
        let ln_gamma_top = ln_gamma(nf + b + 1.0);
        // N_n² = a b n! / Γ(n + b + 1)
        let ln_norm = 0.5 * ((a * b).ln() + ln_gamma(nf + 1.0) - ln_gamma_top);
        Ok(Self { a, n, b, ln_norm, ln_gamma_top })
    }

    fn value(&self, x: f64) -> f64 {
        let Self { a, n, b, ln_norm, ln_gamma_top } = *self;
        let z = 2.0 / (a * a) * (-a * x).exp();
        let ln_z = z.ln();
        let ln_envelope = ln_norm - 0.5 * z + 0.5 * b * ln_z;
        // |L_n^b(z)| is bounded by Γ(n+b+1) z^n for z ≥ 1; skip once everything underflows.
        if ln_envelope + n as f64 * ln_z.max(0.0) + ln_gamma_top < -745.0 {
            return 0.0;
        }
        let lag = generalized_laguerre(n, b, z);
        if lag == 0.0 {
            return 0.0;
        }
        lag.signum() * (ln_envelope + lag.abs().ln()).exp()
    }
}

/// Normalized Hermite functions up to degree `n_max` by the stable
/// three-term recurrence.
fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    hermite_fill(x, &mut out);
    out
}

fn hermite_fill(x: f64, out: &mut [f64]) {
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() == 1 {
        return;
    }
    out[1] = 2f64.sqrt() * x * out[0];
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        out[k + 1] = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

/// Generalized Laguerre polynomial `L_n^b(z)` by upward recurrence in `n`.
pub fn generalized_laguerre(n: usize, b: f64, z: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + b - z;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + b - z) * cur - (kf + b) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn morse_eigenfunction(a: f64, n: usize, x: f64) -> Result<f64> {
    Ok(MorseLevel::new(a, n)?.value(x))
}
