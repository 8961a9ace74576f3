//! Sweep configuration, read from TOML.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::Graphon;
use crate::integrator::IntegratorConfig;
use crate::observables::{DEFAULT_FREQ_TOL, DEFAULT_PHASE_TOL};

/// Initial-condition family `η: [0, 1] → ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EtaPreset {
    /// `η(x) = slope · x`.
    Linear {
        #[serde(default = "one")]
        slope: f64,
    },
    /// `η(x) = amplitude · cos(2πx)`.
    Cosine { amplitude: f64 },
    /// `η(x) = Σₖ (aₖ cos 2πkx + bₖ sin 2πkx)` with `aₖ, bₖ ~ amplitude · U(−1, 1) / k`
    /// drawn from ChaCha8 seeded with `seed`.
    UniformRandomSmooth {
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_modes() -> usize {
    4
}

impl Default for EtaPreset {
    fn default() -> Self {
        EtaPreset::Linear { slope: 1.0 }
    }
}

impl EtaPreset {
    /// Parses a preset name with default parameters.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(EtaPreset::Linear { slope: 1.0 }),
            "cosine" => Ok(EtaPreset::Cosine { amplitude: 1.0 }),
            "uniform-random-smooth" => Ok(EtaPreset::UniformRandomSmooth {
                modes: default_modes(),
                amplitude: 1.0,
                seed: 0,
            }),
            other => Err(Error::Config(format!(
                "unknown initial-condition preset `{other}` (linear, cosine, uniform-random-smooth)"
            ))),
        }
    }

    pub fn build(&self) -> Eta {
        match *self {
            EtaPreset::Linear { slope } => Eta::Linear(slope),
            EtaPreset::Cosine { amplitude } => Eta::Cosine(amplitude),
            EtaPreset::UniformRandomSmooth {
                modes,
                amplitude,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs = (1..=modes)
                    .map(|k| {
                        let a = amplitude * rng.random_range(-1.0..1.0) / k as f64;
                        let b = amplitude * rng.random_range(-1.0..1.0) / k as f64;
                        (a, b)
                    })
                    .collect();
                Eta::Fourier(coeffs)
            }
        }
    }
}

/// An evaluable initial condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Eta {
    Linear(f64),
    Cosine(f64),
    Fourier(Vec<(f64, f64)>),
}

impl Eta {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Eta::Linear(s) => s * x,
            Eta::Cosine(a) => a * (TAU * x).cos(),
            Eta::Fourier(c) => c
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let (s, co) = (TAU * (k + 1) as f64 * x).sin_cos();
                    a * co + b * s
                })
                .sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    pub h: f64,
    pub horizon: f64,
}

impl IntegratorSettings {
    pub fn build(&self) -> Result<IntegratorConfig> {
        IntegratorConfig::new(self.h, self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSettings {
    pub phase_tol: f64,
    pub freq_tol: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        DetectorSettings {
            phase_tol: DEFAULT_PHASE_TOL,
            freq_tol: DEFAULT_FREQ_TOL,
        }
    }
}

/// A Monte Carlo sweep over `(n, p, β)` on Erdős–Rényi networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    pub p_grid: Vec<f64>,
    #[serde(default = "zero_beta")]
    pub beta_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub eta: EtaPreset,
    #[serde(default = "sweep_integrator")]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub detector: DetectorSettings,
    /// Worker count; 0 lets the pool choose, 1 runs sequentially.
    #[serde(default)]
    pub threads: usize,
}

fn zero_beta() -> Vec<f64> {
    vec![0.0]
}

fn default_trials() -> usize {
    50
}

fn sweep_integrator() -> IntegratorSettings {
    IntegratorSettings {
        h: 0.01,
        horizon: 200.0,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_grid: vec![100],
            p_grid: vec![0.5],
            beta_grid: zero_beta(),
            trials: default_trials(),
            master_seed: 0,
            eta: EtaPreset::default(),
            integrator: sweep_integrator(),
            detector: DetectorSettings::default(),
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.p_grid.is_empty() || self.beta_grid.is_empty() {
            return Err(Error::Config(
                "n_grid, p_grid and beta_grid must be nonempty".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(n) = self.n_grid.iter().find(|&&n| n == 0) {
            return Err(Error::Config(format!("network size {n} in n_grid")));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(Error::Config(format!("edge probability {p} not in (0, 1]")));
        }
        if let Some(b) = self
            .beta_grid
            .iter()
            .find(|b| b.is_nan() || b.abs() >= std::f64::consts::FRAC_PI_2)
        {
            return Err(Error::Config(format!(
                "phase shift {b} not in (-pi/2, pi/2)"
            )));
        }
        self.integrator
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Settings for the sampled-versus-continuum convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub n_list: Vec<usize>,
    /// Reference mesh for the continuum solve; a multiple of every entry of `n_list`.
    pub m_ref: usize,
    #[serde(default = "default_conv_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Graphon preset name.
    #[serde(default = "default_graphon")]
    pub graphon: String,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub eta: EtaPreset,
    #[serde(default = "convergence_integrator")]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub threads: usize,
}

fn default_conv_trials() -> usize {
    20
}

fn default_graphon() -> String {
    "constant-1".into()
}

fn convergence_integrator() -> IntegratorSettings {
    IntegratorSettings {
        h: 0.001,
        horizon: 1.0,
    }
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            n_list: vec![64, 128, 256, 512],
            m_ref: 4096,
            trials: default_conv_trials(),
            master_seed: 0,
            graphon: default_graphon(),
            alpha: 1.0,
            beta: 0.0,
            eta: EtaPreset::default(),
            integrator: convergence_integrator(),
            threads: 0,
        }
    }
}

impl ConvergenceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ConvergenceConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn graphon(&self) -> Result<Graphon> {
        Graphon::preset(&self.graphon).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.trials == 0 {
            return Err(Error::Config(
                "n_list must be nonempty and trials at least 1".into(),
            ));
        }
        if let Some(n) = self
            .n_list
            .iter()
            .find(|&&n| n == 0 || !self.m_ref.is_multiple_of(n))
        {
            return Err(Error::Config(format!(
                "m_ref = {} is not a multiple of n = {n}",
                self.m_ref
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha {} not in (0, 1]", self.alpha)));
        }
        if self.beta.is_nan() || self.beta.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Config(format!(
                "phase shift {} not in (-pi/2, pi/2)",
                self.beta
            )));
        }
        self.graphon()?;
        self.integrator
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}
