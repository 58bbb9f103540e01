//! Run configuration: a single TOML file with nested keys.
//!
//! All physical quantities are plain numbers in whatever unit system the
//! constants define (the default being ħ = 1, α = 1). The same structure is
//! echoed verbatim into every JSON metadata sidecar, so a run can be
//! reproduced from its outputs.
//!
//! ```toml
//! [consts]
//! hbar = 1.0
//! alpha = 1.0
//! n = 1
//!
//! [coupling]
//! kind = "sc"          # sc | mc | hc | mhc
//! k = 1.0              # sc/hc; mc takes `gamma`, mhc takes `mu` and `nu`
//!
//! [env]
//! kind = "gaussian"    # gaussian | box | cauchy | delta | per_particle
//! mean = 0.0
//! std = 1.0
//!
//! [body]
//! kind = "two_point"   # or "gaussian" with center/width/wavenumber
//! points = [
//!     { x = 0.5, re = 0.7071067811865476, im = 0.0 },
//!     { x = -0.5, re = 0.7071067811865476, im = 0.0 },
//! ]
//!
//! [query]
//! a = 0.5              # X′ (or P′ for momentum couplings)
//! b = -0.5             # X″ (or P″)
//!
//! [time]
//! start = 0.0
//! stop = 5.0
//! count = 100          # or: explicit = [0.0, 0.1, ...]
//!
//! engine = "analytic"  # analytic | oracle | both
//! ```
//!
//! Optional sections: `[oracle_grid]` (points/spacing/origin; derived
//! automatically when absent), `[output]` (file prefix), `[compare]`
//! (tolerances and extra random draws), `[decayfit]` (fit window in |z|).

use decoh_core::model::{
    BodyAmplitude, Coupling, EnvState, ParticleDensity, PhysConsts,
};
use decoh_core::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub consts: ConstsConfig,
    pub coupling: CouplingConfig,
    pub env: EnvConfig,
    pub body: BodyConfig,
    pub query: QueryConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub engine: EngineChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_grid: Option<OracleGridConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decayfit: Option<DecayFitConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstsConfig {
    pub hbar: f64,
    pub alpha: f64,
    pub n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    Sc { k: f64 },
    Mc { gamma: f64 },
    Hc { k: f64 },
    Mhc { mu: f64, nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParticleConfig {
    Gaussian { mean: f64, std: f64 },
    Box { center: f64, halfwidth: f64 },
    Cauchy { location: f64, scale: f64 },
    Delta { location: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    Gaussian { mean: f64, std: f64 },
    Box { center: f64, halfwidth: f64 },
    Cauchy { location: f64, scale: f64 },
    Delta { location: f64 },
    /// Heterogeneous particles; the list length must equal `consts.n`.
    PerParticle { particles: Vec<ParticleConfig> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointWeight {
    pub x: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyConfig {
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        wavenumber: f64,
    },
    TwoPoint { points: Vec<PointWeight> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    /// X′ (or P′ for momentum couplings).
    pub a: f64,
    /// X″ (or P″).
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum EngineChoice {
    #[default]
    Analytic,
    Oracle,
    Both,
}

impl EngineChoice {
    pub fn runs_analytic(&self) -> bool {
        matches!(self, EngineChoice::Analytic | EngineChoice::Both)
    }

    pub fn runs_oracle(&self) -> bool {
        matches!(self, EngineChoice::Oracle | EngineChoice::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleGridConfig {
    pub points: usize,
    pub spacing: f64,
    pub origin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { prefix: default_prefix() }
    }
}

fn default_prefix() -> String {
    String::from("curve")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "default_modulus_tol")]
    pub modulus_tol: f64,
    #[serde(default = "default_phase_tol")]
    pub phase_tol: f64,
    /// Extra random time draws added to the configured grid, seeded by
    /// `--seed`.
    #[serde(default)]
    pub random_draws: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            modulus_tol: default_modulus_tol(),
            phase_tol: default_phase_tol(),
            random_draws: 0,
        }
    }
}

fn default_modulus_tol() -> f64 {
    1e-5
}

fn default_phase_tol() -> f64 {
    1e-5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayFitConfig {
    /// Window in |z| the fit runs over.
    pub window: [f64; 2],
}

impl ParticleConfig {
    pub fn to_density(self) -> ParticleDensity {
        match self {
            ParticleConfig::Gaussian { mean, std } => ParticleDensity::Gaussian { mean, std },
            ParticleConfig::Box { center, halfwidth } => {
                ParticleDensity::Box { center, halfwidth }
            }
            ParticleConfig::Cauchy { location, scale } => {
                ParticleDensity::Cauchy { location, scale }
            }
            ParticleConfig::Delta { location } => ParticleDensity::Delta { location },
        }
    }
}

impl RunConfig {
    pub fn consts(&self) -> PhysConsts {
        PhysConsts { hbar: self.consts.hbar, alpha: self.consts.alpha, n: self.consts.n }
    }

    pub fn coupling(&self) -> Coupling {
        match self.coupling {
            CouplingConfig::Sc { k } => Coupling::Sc { k },
            CouplingConfig::Mc { gamma } => Coupling::Mc { gamma },
            CouplingConfig::Hc { k } => Coupling::Hc { k },
            CouplingConfig::Mhc { mu, nu } => Coupling::Mhc { mu, nu },
        }
    }

    pub fn env(&self) -> EnvState {
        match &self.env {
            EnvConfig::Gaussian { mean, std } => EnvState::identical(
                ParticleDensity::Gaussian { mean: *mean, std: *std },
                self.consts.n,
            ),
            EnvConfig::Box { center, halfwidth } => EnvState::identical(
                ParticleDensity::Box { center: *center, halfwidth: *halfwidth },
                self.consts.n,
            ),
            EnvConfig::Cauchy { location, scale } => EnvState::identical(
                ParticleDensity::Cauchy { location: *location, scale: *scale },
                self.consts.n,
            ),
            EnvConfig::Delta { location } => EnvState::identical(
                ParticleDensity::Delta { location: *location },
                self.consts.n,
            ),
            EnvConfig::PerParticle { particles } => {
                EnvState::Product(particles.iter().map(|p| p.to_density()).collect())
            }
        }
    }

    pub fn body(&self) -> Result<BodyAmplitude, String> {
        match &self.body {
            BodyConfig::Gaussian { center, width, wavenumber } => {
                BodyAmplitude::gaussian(*center, *width, *wavenumber).map_err(|e| e.to_string())
            }
            BodyConfig::TwoPoint { points } => BodyAmplitude::superposition(
                points.iter().map(|p| (p.x, Complex64::new(p.re, p.im))).collect(),
            )
            .map_err(|e| e.to_string()),
        }
    }

    /// Materializes the time grid; strictly increasing by construction or
    /// by check.
    pub fn times(&self) -> Result<Vec<f64>, String> {
        let t = &self.time;
        match (&t.explicit, t.start, t.stop, t.count) {
            (Some(times), None, None, None) => {
                if times.is_empty() {
                    return Err(String::from("time grid count ≥ 1"));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(String::from("explicit time grid strictly increasing"));
                }
                Ok(times.clone())
            }
            (None, Some(start), stop, Some(count)) => {
                if count < 1 {
                    return Err(String::from("time grid count ≥ 1"));
                }
                if count == 1 {
                    return Ok(vec![start]);
                }
                let stop = stop.ok_or_else(|| String::from("time stop required for count > 1"))?;
                if stop.is_nan() || stop <= start {
                    return Err(String::from("time stop > start"));
                }
                let step = (stop - start) / (count as f64 - 1.0);
                Ok((0..count).map(|i| start + i as f64 * step).collect())
            }
            _ => Err(String::from(
                "time grid needs either explicit = [...] or start/stop/count",
            )),
        }
    }
}
