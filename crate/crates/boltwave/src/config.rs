//! TOML run configuration.
//!
//! A run file has sections `[mesh]`, `[angle]`, `[surrogate]`, `[adapt]`,
//! `[solver]`, `[goal]` and `[output]`; every field has a default except the
//! mesh geometry, the adapt mode's tau, and the output directory. See the
//! bundled `configs/*.toml` for complete examples.

use crate::adapt::{AdaptConfig, RunMode};
use crate::harmonics::{FilterKind, FpnConfig};
use crate::mesh::{generate_duct, MeshError, TriMesh};
use crate::transport::SolveOptions;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub mesh: MeshSpec,
    #[serde(default)]
    pub angle: AngleSpec,
    #[serde(default)]
    pub surrogate: SurrogateSpec,
    pub adapt: AdaptSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub goal: GoalSpec,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum MeshSpec {
    /// Built-in straight duct: source and detector boxes separated by
    /// `length`, duct axis along +y.
    Duct {
        length: f64,
        #[serde(default = "default_width")]
        width: f64,
        h: f64,
    },
    /// Load a `tmesh` file.
    File { path: PathBuf },
}

fn default_width() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleSpec {
    /// Haar refinement depth cap.
    #[serde(default = "default_max_level")]
    pub max_level: u8,
}

fn default_max_level() -> u8 {
    8
}

impl Default for AngleSpec {
    fn default() -> Self {
        AngleSpec { max_level: default_max_level() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateSpec {
    #[serde(default = "default_order")]
    pub order: u32,
    #[serde(default = "default_sigma_f")]
    pub sigma_f: f64,
    #[serde(default)]
    pub filter: FilterSpec,
}

fn default_order() -> u32 {
    1
}

fn default_sigma_f() -> f64 {
    1.0
}

impl Default for SurrogateSpec {
    fn default() -> Self {
        SurrogateSpec { order: default_order(), sigma_f: default_sigma_f(), filter: FilterSpec::Sinc }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FilterSpec {
    #[default]
    Sinc,
    Lanczos,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptSpec {
    pub mode: ModeSpec,
    pub tau: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_coarsen_fraction")]
    pub coarsen_fraction: f64,
    #[serde(default = "default_flux_floor")]
    pub flux_floor: f64,
    #[serde(default)]
    pub extra_settle_step: bool,
    /// Window for `mode = "fixed"`.
    #[serde(default)]
    pub fixed: Option<WindowSpec>,
}

fn default_steps() -> usize {
    8
}
fn default_ratio() -> f64 {
    10.0
}
fn default_coarsen_fraction() -> f64 {
    0.01
}
fn default_flux_floor() -> f64 {
    1e-300
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Robust,
    NonRobust,
    Fixed,
    FpnUniform,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub level: u8,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_restart")]
    pub restart: usize,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iterations() -> usize {
    50_000
}
fn default_restart() -> usize {
    100
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            abs_tol: default_tol(),
            rel_tol: default_tol(),
            max_iterations: default_max_iterations(),
            restart: default_restart(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    /// Region id of the detector; the duct generator tags it 2.
    #[serde(default = "default_goal_region")]
    pub region: u32,
    /// Known reference detector value for relative errors and effectivity.
    #[serde(default)]
    pub reference: Option<f64>,
    /// Compute the reference from a fixed-refinement solve before the run.
    #[serde(default)]
    pub fixed_reference: Option<WindowSpec>,
}

impl Default for GoalSpec {
    fn default() -> Self {
        GoalSpec { region: default_goal_region(), reference: None, fixed_reference: None }
    }
}

fn default_goal_region() -> u32 {
    crate::mesh::REGION_DETECTOR
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub vtk: bool,
    #[serde(default = "default_true")]
    pub csv: bool,
    #[serde(default)]
    pub timing: TimingSpec,
}

fn default_true() -> bool {
    true
}

/// `wall` records elapsed time; `none` writes zeros so repeated runs produce
/// byte-identical artifacts.
#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TimingSpec {
    #[default]
    Wall,
    None,
}

impl RunSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<RunSpec, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let spec: RunSpec = toml::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_str(text: &str) -> Result<RunSpec, ConfigError> {
        let spec: RunSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.adapt.tau <= 0.0 {
            return Err(ConfigError::Invalid(format!("adapt.tau must be positive, got {}", self.adapt.tau)));
        }
        if self.adapt.ratio <= 1.0 {
            return Err(ConfigError::Invalid(format!("adapt.ratio must exceed 1, got {}", self.adapt.ratio)));
        }
        if !(0.0..1.0).contains(&self.adapt.coarsen_fraction) {
            return Err(ConfigError::Invalid(format!(
                "adapt.coarsen_fraction must lie in [0, 1), got {}",
                self.adapt.coarsen_fraction
            )));
        }
        if self.solver.abs_tol <= 0.0 || self.solver.rel_tol <= 0.0 {
            return Err(ConfigError::Invalid("solver tolerances must be positive".into()));
        }
        if self.adapt.mode == ModeSpec::Fixed && self.adapt.fixed.is_none() {
            return Err(ConfigError::Invalid("mode = \"fixed\" requires an [adapt.fixed] window".into()));
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<TriMesh, ConfigError> {
        match &self.mesh {
            MeshSpec::Duct { length, width, h } => Ok(generate_duct(*length, *width, *h)?),
            MeshSpec::File { path } => Ok(TriMesh::load(path)?),
        }
    }

    pub fn solver_options(&self) -> SolveOptions {
        SolveOptions {
            abs_tol: self.solver.abs_tol,
            rel_tol: self.solver.rel_tol,
            max_iterations: self.solver.max_iterations,
            restart: self.solver.restart,
        }
    }

    pub fn surrogate_config(&self) -> FpnConfig {
        FpnConfig {
            order: self.surrogate.order,
            sigma_f: self.surrogate.sigma_f,
            filter: match self.surrogate.filter {
                FilterSpec::Sinc => FilterKind::Sinc,
                FilterSpec::Lanczos => FilterKind::Lanczos,
            },
        }
    }

    /// Driver configuration; `reference` is filled by the caller when a
    /// fixed-reference solve supplies it.
    pub fn adapt_config(&self, reference: Option<f64>) -> AdaptConfig {
        let mode = match self.adapt.mode {
            ModeSpec::Robust => RunMode::Robust,
            ModeSpec::NonRobust => RunMode::NonRobust,
            ModeSpec::FpnUniform => RunMode::FpnUniform,
            ModeSpec::Fixed => {
                let w = self.adapt.fixed.expect("validated");
                RunMode::Fixed {
                    phi_lo: w.phi_lo,
                    phi_hi: w.phi_hi,
                    mu_lo: w.mu_lo,
                    mu_hi: w.mu_hi,
                    level: w.level,
                }
            }
        };
        AdaptConfig {
            mode,
            tau: self.adapt.tau,
            max_level: self.angle.max_level,
            steps: self.adapt.steps,
            ratio: self.adapt.ratio,
            coarsen_fraction: self.adapt.coarsen_fraction,
            flux_floor: self.adapt.flux_floor,
            surrogate: self.surrogate_config(),
            goal_region: self.goal.region,
            solver: self.solver_options(),
            reference: reference.or(self.goal.reference),
            extra_settle_step: self.adapt.extra_settle_step,
        }
    }
}
