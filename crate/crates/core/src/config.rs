//! JSON run configuration.
//!
//! Relative paths inside a config file are resolved against the directory
//! that contains it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constraints::DEFAULT_SPACING_FACTOR;
use crate::error::{invalid, Error, Result};
use crate::farm::{generate_circular_grid, load_grid, load_wind_rose, CandidateGrid, GridMode, TurbineSpec};
use crate::objective::InterpolationScheme;
use crate::problem::LayoutProblem;
use crate::solvers::{GaSettings, MmaSettings, SolverKind};
use crate::wake::{WakeParams, DEFAULT_TURBULENCE_INTENSITY};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridConfig {
    Circular {
        radius: f64,
        spacing: f64,
        mode: GridMode,
    },
    /// CSV file with header `x,y`.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SolverConfig {
    Mma {
        #[serde(default)]
        settings: MmaSettings,
    },
    Ga {
        #[serde(default)]
        settings: GaSettings,
    },
    Brute,
}

impl SolverConfig {
    pub fn kind(&self) -> SolverKind {
        match self {
            Self::Mma { .. } => SolverKind::Mma,
            Self::Ga { .. } => SolverKind::Ga,
            Self::Brute => SolverKind::Brute,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub grid: GridConfig,
    #[serde(default = "TurbineSpec::iea37_3_4mw")]
    pub turbine: TurbineSpec,
    #[serde(default = "default_ti")]
    pub turbulence_intensity: f64,
    /// CSV with header `direction_deg,frequency,speed_ms`.
    pub wind_rose: PathBuf,
    pub n_min: usize,
    pub n_max: usize,
    /// Minimum spacing in rotor diameters.
    #[serde(default = "default_spacing")]
    pub spacing_factor: f64,
    #[serde(default = "default_scheme")]
    pub interpolation: InterpolationScheme,
    pub solver: SolverConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Overrides the GA seed when present.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_ti() -> f64 {
    DEFAULT_TURBULENCE_INTENSITY
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING_FACTOR
}

fn default_scheme() -> InterpolationScheme {
    InterpolationScheme::Ramp { q: 0.0 }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// A parsed configuration with the context needed to run it.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
    /// Hex SHA-256 of the raw config bytes.
    pub hash: String,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })
    }

    /// Checks everything that can be checked without touching the file
    /// system.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.n_min > self.n_max {
            return Err(invalid(format!(
                "n_min ({}) exceeds n_max ({})",
                self.n_min, self.n_max
            )));
        }
        self.turbine.validate()?;
        WakeParams::new(self.turbulence_intensity)?;
        self.interpolation.validate()?;
        if !(self.spacing_factor.is_finite() && self.spacing_factor >= 0.0) {
            return Err(invalid("spacing factor must be non-negative"));
        }
        if let GridConfig::Circular { mode: GridMode::External, .. } = self.grid {
            return Err(invalid("circular grids must use mode centered or offset"));
        }
        match &self.solver {
            SolverConfig::Mma { settings } => settings.validate(),
            SolverConfig::Ga { settings } => settings.validate(),
            SolverConfig::Brute => Ok(()),
        }
    }

    pub fn build_grid(&self, base_dir: &Path) -> Result<CandidateGrid> {
        match &self.grid {
            GridConfig::Circular { radius, spacing, mode } => generate_circular_grid(*radius, *spacing, *mode),
            GridConfig::File { path } => load_grid(base_dir.join(path)),
        }
    }

    /// Loads data files and precomputes the wake tensor.
    pub fn build_problem(&self, base_dir: &Path) -> Result<LayoutProblem> {
        self.validate()?;
        let grid = self.build_grid(base_dir)?;
        if self.n_min > grid.len() {
            return Err(invalid(format!(
                "n_min ({}) exceeds the number of candidate sites ({})",
                self.n_min,
                grid.len()
            )));
        }
        let rose = load_wind_rose(base_dir.join(&self.wind_rose))?;
        LayoutProblem::new(
            grid,
            rose,
            self.turbine,
            WakeParams::new(self.turbulence_intensity)?,
            self.spacing_factor,
            self.n_min,
            self.n_max,
        )
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config: RunConfig = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate()?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig {
        config,
        base_dir,
        hash: hex::encode(Sha256::digest(&bytes)),
    })
}
