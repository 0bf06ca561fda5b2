//! Pipeline configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::narrowing::NarrowingConfig;
use crate::priors::PriorConfig;
use crate::smc::SmcConfig;
use crate::synthetic::SyntheticConfig;
use crate::wavelet::LevelInterpolation;

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Symlet order of the error-function decomposition.
    pub wavelet_order: usize,
    /// Decomposition depth `J`; `None` uses `floor(log2 K) - 2`.
    pub levels: Option<usize>,
    pub interpolation: LevelInterpolation,
    /// Channels excluded from each end of the likelihood.
    pub edge_mask: usize,
    /// Non-resonant level `A_J`; estimated from the data when absent.
    pub nr_level: Option<f64>,
    /// Noise variance; estimated from the data when absent.
    pub noise_variance: Option<f64>,
    /// Spectrum whose wavelet details define the error function; the
    /// measurement itself when absent. Relative paths resolve against the
    /// config file's directory.
    pub error_basis: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            wavelet_order: 34,
            levels: None,
            interpolation: LevelInterpolation::Floor,
            edge_mask: 16,
            nr_level: None,
            noise_variance: None,
            error_basis: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(j) = self.levels {
            if j == 0 {
                return Err(Error::Config("levels must be >= 1".into()));
            }
        }
        if let Some(a) = self.nr_level {
            if !a.is_finite() {
                return Err(Error::Config("nr_level must be finite".into()));
            }
        }
        if let Some(v) = self.noise_variance {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("noise_variance must be > 0, got {v}")));
            }
        }
        crate::wavelet::Symlet::new(self.wavelet_order).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub seed: u64,
    /// Worker threads; `None` lets the runtime decide.
    pub threads: Option<usize>,
    pub model: ModelConfig,
    pub narrowing: NarrowingConfig,
    pub priors: PriorConfig,
    pub smc: SmcConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            threads: None,
            model: ModelConfig::default(),
            narrowing: NarrowingConfig::default(),
            priors: PriorConfig::default(),
            smc: SmcConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        self.model.validate()?;
        self.narrowing.validate()?;
        self.priors.validate()?;
        self.smc.validate()?;
        self.synthetic.validate()?;
        Ok(())
    }

    /// Parses and validates a JSON document; blank input gives the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim().is_empty() {
            Self::default()
        } else {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}
