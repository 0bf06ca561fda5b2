//! Synthetic CARS spectra with known parameters.
//!
//! The multiplicative artefact is drawn from the same family the model
//! uses: a smooth reference signal is decomposed with the error-function
//! engine, and `eps_m(p*)` of that decomposition modulates the clean
//! signal. Fitting with the same reference therefore has an exact model.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;
use crate::model::{cars_signal, ModelParams, VoigtLine};
use crate::rng::{substream, SIMULATE};
use crate::wavelet::{ErrorFunctionEngine, LevelInterpolation};

/// Recipe for a synthetic measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub start: f64,
    pub step: f64,
    pub len: usize,
    pub lines: Vec<VoigtLine>,
    /// True background level `p*`.
    pub background: f64,
    pub nr_level: f64,
    /// Peak relative deviation of `eps_m` from 1.
    pub modulation: f64,
    /// Peak of the noiseless spectrum over the noise sd.
    pub snr: f64,
    pub wavelet_order: usize,
    pub levels: Option<usize>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            start: 500.0,
            step: 1.0,
            len: 1024,
            lines: vec![
                VoigtLine { amplitude: 12.0, location: 800.0, sigma: 2.0, gamma: 4.0 },
                VoigtLine { amplitude: 8.0, location: 950.0, sigma: 2.5, gamma: 3.0 },
                VoigtLine { amplitude: 10.0, location: 1010.0, sigma: 1.5, gamma: 5.0 },
            ],
            background: 5.4,
            nr_level: 0.0,
            modulation: 0.15,
            snr: 50.0,
            wavelet_order: 34,
            levels: None,
        }
    }
}

impl SyntheticConfig {
    pub fn grid(&self) -> Result<WavenumberGrid> {
        WavenumberGrid::new(self.start, self.step, self.len)
    }

    pub fn levels(&self) -> usize {
        self.levels
            .unwrap_or_else(|| ErrorFunctionEngine::default_levels(self.len))
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.lines.clone(), self.background)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let params = self.params()?;
        let levels = self.levels();
        if !(self.background >= 1.0 && self.background <= levels as f64) {
            return Err(Error::Config(format!(
                "background {} outside [1, {levels}]",
                self.background
            )));
        }
        if !(self.modulation >= 0.0 && self.modulation < 1.0) {
            return Err(Error::Config(format!("modulation must lie in [0, 1), got {}", self.modulation)));
        }
        if !(self.snr > 0.0) {
            return Err(Error::Config(format!("snr must be > 0, got {}", self.snr)));
        }
        if !self.nr_level.is_finite() {
            return Err(Error::Config("nr_level must be finite".into()));
        }
        for l in &params.lines {
            if l.location < grid.start() || l.location > grid.end() {
                return Err(Error::Config(format!("line at {} lies off the grid", l.location)));
            }
        }
        Ok(())
    }
}

/// Ground truth written next to a synthetic spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTruth {
    pub params: ModelParams,
    pub nr_level: f64,
    pub noise_sd: f64,
    /// True `eps_m(nu; p*)`.
    pub error_function: Vec<f64>,
    /// Noiseless `f = eps_m S`.
    pub signal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub grid: WavenumberGrid,
    pub values: Vec<f64>,
    /// Positive signal whose wavelet details define the artefact.
    pub reference: Vec<f64>,
    pub truth: SyntheticTruth,
}

impl Simulation {
    /// A new noise realisation of the same truth.
    pub fn replicate(&self, seed: u64, index: u64) -> Result<Vec<f64>> {
        add_noise(&self.truth.signal, self.truth.noise_sd, seed, index)
    }
}

fn add_noise(signal: &[f64], sd: f64, seed: u64, index: u64) -> Result<Vec<f64>> {
    if sd == 0.0 {
        return Ok(signal.to_vec());
    }
    let noise = Normal::new(0.0, sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = substream(seed, SIMULATE, 0, index);
    Ok(signal.iter().map(|f| f + noise.sample(&mut rng)).collect())
}

/// Smooth log-reference: a tilt plus slow oscillations spread over the
/// coarse wavelet levels.
fn log_reference_shape(len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let t = k as f64 / (len - 1) as f64;
            0.6 * (t - 0.5) + 0.5 * (2.0 * PI * 0.8 * t + 0.3).sin() + 0.3 * (2.0 * PI * 2.3 * t + 1.1).sin()
                + 0.15 * (2.0 * PI * 5.1 * t).cos()
        })
        .collect()
}

fn engine_for(grid: WavenumberGrid, log_ref: &[f64], cfg: &SyntheticConfig) -> Result<ErrorFunctionEngine> {
    ErrorFunctionEngine::from_log_signal(grid, log_ref, cfg.wavelet_order, cfg.levels(), LevelInterpolation::Floor)
}

/// Generates a noisy spectrum; `seed` selects the noise realisation.
pub fn simulate(cfg: &SyntheticConfig, seed: u64) -> Result<Simulation> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let params = cfg.params()?;

    let shape = log_reference_shape(cfg.len);
    let unit = engine_for(grid, &shape, cfg)?.log_modulation(cfg.background)?;
    let peak = unit.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { (1.0 + cfg.modulation).ln() / peak } else { 0.0 };
    let log_ref: Vec<f64> = shape.iter().map(|v| scale * v).collect();
    let error_function = engine_for(grid, &log_ref, cfg)?.modulating_error(cfg.background)?;

    let s = cars_signal(&grid, &params.lines, cfg.nr_level)?;
    let signal: Vec<f64> = s.iter().zip(&error_function).map(|(s, e)| s * e).collect();
    let max = signal.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let noise_sd = max / cfg.snr;
    let values = add_noise(&signal, noise_sd, seed, 0)?;
    Ok(Simulation {
        grid,
        values,
        reference: log_ref.iter().map(|v| v.exp()).collect(),
        truth: SyntheticTruth {
            params,
            nr_level: cfg.nr_level,
            noise_sd,
            error_function,
            signal,
        },
    })
}
