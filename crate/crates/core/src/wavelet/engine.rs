use serde::{Deserialize, Serialize};

use super::dwt::{dwt_multilevel, max_levels, BoundaryMode};
use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;

/// How a fractional level `p = floor(p) + beta` is turned into an error function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelInterpolation {
    /// `sum_{j = floor(p)+1}^{J} D_j + (1 - beta) D_floor(p)`: continuous in `p`.
    #[default]
    Floor,
    /// `sum_{j = ceil(p+1)}^{J} D_j + (1 - beta) D_ceil(p)`: the ceiling form.
    /// It agrees with `Floor` at integer `p` but jumps there.
    Ceiling,
}

/// Detail reconstructions `D_1..D_J` of a log-signal, ready to evaluate the
/// modulating error function `eps_m(nu; p)` for any `p` in `[1, J]`.
#[derive(Debug, Clone)]
pub struct ErrorFunctionEngine {
    grid: WavenumberGrid,
    details: Vec<Vec<f64>>,
    // tail[j] = sum_{i >= j+1} D_i, j = 0..=J (tail[J] = 0)
    tail: Vec<Vec<f64>>,
    approximation: Vec<f64>,
    order: usize,
    interpolation: LevelInterpolation,
}

impl ErrorFunctionEngine {
    /// Default depth: `floor(log2 K) - 2`, at least 1.
    pub fn default_levels(len: usize) -> usize {
        max_levels(len).saturating_sub(2).max(1)
    }

    /// Decomposes `log_signal` with symmetric extension.
    pub fn from_log_signal(
        grid: WavenumberGrid,
        log_signal: &[f64],
        order: usize,
        levels: usize,
        interpolation: LevelInterpolation,
    ) -> Result<Self> {
        if log_signal.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "log-signal has {} samples, grid has {}",
                log_signal.len(),
                grid.len()
            )));
        }
        let dec = dwt_multilevel(log_signal, order, levels, BoundaryMode::Symmetric)?;
        let details = dec.detail_reconstructions();
        let approximation = dec.approximation_reconstruction();
        Ok(Self::from_parts(grid, details, approximation, order, interpolation))
    }

    /// Decomposes `log(signal)`; the signal must be strictly positive.
    pub fn from_signal(
        grid: WavenumberGrid,
        signal: &[f64],
        order: usize,
        levels: usize,
        interpolation: LevelInterpolation,
    ) -> Result<Self> {
        if let Some((k, v)) = signal.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::invalid(format!(
                "error-function basis must be positive; sample {k} is {v}"
            )));
        }
        let logs: Vec<f64> = signal.iter().map(|v| v.ln()).collect();
        Self::from_log_signal(grid, &logs, order, levels, interpolation)
    }

    /// Assembles an engine from precomputed detail reconstructions.
    pub fn from_parts(
        grid: WavenumberGrid,
        details: Vec<Vec<f64>>,
        approximation: Vec<f64>,
        order: usize,
        interpolation: LevelInterpolation,
    ) -> Self {
        let k = grid.len();
        let levels = details.len();
        let mut tail = vec![vec![0.0; k]; levels + 1];
        for j in (0..levels).rev() {
            let (lo, hi) = tail.split_at_mut(j + 1);
            for ((t, next), d) in lo[j].iter_mut().zip(&hi[0]).zip(&details[j]) {
                *t = next + d;
            }
        }
        Self {
            grid,
            details,
            tail,
            approximation,
            order,
            interpolation,
        }
    }

    pub fn grid(&self) -> &WavenumberGrid {
        &self.grid
    }

    pub fn max_level(&self) -> usize {
        self.details.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn interpolation(&self) -> LevelInterpolation {
        self.interpolation
    }

    pub fn with_interpolation(mut self, interpolation: LevelInterpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    /// `D_j`, `1 <= j <= J`.
    pub fn detail(&self, level: usize) -> &[f64] {
        &self.details[level - 1]
    }

    pub fn approximation(&self) -> &[f64] {
        &self.approximation
    }

    fn check_level(&self, p: f64) -> Result<()> {
        let j = self.max_level() as f64;
        if !(p >= 1.0 && p <= j) {
            return Err(Error::invalid(format!("level p = {p} outside [1, {j}]")));
        }
        Ok(())
    }

    /// `log eps_m(nu_k; p)` written into `out`.
    pub fn log_modulation_into(&self, p: f64, out: &mut [f64]) -> Result<()> {
        self.check_level(p)?;
        let beta = p - p.floor();
        let level = match self.interpolation {
            LevelInterpolation::Floor => p.floor() as usize,
            LevelInterpolation::Ceiling => p.ceil() as usize,
        };
        // tail[level] = sum_{j > level} D_j
        let tail = &self.tail[level];
        let partial = &self.details[level - 1];
        let w = 1.0 - beta;
        for ((o, t), d) in out.iter_mut().zip(tail).zip(partial) {
            *o = t + w * d;
        }
        Ok(())
    }

    pub fn log_modulation(&self, p: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.grid.len()];
        self.log_modulation_into(p, &mut out)?;
        Ok(out)
    }

    /// Modulating error function `eps_m(nu_k; p) > 0`.
    pub fn modulating_error(&self, p: f64) -> Result<Vec<f64>> {
        let mut out = self.log_modulation(p)?;
        out.iter_mut().for_each(|v| *v = v.exp());
        Ok(out)
    }

    pub fn modulating_error_into(&self, p: f64, out: &mut [f64]) -> Result<()> {
        self.log_modulation_into(p, out)?;
        out.iter_mut().for_each(|v| *v = v.exp());
        Ok(())
    }
}
