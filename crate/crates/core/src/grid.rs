use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform spectral axis `nu_k = start + k * step`, in cm^-1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavenumberGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl WavenumberGrid {
    pub const MIN_LEN: usize = 8;

    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !start.is_finite() || !step.is_finite() {
            return Err(Error::NonFinite("wavenumber grid"));
        }
        if step <= 0.0 {
            return Err(Error::invalid(format!("grid step must be > 0, got {step}")));
        }
        if len < Self::MIN_LEN {
            return Err(Error::invalid(format!(
                "grid needs at least {} points, got {len}",
                Self::MIN_LEN
            )));
        }
        Ok(Self { start, step, len })
    }

    /// Recovers a grid from sampled wavenumbers, checking uniform spacing.
    pub fn from_axis(axis: &[f64]) -> Result<Self> {
        if axis.len() < Self::MIN_LEN {
            return Err(Error::invalid(format!(
                "grid needs at least {} points, got {}",
                Self::MIN_LEN,
                axis.len()
            )));
        }
        let n = axis.len();
        let step = (axis[n - 1] - axis[0]) / (n - 1) as f64;
        let grid = Self::new(axis[0], step, n)?;
        let tol = 1e-6 * step.abs().max(1e-12) + 1e-9 * axis[0].abs();
        for (k, &v) in axis.iter().enumerate() {
            if (v - grid.at(k)).abs() > tol.max(1e-6 * step) {
                return Err(Error::invalid(format!(
                    "wavenumber axis is not uniform at index {k} ({v} vs {})",
                    grid.at(k)
                )));
            }
        }
        Ok(grid)
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.at(k)).collect()
    }

    /// Index of the channel closest to `nu`, clamped to the grid.
    pub fn nearest_index(&self, nu: f64) -> usize {
        let idx = ((nu - self.start) / self.step).round();
        idx.clamp(0.0, (self.len - 1) as f64) as usize
    }

    pub fn same_as(&self, other: &WavenumberGrid) -> bool {
        self.len == other.len
            && (self.start - other.start).abs() <= 1e-9 * self.step
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }

    pub(crate) fn ensure_same(&self, other: &WavenumberGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "({}, {}, {}) vs ({}, {}, {})",
                self.start, self.step, self.len, other.start, other.step, other.len
            )))
        }
    }

    pub(crate) fn ensure_len(&self, len: usize) -> Result<()> {
        if len == self.len {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{len} samples on a {}-point grid",
                self.len
            )))
        }
    }
}
