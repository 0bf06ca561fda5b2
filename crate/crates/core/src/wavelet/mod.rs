//! Orthonormal multilevel DWT with symlet filters, per-level detail
//! reconstructions, the interpolated modulating error function and the
//! wavelet energy concentration used to score narrowed spectra.

mod dwt;
mod engine;
mod symlet_table;

pub use dwt::{dwt_multilevel, energy_concentration, BoundaryMode, WaveletDecomposition};
pub use engine::{ErrorFunctionEngine, LevelInterpolation};

use crate::error::{Error, Result};

/// Orthonormal symlet filter pair.
#[derive(Debug, Clone)]
pub struct Symlet {
    order: usize,
    lowpass: &'static [f64],
    highpass: Vec<f64>,
}

impl Symlet {
    pub fn new(order: usize) -> Result<Self> {
        let lowpass = symlet_table::SYMLETS
            .iter()
            .find(|(n, _)| *n == order)
            .map(|(_, h)| *h)
            .ok_or_else(|| {
                Error::Wavelet(format!(
                    "unsupported symlet order {order}; available: {:?}",
                    supported_orders()
                ))
            })?;
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - k]
            })
            .collect();
        Ok(Self {
            order,
            lowpass,
            highpass,
        })
    }

    /// Number of vanishing moments.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn filter_len(&self) -> usize {
        self.lowpass.len()
    }

    /// Scaling filter `h`, with `sum h = sqrt 2` and `sum h^2 = 1`.
    pub fn lowpass(&self) -> &[f64] {
        self.lowpass
    }

    /// Wavelet filter `g[k] = (-1)^k h[L-1-k]`.
    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }
}

/// Symlet orders with tabulated coefficients.
pub fn supported_orders() -> Vec<usize> {
    symlet_table::SYMLETS.iter().map(|(n, _)| *n).collect()
}
