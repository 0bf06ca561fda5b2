use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::fsd::{LorentzConvolver, Rejection};
use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;
use crate::wavelet::energy_concentration;

/// Residual and sharpness scores of one delta approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScores {
    /// Residual of the plain reconvolution.
    pub d: f64,
    /// Residual after truncating negative mass and renormalising.
    pub d_c: f64,
    /// Area normalisation `sum D_A / sum max(D_A, 0)`.
    pub c_n: f64,
    /// Wavelet energy concentration of `D_A`.
    pub c_we: f64,
    /// Filtering criterion `d + d_c`.
    pub f_c: f64,
}

pub(crate) fn sum_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

pub(crate) fn score_with(
    spectrum: &[f64],
    delta: &[f64],
    conv: &LorentzConvolver,
    wavelet_order: usize,
) -> std::result::Result<CandidateScores, Rejection> {
    let positive: Vec<f64> = delta.iter().map(|v| v.max(0.0)).collect();
    let pos_sum: f64 = positive.iter().sum();
    if !(pos_sum > 0.0) {
        return Err(Rejection::UndefinedNormalization);
    }
    let c_n = delta.iter().sum::<f64>() / pos_sum;
    let (full, truncated) = conv.convolve_pair(delta, &positive);
    let d = sum_sq_diff(spectrum, &full);
    let d_c: f64 = spectrum
        .iter()
        .zip(&truncated)
        .map(|(s, t)| (s - c_n * t).powi(2))
        .sum();
    let c_we = energy_concentration(delta, wavelet_order).map_err(|_| Rejection::NonFinite)?;
    let scores = CandidateScores {
        d,
        d_c,
        c_n,
        c_we,
        f_c: d + d_c,
    };
    if [d, d_c, c_n, c_we].iter().all(|v| v.is_finite()) {
        Ok(scores)
    } else {
        Err(Rejection::NonFinite)
    }
}

/// Scores a delta approximation `delta` of `spectrum` deconvolved at width
/// `gamma`.
pub fn score_candidate(
    spectrum: &[f64],
    grid: &WavenumberGrid,
    delta: &[f64],
    gamma: f64,
    wavelet_order: usize,
) -> Result<CandidateScores> {
    grid.ensure_len(spectrum.len())?;
    grid.ensure_len(delta.len())?;
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("delta approximation"));
    }
    let conv = LorentzConvolver::new(grid.len(), grid.step(), gamma, &mut FftPlanner::new());
    score_with(spectrum, delta, &conv, wavelet_order)
        .map_err(|r| Error::Numerical(format!("candidate rejected: {r:?}")))
}

/// Convolution with a unit-area Gaussian of the given FWHM (same units as
/// the grid step), zero outside the grid.
pub fn gaussian_smooth(signal: &[f64], step: f64, fwhm: f64) -> Vec<f64> {
    if fwhm <= 0.0 {
        return signal.to_vec();
    }
    let sigma = fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt()) / step;
    let half = (5.0 * sigma).ceil() as usize;
    let mut kernel: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let x = i as f64 - half as f64;
            (-0.5 * (x / sigma).powi(2)).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);

    let n = signal.len();
    (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .filter_map(|(j, w)| {
                    let idx = (i + j).checked_sub(half)?;
                    signal.get(idx).map(|s| w * s)
                })
                .sum()
        })
        .collect()
}
