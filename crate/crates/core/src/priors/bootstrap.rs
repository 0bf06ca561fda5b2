use crate::error::{Error, Result};
use crate::model::{cars_from_parts, HilbertBoundary, HilbertTransformer, MeasuredSpectrum};
use crate::wavelet::ErrorFunctionEngine;

const MIN_CHANNELS: usize = 16;

/// `y / eps_m(p_hat)`: the measurement with the modulating error removed.
pub fn corrected_signal(values: &[f64], engine: &ErrorFunctionEngine, p_hat: f64) -> Result<Vec<f64>> {
    engine.grid().ensure_len(values.len())?;
    let eps = engine.modulating_error(p_hat)?;
    Ok(values.iter().zip(&eps).map(|(y, e)| y / e).collect())
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `A_J = ln median(S)`, so that `exp(A_J)` is the typical off-resonance level.
pub fn estimate_nr_level(corrected: &[f64]) -> Result<f64> {
    if corrected.is_empty() {
        return Err(Error::invalid("empty signal"));
    }
    let m = median(corrected);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Numerical(format!("median of the corrected signal is {m}")));
    }
    Ok(m.ln())
}

/// Minimum-phase estimate of the Raman signal `V_N` from `S = |chi|^2`.
///
/// The phase of `chi = exp(A_J/2) + i(V_N + i H{V_N})` is the Hilbert
/// transform of `ln|chi| - A_J/2`, and `V_N = |chi| sin(phase)`.
pub fn retrieve_raman(corrected: &[f64], nr_level: f64) -> Result<Vec<f64>> {
    let floor = f64::MIN_POSITIVE;
    let log_mod: Vec<f64> = corrected
        .iter()
        .map(|s| 0.5 * (s.max(floor).ln() - nr_level))
        .collect();
    let mut hilbert = HilbertTransformer::new(corrected.len(), HilbertBoundary::ZeroPadded)?;
    let phase = hilbert.transform(&log_mod)?;
    Ok(corrected
        .iter()
        .zip(&phase)
        .map(|(s, ph)| s.max(0.0).sqrt() * ph.sin())
        .collect())
}

/// Sample variance of `y - eps_m(p_hat) S(raman)` over the unmasked channels,
/// floored at `floor`.
pub fn estimate_noise_variance(
    measured: &MeasuredSpectrum,
    raman: &[f64],
    p_hat: f64,
    engine: &ErrorFunctionEngine,
    floor: f64,
) -> Result<f64> {
    measured.grid.ensure_len(raman.len())?;
    let range = measured.active_range();
    if range.len() < MIN_CHANNELS {
        return Err(Error::invalid(format!(
            "noise estimate needs {MIN_CHANNELS} channels, {} available",
            range.len()
        )));
    }
    let mut hilbert = HilbertTransformer::new(raman.len(), HilbertBoundary::ZeroPadded)?;
    let h = hilbert.transform(raman)?;
    let s = cars_from_parts(raman, &h, measured.nr_level);
    let eps = engine.modulating_error(p_hat)?;
    let resid: Vec<f64> = range
        .map(|k| measured.values[k] - eps[k] * s[k])
        .collect();
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !var.is_finite() {
        return Err(Error::NonFinite("noise variance"));
    }
    Ok(var.max(floor))
}
