use super::Symlet;
use crate::error::{Error, Result};

/// Signal extension used by the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Periodic wrap; the transform is orthonormal (exact Parseval).
    #[default]
    Periodic,
    /// Half-sample symmetric extension, realised by transforming the signal
    /// concatenated with its mirror image.
    Symmetric,
}

/// Multilevel decomposition. `details[j - 1]` holds level-`j` coefficients,
/// level 1 being the finest.
#[derive(Debug, Clone)]
pub struct WaveletDecomposition {
    approximation: Vec<f64>,
    details: Vec<Vec<f64>>,
    order: usize,
    boundary: BoundaryMode,
    original_len: usize,
}

impl WaveletDecomposition {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    pub fn approximation(&self) -> &[f64] {
        &self.approximation
    }

    /// Level-`j` coefficients, `1 <= j <= levels()`.
    pub fn detail(&self, level: usize) -> &[f64] {
        &self.details[level - 1]
    }

    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    pub fn approximation_energy(&self) -> f64 {
        self.approximation.iter().map(|v| v * v).sum()
    }

    pub fn detail_energy(&self) -> f64 {
        self.details
            .iter()
            .flat_map(|d| d.iter())
            .map(|v| v * v)
            .sum()
    }

    /// Inverse transform, cropped to the original support.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.inverse_with(|_| true, true)
    }

    /// Inverse transform of the approximation coefficients alone.
    pub fn approximation_reconstruction(&self) -> Vec<f64> {
        self.inverse_with(|_| false, true)
    }

    /// `D_1 .. D_J`: inverse transforms keeping only one detail level each.
    pub fn detail_reconstructions(&self) -> Vec<Vec<f64>> {
        (1..=self.levels())
            .map(|j| self.inverse_with(|level| level == j, false))
            .collect()
    }

    fn inverse_with(&self, keep_detail: impl Fn(usize) -> bool, keep_approx: bool) -> Vec<f64> {
        let w = Symlet::new(self.order).expect("decomposition built from a valid order");
        let mut current = if keep_approx {
            self.approximation.clone()
        } else {
            vec![0.0; self.approximation.len()]
        };
        for level in (1..=self.levels()).rev() {
            let coeffs = &self.details[level - 1];
            current = if keep_detail(level) {
                synthesis_step(&w, &current, coeffs)
            } else {
                synthesis_step(&w, &current, &vec![0.0; coeffs.len()])
            };
        }
        current.truncate(self.original_len);
        current
    }
}

fn analysis_step(w: &Symlet, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let (h, g) = (w.lowpass(), w.highpass());
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for i in 0..half {
        let (mut sa, mut sd) = (0.0, 0.0);
        for k in 0..h.len() {
            let v = x[(2 * i + k) % n];
            sa += h[k] * v;
            sd += g[k] * v;
        }
        a[i] = sa;
        d[i] = sd;
    }
    (a, d)
}

fn synthesis_step(w: &Symlet, a: &[f64], d: &[f64]) -> Vec<f64> {
    let n = 2 * a.len();
    let (h, g) = (w.lowpass(), w.highpass());
    let mut x = vec![0.0; n];
    for i in 0..a.len() {
        for k in 0..h.len() {
            x[(2 * i + k) % n] += h[k] * a[i] + g[k] * d[i];
        }
    }
    x
}

/// Extends `signal` by half-sample reflection at the right end up to `len`.
fn symmetric_pad(signal: &[f64], len: usize) -> Vec<f64> {
    let n = signal.len();
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(signal);
    let mut idx = 0usize;
    while out.len() < len {
        // period 2n: forward then mirrored
        let r = idx % (2 * n);
        let v = if r < n { signal[n - 1 - r] } else { signal[r - n] };
        out.push(v);
        idx += 1;
    }
    out
}

/// Length actually transformed for a signal of length `len`.
fn work_len(len: usize, boundary: BoundaryMode) -> usize {
    let padded = len.next_power_of_two();
    match boundary {
        BoundaryMode::Periodic => padded,
        BoundaryMode::Symmetric => 2 * padded,
    }
}

/// Deepest decomposition allowed for a signal of length `len`.
pub(crate) fn max_levels(len: usize) -> usize {
    (usize::BITS - 1 - len.leading_zeros()) as usize
}

/// Pyramidal analysis down to `levels`.
pub fn dwt_multilevel(
    signal: &[f64],
    order: usize,
    levels: usize,
    boundary: BoundaryMode,
) -> Result<WaveletDecomposition> {
    let w = Symlet::new(order)?;
    if signal.len() < 2 {
        return Err(Error::Wavelet("signal too short".into()));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("wavelet input"));
    }
    let limit = max_levels(signal.len());
    if levels == 0 || levels > limit {
        return Err(Error::Wavelet(format!(
            "decomposition depth {levels} outside 1..={limit} for {} samples",
            signal.len()
        )));
    }
    let padded = symmetric_pad(signal, signal.len().next_power_of_two());
    let mut current = match boundary {
        BoundaryMode::Periodic => padded,
        BoundaryMode::Symmetric => {
            let mut ext = padded.clone();
            ext.extend(padded.iter().rev());
            ext
        }
    };
    debug_assert_eq!(current.len(), work_len(signal.len(), boundary));
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&w, &current);
        details.push(d);
        current = a;
    }
    Ok(WaveletDecomposition {
        approximation: current,
        details,
        order,
        boundary,
        original_len: signal.len(),
    })
}

/// Fraction of signal energy carried by the detail coefficients of a
/// full-depth periodic decomposition.
pub fn energy_concentration(signal: &[f64], order: usize) -> Result<f64> {
    if signal.len() < 2 {
        return Err(Error::Wavelet(
            "energy concentration needs at least two samples".into(),
        ));
    }
    let dec = dwt_multilevel(
        signal,
        order,
        max_levels(signal.len()),
        BoundaryMode::Periodic,
    )?;
    let detail = dec.detail_energy();
    let total = detail + dec.approximation_energy();
    if !(total > 0.0) {
        return Err(Error::Wavelet(
            "energy concentration undefined for an all-zero signal".into(),
        ));
    }
    Ok((detail / total).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn constant_has_no_details() {
        let x = vec![3.5; 128];
        let dec = dwt_multilevel(&x, 8, 5, BoundaryMode::Periodic).unwrap();
        for j in 1..=5 {
            assert!(dec.detail(j).iter().all(|v| v.abs() < 1e-12));
        }
        assert!(energy_concentration(&x, 8).unwrap() < 1e-20);
    }

    #[test]
    fn perfect_reconstruction_both_modes() {
        for &n in &[64usize, 100, 256] {
            let x = noise(n, n as u64);
            for boundary in [BoundaryMode::Periodic, BoundaryMode::Symmetric] {
                let dec = dwt_multilevel(&x, 8, 4, boundary).unwrap();
                let y = dec.reconstruct();
                assert_eq!(y.len(), n);
                let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-10, "{n} {boundary:?}: {err:e}");
            }
        }
    }

    #[test]
    fn depth_and_order_errors() {
        let x = noise(64, 1);
        assert!(dwt_multilevel(&x, 8, 7, BoundaryMode::Periodic).is_err());
        assert!(dwt_multilevel(&x, 8, 0, BoundaryMode::Periodic).is_err());
        assert!(dwt_multilevel(&x, 99, 2, BoundaryMode::Periodic).is_err());
        assert!(dwt_multilevel(&x, 8, 6, BoundaryMode::Periodic).is_ok());
    }

    #[test]
    fn all_zero_energy_is_an_error() {
        assert!(energy_concentration(&[0.0; 32], 8).is_err());
    }

    #[test]
    fn symmetric_pad_reflects() {
        assert_eq!(symmetric_pad(&[1.0, 2.0, 3.0], 8), vec![1.0, 2.0, 3.0, 3.0, 2.0, 1.0, 1.0, 2.0]);
    }
}
