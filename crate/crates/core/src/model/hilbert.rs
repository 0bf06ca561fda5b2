//! Discrete Hilbert transform with the sign convention `H{cos} = sin`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};

/// How the finite record is continued outside its support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HilbertBoundary {
    /// The record is one period of a periodic signal (`-i sgn(omega)` multiplier).
    Periodic,
    /// The record is zero outside its support; computed as a linear
    /// convolution with the discrete Hilbert kernel `2 / (pi n)` (odd `n`)
    /// on a `2K` FFT grid, long enough that no wrap-around reaches the output.
    #[default]
    ZeroPadded,
}

/// Reusable Hilbert transformer for a fixed record length.
///
/// Holds real-FFT plans and the kernel spectrum; cloning is cheap and each
/// clone owns its own scratch buffers.
#[derive(Clone)]
pub struct HilbertTransformer {
    len: usize,
    fft_len: usize,
    boundary: HilbertBoundary,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    multiplier: Arc<[Complex64]>,
    real: Vec<f64>,
    spectrum: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for HilbertTransformer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HilbertTransformer")
            .field("len", &self.len)
            .field("fft_len", &self.fft_len)
            .field("boundary", &self.boundary)
            .finish()
    }
}

impl HilbertTransformer {
    pub const MIN_LEN: usize = 8;

    pub fn new(len: usize, boundary: HilbertBoundary) -> Result<Self> {
        if len < Self::MIN_LEN {
            return Err(Error::invalid(format!(
                "Hilbert transform needs at least {} samples, got {len}",
                Self::MIN_LEN
            )));
        }
        let fft_len = match boundary {
            HilbertBoundary::Periodic => len,
            HilbertBoundary::ZeroPadded => 2 * len,
        };
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let norm = 1.0 / fft_len as f64;
        let half = fft_len / 2 + 1;
        let mut multiplier = match boundary {
            HilbertBoundary::Periodic => (0..half)
                .map(|k| {
                    let s = if k == 0 || 2 * k == fft_len { 0.0 } else { 1.0 };
                    Complex64::new(0.0, -s * norm)
                })
                .collect(),
            HilbertBoundary::ZeroPadded => {
                let mut kernel = vec![0.0; fft_len];
                for n in (1..len).step_by(2) {
                    let v = 2.0 / (PI * n as f64);
                    kernel[n] = v * norm;
                    kernel[fft_len - n] = -v * norm;
                }
                let mut out = forward.make_output_vec();
                forward
                    .process(&mut kernel, &mut out)
                    .map_err(|e| Error::Numerical(e.to_string()))?;
                out
            }
        };
        // odd kernel: the DC and Nyquist terms vanish
        multiplier[0] = Complex64::new(0.0, 0.0);
        if fft_len % 2 == 0 {
            multiplier[half - 1] = Complex64::new(0.0, 0.0);
        }
        let scratch_len = forward.get_scratch_len().max(inverse.get_scratch_len());
        Ok(Self {
            len,
            fft_len,
            boundary,
            real: vec![0.0; fft_len],
            spectrum: vec![Complex64::new(0.0, 0.0); half],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            forward,
            inverse,
            multiplier: multiplier.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn boundary(&self) -> HilbertBoundary {
        self.boundary
    }

    /// Writes `H{signal}` into `out`. Both slices must have the planned length.
    pub fn transform_into(&mut self, signal: &[f64], out: &mut [f64]) {
        assert_eq!(signal.len(), self.len, "signal length");
        assert_eq!(out.len(), self.len, "output length");
        self.real[..self.len].copy_from_slice(signal);
        self.real[self.len..].iter_mut().for_each(|v| *v = 0.0);
        self.forward
            .process_with_scratch(&mut self.real, &mut self.spectrum, &mut self.scratch)
            .expect("buffer lengths match the plan");
        for (b, m) in self.spectrum.iter_mut().zip(self.multiplier.iter()) {
            *b *= m;
        }
        self.inverse
            .process_with_scratch(&mut self.spectrum, &mut self.real, &mut self.scratch)
            .expect("buffer lengths match the plan");
        out.copy_from_slice(&self.real[..self.len]);
    }

    pub fn transform(&mut self, signal: &[f64]) -> Result<Vec<f64>> {
        if signal.len() != self.len {
            return Err(Error::invalid(format!(
                "expected {} samples, got {}",
                self.len,
                signal.len()
            )));
        }
        if signal.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Hilbert transform input"));
        }
        let mut out = vec![0.0; self.len];
        self.transform_into(signal, &mut out);
        Ok(out)
    }
}

/// One-shot Hilbert transform.
pub fn hilbert_transform(signal: &[f64], boundary: HilbertBoundary) -> Result<Vec<f64>> {
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Hilbert transform input"));
    }
    HilbertTransformer::new(signal.len(), boundary)?.transform(signal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        for b in [HilbertBoundary::Periodic, HilbertBoundary::ZeroPadded] {
            let h = hilbert_transform(&[0.0; 64], b).unwrap();
            assert!(h.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn cosine_to_sine_on_periodic_grid() {
        let k = 256;
        let cos: Vec<f64> = (0..k)
            .map(|i| (2.0 * PI * 8.0 * i as f64 / k as f64).cos())
            .collect();
        let h = hilbert_transform(&cos, HilbertBoundary::Periodic).unwrap();
        for (i, v) in h.iter().enumerate() {
            let s = (2.0 * PI * 8.0 * i as f64 / k as f64).sin();
            assert!((v - s).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_short_and_non_finite() {
        assert!(hilbert_transform(&[1.0; 4], HilbertBoundary::ZeroPadded).is_err());
        let mut x = vec![0.0; 16];
        x[3] = f64::INFINITY;
        assert!(hilbert_transform(&x, HilbertBoundary::ZeroPadded).is_err());
    }

    #[test]
    fn padded_matches_direct_kernel_sum() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let h = hilbert_transform(&x, HilbertBoundary::ZeroPadded).unwrap();
        for m in 0..x.len() {
            let mut direct = 0.0;
            for (j, &v) in x.iter().enumerate() {
                let n = m as i64 - j as i64;
                if n % 2 != 0 {
                    direct += 2.0 / (PI * n as f64) * v;
                }
            }
            assert!((h[m] - direct).abs() < 1e-12);
        }
    }
}
