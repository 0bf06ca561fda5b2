use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::burg::BurgPredictor;
use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;
use crate::model::lorentzian;

/// Reason a (γ, N_FIR) candidate was dropped from the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// A prediction pole lies outside the unit circle.
    UnstablePrediction,
    /// The filter is longer than the usable deconvolved record.
    InsufficientRecord,
    /// `D_A` has no positive mass, so `c_n` is undefined.
    UndefinedNormalization,
    NonFinite,
}

/// Discrete Fourier transform of a unit-area Lorentzian sampled with step `h`
/// and scaled by `h`, at conjugate coordinate `t` with `|t| <= 1/(2h)`.
///
/// This is the periodised form of `exp(-2 pi gamma |t|)`.
pub fn lorentzian_transform(t: f64, gamma: f64, h: f64) -> f64 {
    let a = 2.0 * PI * gamma;
    let half = 0.5 / h;
    let x = a * (half - t.abs());
    if a * half > 300.0 {
        // cosh(x) / sinh(a/2h) without overflow
        (-(a * t.abs())).exp() * (1.0 + (-2.0 * x).exp()) / (1.0 - (-2.0 * a * half).exp())
    } else {
        x.cosh() / (a * half).sinh()
    }
}

/// FFT-domain state shared by every filter length at one Lorentzian width.
///
/// Holds the deconvolved one-sided time signal, the usable window `T_keep`
/// and Burg predictors fitted on that window.
#[derive(Clone)]
pub struct Deconvolver {
    gamma: f64,
    len: usize,
    padded_len: usize,
    offset: f64,
    one_sided: Vec<Complex64>,
    keep: usize,
    burg: BurgPredictor,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Deconvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Deconvolver")
            .field("gamma", &self.gamma)
            .field("len", &self.len)
            .field("keep", &self.keep)
            .finish()
    }
}

impl Deconvolver {
    /// `T_keep` is the shorter of two windows: samples whose divisor is at
    /// least `divisor_floor` of its peak, and (when `noise_multiple` is set)
    /// samples up to the last one whose undivided magnitude exceeds
    /// `noise_multiple` times the median magnitude of the upper half band.
    pub fn new(
        spectrum: &[f64],
        grid: &WavenumberGrid,
        gamma: f64,
        max_order: usize,
        divisor_floor: f64,
        noise_multiple: Option<f64>,
        planner: &mut FftPlanner<f64>,
    ) -> Result<Self> {
        let k = spectrum.len();
        grid.ensure_len(k)?;
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("width must be > 0, got {gamma}")));
        }
        if spectrum.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectrum"));
        }
        let h = grid.step();
        let lp = 2 * k;
        let offset = 0.5 * (spectrum[0] + spectrum[k - 1]);

        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .map(|v| Complex64::new(v - offset, 0.0))
            .chain(std::iter::repeat_n(Complex64::new(0.0, 0.0), lp - k))
            .collect();
        planner.plan_fft_forward(lp).process(&mut buf);

        let limit = match noise_multiple {
            Some(mult) => noise_window(&buf[..=k], mult),
            None => k + 1,
        };
        let peak = lorentzian_transform(0.0, gamma, h);
        let mut one_sided = Vec::with_capacity(limit);
        for (m, v) in buf.iter().take(limit).enumerate() {
            let t = m as f64 / (lp as f64 * h);
            let div = lorentzian_transform(t, gamma, h);
            if div < divisor_floor * peak {
                break;
            }
            one_sided.push(v / div);
        }
        let keep = one_sided.len();
        let burg = BurgPredictor::fit(&one_sided, max_order);

        Ok(Self {
            gamma,
            len: k,
            padded_len: lp,
            offset,
            one_sided,
            keep,
            burg,
            inverse: planner.plan_fft_inverse(lp),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of deconvolved time samples retained before prediction.
    pub fn keep(&self) -> usize {
        self.keep
    }

    /// `D_A` for filter length `n_fir` (predictor order `n_fir - 1`), with
    /// the one-sided time signal extended to `extrap_len` samples.
    pub fn delta_approximation(
        &self,
        n_fir: usize,
        extrap_len: usize,
    ) -> std::result::Result<Vec<f64>, Rejection> {
        let order = n_fir.saturating_sub(1);
        if self.keep == 0 || (order > 0 && order >= self.keep) || order > self.burg.max_order() {
            return Err(Rejection::InsufficientRecord);
        }
        if !self.burg.is_stable(order, 1e-9) {
            return Err(Rejection::UnstablePrediction);
        }
        let nyquist = self.len;
        let target = extrap_len.min(nyquist + 1);
        let mut x = self.one_sided.clone();
        x.truncate(target.max(1));
        self.burg.extrapolate(order, &mut x, target);

        let lp = self.padded_len;
        let mut full = vec![Complex64::new(0.0, 0.0); lp];
        for (m, v) in x.iter().enumerate() {
            if m == 0 || m == nyquist {
                full[m] = Complex64::new(v.re, 0.0);
            } else {
                full[m] = *v;
                full[lp - m] = v.conj();
            }
        }
        self.inverse.process(&mut full);
        let scale = 1.0 / lp as f64;
        let out: Vec<f64> = full[..self.len]
            .iter()
            .map(|v| v.re * scale + self.offset)
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Rejection::NonFinite);
        }
        Ok(out)
    }
}

/// One past the last index whose magnitude exceeds `mult` times the median
/// magnitude of the upper half of `spectrum`.
pub(crate) fn noise_window(one_sided: &[Complex64], mult: f64) -> usize {
    let n = one_sided.len();
    let mut tail: Vec<f64> = one_sided[n / 2..].iter().map(|v| v.norm()).collect();
    tail.sort_by(f64::total_cmp);
    let floor = mult * tail[tail.len() / 2];
    if floor == 0.0 {
        return n;
    }
    one_sided
        .iter()
        .rposition(|v| v.norm() > floor)
        .map_or(1, |m| m + 1)
}

/// Fourier self-deconvolution of `spectrum` by a unit-area Lorentzian of
/// half-width `gamma`, followed by Burg linear prediction with filter length
/// `n_fir`, using the default time window.
///
/// The result is a density: a line of area `a` maps to a spike carrying
/// `h * sum = a`.
pub fn fsd_linear_predict(
    spectrum: &[f64],
    grid: &WavenumberGrid,
    gamma: f64,
    n_fir: usize,
    extrap_len: usize,
) -> Result<Vec<f64>> {
    let mut planner = FftPlanner::new();
    let cfg = super::NarrowingConfig::default();
    let dec = Deconvolver::new(
        spectrum,
        grid,
        gamma,
        n_fir.saturating_sub(1),
        cfg.divisor_floor,
        cfg.noise_multiple,
        &mut planner,
    )?;
    dec.delta_approximation(n_fir, extrap_len)
        .map_err(|r| Error::Numerical(format!("candidate rejected: {r:?}")))
}

/// Linear convolution `h * sum_j L((k - j) h; gamma) D[j]` restricted to the
/// grid, computed for two real inputs at once.
#[derive(Clone)]
pub struct LorentzConvolver {
    len: usize,
    step: f64,
    kernel: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LorentzConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LorentzConvolver").field("len", &self.len).finish()
    }
}

impl LorentzConvolver {
    pub fn new(len: usize, step: f64, gamma: f64, planner: &mut FftPlanner<f64>) -> Self {
        let n = 4 * len;
        let mut kernel = vec![Complex64::new(0.0, 0.0); n];
        for (i, slot) in kernel.iter_mut().take(2 * len - 1).enumerate() {
            let x = (i as f64 - (len as f64 - 1.0)) * step;
            *slot = Complex64::new(step * lorentzian(x, gamma), 0.0);
        }
        let forward = planner.plan_fft_forward(n);
        forward.process(&mut kernel);
        Self {
            len,
            step,
            kernel,
            forward,
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Convolves `a` and `b` with the kernel in one complex pass.
    pub fn convolve_pair(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.kernel.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (i, slot) in buf.iter_mut().take(self.len).enumerate() {
            *slot = Complex64::new(a[i], b[i]);
        }
        self.forward.process(&mut buf);
        for (v, k) in buf.iter_mut().zip(&self.kernel) {
            *v *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        let shift = self.len - 1;
        let window = &buf[shift..shift + self.len];
        (
            window.iter().map(|v| v.re * scale).collect(),
            window.iter().map(|v| v.im * scale).collect(),
        )
    }

    pub fn convolve(&self, a: &[f64]) -> Vec<f64> {
        self.convolve_pair(a, &vec![0.0; a.len()]).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(len: usize, step: f64) -> WavenumberGrid {
        WavenumberGrid::new(0.0, step, len).unwrap()
    }

    #[test]
    fn transform_matches_direct_dft_of_sampled_lorentzian() {
        let (gamma, h, n) = (1.3, 0.5, 4096usize);
        for m in [0usize, 5, 100, 900, 2048] {
            let t = m as f64 / (n as f64 * h);
            let mut acc = 0.0;
            for j in -200_000i64..=200_000 {
                let x = j as f64 * h;
                acc += h * lorentzian(x, gamma) * (2.0 * PI * t * x).cos();
            }
            let exact = lorentzian_transform(t, gamma, h);
            assert!((acc - exact).abs() < 1e-5, "m={m}: {acc} vs {exact}");
        }
    }

    #[test]
    fn transform_tends_to_continuous_form_for_wide_lines() {
        let t = 0.05;
        let v = lorentzian_transform(t, 40.0, 1.0);
        assert!((v - (-2.0 * PI * 40.0 * t).exp()).abs() < 1e-12);
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let k = 64;
        let h = 0.7;
        let conv = LorentzConvolver::new(k, h, 2.1, &mut FftPlanner::new());
        let a: Vec<f64> = (0..k).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let b: Vec<f64> = (0..k).map(|i| ((i * 104729) % 11) as f64).collect();
        let (ca, cb) = conv.convolve_pair(&a, &b);
        for i in 0..k {
            let direct = |d: &[f64]| -> f64 {
                (0..k)
                    .map(|j| h * lorentzian((i as f64 - j as f64) * h, 2.1) * d[j])
                    .sum()
            };
            assert!((ca[i] - direct(&a)).abs() < 1e-12);
            assert!((cb[i] - direct(&b)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spectrum_gives_zero_delta_approximation() {
        let g = grid(128, 1.0);
        let spec = vec![0.0; 128];
        let d = fsd_linear_predict(&spec, &g, 3.0, 10, 128).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn overlong_filters_are_rejected() {
        let g = grid(256, 1.0);
        let spec: Vec<f64> = (0..256).map(|i| lorentzian(i as f64 - 128.0, 30.0)).collect();
        let mut planner = FftPlanner::new();
        let dec = Deconvolver::new(&spec, &g, 30.0, 149, 1e-3, None, &mut planner).unwrap();
        assert!(dec.keep() < 150);
        assert_eq!(
            dec.delta_approximation(150, 256),
            Err(Rejection::InsufficientRecord)
        );
    }

    #[test]
    fn rejects_bad_width() {
        let g = grid(16, 1.0);
        assert!(fsd_linear_predict(&[0.0; 16], &g, 0.0, 2, 16).is_err());
    }
}
