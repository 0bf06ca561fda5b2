use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::faddeeva::{faddeeva, faddeeva_re, faddeeva_re_far, far_threshold};
use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// One Voigt line: area `amplitude`, centre `location` and the Gaussian
/// (`sigma`) and Lorentzian half-width (`gamma`) scales, all in cm^-1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoigtLine {
    pub amplitude: f64,
    pub location: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl VoigtLine {
    pub fn new(amplitude: f64, location: f64, sigma: f64, gamma: f64) -> Result<Self> {
        let line = Self {
            amplitude,
            location,
            sigma,
            gamma,
        };
        line.validate()?;
        Ok(line)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.amplitude, self.location, self.sigma, self.gamma]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("Voigt line"));
        }
        if self.amplitude <= 0.0 {
            return Err(Error::invalid(format!(
                "line amplitude must be > 0, got {}",
                self.amplitude
            )));
        }
        if self.sigma < 0.0 || self.gamma < 0.0 {
            return Err(Error::invalid("line widths must be >= 0"));
        }
        if self.sigma == 0.0 && self.gamma == 0.0 {
            return Err(Error::invalid(
                "sigma and gamma are both zero (degenerate Dirac line)",
            ));
        }
        Ok(())
    }

    /// Unit-area profile value at offset `x = nu - location`, times amplitude.
    #[inline]
    pub fn value_at_offset(&self, x: f64) -> f64 {
        self.amplitude * unit_voigt(x, self.sigma, self.gamma)
    }

    /// Complex line shape `amplitude * w(z) / (sigma sqrt(2 pi))`.
    ///
    /// The real part is the Voigt profile and the imaginary part its Hilbert
    /// transform (with `H{cos} = sin`), so `i * value` is the resonant
    /// susceptibility `i V - H{V}` of a single line.
    pub fn complex_at_offset(&self, x: f64) -> Complex64 {
        let shape = if self.sigma == 0.0 {
            // Lorentzian limit: w(z)/(sigma sqrt(2pi)) -> i / (pi (x + i gamma))
            Complex64::new(0.0, 1.0) / (PI * Complex64::new(x, self.gamma))
        } else {
            let z = Complex64::new(x, self.gamma) / (self.sigma * SQRT_2);
            faddeeva(z) / (self.sigma * SQRT_2PI)
        };
        shape * self.amplitude
    }
}

/// Unit-area Voigt profile.
#[inline]
pub fn unit_voigt(x: f64, sigma: f64, gamma: f64) -> f64 {
    if sigma == 0.0 {
        return lorentzian(x, gamma);
    }
    if gamma == 0.0 {
        return gaussian(x, sigma);
    }
    let s = 1.0 / (sigma * SQRT_2);
    faddeeva_re(x * s, gamma * s) / (sigma * SQRT_2PI)
}

/// Unit-area Lorentzian with half-width `gamma`.
#[inline]
pub fn lorentzian(x: f64, gamma: f64) -> f64 {
    gamma / (PI * (x * x + gamma * gamma))
}

/// Unit-area Gaussian with standard deviation `sigma`.
#[inline]
pub fn gaussian(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma).powi(2)).exp() / (sigma * SQRT_2PI)
}

/// `a * V(nu_k - nu; sigma, gamma)` on every grid point.
pub fn voigt_profile(grid: &WavenumberGrid, line: &VoigtLine) -> Result<Vec<f64>> {
    line.validate()?;
    let mut out = vec![0.0; grid.len()];
    add_profile(grid, line, &mut out);
    Ok(out)
}

pub(crate) fn add_profile(grid: &WavenumberGrid, line: &VoigtLine, out: &mut [f64]) {
    if line.sigma == 0.0 || line.gamma == 0.0 {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot += line.value_at_offset(grid.at(k) - line.location);
        }
        return;
    }
    let s = 1.0 / (line.sigma * SQRT_2);
    let y = line.gamma * s;
    let scale = line.amplitude / (line.sigma * SQRT_2PI);
    let x = |k: usize| (grid.at(k) - line.location) * s;
    // grid indices whose scaled offset lies inside the near-field disc
    let reach = far_threshold(y) / s;
    let to_index = |nu: f64| ((nu - grid.start()) / grid.step()).clamp(0.0, out.len() as f64);
    let lo = to_index(line.location - reach).floor() as usize;
    let hi = (to_index(line.location + reach).ceil() as usize).max(lo);
    let (head, rest) = out.split_at_mut(lo);
    let (mid, tail) = rest.split_at_mut(hi - lo);
    for (k, slot) in head.iter_mut().enumerate() {
        *slot += scale * faddeeva_re_far(x(k), y);
    }
    for (k, slot) in mid.iter_mut().enumerate() {
        *slot += scale * faddeeva_re(x(lo + k), y);
    }
    for (k, slot) in tail.iter_mut().enumerate() {
        *slot += scale * faddeeva_re_far(x(hi + k), y);
    }
}

/// Full inference state: the Voigt lines and the error-function level `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lines: Vec<VoigtLine>,
    pub background: f64,
}

impl ModelParams {
    /// Builds a parameter set, sorting lines by location.
    pub fn new(mut lines: Vec<VoigtLine>, background: f64) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::invalid("at least one line is required"));
        }
        if !background.is_finite() {
            return Err(Error::NonFinite("background level"));
        }
        for line in &lines {
            line.validate()?;
        }
        lines.sort_by(|a, b| a.location.total_cmp(&b.location));
        Ok(Self { lines, background })
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    /// Number of free parameters, `4N + 1`.
    pub fn dimension(&self) -> usize {
        4 * self.lines.len() + 1
    }

    pub fn is_sorted(&self) -> bool {
        self.lines
            .windows(2)
            .all(|w| w[0].location <= w[1].location)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lines.is_empty() {
            return Err(Error::invalid("at least one line is required"));
        }
        if !self.background.is_finite() {
            return Err(Error::NonFinite("background level"));
        }
        self.lines.iter().try_for_each(VoigtLine::validate)
    }
}

/// Resonant Raman signal `V_N = sum_n a_n V(nu - nu_n; sigma_n, gamma_n)`.
pub fn raman_signal(grid: &WavenumberGrid, params: &ModelParams) -> Result<Vec<f64>> {
    raman_signal_of_lines(grid, &params.lines)
}

pub fn raman_signal_of_lines(grid: &WavenumberGrid, lines: &[VoigtLine]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.len()];
    for line in lines {
        line.validate()?;
        add_profile(grid, line, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> WavenumberGrid {
        WavenumberGrid::new(-50.0, 0.25, 401).unwrap()
    }

    #[test]
    fn degenerate_peak_values() {
        let l = VoigtLine::new(1.0, 0.0, 0.0, 1.0).unwrap();
        assert!((l.value_at_offset(0.0) - 1.0 / PI).abs() < 1e-15);
        let g = VoigtLine::new(1.0, 0.0, 1.0, 0.0).unwrap();
        assert!((g.value_at_offset(0.0) - 1.0 / SQRT_2PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_lines() {
        assert!(VoigtLine::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(VoigtLine::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(VoigtLine::new(1.0, 0.0, -1.0, 1.0).is_err());
        assert!(VoigtLine::new(1.0, f64::NAN, 1.0, 1.0).is_err());
        let bad = VoigtLine {
            amplitude: 1.0,
            location: 0.0,
            sigma: 0.0,
            gamma: 0.0,
        };
        assert!(voigt_profile(&grid(), &bad).is_err());
    }

    #[test]
    fn single_line_sum_is_profile() {
        let line = VoigtLine::new(2.0, 3.0, 1.5, 0.7).unwrap();
        let p = ModelParams::new(vec![line], 1.0).unwrap();
        assert_eq!(
            raman_signal(&grid(), &p).unwrap(),
            voigt_profile(&grid(), &line).unwrap()
        );
    }

    #[test]
    fn linear_in_amplitude() {
        let a = VoigtLine::new(1.3, -4.0, 1.0, 2.0).unwrap();
        let double = VoigtLine {
            amplitude: 2.6,
            ..a
        };
        let two = ModelParams::new(vec![a, a], 1.0).unwrap();
        let one = ModelParams::new(vec![double], 1.0).unwrap();
        let s2 = raman_signal(&grid(), &two).unwrap();
        let s1 = raman_signal(&grid(), &one).unwrap();
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn params_sorted_on_construction() {
        let a = VoigtLine::new(1.0, 5.0, 1.0, 1.0).unwrap();
        let b = VoigtLine::new(1.0, -5.0, 1.0, 1.0).unwrap();
        let p = ModelParams::new(vec![a, b], 2.0).unwrap();
        assert!(p.is_sorted());
        assert_eq!(p.dimension(), 9);
        assert!(ModelParams::new(vec![], 1.0).is_err());
    }

    #[test]
    fn complex_shape_real_part_is_profile() {
        let line = VoigtLine::new(1.7, 0.0, 1.2, 0.8).unwrap();
        for &x in &[-9.0, -1.0, 0.0, 0.4, 3.0, 20.0] {
            let c = line.complex_at_offset(x);
            assert!((c.re - line.value_at_offset(x)).abs() < 1e-13);
        }
    }
}
