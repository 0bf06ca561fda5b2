//! Prior construction from a line-narrowed spectrum, prior sampling and
//! log-density, and the bootstrap estimates (Raman signal, non-resonant
//! level, noise variance) that feed it.

mod bootstrap;
mod segment;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, VoigtLine};
use crate::narrowing::CandidateSummary;

pub use bootstrap::{
    corrected_signal, estimate_noise_variance, estimate_nr_level, retrieve_raman,
};
pub use segment::{segment_peaks, PeakSegment, SegmentConfig};

/// `ln sqrt(2 ln 2)`: offset between log-Lorentzian and log-Gaussian scale
/// priors with equal FWHM.
pub fn fwhm_log_offset() -> f64 {
    (2.0 * 2f64.ln()).sqrt().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalPrior {
    pub mean: f64,
    pub variance: f64,
}

impl NormalPrior {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        -0.5 * (2.0 * PI * self.variance).ln() - 0.5 * (x - self.mean).powi(2) / self.variance
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean + self.sd() * z
    }
}

/// Normal prior restricted to positive values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositiveNormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl PositiveNormalPrior {
    /// `ln P(X > 0)` for the untruncated normal.
    pub fn log_mass(&self) -> f64 {
        (0.5 * libm::erfc(-self.mean / (self.sd * std::f64::consts::SQRT_2))).ln()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        -0.5 * (2.0 * PI).ln() - self.sd.ln() - 0.5 * ((x - self.mean) / self.sd).powi(2)
            - self.log_mass()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            let x = self.mean + self.sd * z;
            if x > 0.0 {
                return x;
            }
        }
    }
}

/// Normal prior on `ln x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalPrior {
    pub log_mean: f64,
    pub log_variance: f64,
}

impl LogNormalPrior {
    fn inner(&self) -> NormalPrior {
        NormalPrior {
            mean: self.log_mean,
            variance: self.log_variance,
        }
    }

    /// Density of `x` itself, including the `1/x` Jacobian.
    pub fn log_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.inner().log_density(x.ln()) - x.ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inner().sample(rng).exp()
    }

    pub fn median(&self) -> f64 {
        self.log_mean.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformPrior {
    pub min: f64,
    pub max: f64,
}

impl UniformPrior {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if self.contains(x) {
            -(self.max - self.min).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.min + (self.max - self.min) * rng.random::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinePrior {
    pub location: NormalPrior,
    pub amplitude: PositiveNormalPrior,
}

/// Prior over `(p, theta)`: independent components, with lines restricted
/// to increasing location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub lines: Vec<LinePrior>,
    pub gamma: LogNormalPrior,
    pub sigma: LogNormalPrior,
    pub background: UniformPrior,
}

impl PriorSpec {
    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lines.is_empty() {
            return Err(Error::invalid("prior needs at least one line"));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        for (i, l) in self.lines.iter().enumerate() {
            if !positive(l.location.variance) || !l.location.mean.is_finite() {
                return Err(Error::invalid(format!("line {}: bad location prior", i + 1)));
            }
            if !positive(l.amplitude.sd) || !l.amplitude.mean.is_finite() {
                return Err(Error::invalid(format!("line {}: bad amplitude prior", i + 1)));
            }
        }
        if !positive(self.gamma.log_variance) || !positive(self.sigma.log_variance) {
            return Err(Error::invalid("width prior variances must be > 0"));
        }
        let b = self.background;
        if !(b.min >= 1.0 && b.min < b.max && b.max.is_finite()) {
            return Err(Error::invalid(format!(
                "background prior needs 1 <= min < max, got [{}, {}]",
                b.min, b.max
            )));
        }
        Ok(())
    }

    /// Checks the background range against the error-function depth.
    pub fn validate_for_levels(&self, max_level: usize) -> Result<()> {
        self.validate()?;
        if self.background.max > max_level as f64 {
            return Err(Error::invalid(format!(
                "background prior reaches {} beyond the {} available levels",
                self.background.max, max_level
            )));
        }
        Ok(())
    }
}

/// One prior draw. Locations are redrawn until they are increasing.
pub fn sample_prior<R: Rng + ?Sized>(spec: &PriorSpec, rng: &mut R) -> ModelParams {
    let locations = loop {
        let nu: Vec<f64> = spec.lines.iter().map(|l| l.location.sample(rng)).collect();
        if nu.windows(2).all(|w| w[0] <= w[1]) {
            break nu;
        }
    };
    let lines = spec
        .lines
        .iter()
        .zip(locations)
        .map(|(l, location)| VoigtLine {
            amplitude: l.amplitude.sample(rng),
            location,
            sigma: spec.sigma.sample(rng),
            gamma: spec.gamma.sample(rng),
        })
        .collect();
    ModelParams {
        lines,
        background: spec.background.sample(rng),
    }
}

/// Log prior density (up to the constant from the ordering restriction);
/// `-inf` outside the support.
pub fn log_prior_density(spec: &PriorSpec, params: &ModelParams) -> f64 {
    if params.lines.len() != spec.lines.len() || !params.is_sorted() {
        return f64::NEG_INFINITY;
    }
    let mut lp = spec.background.log_density(params.background);
    for (line, prior) in params.lines.iter().zip(&spec.lines) {
        lp += prior.location.log_density(line.location)
            + prior.amplitude.log_density(line.amplitude)
            + spec.gamma.log_density(line.gamma)
            + spec.sigma.log_density(line.sigma);
    }
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub segmentation: SegmentConfig,
    /// Log-width variance used when the intersection set cannot supply one.
    pub fallback_log_width_variance: f64,
    /// Lower bound on the location prior sd, in channels.
    pub location_sd_floor_channels: f64,
    /// Background-level range; `None` spans `[1, J]`.
    pub background_range: Option<[f64; 2]>,
    /// Background level used to bootstrap the Raman estimate; `None` takes
    /// the midpoint of the background range.
    pub p_hat: Option<f64>,
    pub noise_variance_floor: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            segmentation: SegmentConfig::default(),
            fallback_log_width_variance: 0.25,
            location_sd_floor_channels: 1.0,
            background_range: None,
            p_hat: None,
            noise_variance_floor: 1e-12,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        self.segmentation.validate()?;
        if !(self.fallback_log_width_variance > 0.0) {
            return Err(Error::Config("fallback_log_width_variance must be > 0".into()));
        }
        if !(self.location_sd_floor_channels >= 0.0) {
            return Err(Error::Config("location_sd_floor_channels must be >= 0".into()));
        }
        if let Some([lo, hi]) = self.background_range {
            if !(lo >= 1.0 && lo < hi) {
                return Err(Error::Config(format!("background_range needs 1 <= lo < hi, got [{lo}, {hi}]")));
            }
        }
        if !(self.noise_variance_floor > 0.0) {
            return Err(Error::Config("noise_variance_floor must be > 0".into()));
        }
        Ok(())
    }

    pub fn background(&self, max_level: usize) -> UniformPrior {
        let [min, max] = self.background_range.unwrap_or([1.0, max_level as f64]);
        UniformPrior { min, max }
    }

    pub fn p_hat(&self, max_level: usize) -> f64 {
        let b = self.background(max_level);
        self.p_hat.unwrap_or(0.5 * (b.min + b.max))
    }
}

/// Sample mean and (n-1) variance.
fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Builds the prior from peak segments and the line-narrowing intersection
/// set. Returns the prior and any warnings raised on the way.
pub fn build_priors(
    segments: &[PeakSegment],
    candidates: &[CandidateSummary],
    step: f64,
    max_level: usize,
    cfg: &PriorConfig,
) -> Result<(PriorSpec, Vec<String>)> {
    cfg.validate()?;
    if segments.is_empty() {
        return Err(Error::invalid("no peak segments"));
    }
    if candidates.is_empty() {
        return Err(Error::invalid("empty candidate set"));
    }
    let mut warnings = Vec::new();

    let logs: Vec<f64> = candidates.iter().map(|c| c.gamma.ln()).collect();
    let (log_mean, mut log_var) = mean_var(&logs);
    if candidates.len() < 2 || !(log_var > 0.0) {
        let msg = format!(
            "width prior variance undefined from {} candidate(s); using {}",
            candidates.len(),
            cfg.fallback_log_width_variance
        );
        log::warn!("{msg}");
        warnings.push(msg);
        log_var = cfg.fallback_log_width_variance;
    }
    let gamma = LogNormalPrior {
        log_mean,
        log_variance: log_var,
    };
    let sigma = LogNormalPrior {
        log_mean: log_mean - fwhm_log_offset(),
        log_variance: log_var,
    };

    let floor = (cfg.location_sd_floor_channels * step).powi(2);
    let lines = segments
        .iter()
        .map(|s| LinePrior {
            location: NormalPrior {
                mean: s.mean,
                variance: s.variance.max(floor).max(f64::MIN_POSITIVE),
            },
            amplitude: PositiveNormalPrior {
                mean: s.area,
                sd: s.area / 4.0,
            },
        })
        .collect();

    let spec = PriorSpec {
        lines,
        gamma,
        sigma,
        background: cfg.background(max_level),
    };
    spec.validate_for_levels(max_level)?;
    Ok((spec, warnings))
}
