//! Unsupervised line narrowing: Fourier self-deconvolution over a grid of
//! Lorentzian widths with Burg linear-prediction extrapolation, candidate
//! filtering by residuals and wavelet energy concentration, and ensemble
//! averaging.

mod burg;
mod fsd;
mod score;

use std::cmp::Ordering;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;

pub use burg::BurgPredictor;
pub use fsd::{fsd_linear_predict, lorentzian_transform, Deconvolver, LorentzConvolver, Rejection};
pub use score::{gaussian_smooth, score_candidate, CandidateScores};

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NarrowingConfig {
    /// Lorentzian half-widths swept, cm⁻¹.
    pub gamma_grid: Vec<f64>,
    /// Largest filter length; lengths `1..=max_fir` are swept.
    pub max_fir: usize,
    /// One-sided time-signal length after extrapolation; `None` uses the
    /// number of spectral channels.
    pub extrapolation_len: Option<usize>,
    pub p_we: f64,
    pub p_fc: f64,
    pub p_fc_step: f64,
    pub min_intersection: usize,
    /// Smoothing FWHM in channels.
    pub smoothing_fwhm_channels: f64,
    pub wavelet_order: usize,
    /// Deconvolved time samples are kept while the divisor stays above
    /// this fraction of its peak.
    pub divisor_floor: f64,
    /// Deconvolved time samples beyond the point where the spectrum's
    /// transform sinks into its noise floor are discarded; `None` keeps the
    /// divisor window only.
    pub noise_multiple: Option<f64>,
}

impl Default for NarrowingConfig {
    fn default() -> Self {
        Self {
            gamma_grid: linspace(1.0, 35.0, 33),
            max_fir: 150,
            extrapolation_len: None,
            p_we: 0.5,
            p_fc: 0.025,
            p_fc_step: 0.025,
            min_intersection: 50,
            smoothing_fwhm_channels: 4.0,
            wavelet_order: 8,
            divisor_floor: 0.1,
            noise_multiple: Some(5.0),
        }
    }
}

impl NarrowingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.gamma_grid.is_empty() {
            return bad("gamma_grid is empty".into());
        }
        if self.gamma_grid.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return bad("gamma_grid values must be positive".into());
        }
        if self.gamma_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("gamma_grid must be strictly increasing".into());
        }
        if self.max_fir < 2 {
            return bad(format!("max_fir must be >= 2, got {}", self.max_fir));
        }
        for (name, v) in [("p_we", self.p_we), ("p_fc", self.p_fc), ("p_fc_step", self.p_fc_step)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if self.min_intersection == 0 {
            return bad("min_intersection must be >= 1".into());
        }
        if !(self.smoothing_fwhm_channels >= 0.0) {
            return bad("smoothing_fwhm_channels must be >= 0".into());
        }
        if self.extrapolation_len == Some(0) {
            return bad("extrapolation_len must be >= 1".into());
        }
        if !(self.divisor_floor > 0.0 && self.divisor_floor < 1.0) {
            return bad("divisor_floor must lie in (0, 1)".into());
        }
        if let Some(m) = self.noise_multiple {
            if !(m > 0.0) || !m.is_finite() {
                return bad(format!("noise_multiple must be > 0, got {m}"));
            }
        }
        crate::wavelet::Symlet::new(self.wavelet_order).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn candidate_count(&self) -> usize {
        self.gamma_grid.len() * self.max_fir
    }
}

/// One surviving `(γ_m, N_FIR)` sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution {
    pub gamma: f64,
    pub n_fir: usize,
    pub delta: Vec<f64>,
    pub scores: CandidateScores,
}

/// Identification and scores of a candidate, without its `D_A` vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub gamma: f64,
    pub n_fir: usize,
    #[serde(flatten)]
    pub scores: CandidateScores,
}

impl From<&CandidateSolution> for CandidateSummary {
    fn from(c: &CandidateSolution) -> Self {
        Self {
            gamma: c.gamma,
            n_fir: c.n_fir,
            scores: c.scores,
        }
    }
}

/// Result of the selection and averaging step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Intersection set sorted by ascending `d`; the first `m` were averaged.
    pub intersection: Vec<CandidateSummary>,
    pub m: usize,
    pub d_m: f64,
    pub p_fc_used: f64,
    /// Mean raw `D_A` of the chosen prefix.
    pub narrowed: Vec<f64>,
    /// Mean reconvolved `L * D_A` of the chosen prefix.
    pub reconstruction: Vec<f64>,
    pub warning: Option<String>,
}

impl Selection {
    pub fn selected(&self) -> &[CandidateSummary] {
        &self.intersection[..self.m]
    }
}

fn key_order(a: &CandidateSolution, b: &CandidateSolution) -> Ordering {
    a.gamma
        .total_cmp(&b.gamma)
        .then(a.n_fir.cmp(&b.n_fir))
}

fn top_fraction<F>(candidates: &[CandidateSolution], fraction: f64, cmp: F) -> Vec<usize>
where
    F: Fn(&CandidateSolution, &CandidateSolution) -> Ordering,
{
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&i, &j| cmp(&candidates[i], &candidates[j]).then(key_order(&candidates[i], &candidates[j])));
    let take = ((fraction * candidates.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    idx.truncate(take.min(candidates.len()));
    idx
}

/// Indices in both the top `p_we` by descending `C_we` and the top `p_fc`
/// by ascending `f_c`.
pub fn intersection_set(candidates: &[CandidateSolution], p_we: f64, p_fc: f64) -> Vec<usize> {
    let by_we = top_fraction(candidates, p_we, |a, b| b.scores.c_we.total_cmp(&a.scores.c_we));
    let by_fc = top_fraction(candidates, p_fc, |a, b| a.scores.f_c.total_cmp(&b.scores.f_c));
    let mut in_fc = vec![false; candidates.len()];
    by_fc.iter().for_each(|&i| in_fc[i] = true);
    let mut out: Vec<usize> = by_we.into_iter().filter(|&i| in_fc[i]).collect();
    out.sort_unstable();
    out
}

/// Prefix size `M` (1-based) minimising `||s - mean_{m<=M} r_m||^2`; ties
/// go to the smallest `M`.
pub fn best_prefix(spectrum: &[f64], reconstructions: &[Vec<f64>]) -> (usize, f64) {
    let mut acc = vec![0.0; spectrum.len()];
    let mut best = (0, f64::INFINITY);
    for (m, r) in reconstructions.iter().enumerate() {
        acc.iter_mut().zip(r).for_each(|(a, v)| *a += v);
        let inv = 1.0 / (m + 1) as f64;
        let d: f64 = spectrum
            .iter()
            .zip(&acc)
            .map(|(s, a)| (s - a * inv).powi(2))
            .sum();
        if d < best.1 {
            best = (m + 1, d);
        }
    }
    best
}

/// Filters candidates, sorts the intersection by `d` and averages the
/// prefix that minimises the ensemble residual.
pub fn select_and_average(
    candidates: &[CandidateSolution],
    cfg: &NarrowingConfig,
    spectrum: &[f64],
    grid: &WavenumberGrid,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Numerical("no usable line-narrowing candidates".into()));
    }
    grid.ensure_len(spectrum.len())?;

    let mut steps = 0usize;
    let (members, p_fc_used, warning) = loop {
        let p_fc = (cfg.p_fc + steps as f64 * cfg.p_fc_step).min(1.0);
        let set = intersection_set(candidates, cfg.p_we, p_fc);
        if set.len() >= cfg.min_intersection {
            break (set, p_fc, None);
        }
        if p_fc >= 1.0 {
            let best = (0..candidates.len())
                .min_by(|&i, &j| {
                    candidates[i]
                        .scores
                        .d
                        .total_cmp(&candidates[j].scores.d)
                        .then(key_order(&candidates[i], &candidates[j]))
                })
                .unwrap();
            let msg = format!(
                "intersection set holds {} < {} candidates at p_fc = 1; using the best-residual candidate",
                set.len(),
                cfg.min_intersection
            );
            log::warn!("{msg}");
            break (vec![best], p_fc, Some(msg));
        }
        steps += 1;
    };

    let mut sorted = members;
    sorted.sort_by(|&i, &j| {
        candidates[i]
            .scores
            .d
            .total_cmp(&candidates[j].scores.d)
            .then(key_order(&candidates[i], &candidates[j]))
    });

    let mut planner = FftPlanner::new();
    let mut convolvers: Vec<(f64, LorentzConvolver)> = Vec::new();
    let mut reconstructions = Vec::with_capacity(sorted.len());
    for &i in &sorted {
        let c = &candidates[i];
        let conv = match convolvers.iter().find(|(g, _)| *g == c.gamma) {
            Some((_, conv)) => conv,
            None => {
                let conv = LorentzConvolver::new(grid.len(), grid.step(), c.gamma, &mut planner);
                convolvers.push((c.gamma, conv));
                &convolvers.last().unwrap().1
            }
        };
        reconstructions.push(conv.convolve(&c.delta));
    }

    let (m, d_m) = best_prefix(spectrum, &reconstructions);
    let inv = 1.0 / m as f64;
    let mut narrowed = vec![0.0; spectrum.len()];
    let mut reconstruction = vec![0.0; spectrum.len()];
    for (&i, r) in sorted.iter().zip(&reconstructions).take(m) {
        for k in 0..spectrum.len() {
            narrowed[k] += candidates[i].delta[k] * inv;
            reconstruction[k] += r[k] * inv;
        }
    }

    Ok(Selection {
        intersection: sorted.iter().map(|&i| (&candidates[i]).into()).collect(),
        m,
        d_m,
        p_fc_used,
        narrowed,
        reconstruction,
        warning,
    })
}

/// Everything produced by one line-narrowing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrowedSpectrum {
    pub grid: WavenumberGrid,
    /// Ensemble-mean delta approximation.
    pub narrowed: Vec<f64>,
    /// `narrowed` after Gaussian smoothing.
    pub smoothed: Vec<f64>,
    /// Ensemble-mean reconvolution; a smooth model of the input.
    pub reconstruction: Vec<f64>,
    pub selection: Selection,
    pub n_evaluated: usize,
    pub n_rejected: usize,
    pub warning: Option<String>,
}

/// Evaluates every `(γ_m, N_FIR)` pair and returns the scored survivors in
/// `(γ, N_FIR)` order, plus the number of rejections.
pub fn sweep(
    spectrum: &[f64],
    grid: &WavenumberGrid,
    cfg: &NarrowingConfig,
) -> Result<(Vec<CandidateSolution>, usize)> {
    cfg.validate()?;
    grid.ensure_len(spectrum.len())?;
    if spectrum.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spectrum"));
    }
    let extrap = cfg.extrapolation_len.unwrap_or(grid.len());

    let per_gamma: Vec<Result<(Vec<CandidateSolution>, usize)>> = cfg
        .gamma_grid
        .par_iter()
        .map(|&gamma| {
            let mut planner = FftPlanner::new();
            let dec = Deconvolver::new(
                spectrum,
                grid,
                gamma,
                cfg.max_fir - 1,
                cfg.divisor_floor,
                cfg.noise_multiple,
                &mut planner,
            )?;
            let conv = LorentzConvolver::new(grid.len(), grid.step(), gamma, &mut planner);
            let results: Vec<_> = (1..=cfg.max_fir)
                .into_par_iter()
                .map(|n_fir| {
                    let delta = dec.delta_approximation(n_fir, extrap)?;
                    let scores = score::score_with(spectrum, &delta, &conv, cfg.wavelet_order)?;
                    Ok::<_, Rejection>(CandidateSolution {
                        gamma,
                        n_fir,
                        delta,
                        scores,
                    })
                })
                .collect();
            let rejected = results.iter().filter(|r| r.is_err()).count();
            Ok((results.into_iter().filter_map(|r| r.ok()).collect(), rejected))
        })
        .collect();

    let mut all = Vec::with_capacity(cfg.candidate_count());
    let mut rejected = 0;
    for r in per_gamma {
        let (c, n) = r?;
        all.extend(c);
        rejected += n;
    }
    Ok((all, rejected))
}

/// Runs the full line-narrowing algorithm on `spectrum`.
pub fn narrow(spectrum: &[f64], grid: &WavenumberGrid, cfg: &NarrowingConfig) -> Result<NarrowedSpectrum> {
    let (candidates, n_rejected) = sweep(spectrum, grid, cfg)?;
    let n_evaluated = cfg.candidate_count();
    if candidates.is_empty() {
        let msg = format!("all {n_evaluated} line-narrowing candidates were rejected");
        log::warn!("{msg}");
        let zeros = vec![0.0; grid.len()];
        return Ok(NarrowedSpectrum {
            grid: grid.clone(),
            narrowed: zeros.clone(),
            smoothed: zeros.clone(),
            reconstruction: zeros.clone(),
            selection: Selection {
                intersection: Vec::new(),
                m: 0,
                d_m: spectrum.iter().map(|v| v * v).sum(),
                p_fc_used: 1.0,
                narrowed: zeros.clone(),
                reconstruction: zeros,
                warning: Some(msg.clone()),
            },
            n_evaluated,
            n_rejected,
            warning: Some(msg),
        });
    }
    let selection = select_and_average(&candidates, cfg, spectrum, grid)?;
    let smoothed = gaussian_smooth(
        &selection.narrowed,
        grid.step(),
        cfg.smoothing_fwhm_channels * grid.step(),
    );
    Ok(NarrowedSpectrum {
        grid: grid.clone(),
        narrowed: selection.narrowed.clone(),
        smoothed,
        reconstruction: selection.reconstruction.clone(),
        warning: selection.warning.clone(),
        selection,
        n_evaluated,
        n_rejected,
    })
}
