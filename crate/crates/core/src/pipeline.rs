//! The analysis stages: bootstrap, line narrowing, priors, sampling and
//! prediction.

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;
use crate::model::{ForwardModel, MeasuredSpectrum, ModelParams};
use crate::narrowing::{narrow, NarrowedSpectrum};
use crate::priors::{
    build_priors, corrected_signal, estimate_noise_variance, estimate_nr_level, retrieve_raman,
    segment_peaks, PeakSegment, PriorSpec,
};
use crate::smc::{predictive_bands, run_sampler, Band, IterationRecord, PosteriorSummary};
use crate::wavelet::ErrorFunctionEngine;

/// Smallest value, relative to the largest, that enters the log-signal.
const LOG_FLOOR: f64 = 1e-6;

/// Builds the error-function engine from `basis` (or the measurement).
pub fn build_engine(cfg: &PipelineConfig, grid: WavenumberGrid, values: &[f64], basis: Option<&[f64]>) -> Result<ErrorFunctionEngine> {
    let src = basis.unwrap_or(values);
    grid.ensure_len(src.len())?;
    let max = src.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::invalid("error-function basis has no positive values"));
    }
    let floor = LOG_FLOOR * max;
    let logs: Vec<f64> = src.iter().map(|v| v.max(floor).ln()).collect();
    let levels = cfg
        .model
        .levels
        .unwrap_or_else(|| ErrorFunctionEngine::default_levels(grid.len()));
    ErrorFunctionEngine::from_log_signal(grid, &logs, cfg.model.wavelet_order, levels, cfg.model.interpolation)
}

/// Raman estimate and the quantities derived with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub p_hat: f64,
    pub nr_level: f64,
    /// Minimum-phase Raman estimate from `y / eps_m(p_hat)`.
    pub raman: Vec<f64>,
}

pub fn bootstrap(cfg: &PipelineConfig, values: &[f64], engine: &ErrorFunctionEngine) -> Result<Bootstrap> {
    let p_hat = cfg.priors.p_hat(engine.max_level());
    let corrected = corrected_signal(values, engine, p_hat)?;
    let nr_level = match cfg.model.nr_level {
        Some(a) => a,
        None => estimate_nr_level(&corrected)?,
    };
    let raman = retrieve_raman(&corrected, nr_level)?;
    Ok(Bootstrap { p_hat, nr_level, raman })
}

/// Everything the sampler needs besides the spectrum and engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorStage {
    pub spec: PriorSpec,
    pub segments: Vec<PeakSegment>,
    pub nr_level: f64,
    pub noise_variance: f64,
    pub p_hat: f64,
    pub warnings: Vec<String>,
}

pub fn prior_stage(
    cfg: &PipelineConfig,
    values: &[f64],
    engine: &ErrorFunctionEngine,
    boot: &Bootstrap,
    narrowed: &NarrowedSpectrum,
) -> Result<PriorStage> {
    let grid = *engine.grid();
    let segments = segment_peaks(&narrowed.smoothed, &grid, &cfg.priors.segmentation)?;
    let (spec, mut warnings) = build_priors(
        &segments,
        &narrowed.selection.intersection,
        grid.step(),
        engine.max_level(),
        &cfg.priors,
    )?;
    warnings.extend(narrowed.warning.iter().cloned());
    let noise_variance = match cfg.model.noise_variance {
        Some(v) => v,
        None => {
            let probe = measurement(cfg, grid, values.to_vec(), 1.0, boot.nr_level)?;
            estimate_noise_variance(
                &probe,
                &narrowed.reconstruction,
                boot.p_hat,
                engine,
                cfg.priors.noise_variance_floor,
            )?
        }
    };
    Ok(PriorStage {
        spec,
        segments,
        nr_level: boot.nr_level,
        noise_variance,
        p_hat: boot.p_hat,
        warnings,
    })
}

pub fn measurement(cfg: &PipelineConfig, grid: WavenumberGrid, values: Vec<f64>, noise_variance: f64, nr_level: f64) -> Result<MeasuredSpectrum> {
    MeasuredSpectrum::new(grid, values, noise_variance, nr_level)?.with_edge_mask(cfg.model.edge_mask)
}

/// Posterior draws with the sampler diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub draws: Vec<ModelParams>,
    pub trace: Vec<IterationRecord>,
    pub log_evidence: f64,
}

pub fn fit(cfg: &PipelineConfig, measured: &MeasuredSpectrum, engine: &ErrorFunctionEngine, spec: &PriorSpec) -> Result<FitResult> {
    spec.validate_for_levels(engine.max_level())?;
    let model = ForwardModel::new(measured, engine)?;
    let out = run_sampler(&model, spec, &cfg.smc, cfg.seed)?;
    Ok(FitResult {
        log_evidence: out.ensemble.log_normalizer,
        draws: out.ensemble.particles.into_iter().map(|p| p.params).collect(),
        trace: out.trace,
    })
}

pub fn predict(cfg: &PipelineConfig, measured: &MeasuredSpectrum, engine: &ErrorFunctionEngine, draws: &[ModelParams]) -> Result<Vec<Band>> {
    let model = ForwardModel::new(measured, engine)?;
    predictive_bands(&model, draws, cfg.smc.credible_level, cfg.seed)
}

/// Outputs of a complete run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub bootstrap: Bootstrap,
    pub narrowed: NarrowedSpectrum,
    pub priors: PriorStage,
    pub measured: MeasuredSpectrum,
    pub summary: PosteriorSummary,
}

/// Runs every stage on one spectrum.
pub fn run_pipeline(cfg: &PipelineConfig, grid: WavenumberGrid, values: &[f64], basis: Option<&[f64]>) -> Result<PipelineOutput> {
    cfg.validate()?;
    grid.ensure_len(values.len())?;
    let engine = build_engine(cfg, grid, values, basis)?;
    let boot = bootstrap(cfg, values, &engine)?;
    let narrowed = narrow(&boot.raman, &grid, &cfg.narrowing)?;
    let priors = prior_stage(cfg, values, &engine, &boot, &narrowed)?;
    for w in &priors.warnings {
        log::warn!("{w}");
    }
    let measured = measurement(cfg, grid, values.to_vec(), priors.noise_variance, priors.nr_level)?;
    let fit = fit(cfg, &measured, &engine, &priors.spec)?;
    let bands = predict(cfg, &measured, &engine, &fit.draws)?;
    let summary = PosteriorSummary {
        grid,
        draws: fit.draws,
        bands,
        trace: fit.trace,
        log_evidence: fit.log_evidence,
    };
    Ok(PipelineOutput {
        bootstrap: boot,
        narrowed,
        priors,
        measured,
        summary,
    })
}
