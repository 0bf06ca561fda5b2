//! Likelihood-tempered sequential Monte Carlo.
//!
//! Starting from prior draws, the likelihood exponent `kappa` is raised
//! adaptively from 0 to 1. Each step reweights the particles, resamples when
//! the effective sample size drops below a threshold, and rejuvenates them
//! with random-walk Metropolis moves that leave the tempered posterior
//! invariant.

mod ensemble;
mod mcmc;
mod summary;
mod target;
mod weights;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ForwardModel;
use crate::priors::PriorSpec;

pub use ensemble::{Particle, ParticleEnsemble};
pub use mcmc::{
    from_unconstrained, log_jacobian, population_scales, prior_scales, rejuvenate,
    to_unconstrained,
};
pub use summary::{predictive_bands, quantile_sorted, Band, PosteriorSummary};
pub use target::Target;
pub use weights::{ess, ess_from_log, log_normalize, next_kappa, residual_resample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcConfig {
    pub particles: usize,
    /// Resample when the ESS drops below this.
    pub resample_threshold: usize,
    /// Fraction of the ESS retained by each tempering step.
    pub learning_rate: f64,
    pub n_moves: usize,
    pub target_acceptance: f64,
    /// Robbins-Monro gain on the log proposal multiplier.
    pub adaptation_gain: f64,
    /// Initial proposal multiplier on the population sd; `None` uses
    /// `2.38 / sqrt(d)`.
    pub initial_scale: Option<f64>,
    /// Lower bound on each proposal sd, as a fraction of the prior sd.
    pub min_scale_fraction: f64,
    pub max_iterations: usize,
    pub credible_level: f64,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            particles: 2000,
            resample_threshold: 1000,
            learning_rate: 0.9,
            n_moves: 200,
            target_acceptance: 0.23,
            adaptation_gain: 1.0,
            initial_scale: None,
            min_scale_fraction: 1e-3,
            max_iterations: 1000,
            credible_level: 0.95,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.particles < 2 {
            return bad(format!("particles must be >= 2, got {}", self.particles));
        }
        if self.resample_threshold > self.particles {
            return bad(format!(
                "resample_threshold {} exceeds particles {}",
                self.resample_threshold, self.particles
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return bad(format!("learning_rate must lie in (0, 1), got {}", self.learning_rate));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return bad(format!("target_acceptance must lie in (0, 1), got {}", self.target_acceptance));
        }
        if !(self.adaptation_gain >= 0.0) {
            return bad("adaptation_gain must be >= 0".into());
        }
        if let Some(s) = self.initial_scale {
            if !(s > 0.0) {
                return bad(format!("initial_scale must be > 0, got {s}"));
            }
        }
        if !(self.min_scale_fraction >= 0.0) {
            return bad("min_scale_fraction must be >= 0".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be > 0".into());
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return bad(format!("credible_level must lie in (0, 1), got {}", self.credible_level));
        }
        Ok(())
    }
}

/// Diagnostics of one tempering step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub kappa: f64,
    /// ESS after reweighting, before any resampling.
    pub ess: f64,
    pub resampled: bool,
    pub acceptance: f64,
    /// Proposal multiplier used for the moves.
    pub scale: f64,
}

/// Final state of a sampler run.
#[derive(Debug, Clone)]
pub struct SmcOutput {
    /// Equally weighted particles at `kappa = 1`.
    pub ensemble: ParticleEnsemble,
    pub trace: Vec<IterationRecord>,
}

/// Runs the tempered sampler against any target.
pub fn run_sampler<T: Target>(target: &T, spec: &PriorSpec, cfg: &SmcConfig, seed: u64) -> Result<SmcOutput> {
    cfg.validate()?;
    let mut ens = ParticleEnsemble::from_prior(spec, target, cfg.particles, seed)?;
    let dim = ens.particles[0].params.dimension();
    let floors: Vec<f64> = prior_scales(spec)
        .into_iter()
        .map(|s| s * cfg.min_scale_fraction)
        .collect();
    let mut log_lambda = cfg.initial_scale.unwrap_or(2.38 / (dim as f64).sqrt()).ln();
    let mut trace = Vec::new();

    while ens.kappa < 1.0 {
        if trace.len() >= cfg.max_iterations {
            return Err(Error::Numerical(format!(
                "tempering stalled at kappa = {} after {} iterations",
                ens.kappa, cfg.max_iterations
            )));
        }
        ens.iteration += 1;
        let next = ens.next_kappa(cfg.learning_rate);
        ens.reweight(next - ens.kappa)?;
        if next >= 1.0 {
            ens.kappa = 1.0;
        }
        let ess = ens.ess();
        let resampled = ess < cfg.resample_threshold as f64;
        if resampled {
            ens.resample();
        }
        let lambda = log_lambda.exp();
        let scales: Vec<f64> = population_scales(&ens)
            .into_iter()
            .zip(&floors)
            .map(|(s, f)| lambda * s.max(*f))
            .collect();
        let acceptance = rejuvenate(&mut ens, target, spec, &scales, cfg.n_moves)?;
        log_lambda += cfg.adaptation_gain * (acceptance - cfg.target_acceptance);
        log::debug!(
            "iteration {}: kappa {:.6} ess {:.1} acceptance {:.3}{}",
            ens.iteration,
            ens.kappa,
            ess,
            acceptance,
            if resampled { " (resampled)" } else { "" }
        );
        trace.push(IterationRecord {
            iteration: ens.iteration,
            kappa: ens.kappa,
            ess,
            resampled,
            acceptance,
            scale: lambda,
        });
    }
    if !ens.is_uniform() {
        ens.iteration += 1;
        ens.resample();
    }
    Ok(SmcOutput { ensemble: ens, trace })
}

/// Samples the posterior of `model` and summarizes it with predictive bands.
pub fn run(model: &ForwardModel, spec: &PriorSpec, cfg: &SmcConfig, seed: u64) -> Result<PosteriorSummary> {
    spec.validate_for_levels(model.engine().max_level())?;
    let out = run_sampler(model, spec, cfg, seed)?;
    let draws: Vec<_> = out.ensemble.particles.into_iter().map(|p| p.params).collect();
    let bands = predictive_bands(model, &draws, cfg.credible_level, seed)?;
    Ok(PosteriorSummary {
        grid: model.measured().grid.clone(),
        draws,
        bands,
        trace: out.trace,
        log_evidence: out.ensemble.log_normalizer,
    })
}
