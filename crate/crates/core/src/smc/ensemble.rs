use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::target::Target;
use super::weights::{ess_from_log, log_normalize, next_kappa, residual_resample};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::priors::{sample_prior, PriorSpec};
use crate::rng::{substream, RESAMPLE, SMC};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub params: ModelParams,
    /// Normalized log weight.
    pub log_weight: f64,
    pub log_likelihood: f64,
}

/// Weighted particle population at tempering exponent `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub particles: Vec<Particle>,
    pub kappa: f64,
    pub iteration: u64,
    /// Running sum of the log normalizers removed by `reweight`.
    pub log_normalizer: f64,
    pub seed: u64,
}

/// Evaluates the log-likelihood of every parameter set, in parallel and in
/// order.
pub(crate) fn evaluate_all<T: Target>(target: &T, params: &[ModelParams]) -> Result<Vec<f64>> {
    params
        .par_iter()
        .map_init(
            || target.workspace(),
            |ws, p| match ws {
                Ok(ws) => target.log_likelihood(ws, p),
                Err(e) => Err(Error::Numerical(e.to_string())),
            },
        )
        .collect()
}

impl ParticleEnsemble {
    /// `q` prior draws with uniform weights at `kappa = 0`.
    pub fn from_prior<T: Target>(spec: &PriorSpec, target: &T, q: usize, seed: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::invalid(format!("need at least 2 particles, got {q}")));
        }
        spec.validate()?;
        let params: Vec<ModelParams> = (0..q)
            .map(|i| sample_prior(spec, &mut substream(seed, SMC, 0, i as u64)))
            .collect();
        let ll = evaluate_all(target, &params)?;
        let lw = -(q as f64).ln();
        let particles = params
            .into_iter()
            .zip(ll)
            .map(|(params, log_likelihood)| Particle {
                params,
                log_weight: lw,
                log_likelihood,
            })
            .collect();
        Ok(Self {
            particles,
            kappa: 0.0,
            iteration: 0,
            log_normalizer: 0.0,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.log_weight).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.log_weight.exp()).collect()
    }

    pub fn log_likelihoods(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.log_likelihood).collect()
    }

    pub fn ess(&self) -> f64 {
        ess_from_log(&self.log_weights())
    }

    pub fn next_kappa(&self, eta: f64) -> f64 {
        next_kappa(&self.log_weights(), &self.log_likelihoods(), self.kappa, eta)
    }

    /// Multiplies the weights by `L^delta` and renormalizes.
    pub fn reweight(&mut self, delta: f64) -> Result<()> {
        if !(delta >= 0.0) {
            return Err(Error::invalid(format!("tempering increment must be >= 0, got {delta}")));
        }
        if delta == 0.0 {
            return Ok(());
        }
        let mut lw: Vec<f64> = self
            .particles
            .iter()
            .map(|p| {
                let v = p.log_weight + delta * p.log_likelihood;
                if v.is_nan() { f64::NEG_INFINITY } else { v }
            })
            .collect();
        self.log_normalizer += log_normalize(&mut lw)?;
        for (p, w) in self.particles.iter_mut().zip(lw) {
            p.log_weight = w;
        }
        self.kappa = (self.kappa + delta).min(1.0);
        Ok(())
    }

    /// Residual resampling to uniform weights, with the ensemble's own stream.
    pub fn resample(&mut self) {
        let mut rng = substream(self.seed, RESAMPLE, self.iteration, 0);
        self.resample_with(&mut rng);
    }

    pub fn resample_with<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let q = self.len();
        let idx = residual_resample(&self.weights(), q, rng);
        let lw = -(q as f64).ln();
        self.particles = idx
            .into_iter()
            .map(|i| Particle {
                log_weight: lw,
                ..self.particles[i].clone()
            })
            .collect();
    }

    /// True when all weights are equal to within rounding.
    pub fn is_uniform(&self) -> bool {
        let lw = -(self.len() as f64).ln();
        self.particles.iter().all(|p| (p.log_weight - lw).abs() < 1e-12)
    }
}
