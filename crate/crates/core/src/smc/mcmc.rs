use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::ensemble::{Particle, ParticleEnsemble};
use super::target::Target;
use crate::error::{Error, Result};
use crate::model::{ModelParams, VoigtLine};
use crate::priors::{log_prior_density, PriorSpec};
use crate::rng::{substream, SMC};

/// Unconstrained coordinates: `p`, then `(ln a, nu, ln sigma, ln gamma)` per line.
pub fn to_unconstrained(params: &ModelParams) -> Vec<f64> {
    let mut z = Vec::with_capacity(params.dimension());
    z.push(params.background);
    for l in &params.lines {
        z.extend([l.amplitude.ln(), l.location, l.sigma.ln(), l.gamma.ln()]);
    }
    z
}

pub fn from_unconstrained(z: &[f64]) -> ModelParams {
    ModelParams {
        background: z[0],
        lines: z[1..]
            .chunks_exact(4)
            .map(|c| VoigtLine {
                amplitude: c[0].exp(),
                location: c[1],
                sigma: c[2].exp(),
                gamma: c[3].exp(),
            })
            .collect(),
    }
}

/// `ln |dx/dz|` of the map from unconstrained coordinates.
pub fn log_jacobian(z: &[f64]) -> f64 {
    z[1..].chunks_exact(4).map(|c| c[0] + c[2] + c[3]).sum()
}

/// Prior standard deviations in unconstrained coordinates.
pub fn prior_scales(spec: &PriorSpec) -> Vec<f64> {
    let b = spec.background;
    let mut s = vec![(b.max - b.min) / 12f64.sqrt()];
    for l in &spec.lines {
        s.extend([
            (l.amplitude.sd / l.amplitude.mean.abs().max(l.amplitude.sd)).min(1.0),
            l.location.sd(),
            spec.sigma.log_variance.sqrt(),
            spec.gamma.log_variance.sqrt(),
        ]);
    }
    s
}

/// Weighted population standard deviation of each unconstrained coordinate.
pub fn population_scales(ensemble: &ParticleEnsemble) -> Vec<f64> {
    let zs: Vec<Vec<f64>> = ensemble
        .particles
        .iter()
        .map(|p| to_unconstrained(&p.params))
        .collect();
    let w = ensemble.weights();
    let d = zs[0].len();
    (0..d)
        .map(|j| {
            let mean: f64 = zs.iter().zip(&w).map(|(z, w)| w * z[j]).sum();
            let var: f64 = zs.iter().zip(&w).map(|(z, w)| w * (z[j] - mean).powi(2)).sum();
            var.max(0.0).sqrt()
        })
        .collect()
}

/// Tempered log target in unconstrained coordinates, excluding the likelihood.
fn log_prior_z(spec: &PriorSpec, params: &ModelParams, z: &[f64]) -> f64 {
    let lp = log_prior_density(spec, params);
    if lp == f64::NEG_INFINITY {
        lp
    } else {
        lp + log_jacobian(z)
    }
}

fn tempered(kappa: f64, ll: f64) -> f64 {
    if kappa == 0.0 {
        0.0
    } else {
        kappa * ll
    }
}

#[allow(clippy::too_many_arguments)]
fn move_particle<T: Target, R: Rng>(
    particle: &mut Particle,
    target: &T,
    ws: &mut T::Workspace,
    spec: &PriorSpec,
    kappa: f64,
    scales: &[f64],
    n_moves: usize,
    rng: &mut R,
) -> Result<usize> {
    let mut z = to_unconstrained(&particle.params);
    let mut lp = log_prior_z(spec, &particle.params, &z);
    let mut ll = particle.log_likelihood;
    let mut accepted = 0;
    let mut prop = vec![0.0; z.len()];
    for _ in 0..n_moves {
        for ((p, x), s) in prop.iter_mut().zip(&z).zip(scales) {
            let e: f64 = rng.sample(StandardNormal);
            *p = x + s * e;
        }
        let u: f64 = rng.random();
        let cand = from_unconstrained(&prop);
        let lp_new = log_prior_z(spec, &cand, &prop);
        if lp_new == f64::NEG_INFINITY {
            continue;
        }
        let ll_new = target.log_likelihood(ws, &cand)?;
        if !ll_new.is_finite() {
            continue;
        }
        let log_alpha = tempered(kappa, ll_new) - tempered(kappa, ll) + lp_new - lp;
        if u.ln() < log_alpha {
            z.copy_from_slice(&prop);
            lp = lp_new;
            ll = ll_new;
            particle.params = cand;
            accepted += 1;
        }
    }
    particle.log_likelihood = ll;
    Ok(accepted)
}

/// `n_moves` random-walk Metropolis steps per particle targeting
/// `L^kappa pi_0`, with diagonal Gaussian proposals of the given scales in
/// unconstrained coordinates. Returns the acceptance rate.
///
/// Particle `i` draws from its own stream keyed by the ensemble iteration,
/// so the result does not depend on the thread count.
pub fn rejuvenate<T: Target>(
    ensemble: &mut ParticleEnsemble,
    target: &T,
    spec: &PriorSpec,
    scales: &[f64],
    n_moves: usize,
) -> Result<f64> {
    let dim = ensemble.particles.first().map_or(0, |p| p.params.dimension());
    if scales.len() != dim {
        return Err(Error::invalid(format!(
            "{} proposal scales for {dim} parameters",
            scales.len()
        )));
    }
    if n_moves == 0 || ensemble.is_empty() {
        return Ok(0.0);
    }
    let kappa = ensemble.kappa;
    let (seed, iteration) = (ensemble.seed, ensemble.iteration);
    let counts: Vec<usize> = ensemble
        .particles
        .par_iter_mut()
        .enumerate()
        .map_init(
            || target.workspace(),
            |ws, (i, particle)| {
                let ws = ws.as_mut().map_err(|e| Error::Numerical(e.to_string()))?;
                let mut rng = substream(seed, SMC, iteration, i as u64);
                move_particle(particle, target, ws, spec, kappa, scales, n_moves, &mut rng)
            },
        )
        .collect::<Result<_>>()?;
    let total: usize = counts.iter().sum();
    Ok(total as f64 / (n_moves * ensemble.len()) as f64)
}
