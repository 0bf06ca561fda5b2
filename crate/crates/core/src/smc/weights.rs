use rand::Rng;

use crate::error::{Error, Result};

/// Normalizes log weights in place; returns the log of their former sum.
pub fn log_normalize(log_w: &mut [f64]) -> Result<f64> {
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(Error::Numerical(
            "every particle has zero weight".into(),
        ));
    }
    let lse = max + log_w.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    log_w.iter_mut().for_each(|v| *v -= lse);
    Ok(lse)
}

/// `1 / sum w^2` for normalized weights.
pub fn ess(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// ESS of the weights `exp(log_w)`, normalized internally.
pub fn ess_from_log(log_w: &[f64]) -> f64 {
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let (s1, s2) = log_w.iter().fold((0.0, 0.0), |(a, b), v| {
        let w = (v - max).exp();
        (a + w, b + w * w)
    });
    s1 * s1 / s2
}

/// ESS after tempering the weights by `L^delta`.
fn tempered_ess(log_w: &[f64], log_lik: &[f64], delta: f64) -> f64 {
    let shifted: Vec<f64> = log_w
        .iter()
        .zip(log_lik)
        .map(|(w, l)| if delta == 0.0 { *w } else { w + delta * l })
        .collect();
    ess_from_log(&shifted)
}

/// Next tempering exponent: the `kappa' in (kappa, 1]` at which the
/// reweighted ESS falls to `eta` times the current ESS, or 1 if it never does.
pub fn next_kappa(log_w: &[f64], log_lik: &[f64], kappa: f64, eta: f64) -> f64 {
    const MAX_ITER: usize = 60;
    const TOL: f64 = 1e-10;
    let target = eta * ess_from_log(log_w);
    if tempered_ess(log_w, log_lik, 1.0 - kappa) >= target {
        return 1.0;
    }
    let (mut lo, mut hi) = (kappa, 1.0);
    for _ in 0..MAX_ITER {
        if hi - lo <= TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if tempered_ess(log_w, log_lik, mid - kappa) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let next = 0.5 * (lo + hi);
    if next > kappa {
        next
    } else {
        hi
    }
}

/// Residual resampling: `floor(Q w_q)` copies of each particle, the
/// remainder drawn multinomially from the residual weights. Returns the
/// ancestor index of each of the `q` new particles, in ascending order.
pub fn residual_resample<R: Rng + ?Sized>(weights: &[f64], q: usize, rng: &mut R) -> Vec<usize> {
    let n = weights.len();
    let qf = q as f64;
    let mut out = Vec::with_capacity(q);
    let mut residual = Vec::with_capacity(q);
    for (i, w) in weights.iter().enumerate() {
        let target = qf * w;
        // guard against 0.3 * 10 = 2.9999999999999996
        let copies = (target + 1e-9).floor();
        out.extend(std::iter::repeat_n(i, copies as usize));
        residual.push((target - copies).max(0.0));
    }
    out.truncate(q);
    let remaining = q - out.len();
    if remaining > 0 {
        let total: f64 = residual.iter().sum();
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for r in &residual {
            acc += if total > 0.0 { r / total } else { 1.0 / n as f64 };
            cdf.push(acc);
        }
        for _ in 0..remaining {
            let u = rng.random::<f64>() * acc;
            let i = cdf.partition_point(|c| *c <= u).min(n - 1);
            out.push(i);
        }
    }
    out.sort_unstable();
    out
}
