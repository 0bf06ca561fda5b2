use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IterationRecord;
use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;
use crate::model::{voigt_profile, ForwardModel, ModelParams};
use crate::rng::{substream, PREDICT};

/// Channel-wise equal-tailed interval of one predictive series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub series: String,
    pub lower: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Band {
    /// Fraction of `values` inside `[lower, upper]`, over `range`.
    pub fn coverage(&self, values: &[f64], range: std::ops::Range<usize>) -> f64 {
        let n = range.len();
        let inside = range
            .filter(|&k| values[k] >= self.lower[k] && values[k] <= self.upper[k])
            .count();
        inside as f64 / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub grid: WavenumberGrid,
    /// Equally weighted posterior draws.
    pub draws: Vec<ModelParams>,
    pub bands: Vec<Band>,
    pub trace: Vec<IterationRecord>,
    pub log_evidence: f64,
}

impl PosteriorSummary {
    pub fn band(&self, series: &str) -> Option<&Band> {
        self.bands.iter().find(|b| b.series == series)
    }

    /// Equal-tailed quantile of one scalar parameter across the draws.
    pub fn parameter_quantile(&self, f: impl Fn(&ModelParams) -> f64, prob: f64) -> f64 {
        let mut v: Vec<f64> = self.draws.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        quantile_sorted(&v, prob)
    }
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn band_from(series: String, rows: &[Vec<f64>], level: f64) -> Band {
    let k = rows[0].len();
    let tail = 0.5 * (1.0 - level);
    let cols: Vec<[f64; 3]> = (0..k)
        .into_par_iter()
        .map(|j| {
            let mut col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            col.sort_by(f64::total_cmp);
            [
                quantile_sorted(&col, tail),
                quantile_sorted(&col, 0.5),
                quantile_sorted(&col, 1.0 - tail),
            ]
        })
        .collect();
    Band {
        series,
        lower: cols.iter().map(|c| c[0]).collect(),
        median: cols.iter().map(|c| c[1]).collect(),
        upper: cols.iter().map(|c| c[2]).collect(),
    }
}

/// Predictive bands for `y` (with noise draws), `f`, `S`, `eps_m`, `V_N` and
/// each line `line_01, line_02, ...`.
pub fn predictive_bands(
    model: &ForwardModel,
    draws: &[ModelParams],
    level: f64,
    seed: u64,
) -> Result<Vec<Band>> {
    if draws.is_empty() {
        return Err(Error::invalid("no posterior draws"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("credible level must lie in (0, 1), got {level}")));
    }
    let measured = model.measured();
    let parts = draws
        .par_iter()
        .map_init(
            || model.workspace(),
            |ws, p| {
                let ws = ws.as_mut().map_err(|e| Error::Numerical(e.to_string()))?;
                model.evaluate(ws, p)
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let noise = Normal::new(0.0, measured.noise_variance.sqrt())
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let y: Vec<Vec<f64>> = parts
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = substream(seed, PREDICT, 0, i as u64);
            c.model.iter().map(|f| f + noise.sample(&mut rng)).collect()
        })
        .collect();

    let mut bands = vec![band_from("y".into(), &y, level)];
    drop(y);
    let pick = |f: fn(&crate::model::ModelComponents) -> &Vec<f64>| -> Vec<Vec<f64>> {
        parts.iter().map(|c| f(c).clone()).collect()
    };
    bands.push(band_from("f".into(), &pick(|c| &c.model), level));
    bands.push(band_from("S".into(), &pick(|c| &c.cars), level));
    bands.push(band_from("eps_m".into(), &pick(|c| &c.modulation), level));
    bands.push(band_from("V_N".into(), &pick(|c| &c.raman), level));
    drop(parts);

    let n_lines = draws[0].n_lines();
    for n in 0..n_lines {
        let rows = draws
            .par_iter()
            .map(|p| voigt_profile(&measured.grid, &p.lines[n]))
            .collect::<Result<Vec<_>>>()?;
        bands.push(band_from(format!("line_{:02}", n + 1), &rows, level));
    }
    Ok(bands)
}
