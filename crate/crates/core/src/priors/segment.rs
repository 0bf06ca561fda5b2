use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;

/// One peak of a narrowed spectrum: its channel range, integrated area and
/// location moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSegment {
    /// First channel of the segment.
    pub start: usize,
    /// Last channel of the segment (inclusive).
    pub end: usize,
    pub apex: usize,
    pub area: f64,
    /// Intensity-weighted mean wavenumber over the peak support.
    pub mean: f64,
    /// Intensity-weighted variance over the peak support.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    /// Minimum peak prominence as a fraction of the global maximum.
    pub rel_prominence: f64,
    /// Minimum support width in channels.
    pub min_width: usize,
    /// Moments use the contiguous run around the apex above this fraction
    /// of the apex value.
    pub support_fraction: f64,
    /// Explicit segment bounds `[lo, hi]` in cm⁻¹; overrides detection.
    pub bounds: Option<Vec<[f64; 2]>>,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            rel_prominence: 0.02,
            min_width: 3,
            support_fraction: 0.01,
            bounds: None,
        }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_prominence > 0.0 && self.rel_prominence < 1.0) {
            return Err(Error::Config(format!(
                "rel_prominence must lie in (0, 1), got {}",
                self.rel_prominence
            )));
        }
        if !(self.support_fraction > 0.0 && self.support_fraction < 1.0) {
            return Err(Error::Config(format!(
                "support_fraction must lie in (0, 1), got {}",
                self.support_fraction
            )));
        }
        if let Some(b) = &self.bounds {
            if b.is_empty() || b.iter().any(|[lo, hi]| !(lo < hi)) {
                return Err(Error::Config("segment bounds need lo < hi".into()));
            }
        }
        Ok(())
    }
}

/// Topographic prominence of every local maximum, as `(index, prominence)`.
fn prominences(x: &[f64]) -> Vec<(usize, f64)> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            // walk a plateau to its right edge
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
        .into_iter()
        .map(|p| {
            let h = x[p];
            let mut left_min = h;
            let mut k = p;
            while k > 0 && x[k - 1] <= h {
                k -= 1;
                left_min = left_min.min(x[k]);
            }
            let mut right_min = h;
            let mut k = p;
            while k + 1 < n && x[k + 1] <= h {
                k += 1;
                right_min = right_min.min(x[k]);
            }
            (p, h - left_min.max(right_min))
        })
        .collect()
}

fn support(x: &[f64], apex: usize, lo: usize, hi: usize, fraction: f64) -> (usize, usize) {
    let thr = fraction * x[apex];
    let mut a = apex;
    while a > lo && x[a - 1] > thr {
        a -= 1;
    }
    let mut b = apex;
    while b < hi && x[b + 1] > thr {
        b += 1;
    }
    (a, b)
}

fn describe(x: &[f64], grid: &WavenumberGrid, start: usize, end: usize, fraction: f64) -> PeakSegment {
    let apex = (start..=end).fold(start, |m, i| if x[i] > x[m] { i } else { m });
    let area = grid.step() * x[start..=end].iter().sum::<f64>();
    let (a, b) = support(x, apex, start, end, fraction);
    let w: f64 = x[a..=b].iter().sum();
    let mean = (a..=b).map(|i| grid.at(i) * x[i]).sum::<f64>() / w;
    let variance = (a..=b).map(|i| (grid.at(i) - mean).powi(2) * x[i]).sum::<f64>() / w;
    PeakSegment {
        start,
        end,
        apex,
        area,
        mean,
        variance,
    }
}

/// Splits a narrowed spectrum into peak segments.
///
/// Negative values are clipped to zero. Peaks below the prominence
/// threshold or narrower than `min_width` are absorbed into neighbours;
/// boundaries sit at the minimum between adjacent kept peaks, so the
/// segments partition the grid.
pub fn segment_peaks(narrowed: &[f64], grid: &WavenumberGrid, cfg: &SegmentConfig) -> Result<Vec<PeakSegment>> {
    cfg.validate()?;
    grid.ensure_len(narrowed.len())?;
    if narrowed.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("narrowed spectrum"));
    }
    let x: Vec<f64> = narrowed.iter().map(|v| v.max(0.0)).collect();
    let n = x.len();

    if let Some(bounds) = &cfg.bounds {
        let mut out = Vec::with_capacity(bounds.len());
        for &[lo, hi] in bounds {
            let s = grid.nearest_index(lo);
            let e = grid.nearest_index(hi);
            if e <= s || x[s..=e].iter().all(|v| *v == 0.0) {
                return Err(Error::invalid(format!("segment [{lo}, {hi}] holds no signal")));
            }
            out.push(describe(&x, grid, s, e, cfg.support_fraction));
        }
        return Ok(out);
    }

    let max = x.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::invalid("narrowed spectrum has no positive signal"));
    }
    let mut kept: Vec<usize> = prominences(&x)
        .into_iter()
        .filter(|&(p, prom)| {
            let (a, b) = support(&x, p, 0, n - 1, cfg.support_fraction);
            prom >= cfg.rel_prominence * max && b - a + 1 >= cfg.min_width
        })
        .map(|(p, _)| p)
        .collect();
    kept.sort_unstable();
    if kept.is_empty() {
        return Err(Error::invalid("no peak passes the prominence threshold"));
    }

    let mut starts = vec![0];
    for w in kept.windows(2) {
        let cut = (w[0]..=w[1]).fold(w[0], |m, i| if x[i] < x[m] { i } else { m });
        starts.push(cut + 1);
    }
    let mut segments = Vec::with_capacity(kept.len());
    for (i, &s) in starts.iter().enumerate() {
        let e = starts.get(i + 1).map_or(n - 1, |next| next - 1);
        segments.push(describe(&x, grid, s, e, cfg.support_fraction));
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prominence_of_nested_peaks() {
        let x = [0.0, 5.0, 2.0, 3.0, 0.0, 10.0, 0.0];
        let p = prominences(&x);
        assert_eq!(p, vec![(1, 5.0), (3, 1.0), (5, 10.0)]);
    }

    #[test]
    fn weak_shoulders_are_merged() {
        let g = WavenumberGrid::new(0.0, 1.0, 64).unwrap();
        let x: Vec<f64> = (0..64)
            .map(|i| {
                let t = i as f64;
                (-(t - 30.0f64).powi(2) / 8.0).exp() + 0.001 * (t * 2.0).sin().max(0.0)
            })
            .collect();
        let s = segment_peaks(&x, &g, &SegmentConfig::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].start, 0);
        assert_eq!(s[0].end, 63);
    }

    #[test]
    fn manual_bounds_override_detection() {
        let g = WavenumberGrid::new(0.0, 1.0, 32).unwrap();
        let mut x = vec![0.0; 32];
        x[10] = 1.0;
        x[11] = 2.0;
        x[12] = 1.0;
        let cfg = SegmentConfig {
            bounds: Some(vec![[5.0, 20.0]]),
            ..Default::default()
        };
        let s = segment_peaks(&x, &g, &cfg).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].mean - 11.0).abs() < 1e-12);
        assert!((s[0].area - 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_spectrum_is_an_error() {
        let g = WavenumberGrid::new(0.0, 1.0, 16).unwrap();
        assert!(segment_peaks(&[0.0; 16], &g, &SegmentConfig::default()).is_err());
        assert!(segment_peaks(&[-1.0; 16], &g, &SegmentConfig::default()).is_err());
    }
}
