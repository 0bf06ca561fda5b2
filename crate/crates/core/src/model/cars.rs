use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::hilbert::{HilbertBoundary, HilbertTransformer};
use super::voigt::{add_profile, ModelParams, VoigtLine};
use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;
use crate::wavelet::ErrorFunctionEngine;

/// Observed CARS spectrum with its (known) noise variance and the constant
/// non-resonant level `A_J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredSpectrum {
    pub grid: WavenumberGrid,
    pub values: Vec<f64>,
    pub noise_variance: f64,
    pub nr_level: f64,
    /// Channels dropped from each end of the likelihood sum.
    #[serde(default)]
    pub edge_mask: usize,
}

impl MeasuredSpectrum {
    pub fn new(
        grid: WavenumberGrid,
        values: Vec<f64>,
        noise_variance: f64,
        nr_level: f64,
    ) -> Result<Self> {
        let s = Self {
            grid,
            values,
            noise_variance,
            nr_level,
            edge_mask: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_edge_mask(mut self, edge_mask: usize) -> Result<Self> {
        self.edge_mask = edge_mask;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values on a {}-point grid",
                self.values.len(),
                self.grid.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measured spectrum"));
        }
        if !(self.noise_variance > 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::invalid(format!(
                "noise variance must be > 0, got {}",
                self.noise_variance
            )));
        }
        if !self.nr_level.is_finite() {
            return Err(Error::NonFinite("non-resonant level"));
        }
        if 2 * self.edge_mask >= self.grid.len() {
            return Err(Error::invalid(format!(
                "edge mask {} leaves no channels out of {}",
                self.edge_mask,
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// Channel range entering the likelihood.
    pub fn active_range(&self) -> std::ops::Range<usize> {
        self.edge_mask..self.grid.len() - self.edge_mask
    }
}

/// Error-corrected CARS signal `S = |exp(A_J/2) + i V_N - H{V_N}|^2`.
///
/// An empty `lines` slice yields the bare non-resonant level `exp(A_J)`.
pub fn cars_signal(grid: &WavenumberGrid, lines: &[VoigtLine], nr_level: f64) -> Result<Vec<f64>> {
    let mut raman = vec![0.0; grid.len()];
    for line in lines {
        line.validate()?;
        add_profile(grid, line, &mut raman);
    }
    let mut hilbert = HilbertTransformer::new(grid.len(), HilbertBoundary::ZeroPadded)?;
    let mut h = vec![0.0; grid.len()];
    hilbert.transform_into(&raman, &mut h);
    Ok(cars_from_parts(&raman, &h, nr_level))
}

/// `S` from a Raman signal and its Hilbert transform.
pub fn cars_from_parts(raman: &[f64], hilbert: &[f64], nr_level: f64) -> Vec<f64> {
    let nr = (0.5 * nr_level).exp();
    raman
        .iter()
        .zip(hilbert)
        .map(|(v, h)| (nr - h).powi(2) + v * v)
        .collect()
}

/// `f = eps_m(p) * S(theta)`.
pub fn forward_model(
    measured: &MeasuredSpectrum,
    params: &ModelParams,
    errfun: &ErrorFunctionEngine,
) -> Result<Vec<f64>> {
    let model = ForwardModel::new(measured, errfun)?;
    let mut ws = model.workspace()?;
    let parts = model.evaluate(&mut ws, params)?;
    Ok(parts.model)
}

/// Gaussian log-likelihood over the unmasked channels.
pub fn log_likelihood(
    measured: &MeasuredSpectrum,
    params: &ModelParams,
    errfun: &ErrorFunctionEngine,
) -> Result<f64> {
    let model = ForwardModel::new(measured, errfun)?;
    let mut ws = model.workspace()?;
    model.log_likelihood(&mut ws, params)
}

/// Gaussian log-likelihood of a model vector against the measurement.
pub fn gaussian_log_likelihood(measured: &MeasuredSpectrum, model: &[f64]) -> f64 {
    let range = measured.active_range();
    let n = range.len() as f64;
    let var = measured.noise_variance;
    let ss: f64 = measured.values[range.clone()]
        .iter()
        .zip(&model[range])
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    -0.5 * n * (2.0 * PI * var).ln() - 0.5 * ss / var
}

/// All intermediate series of one forward-model evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelComponents {
    pub raman: Vec<f64>,
    pub cars: Vec<f64>,
    pub modulation: Vec<f64>,
    pub model: Vec<f64>,
}

/// Scratch buffers for repeated forward-model evaluations.
#[derive(Debug, Clone)]
pub struct ModelWorkspace {
    hilbert: HilbertTransformer,
    raman: Vec<f64>,
    conj: Vec<f64>,
    log_eps: Vec<f64>,
}

/// Forward model bound to a measurement and an error-function engine.
#[derive(Debug, Clone, Copy)]
pub struct ForwardModel<'a> {
    measured: &'a MeasuredSpectrum,
    engine: &'a ErrorFunctionEngine,
}

impl<'a> ForwardModel<'a> {
    pub fn new(measured: &'a MeasuredSpectrum, engine: &'a ErrorFunctionEngine) -> Result<Self> {
        measured.grid.ensure_same(engine.grid())?;
        Ok(Self { measured, engine })
    }

    pub fn measured(&self) -> &'a MeasuredSpectrum {
        self.measured
    }

    pub fn engine(&self) -> &'a ErrorFunctionEngine {
        self.engine
    }

    pub fn workspace(&self) -> Result<ModelWorkspace> {
        let k = self.measured.grid.len();
        Ok(ModelWorkspace {
            hilbert: HilbertTransformer::new(k, HilbertBoundary::ZeroPadded)?,
            raman: vec![0.0; k],
            conj: vec![0.0; k],
            log_eps: vec![0.0; k],
        })
    }

    fn fill(&self, ws: &mut ModelWorkspace, params: &ModelParams) -> Result<()> {
        let grid = &self.measured.grid;
        ws.raman.iter_mut().for_each(|v| *v = 0.0);
        for line in &params.lines {
            line.validate()?;
            add_profile(grid, line, &mut ws.raman);
        }
        ws.hilbert.transform_into(&ws.raman, &mut ws.conj);
        self.engine
            .log_modulation_into(params.background, &mut ws.log_eps)?;
        Ok(())
    }

    /// Log-likelihood of `params`; the hot path of the sampler.
    pub fn log_likelihood(&self, ws: &mut ModelWorkspace, params: &ModelParams) -> Result<f64> {
        self.fill(ws, params)?;
        let nr = (0.5 * self.measured.nr_level).exp();
        let range = self.measured.active_range();
        let mut ss = 0.0;
        for k in range.clone() {
            let s = (nr - ws.conj[k]).powi(2) + ws.raman[k].powi(2);
            let f = ws.log_eps[k].exp() * s;
            ss += (self.measured.values[k] - f).powi(2);
        }
        let var = self.measured.noise_variance;
        Ok(-0.5 * range.len() as f64 * (2.0 * PI * var).ln() - 0.5 * ss / var)
    }

    pub fn evaluate(&self, ws: &mut ModelWorkspace, params: &ModelParams) -> Result<ModelComponents> {
        self.fill(ws, params)?;
        let cars = cars_from_parts(&ws.raman, &ws.conj, self.measured.nr_level);
        let modulation: Vec<f64> = ws.log_eps.iter().map(|v| v.exp()).collect();
        let model = cars.iter().zip(&modulation).map(|(s, e)| s * e).collect();
        Ok(ModelComponents {
            raman: ws.raman.clone(),
            cars,
            modulation,
            model,
        })
    }
}
