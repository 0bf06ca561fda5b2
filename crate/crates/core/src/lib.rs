//! Bayesian quantitative analysis of coherent anti-Stokes Raman scattering
//! (CARS) spectra.
//!
//! The measured spectrum is modelled as `y = eps_m(p) * S(theta) + noise`,
//! where `S` is the squared modulus of a constant non-resonant background
//! plus a resonant susceptibility built from Voigt lines and their Hilbert
//! transform, and `eps_m` is a multiplicative artefact expressed through
//! interpolated wavelet detail levels. Priors come from an unsupervised
//! line-narrowing sweep; the posterior is sampled with a likelihood-tempered
//! sequential Monte Carlo sampler.

pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod narrowing;
pub mod pipeline;
pub mod priors;
pub mod rng;
pub mod smc;
pub mod synthetic;
pub mod wavelet;

pub use error::{Error, Result};
pub use grid::WavenumberGrid;
pub use model::{MeasuredSpectrum, ModelParams, VoigtLine};
pub use wavelet::ErrorFunctionEngine;
