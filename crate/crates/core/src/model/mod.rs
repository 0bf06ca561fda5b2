//! CARS forward model: Voigt line sums, the discrete Hilbert transform,
//! the error-corrected CARS signal, the modulated model and its Gaussian
//! likelihood.

mod cars;
mod faddeeva;
mod hilbert;
mod voigt;

pub use cars::{
    cars_from_parts, cars_signal, forward_model, gaussian_log_likelihood, log_likelihood,
    ForwardModel, MeasuredSpectrum, ModelComponents, ModelWorkspace,
};
pub use faddeeva::faddeeva;
pub use hilbert::{hilbert_transform, HilbertBoundary, HilbertTransformer};
pub use voigt::{
    gaussian, lorentzian, raman_signal, raman_signal_of_lines, unit_voigt, voigt_profile,
    ModelParams, VoigtLine,
};
