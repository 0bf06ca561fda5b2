//! Shared fixtures for the benchmarks.

use cars_infer::synthetic::{simulate, Simulation, SyntheticConfig};

/// The default three-line synthetic spectrum, noise seed 1.
pub fn fixture() -> Simulation {
    simulate(&SyntheticConfig::default(), 1).expect("default synthetic config is valid")
}
