//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use rlab_core::grid::DiscGrid;
use rlab_core::rng::{random_function, FunctionFamily, SeedSequencer};
use rlab_core::{AtomicFunction, SigmaField, SigmaSpec};

/// A seeded random bump function on an `nr × nθ` disc with `σ = |x|²`.
pub fn disc_fixture(nr: usize, ntheta: usize) -> (AtomicFunction, SigmaField) {
    let grid = DiscGrid::new(1.0, nr, ntheta).expect("disc grid");
    let sigma = SigmaField::build(SigmaSpec::RadiusSquared, &grid.carrier).expect("σ field");
    let mut rng = SeedSequencer::new(7).stream(0);
    let f = random_function(&mut rng, &Arc::clone(&grid.carrier), &FunctionFamily::PiecewiseBumps).expect("random function");
    (f, sigma)
}
