//! Shared fixtures for the benchmarks.

use conewave_core::grid::{GridSpec, SpaceTimeField};
use conewave_core::multipliers::SymbolSpec;
use conewave_core::verify::EnsembleSpec;

pub fn grid(dim: usize, nx: usize, nt: usize) -> GridSpec {
    GridSpec::new(dim, nx, 1.0, nt, 1.0).expect("bench grid")
}

/// Seeded random field over every frequency of `grid`.
pub fn random_field(grid: &GridSpec, seed: u64) -> SpaceTimeField {
    EnsembleSpec::new(8, seed).field(grid, &SymbolSpec::Identity, 0).expect("bench field")
}
