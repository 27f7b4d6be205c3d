//! Frequency cutoffs adapted to the light cone and their kernel bounds.

mod kernel;
mod profile;
mod sectors;
mod symbol;

pub use kernel::{
    kernel_grid_for, kernel_l1_norm, kernel_l1_norm_with, l1tau_linf_bound, lattice_kernel_l1_norm,
    lattice_l1tau_linf, KernelGrid, KernelOptions, KernelVariant,
};
pub use profile::{smoothstep, CutoffProfile};
pub use sectors::{angle_between, AngularSectorSet};
pub use symbol::{
    modulation, on_cone, Band, Cutoffs, Factor, Lower, Sign, SupportBox, Symbol, SymbolSpec,
    CONE_TOLERANCE,
};
