//! Numerical toolkit for dyadic space-time Fourier analysis of wave equations.
//!
//! Fields live on periodic grids `[0,T) x [0,L)^n`. Frequency localization is done with
//! Fourier multipliers adapted to the light cone `|tau| = |xi|`: space-time shells,
//! modulation shells measuring `||tau| - |xi||`, half-space cutoffs and angular sectors.
//! On top of these sit the dyadic norms, linear wave operators, a Picard solver for
//! quadratic model equations and a set of numerical experiments that measure the
//! constants in the linear and bilinear estimates.

pub mod error;
pub mod grid;
pub mod multipliers;
pub mod spaces;
pub mod verify;
pub mod solver;
pub mod wave;

pub use error::{Error, Result};
pub use grid::{Dyadic, FreqPoint, GridSpec, Rep, SpaceTimeField, SpatialField, SpatialRep};
