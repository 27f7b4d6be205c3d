use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::{transform_axes, Direction};
use super::{GridSpec, MAX_DIM};
use crate::error::{Error, Result};

/// Representation of a space-time array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rep {
    /// Values at grid nodes `(t_j, x_m)`.
    Physical,
    /// Fourier in space, physical in time.
    SpatialFourier,
    /// Fourier in space and time.
    SpacetimeFourier,
}

/// Representation of a single spatial array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRep {
    Physical,
    Fourier,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Complex array of shape `[N_t, N_x^n]` on a periodic space-time grid.
#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    grid: GridSpec,
    rep: Rep,
    data: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &GridSpec, rep: Rep) -> Self {
        SpaceTimeField { grid: grid.clone(), rep, data: vec![zero(); grid.total_len()] }
    }

    pub fn from_data(grid: &GridSpec, rep: Rep, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.total_len() {
            return Err(Error::Contract(format!(
                "field has {} values, grid needs {}",
                data.len(),
                grid.total_len()
            )));
        }
        Ok(SpaceTimeField { grid: grid.clone(), rep, data })
    }

    /// Samples `f(t, x)` at the grid nodes.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, &[f64]) -> Complex64) -> Self {
        let dx = grid.dx();
        let dt = grid.dt();
        let s_len = grid.spatial_len();
        let mut data = Vec::with_capacity(grid.total_len());
        let mut x = [0.0; MAX_DIM];
        for j in 0..grid.nt {
            let t = j as f64 * dt;
            for s in 0..s_len {
                let mut rem = s;
                for a in (0..grid.dim).rev() {
                    x[a] = (rem % grid.nx) as f64 * dx;
                    rem /= grid.nx;
                }
                data.push(f(t, &x[..grid.dim]));
            }
        }
        SpaceTimeField { grid: grid.clone(), rep: Rep::Physical, data }
    }

    /// Stacks spatial-Fourier slices into a field in `SpatialFourier` representation.
    pub fn from_slices(grid: &GridSpec, slices: &[SpatialField]) -> Result<Self> {
        if slices.len() != grid.nt {
            return Err(Error::Contract(format!("{} slices for N_t = {}", slices.len(), grid.nt)));
        }
        let mut data = Vec::with_capacity(grid.total_len());
        for s in slices {
            let s = s.to_rep(SpatialRep::Fourier);
            if s.data().len() != grid.spatial_len() {
                return Err(Error::Contract("slice does not match the spatial grid".into()));
            }
            data.extend_from_slice(s.data());
        }
        Ok(SpaceTimeField { grid: grid.clone(), rep: Rep::SpatialFourier, data })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Spatial block at time index `j`.
    pub fn slice(&self, j: usize) -> &[Complex64] {
        let s = self.grid.spatial_len();
        &self.data[j * s..(j + 1) * s]
    }

    pub fn slice_mut(&mut self, j: usize) -> &mut [Complex64] {
        let s = self.grid.spatial_len();
        &mut self.data[j * s..(j + 1) * s]
    }

    /// Spatial field at time index `j` (Physical or Fourier depending on the representation).
    pub fn time_slice(&self, j: usize) -> Result<SpatialField> {
        let rep = match self.rep {
            Rep::Physical => SpatialRep::Physical,
            Rep::SpatialFourier => SpatialRep::Fourier,
            Rep::SpacetimeFourier => {
                return Err(Error::RepMismatch { expected: Rep::SpatialFourier, found: self.rep })
            }
        };
        SpatialField::from_data(&self.grid, rep, self.slice(j).to_vec())
    }

    /// Relabels the representation without transforming (caller guarantees consistency).
    pub(crate) fn set_rep_unchecked(&mut self, rep: Rep) {
        self.rep = rep;
    }

    pub fn require(&self, rep: Rep) -> Result<()> {
        if self.rep != rep {
            return Err(Error::RepMismatch { expected: rep, found: self.rep });
        }
        Ok(())
    }

    /// Physical to space-time Fourier.
    pub fn to_spacetime_fourier(&self) -> Result<Self> {
        self.require(Rep::Physical)?;
        Ok(self.clone().into_rep(Rep::SpacetimeFourier))
    }

    /// Any Fourier representation back to physical values.
    pub fn to_physical(&self) -> Result<Self> {
        if self.rep == Rep::Physical {
            return Err(Error::RepMismatch { expected: Rep::SpacetimeFourier, found: self.rep });
        }
        Ok(self.clone().into_rep(Rep::Physical))
    }

    /// Physical or space-time Fourier to spatial Fourier.
    pub fn to_spatial_fourier(&self) -> Result<Self> {
        if self.rep == Rep::SpatialFourier {
            return Err(Error::RepMismatch { expected: Rep::Physical, found: self.rep });
        }
        Ok(self.clone().into_rep(Rep::SpatialFourier))
    }

    /// Converts to `target`, whatever the current representation.
    pub fn into_rep(mut self, target: Rep) -> Self {
        self.convert(target);
        self
    }

    pub fn to_rep(&self, target: Rep) -> Self {
        if self.rep == target {
            return self.clone();
        }
        self.clone().into_rep(target)
    }

    pub fn convert(&mut self, target: Rep) {
        let dims = self.grid.spacetime_dims();
        let n = self.grid.dim;
        let space = 1..n + 1;
        match (self.rep, target) {
            (a, b) if a == b => {}
            (Rep::Physical, Rep::SpatialFourier) => {
                transform_axes(&mut self.data, &dims, space, Direction::Forward)
            }
            (Rep::SpatialFourier, Rep::Physical) => {
                transform_axes(&mut self.data, &dims, space, Direction::Inverse)
            }
            (Rep::SpatialFourier, Rep::SpacetimeFourier) => {
                transform_axes(&mut self.data, &dims, 0..1, Direction::Forward)
            }
            (Rep::SpacetimeFourier, Rep::SpatialFourier) => {
                transform_axes(&mut self.data, &dims, 0..1, Direction::Inverse)
            }
            (Rep::Physical, Rep::SpacetimeFourier) => {
                transform_axes(&mut self.data, &dims, 0..n + 1, Direction::Forward)
            }
            (Rep::SpacetimeFourier, Rep::Physical) => {
                transform_axes(&mut self.data, &dims, 0..n + 1, Direction::Inverse)
            }
            _ => unreachable!(),
        }
        self.rep = target;
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Contract("fields live on different grids".into()));
        }
        if self.rep != other.rep {
            return Err(Error::RepMismatch { expected: self.rep, found: other.rep });
        }
        Ok(())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &Self) -> Result<()> {
        self.same_shape(other)?;
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn scale(&mut self, a: f64) {
        for x in self.data.iter_mut() {
            *x *= a;
        }
    }

    /// Sum of squared magnitudes of the stored coefficients.
    pub fn coefficient_energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `||u||_{L^2(L^2)}` in any representation (unitary transforms).
    pub fn l2_norm(&self) -> f64 {
        (self.coefficient_energy() * self.grid.dt() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient difference against `other` in the same representation.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// Complex array on the spatial torus `[0,L)^n`.
#[derive(Clone, Debug)]
pub struct SpatialField {
    pub(crate) dim: usize,
    pub(crate) nx: usize,
    pub(crate) length: f64,
    rep: SpatialRep,
    data: Vec<Complex64>,
}

impl SpatialField {
    pub fn zeros(grid: &GridSpec, rep: SpatialRep) -> Self {
        SpatialField {
            dim: grid.dim,
            nx: grid.nx,
            length: grid.length,
            rep,
            data: vec![zero(); grid.spatial_len()],
        }
    }

    pub fn from_data(grid: &GridSpec, rep: SpatialRep, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.spatial_len() {
            return Err(Error::Contract(format!(
                "spatial field has {} values, grid needs {}",
                data.len(),
                grid.spatial_len()
            )));
        }
        Ok(SpatialField { dim: grid.dim, nx: grid.nx, length: grid.length, rep, data })
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let dx = grid.dx();
        let mut x = [0.0; MAX_DIM];
        let data = (0..grid.spatial_len())
            .map(|s| {
                let mut rem = s;
                for a in (0..grid.dim).rev() {
                    x[a] = (rem % grid.nx) as f64 * dx;
                    rem /= grid.nx;
                }
                f(&x[..grid.dim])
            })
            .collect();
        SpatialField { dim: grid.dim, nx: grid.nx, length: grid.length, rep: SpatialRep::Physical, data }
    }

    pub fn rep(&self) -> SpatialRep {
        self.rep
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn matches(&self, grid: &GridSpec) -> bool {
        self.dim == grid.dim && self.nx == grid.nx && self.length == grid.length
    }

    pub fn convert(&mut self, target: SpatialRep) {
        if self.rep == target {
            return;
        }
        let dims = vec![self.nx; self.dim];
        let dir = match target {
            SpatialRep::Fourier => Direction::Forward,
            SpatialRep::Physical => Direction::Inverse,
        };
        transform_axes(&mut self.data, &dims, 0..self.dim, dir);
        self.rep = target;
    }

    pub fn to_rep(&self, target: SpatialRep) -> Self {
        let mut out = self.clone();
        out.convert(target);
        out
    }

    pub fn into_rep(mut self, target: SpatialRep) -> Self {
        self.convert(target);
        self
    }

    pub fn cell_volume(&self) -> f64 {
        (self.length / self.nx as f64).powi(self.dim as i32)
    }

    /// `||f||_{L^2}` in either representation.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.cell_volume()).sqrt()
    }

    pub fn scale(&mut self, a: Complex64) {
        for v in self.data.iter_mut() {
            *v *= a;
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rep != other.rep || self.data.len() != other.data.len() {
            return Err(Error::Contract("spatial fields do not match".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rep != other.rep || self.data.len() != other.data.len() {
            return Err(Error::Contract("spatial fields do not match".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(out)
    }
}
