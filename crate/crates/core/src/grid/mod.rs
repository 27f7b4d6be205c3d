//! Periodic space-time grids, their Fourier lattices and dyadic shell lists.

mod fft;
mod field;
pub mod io;
mod norms;

pub use field::{Rep, SpaceTimeField, SpatialField, SpatialRep};
pub use norms::{
    lp_combine, lq_l2_from_spatial_fourier, mixed_norm, slice_l2_norms, slice_lr_norms,
    spatial_lr_norm,
};

pub(crate) use fft::{transform_axes, transform_line, Direction};

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 6;

/// Default cap on the number of space-time grid points (2^25, about 512 MiB of coefficients).
pub const DEFAULT_POINT_BUDGET: usize = 1 << 25;

/// A dyadic number `2^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct Dyadic(i32);

impl Dyadic {
    pub const ONE: Dyadic = Dyadic(0);

    pub fn from_exponent(k: i32) -> Self {
        Dyadic(k)
    }

    /// Exact power of two, or a domain error.
    pub fn new(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Domain(format!("{value} is not a positive dyadic number")));
        }
        let k = value.log2().round();
        if (2f64.powi(k as i32) - value).abs() > 1e-12 * value {
            return Err(Error::Domain(format!("{value} is not a power of two")));
        }
        Ok(Dyadic(k as i32))
    }

    pub fn exponent(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        2f64.powi(self.0)
    }

    pub fn double(self) -> Self {
        Dyadic(self.0 + 1)
    }

    pub fn half(self) -> Self {
        Dyadic(self.0 - 1)
    }

    /// Smallest dyadic number `>= x`.
    pub fn ceil(x: f64) -> Self {
        let mut k = x.log2().ceil() as i32;
        if 2f64.powi(k - 1) >= x * (1.0 - 1e-12) {
            k -= 1;
        }
        Dyadic(k)
    }

    /// Largest dyadic number `<= x`.
    pub fn floor(x: f64) -> Self {
        let mut k = x.log2().floor() as i32;
        if 2f64.powi(k + 1) <= x * (1.0 + 1e-12) {
            k += 1;
        }
        Dyadic(k)
    }
}

impl From<Dyadic> for f64 {
    fn from(d: Dyadic) -> f64 {
        d.value()
    }
}

impl TryFrom<f64> for Dyadic {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Dyadic::new(v)
    }
}

impl std::fmt::Display for Dyadic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Inclusive dyadic range `lo..=hi`.
pub fn dyadic_range(lo: Dyadic, hi: Dyadic) -> Vec<Dyadic> {
    (lo.0..=hi.0).map(Dyadic).collect()
}

/// Space-time grid `[0,T) x [0,L)^n` with `N_t x N_x^n` samples, time slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub nx: usize,
    pub length: f64,
    pub nt: usize,
    pub period: f64,
}

impl GridSpec {
    pub fn new(dim: usize, nx: usize, length: f64, nt: usize, period: f64) -> Result<Self> {
        Self::with_budget(dim, nx, length, nt, period, DEFAULT_POINT_BUDGET)
    }

    pub fn with_budget(
        dim: usize,
        nx: usize,
        length: f64,
        nt: usize,
        period: f64,
        max_points: usize,
    ) -> Result<Self> {
        let g = GridSpec { dim, nx, length, nt, period };
        g.validate(max_points)?;
        Ok(g)
    }

    pub fn validate(&self, max_points: usize) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::UnsupportedDimension {
                dim: self.dim,
                reason: format!("spatial dimension must lie in 1..={MAX_DIM}"),
            });
        }
        if self.nx < 2 || self.nt < 2 {
            return config("N_x and N_t must be at least 2");
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return config("L must be a positive finite number");
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return config("T must be a positive finite number");
        }
        let spatial = self
            .nx
            .checked_pow(self.dim as u32)
            .ok_or_else(|| Error::Config("grid size overflows".into()))?;
        let total = spatial
            .checked_mul(self.nt)
            .ok_or_else(|| Error::Config("grid size overflows".into()))?;
        if total > max_points {
            return config(format!(
                "grid has {total} points, exceeding the budget of {max_points}"
            ));
        }
        Ok(())
    }

    /// Same spatial grid with a different time axis.
    pub fn with_time(&self, nt: usize, period: f64) -> Result<Self> {
        GridSpec::new(self.dim, self.nx, self.length, nt, period)
    }

    pub fn spatial_len(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    pub fn total_len(&self) -> usize {
        self.spatial_len() * self.nt
    }

    pub fn dt(&self) -> f64 {
        self.period / self.nt as f64
    }

    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    /// Spatial cell volume `dx^n`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Array shape `[N_t, N_x, ..., N_x]`.
    pub fn spacetime_dims(&self) -> Vec<usize> {
        let mut d = vec![self.nt];
        d.extend(std::iter::repeat(self.nx).take(self.dim));
        d
    }

    pub fn spatial_dims(&self) -> Vec<usize> {
        vec![self.nx; self.dim]
    }

    /// Sample times `t_j = j dt`.
    pub fn times(&self) -> Vec<f64> {
        (0..self.nt).map(|j| j as f64 * self.dt()).collect()
    }

    /// Temporal frequency of time index `j`.
    pub fn tau(&self, j: usize) -> f64 {
        centered(j, self.nt) as f64 / self.period
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.tau(j)).collect()
    }

    pub fn lattice(&self) -> SpatialLattice {
        SpatialLattice::new(self.dim, self.nx, self.length)
    }

    /// Largest `|tau|` on the lattice.
    pub fn tau_max(&self) -> f64 {
        (self.nt / 2) as f64 / self.period
    }

    /// Largest `|xi|` on the lattice.
    pub fn xi_max(&self) -> f64 {
        (self.dim as f64).sqrt() * (self.nx / 2) as f64 / self.length
    }

    /// Smallest frequency resolved by both axes.
    pub fn min_resolvable(&self) -> f64 {
        (1.0 / self.period).max(1.0 / self.length)
    }

    fn require_spatial_resolution(&self) -> Result<()> {
        if self.nx <= 2 {
            return config(format!(
                "no resolvable shell: spatial Nyquist frequency {} does not exceed 1/L",
                (self.nx / 2) as f64 / self.length
            ));
        }
        Ok(())
    }

    /// Dyadic `lambda` from the minimum resolvable frequency up to the lattice corner.
    pub fn frequency_shells(&self) -> Result<Vec<Dyadic>> {
        self.require_spatial_resolution()?;
        let lo = Dyadic::ceil(self.min_resolvable());
        let top = (self.tau_max().powi(2) + self.xi_max().powi(2)).sqrt();
        let hi = Dyadic::floor(top);
        if hi < lo {
            return config("no resolvable shell on this grid");
        }
        Ok(dyadic_range(lo, hi))
    }

    /// Dyadic modulations `d`; the lowest band absorbs every smaller nonzero modulation.
    pub fn cone_shells(&self) -> Result<Vec<Dyadic>> {
        self.require_spatial_resolution()?;
        let lo = Dyadic::ceil(self.min_resolvable());
        let hi = Dyadic::floor(self.tau_max().max(self.xi_max()));
        if hi < lo {
            return config("no resolvable modulation shell on this grid");
        }
        Ok(dyadic_range(lo, hi))
    }

    /// Dyadic spatial frequencies for data norms.
    pub fn spatial_shells(&self) -> Result<Vec<Dyadic>> {
        self.require_spatial_resolution()?;
        let lo = Dyadic::ceil(1.0 / self.length);
        let hi = Dyadic::floor(self.xi_max());
        if hi < lo {
            return config("no resolvable spatial shell on this grid");
        }
        Ok(dyadic_range(lo, hi))
    }

    pub fn has_shell(&self, lambda: Dyadic) -> Result<bool> {
        Ok(self.frequency_shells()?.contains(&lambda))
    }
}

/// Centered frequency index: `k < N/2` maps to `k`, otherwise to `k - N`.
#[inline]
pub fn centered(k: usize, n: usize) -> i64 {
    if 2 * k < n {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Flat array index of a centered frequency, if it lies on an `n`-point axis.
#[inline]
pub fn uncentered(k: i64, n: usize) -> Option<usize> {
    let pos = n.div_ceil(2) as i64;
    if k < pos - n as i64 || k >= pos {
        return None;
    }
    Some(if k < 0 { (k + n as i64) as usize } else { k as usize })
}

/// Spatial Fourier lattice `(Z/L)^n` truncated to `N_x` modes per axis.
#[derive(Clone, Debug)]
pub struct SpatialLattice {
    pub dim: usize,
    pub nx: usize,
    pub length: f64,
    norms: Vec<f64>,
    norms2: Vec<f64>,
}

impl SpatialLattice {
    pub fn new(dim: usize, nx: usize, length: f64) -> Self {
        let len = nx.pow(dim as u32);
        let mut norms = Vec::with_capacity(len);
        let mut norms2 = Vec::with_capacity(len);
        let mut digits = [0i64; MAX_DIM];
        for s in 0..len {
            let mut rem = s;
            for a in (0..dim).rev() {
                digits[a] = centered(rem % nx, nx);
                rem /= nx;
            }
            let k2: i64 = digits[..dim].iter().map(|k| k * k).sum();
            let r2 = k2 as f64 / (length * length);
            norms2.push(r2);
            norms.push(r2.sqrt());
        }
        SpatialLattice { dim, nx, length, norms, norms2 }
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// `|xi|` at flat spatial index `s`.
    #[inline]
    pub fn norm(&self, s: usize) -> f64 {
        self.norms[s]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `|xi|^2` at flat spatial index `s`.
    #[inline]
    pub fn norm2(&self, s: usize) -> f64 {
        self.norms2[s]
    }

    /// Centered integer indices of `s`.
    #[inline]
    pub fn digits(&self, s: usize) -> [i64; MAX_DIM] {
        let mut out = [0i64; MAX_DIM];
        let mut rem = s;
        for a in (0..self.dim).rev() {
            out[a] = centered(rem % self.nx, self.nx);
            rem /= self.nx;
        }
        out
    }

    /// Frequency vector `xi = k / L` at `s`.
    #[inline]
    pub fn xi(&self, s: usize) -> [f64; MAX_DIM] {
        let d = self.digits(s);
        let mut out = [0.0; MAX_DIM];
        for a in 0..self.dim {
            out[a] = d[a] as f64 / self.length;
        }
        out
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let mut s = 0usize;
        for &ka in &k[..self.dim] {
            s = s * self.nx + uncentered(ka, self.nx)?;
        }
        Some(s)
    }

    /// Whether every centered index satisfies `|k_a| <= N_x/3` (two-thirds rule).
    #[inline]
    pub fn dealiased(&self, s: usize) -> bool {
        let d = self.digits(s);
        let cap = (self.nx / 3) as i64;
        d[..self.dim].iter().all(|k| k.abs() <= cap)
    }
}

/// Space-time frequency point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqPoint {
    pub tau: f64,
    pub xi: [f64; MAX_DIM],
    pub dim: usize,
}

impl FreqPoint {
    pub fn new(tau: f64, xi: &[f64]) -> Self {
        let mut a = [0.0; MAX_DIM];
        a[..xi.len()].copy_from_slice(xi);
        FreqPoint { tau, xi: a, dim: xi.len() }
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi[..self.dim].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm(&self) -> f64 {
        (self.tau * self.tau + self.xi_norm().powi(2)).sqrt()
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi[..self.dim]
    }
}
