//! Linear wave operators for `box = -d_t^2 + Laplacian` on the periodic grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Rep, SpaceTimeField, SpatialField, SpatialRep};
use crate::multipliers::{modulation, on_cone, Sign};
use crate::spaces::{box_symbol, NormContext, PointClass, Route};

/// Sample times `t_j = (j - origin) dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    pub dt: f64,
    pub origin: usize,
    pub len: usize,
}

impl TimeAxis {
    /// `t_j = j dt`.
    pub fn forward(grid: &GridSpec) -> Self {
        TimeAxis { dt: grid.dt(), origin: 0, len: grid.nt }
    }

    /// Window `[-T/2, T/2)` with the data time at the middle sample.
    pub fn two_sided(grid: &GridSpec) -> Self {
        TimeAxis { dt: grid.dt(), origin: grid.nt / 2, len: grid.nt }
    }

    pub fn time(&self, j: usize) -> f64 {
        (j as f64 - self.origin as f64) * self.dt
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        if self.len != grid.nt || self.origin >= self.len || (self.dt - grid.dt()).abs() > 1e-14 * grid.dt() {
            return Err(Error::Contract("time axis does not match the grid".into()));
        }
        Ok(())
    }
}

/// A field together with its time derivative, both Fourier in space and physical in time.
#[derive(Clone, Debug)]
pub struct WaveState {
    pub field: SpaceTimeField,
    pub rate: SpaceTimeField,
}

impl WaveState {
    pub fn zeros(grid: &GridSpec) -> Self {
        WaveState {
            field: SpaceTimeField::zeros(grid, Rep::SpatialFourier),
            rate: SpaceTimeField::zeros(grid, Rep::SpatialFourier),
        }
    }

    /// Cauchy data `(u(t_j), d_t u(t_j))`.
    pub fn data_at(&self, j: usize) -> Result<(SpatialField, SpatialField)> {
        Ok((self.field.time_slice(j)?, self.rate.time_slice(j)?))
    }

    pub fn sub(&self, other: &WaveState) -> Result<WaveState> {
        Ok(WaveState { field: self.field.sub(&other.field)?, rate: self.rate.sub(&other.rate)? })
    }

    pub fn add(&self, other: &WaveState) -> Result<WaveState> {
        Ok(WaveState { field: self.field.add(&other.field)?, rate: self.rate.add(&other.rate)? })
    }
}

#[inline]
fn omega(xi_norm: f64) -> f64 {
    2.0 * PI * xi_norm
}

fn spatial_fourier(f: &SpatialField, grid: &GridSpec) -> Result<SpatialField> {
    if !f.matches(grid) {
        return Err(Error::Contract("Cauchy data does not match the grid".into()));
    }
    Ok(f.to_rep(SpatialRep::Fourier))
}

/// Free wave with `u(t_0) = f`, `d_t u(t_0) = g` sampled on `axis`.
pub fn propagate(grid: &GridSpec, f: &SpatialField, g: &SpatialField, axis: &TimeAxis) -> Result<WaveState> {
    axis.check(grid)?;
    let f = spatial_fourier(f, grid)?;
    let g = spatial_fourier(g, grid)?;
    let lat = grid.lattice();
    let mut out = WaveState::zeros(grid);
    for j in 0..grid.nt {
        let t = axis.time(j);
        let vals: Vec<(Complex64, Complex64)> = (0..lat.len())
            .map(|s| {
                let w = omega(lat.norm(s));
                let (fv, gv) = (f.data()[s], g.data()[s]);
                if w == 0.0 {
                    (fv + gv * t, gv)
                } else {
                    let (sn, cs) = (w * t).sin_cos();
                    (fv * cs + gv * (sn / w), -fv * (w * sn) + gv * cs)
                }
            })
            .collect();
        for (s, (v, r)) in vals.into_iter().enumerate() {
            out.field.slice_mut(j)[s] = v;
            out.rate.slice_mut(j)[s] = r;
        }
    }
    Ok(out)
}

/// `||grad f||^2 + ||g||^2`.
pub fn energy(f: &SpatialField, g: &SpatialField) -> f64 {
    let lat = crate::grid::SpatialLattice::new(f.dim(), f.nx(), f.length());
    let f = f.to_rep(SpatialRep::Fourier);
    let g = g.to_rep(SpatialRep::Fourier);
    let s: f64 = (0..lat.len())
        .map(|k| omega(lat.norm(k)).powi(2) * f.data()[k].norm_sqr() + g.data()[k].norm_sqr())
        .sum();
    s * f.cell_volume()
}

/// Causal solution of `box u = F` with zero Cauchy data at the axis origin (trapezoidal rule).
///
/// The returned derivative differentiates the quadrature in `t` with frozen nodes, so both
/// traces vanish exactly at the origin.
pub fn duhamel_inverse(src: &SpaceTimeField, axis: &TimeAxis) -> Result<WaveState> {
    let grid = src.grid().clone();
    axis.check(&grid)?;
    let src = src.to_rep(Rep::SpatialFourier);
    let lat = grid.lattice();
    let s_len = lat.len();
    let dt = axis.dt;
    let mut out = WaveState::zeros(&grid);
    let w: Vec<f64> = (0..s_len).map(|s| omega(lat.norm(s))).collect();
    for dir in [1i64, -1] {
        let zero = Complex64::new(0.0, 0.0);
        let mut run_a = vec![zero; s_len];
        let mut run_b = vec![zero; s_len];
        let mut j = axis.origin as i64;
        let sigma = dir as f64;
        loop {
            let ju = j as usize;
            let t = axis.time(ju);
            let fj = src.slice(ju);
            let first = ju == axis.origin;
            for s in 0..s_len {
                let ws = w[s];
                let (cj, sj) = if ws == 0.0 { (1.0, t) } else { let (a, b) = (ws * t).sin_cos(); (b, a) };
                let (a_full, b_full) = (fj[s] * cj, fj[s] * sj);
                let (a, b) = if first {
                    (zero, zero)
                } else {
                    (run_a[s] + a_full * 0.5, run_b[s] + b_full * 0.5)
                };
                let scale = -sigma * dt;
                let (val, rate) = if ws == 0.0 {
                    ((a * t - b) * scale, a * scale)
                } else {
                    let (sn, cs) = (ws * t).sin_cos();
                    ((a * sn - b * cs) * (scale / ws), (a * cs + b * sn) * scale)
                };
                if !(first && dir < 0) {
                    out.field.slice_mut(ju)[s] = val;
                    out.rate.slice_mut(ju)[s] = rate;
                }
                if first {
                    run_a[s] = a_full * 0.5;
                    run_b[s] = b_full * 0.5;
                } else {
                    run_a[s] += a_full;
                    run_b[s] += b_full;
                }
            }
            j += dir;
            if j < 0 || j >= grid.nt as i64 {
                break;
            }
        }
    }
    Ok(out)
}

/// Periodic `box` applied spectrally; result in the representation of `u`.
pub fn spectral_box(u: &SpaceTimeField) -> SpaceTimeField {
    let rep = u.rep();
    let mut v = u.to_rep(Rep::SpacetimeFourier);
    let g = v.grid().clone();
    let lat = g.lattice();
    let s_len = lat.len();
    for (j, block) in v.data_mut().chunks_mut(s_len).enumerate() {
        let tau = g.tau(j);
        for (s, c) in block.iter_mut().enumerate() {
            *c *= box_symbol(tau, lat.norm2(s));
        }
    }
    v.into_rep(rep)
}

/// Spectral time derivative of a periodic field.
pub fn spectral_time_derivative(u: &SpaceTimeField) -> SpaceTimeField {
    let rep = u.rep();
    let mut v = u.to_rep(Rep::SpacetimeFourier);
    let g = v.grid().clone();
    let s_len = g.spatial_len();
    for (j, block) in v.data_mut().chunks_mut(s_len).enumerate() {
        let f = Complex64::new(0.0, 2.0 * PI * g.tau(j));
        for c in block.iter_mut() {
            *c *= f;
        }
    }
    v.into_rep(rep)
}

/// `box u` with a fourth-order central difference in time and the spectral Laplacian.
///
/// Returns the spatial-Fourier result and the range of time indices where it is defined.
pub fn fd_box(u: &SpaceTimeField) -> Result<(SpaceTimeField, std::ops::Range<usize>)> {
    let g = u.grid().clone();
    if g.nt < 5 {
        return Err(Error::Config("finite-difference box needs N_t >= 5".into()));
    }
    let u = u.to_rep(Rep::SpatialFourier);
    let lat = g.lattice();
    let dt2 = g.dt() * g.dt();
    let mut out = SpaceTimeField::zeros(&g, Rep::SpatialFourier);
    for j in 2..g.nt - 2 {
        for s in 0..lat.len() {
            let v = |k: usize| u.slice(k)[s];
            let utt = (-v(j - 2) + v(j - 1) * 16.0 - v(j) * 30.0 + v(j + 1) * 16.0 - v(j + 2)) / (12.0 * dt2);
            out.slice_mut(j)[s] = -utt - v(j) * omega(lat.norm(s)).powi(2);
        }
    }
    Ok((out, 2..g.nt - 2))
}

/// `Xi^{-1} F = F / (4 pi^2 (tau^2 - |xi|^2))` for sources supported off the cone.
pub fn xi_inverse(src: &SpaceTimeField, guard: f64) -> Result<SpaceTimeField> {
    let rep = src.rep();
    let mut v = src.to_rep(Rep::SpacetimeFourier);
    let g = v.grid().clone();
    let lat = g.lattice();
    let s_len = lat.len();
    let thresh = 1e-12 * v.max_abs();
    for (j, block) in v.data_mut().chunks_mut(s_len).enumerate() {
        let tau = g.tau(j);
        for (s, c) in block.iter_mut().enumerate() {
            let xi2 = lat.norm2(s);
            let m = modulation(tau, lat.norm(s), xi2);
            let tiny = c.norm() <= thresh;
            if m < guard || on_cone(tau * tau, xi2) {
                if !tiny {
                    return Err(Error::ConeContact { tau, xi: lat.norm(s) });
                }
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= box_symbol(tau, xi2);
            }
        }
    }
    Ok(v.into_rep(rep))
}

/// Exact zero-data solution for a periodic off-cone source: `Xi^{-1} F - W(Xi^{-1} F at t = 0)`.
pub fn parametrix_inverse(src: &SpaceTimeField, guard: f64) -> Result<WaveState> {
    let grid = src.grid().clone();
    let v = xi_inverse(&src.to_rep(Rep::SpacetimeFourier), guard)?;
    let vt = spectral_time_derivative(&v).into_rep(Rep::SpatialFourier);
    let v = v.into_rep(Rep::SpatialFourier);
    let w = propagate(&grid, &v.time_slice(0)?, &vt.time_slice(0)?, &TimeAxis::forward(&grid))?;
    Ok(WaveState { field: v.sub(&w.field)?, rate: vt.sub(&w.rate)? })
}

/// `S_lambda u = free + xpart + ypart` with the routes of the per-shell minimum.
#[derive(Clone, Debug)]
pub struct FDecomposition {
    pub lambda: f64,
    /// Cone residue plus the free wave removed from the Duhamel part.
    pub free: SpaceTimeField,
    pub xpart: SpaceTimeField,
    /// Duhamel solution with zero Cauchy data at `t = 0`.
    pub ypart: SpaceTimeField,
    pub ypart_rate: SpaceTimeField,
    /// `box` of the Y-routed bands; `ypart` is generated by this source.
    pub ysource: SpaceTimeField,
}

pub fn f_decompose(ctx: &NormContext, u: &SpaceTimeField, lambda: f64) -> Result<FDecomposition> {
    let grid = ctx.grid().clone();
    let routes: Vec<Route> = ctx.shell_rows(u, lambda)?.iter().map(|r| r.route).collect();
    let li = ctx.lambdas().iter().position(|l| l.value() == lambda).expect("validated shell");
    let spec = u.to_rep(Rep::SpacetimeFourier);
    let mut free = SpaceTimeField::zeros(&grid, Rep::SpacetimeFourier);
    let mut xpart = free.clone();
    let mut yraw = free.clone();
    let s_len = grid.spatial_len();
    for j in 0..grid.nt {
        for s in 0..s_len {
            let i = j * s_len + s;
            match ctx.classify(j, s) {
                Some(PointClass { shell, band }) if shell == li => {
                    let c = spec.data()[i];
                    match band {
                        None => free.data_mut()[i] = c,
                        Some(b) if routes[b] == Route::X => xpart.data_mut()[i] = c,
                        Some(_) => yraw.data_mut()[i] = c,
                    }
                }
                _ => {}
            }
        }
    }
    let ysource = spectral_box(&yraw).into_rep(Rep::SpatialFourier);
    let y = duhamel_inverse(&ysource, &TimeAxis::forward(&grid))?;
    let yraw = yraw.into_rep(Rep::SpatialFourier);
    let mut free = free.into_rep(Rep::SpatialFourier);
    free.axpy(Complex64::new(1.0, 0.0), &yraw.sub(&y.field)?)?;
    Ok(FDecomposition {
        lambda,
        free,
        xpart: xpart.into_rep(Rep::SpatialFourier),
        ypart: y.field,
        ypart_rate: y.rate,
        ysource,
    })
}

/// One trace `u^pm_{lambda,s}` on the shifted cone `tau = s pm |xi|`.
#[derive(Clone, Debug)]
pub struct TraceSample {
    /// Integer offset `s T` after rounding `|xi| T`.
    pub bin: i64,
    pub s: f64,
    pub field: SpatialField,
}

#[derive(Clone, Debug)]
pub struct TraceFamily {
    pub grid: GridSpec,
    pub lambda: f64,
    pub sign: Sign,
    pub samples: Vec<TraceSample>,
}

impl TraceFamily {
    /// `sum_s ds ||u_s||_{L^2}`.
    pub fn l1_l2(&self) -> f64 {
        self.samples.iter().map(|t| t.field.l2_norm()).sum::<f64>() / self.grid.period
    }
}

fn cone_shift(grid: &GridSpec, xi_norm: f64) -> i64 {
    (xi_norm * grid.period).round() as i64
}

/// Groups the coefficients of `u` (supported in `S^pm_lambda`) by distance to the cone.
pub fn trace_decompose(u: &SpaceTimeField, lambda: f64, sign: Sign) -> Result<TraceFamily> {
    let grid = u.grid().clone();
    let spec = u.to_rep(Rep::SpacetimeFourier);
    let lat = grid.lattice();
    let s_len = lat.len();
    let total = spec.coefficient_energy();
    let mut outside = 0.0;
    let mut bins: std::collections::BTreeMap<i64, Vec<Complex64>> = Default::default();
    let amp = grid.period / (grid.nt as f64).sqrt();
    for j in 0..grid.nt {
        let tau = grid.tau(j);
        let jc = crate::grid::centered(j, grid.nt);
        for s in 0..s_len {
            let c = spec.data()[j * s_len + s];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let r2 = tau * tau + lat.norm2(s);
            let in_shell = r2 >= lambda * lambda && r2 < 4.0 * lambda * lambda;
            if !in_shell || !sign.contains(tau) {
                outside += c.norm_sqr();
                continue;
            }
            let shift = cone_shift(&grid, lat.norm(s));
            let bin = match sign {
                Sign::Plus => jc - shift,
                Sign::Minus => jc + shift,
            };
            bins.entry(bin).or_insert_with(|| vec![Complex64::new(0.0, 0.0); s_len])[s] = c * amp;
        }
    }
    if outside > 1e-20 * total {
        return Err(Error::Contract(format!(
            "field has relative mass {:.3e} outside S^{:?}_{lambda}",
            (outside / total).sqrt(),
            sign
        )));
    }
    let samples = bins
        .into_iter()
        .map(|(bin, data)| {
            Ok(TraceSample {
                bin,
                s: bin as f64 / grid.period,
                field: SpatialField::from_data(&grid, SpatialRep::Fourier, data)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceFamily { grid, lambda, sign, samples })
}

/// Inverse of [`trace_decompose`].
pub fn trace_reconstruct(fam: &TraceFamily) -> Result<SpaceTimeField> {
    let grid = &fam.grid;
    let lat = grid.lattice();
    let s_len = lat.len();
    let mut out = SpaceTimeField::zeros(grid, Rep::SpacetimeFourier);
    let amp = (grid.nt as f64).sqrt() / grid.period;
    for t in &fam.samples {
        let f = t.field.to_rep(SpatialRep::Fourier);
        for (s, c) in f.data().iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let shift = cone_shift(grid, lat.norm(s));
            let jc = match fam.sign {
                Sign::Plus => t.bin + shift,
                Sign::Minus => t.bin - shift,
            };
            let j = crate::grid::uncentered(jc, grid.nt)
                .ok_or_else(|| Error::Range(format!("trace bin {} leaves the time lattice", t.bin)))?;
            out.data_mut()[j * s_len + s] = c * amp;
        }
    }
    Ok(out)
}
