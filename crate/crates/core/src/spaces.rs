//! Dyadic function-space norms built from the sharp cone cutoffs.
//!
//! For a shell `lambda` the pieces are
//! `X = sum_d d^{1/2} ||S_{lambda,d} u||_{L^2 L^2}`,
//! `Y = lambda^{-1} ||box S_lambda u||_{L^1 L^2}` and
//! `Z = lambda^{(2-n)/2} sum_d (sum_omega ||S^omega_{lambda,d} u||^2_{L^1 L^inf})^{1/2}`.
//! `F_lambda` takes the cheaper of the X and Y routes shell by shell; `G_lambda` adds `Z`.

use std::borrow::Cow;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    lp_combine, slice_l2_norms, Dyadic, GridSpec, Rep, SpaceTimeField, SpatialField, SpatialLattice,
    SpatialRep,
};
use crate::multipliers::{modulation, AngularSectorSet};

/// Structural constants shared by the norms and estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchematicParams {
    /// Small constant `c` separating near-cone and far-from-cone interactions.
    pub c: f64,
}

impl Default for SchematicParams {
    fn default() -> Self {
        SchematicParams { c: 0.125 }
    }
}

/// Largest `e` with `4^e <= x2`, using exact comparisons.
#[inline]
pub(crate) fn dyadic_exponent_sq(x2: f64) -> i32 {
    let mut e = (0.5 * x2.log2()).floor() as i32;
    while 4f64.powi(e + 1) <= x2 {
        e += 1;
    }
    while 4f64.powi(e) > x2 {
        e -= 1;
    }
    e
}

/// `box` symbol `4 pi^2 (tau^2 - |xi|^2)`.
#[inline]
pub fn box_symbol(tau: f64, xi2: f64) -> f64 {
    4.0 * PI * PI * (tau * tau - xi2)
}

/// Shell classification of one space-time lattice point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointClass {
    pub shell: usize,
    /// Modulation band index, `None` on the cone residue.
    pub band: Option<usize>,
}

/// Grid-bound evaluator of the dyadic norms.
#[derive(Clone, Debug)]
pub struct NormContext {
    grid: GridSpec,
    lattice: SpatialLattice,
    taus: Vec<f64>,
    lambdas: Vec<Dyadic>,
    ds: Vec<Dyadic>,
    spatial: Vec<Dyadic>,
    params: SchematicParams,
}

/// One row of the per-shell norm table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicNormRow {
    pub lambda: f64,
    pub d: f64,
    /// `d^{1/2} ||S_{lambda,d} u||_{L^2 L^2}`.
    pub x: f64,
    /// `lambda^{-1} ||box S_{lambda,d} u||_{L^1 L^2}`.
    pub y: f64,
    /// `lambda^{(2-n)/2} (sum_omega ||S^omega_{lambda,d} u||^2_{L^1 L^inf})^{1/2}`, if computed.
    pub z: Option<f64>,
    /// Route chosen by the per-shell minimum.
    pub route: Route,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    X,
    Y,
}

/// Per-shell summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSummary {
    pub lambda: f64,
    pub energy: f64,
    pub f: f64,
    pub z: Option<f64>,
    pub g: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicNormTable {
    pub grid: GridSpec,
    pub rows: Vec<DyadicNormRow>,
    pub shells: Vec<ShellSummary>,
}

impl DyadicNormTable {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lambda", "d", "x", "y", "z", "route"])?;
        for r in &self.rows {
            out.write_record([
                format!("{}", r.lambda),
                format!("{}", r.d),
                format!("{:.12e}", r.x),
                format!("{:.12e}", r.y),
                r.z.map_or(String::new(), |z| format!("{z:.12e}")),
                match r.route {
                    Route::X => "x".into(),
                    Route::Y => "y".into(),
                },
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl NormContext {
    pub fn new(grid: &GridSpec, params: SchematicParams) -> Result<Self> {
        if !(params.c > 0.0 && params.c <= 1.0) {
            return Err(Error::Config(format!("c = {} must lie in (0, 1]", params.c)));
        }
        Ok(NormContext {
            grid: grid.clone(),
            lattice: grid.lattice(),
            taus: grid.taus(),
            lambdas: grid.frequency_shells()?,
            ds: grid.cone_shells()?,
            spatial: grid.spatial_shells()?,
            params,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &SchematicParams {
        &self.params
    }

    pub fn lambdas(&self) -> &[Dyadic] {
        &self.lambdas
    }

    pub fn cone_shells(&self) -> &[Dyadic] {
        &self.ds
    }

    pub fn spatial_shells(&self) -> &[Dyadic] {
        &self.spatial
    }

    pub fn lattice(&self) -> &SpatialLattice {
        &self.lattice
    }

    fn shell_index(&self, lambda: f64) -> Result<usize> {
        let l = Dyadic::new(lambda)?;
        self.lambdas
            .iter()
            .position(|x| *x == l)
            .ok_or_else(|| Error::Config(format!("lambda = {lambda} is not a resolvable shell")))
    }

    /// Shell and modulation band of lattice point `(j, s)`.
    #[inline]
    pub fn classify(&self, j: usize, s: usize) -> Option<PointClass> {
        let tau = self.taus[j];
        let xi2 = self.lattice.norm2(s);
        let r2 = tau * tau + xi2;
        if r2 == 0.0 {
            return None;
        }
        let e = dyadic_exponent_sq(r2);
        let lo = self.lambdas[0].exponent();
        let hi = self.lambdas[self.lambdas.len() - 1].exponent();
        if e < lo || e > hi {
            return None;
        }
        let m = modulation(tau, self.lattice.norm(s), xi2);
        let band = if m == 0.0 {
            None
        } else {
            let em = dyadic_exponent_sq(m * m);
            let dlo = self.ds[0].exponent();
            Some(((em - dlo).max(0) as usize).min(self.ds.len() - 1))
        };
        Some(PointClass { shell: (e - lo) as usize, band })
    }

    fn spectrum<'a>(&self, u: &'a SpaceTimeField) -> Result<Cow<'a, SpaceTimeField>> {
        if u.grid() != &self.grid {
            return Err(Error::Contract("field grid differs from the norm context grid".into()));
        }
        Ok(if u.rep() == Rep::SpacetimeFourier {
            Cow::Borrowed(u)
        } else {
            Cow::Owned(u.to_rep(Rep::SpacetimeFourier))
        })
    }

    fn measure(&self) -> f64 {
        self.grid.dt() * self.grid.cell_volume()
    }

    /// `||S_{lambda,d} u||^2_{L^2 L^2}` for every band.
    fn band_energies(&self, spec: &SpaceTimeField, li: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.ds.len()];
        let s_len = self.lattice.len();
        for (j, block) in spec.data().chunks(s_len).enumerate() {
            for (s, c) in block.iter().enumerate() {
                if let Some(PointClass { shell, band: Some(b) }) = self.classify(j, s) {
                    if shell == li {
                        e[b] += c.norm_sqr();
                    }
                }
            }
        }
        let w = self.measure();
        e.iter_mut().for_each(|v| *v *= w);
        e
    }

    /// Collects the selected coefficients (times `weight`) and returns per-time spatial `L^2` norms.
    fn time_profile(
        &self,
        spec: &SpaceTimeField,
        buf: &mut SpaceTimeField,
        select: impl Fn(PointClass) -> bool,
        with_box: bool,
    ) -> Vec<f64> {
        let s_len = self.lattice.len();
        {
            let out = buf.data_mut();
            for (j, (ob, ib)) in out.chunks_mut(s_len).zip(spec.data().chunks(s_len)).enumerate() {
                let tau = self.taus[j];
                for (s, (o, c)) in ob.iter_mut().zip(ib).enumerate() {
                    *o = match self.classify(j, s) {
                        Some(pc) if select(pc) => {
                            if with_box {
                                *c * box_symbol(tau, self.lattice.norm2(s))
                            } else {
                                *c
                            }
                        }
                        _ => Complex64::new(0.0, 0.0),
                    };
                }
            }
        }
        buf.convert(Rep::SpatialFourier);
        let norms = slice_l2_norms(buf).expect("spatial Fourier buffer");
        buf.set_rep_unchecked(Rep::SpacetimeFourier);
        norms
    }

    fn scratch(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(&self.grid, Rep::SpacetimeFourier)
    }

    /// `(sum_d (d^{1/2} ||S_{lambda,d} u||_{L^2})^p)^{1/p}`.
    pub fn x_half_norm(&self, u: &SpaceTimeField, lambda: f64, p: f64) -> Result<f64> {
        if !(p == 1.0 || p == 2.0 || p.is_infinite()) {
            return Err(Error::Domain(format!("X exponent p = {p} must be 1, 2 or infinity")));
        }
        let li = self.shell_index(lambda)?;
        let spec = self.spectrum(u)?;
        let e = self.band_energies(&spec, li);
        Ok(lp_combine(self.ds.iter().zip(&e).map(|(d, e)| (d.value() * e).sqrt()), 1.0, p))
    }

    /// `lambda^{-1} ||box S_lambda u||_{L^1 L^2}`.
    pub fn y_norm(&self, u: &SpaceTimeField, lambda: f64) -> Result<f64> {
        let li = self.shell_index(lambda)?;
        let spec = self.spectrum(u)?;
        let mut buf = self.scratch();
        let prof = self.time_profile(&spec, &mut buf, |pc| pc.shell == li, true);
        Ok(prof.iter().sum::<f64>() * self.grid.dt() / lambda)
    }

    /// `||S_lambda u||_{L^inf L^2}`.
    pub fn energy_norm(&self, u: &SpaceTimeField, lambda: f64) -> Result<f64> {
        let li = self.shell_index(lambda)?;
        let spec = self.spectrum(u)?;
        let mut buf = self.scratch();
        let prof = self.time_profile(&spec, &mut buf, |pc| pc.shell == li, false);
        Ok(prof.iter().cloned().fold(0.0, f64::max))
    }

    fn y_bands(&self, spec: &SpaceTimeField, buf: &mut SpaceTimeField, li: usize, lambda: f64) -> Vec<f64> {
        (0..self.ds.len())
            .map(|b| {
                let prof = self.time_profile(spec, buf, |pc| pc.shell == li && pc.band == Some(b), true);
                prof.iter().sum::<f64>() * self.grid.dt() / lambda
            })
            .collect()
    }

    fn z_bands(&self, spec: &SpaceTimeField, buf: &mut SpaceTimeField, li: usize, lambda: f64) -> Result<Vec<f64>> {
        let n = self.grid.dim;
        if n < 2 {
            return Err(Error::UnsupportedDimension {
                dim: n,
                reason: "the angular Z norm needs n >= 2".into(),
            });
        }
        let s_len = self.lattice.len();
        let dt = self.grid.dt();
        let mut out = Vec::with_capacity(self.ds.len());
        for (b, d) in self.ds.iter().enumerate() {
            let d = d.value();
            if d > lambda {
                out.push(0.0);
                continue;
            }
            let set = AngularSectorSet::new(n, lambda, (lambda * d).sqrt())?;
            let ids: Vec<u32> = (0..s_len)
                .map(|s| {
                    let r = self.lattice.norm(s);
                    if r >= lambda / 2.0 && r < 4.0 * lambda {
                        set.assign(&self.lattice.xi(s)).map_or(u32::MAX, |id| id as u32)
                    } else {
                        u32::MAX
                    }
                })
                .collect();
            let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); set.count()];
            for (j, block) in spec.data().chunks(s_len).enumerate() {
                for (s, c) in block.iter().enumerate() {
                    if ids[s] == u32::MAX || c.norm_sqr() == 0.0 {
                        continue;
                    }
                    if let Some(PointClass { shell, band: Some(bb) }) = self.classify(j, s) {
                        if shell == li && bb == b {
                            buckets[ids[s] as usize].push((j * s_len + s) as u32);
                        }
                    }
                }
            }
            let mut sq = 0.0;
            for bucket in buckets.iter().filter(|b| !b.is_empty()) {
                buf.data_mut().iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                buf.set_rep_unchecked(Rep::SpacetimeFourier);
                for &i in bucket {
                    buf.data_mut()[i as usize] = spec.data()[i as usize];
                }
                buf.convert(Rep::Physical);
                let l1linf: f64 = (0..self.grid.nt)
                    .map(|j| buf.slice(j).iter().map(|c| c.norm()).fold(0.0, f64::max))
                    .sum::<f64>()
                    * dt;
                sq += l1linf * l1linf;
            }
            buf.set_rep_unchecked(Rep::SpacetimeFourier);
            out.push(lambda.powf((2.0 - n as f64) / 2.0) * sq.sqrt());
        }
        Ok(out)
    }

    /// `Z_lambda` norm.
    pub fn z_norm(&self, u: &SpaceTimeField, lambda: f64) -> Result<f64> {
        let li = self.shell_index(lambda)?;
        let spec = self.spectrum(u)?;
        let mut buf = self.scratch();
        Ok(self.z_bands(&spec, &mut buf, li, lambda)?.iter().sum())
    }

    fn shell_pieces(
        &self,
        spec: &SpaceTimeField,
        buf: &mut SpaceTimeField,
        li: usize,
        with_z: bool,
    ) -> Result<(Vec<DyadicNormRow>, ShellSummary)> {
        let lambda = self.lambdas[li].value();
        let e = self.band_energies(spec, li);
        let y = self.y_bands(spec, buf, li, lambda);
        let z = if with_z { Some(self.z_bands(spec, buf, li, lambda)?) } else { None };
        let energy = self
            .time_profile(spec, buf, |pc| pc.shell == li, false)
            .into_iter()
            .fold(0.0, f64::max);
        let mut rows = Vec::new();
        let mut sum = 0.0;
        for (b, d) in self.ds.iter().enumerate() {
            let x = (d.value() * e[b]).sqrt();
            let route = if x <= y[b] { Route::X } else { Route::Y };
            sum += x.min(y[b]);
            rows.push(DyadicNormRow {
                lambda,
                d: d.value(),
                x,
                y: y[b],
                z: z.as_ref().map(|z| z[b]),
                route,
            });
        }
        let f = energy.max(sum);
        let zt = z.map(|z| z.iter().sum::<f64>());
        Ok((rows, ShellSummary { lambda, energy, f, z: zt, g: zt.map(|z| f.max(z)) }))
    }

    /// Rows of a single shell, without the angular norms.
    pub fn shell_rows(&self, u: &SpaceTimeField, lambda: f64) -> Result<Vec<DyadicNormRow>> {
        let li = self.shell_index(lambda)?;
        let spec = self.spectrum(u)?;
        let mut buf = self.scratch();
        Ok(self.shell_pieces(&spec, &mut buf, li, false)?.0)
    }

    /// `S_lambda u` with sharp shell cut-offs, in space-time Fourier representation.
    pub fn shell_projection(&self, u: &SpaceTimeField, lambda: f64) -> Result<SpaceTimeField> {
        let li = self.shell_index(lambda)?;
        let mut v = self.spectrum(u)?.into_owned();
        let s_len = self.lattice.len();
        for (j, block) in v.data_mut().chunks_mut(s_len).enumerate() {
            for (s, c) in block.iter_mut().enumerate() {
                if !matches!(self.classify(j, s), Some(pc) if pc.shell == li) {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(v)
    }

    /// `F_lambda` norm (per-shell minimum proxy).
    pub fn f_lambda_norm(&self, u: &SpaceTimeField, lambda: f64) -> Result<f64> {
        let li = self.shell_index(lambda)?;
        let spec = self.spectrum(u)?;
        let mut buf = self.scratch();
        Ok(self.shell_pieces(&spec, &mut buf, li, false)?.1.f)
    }

    /// `G_lambda = max(F_lambda, Z_lambda)`.
    pub fn g_lambda_norm(&self, u: &SpaceTimeField, lambda: f64) -> Result<f64> {
        let li = self.shell_index(lambda)?;
        let spec = self.spectrum(u)?;
        let mut buf = self.scratch();
        Ok(self.shell_pieces(&spec, &mut buf, li, true)?.1.g.expect("z computed"))
    }

    /// Full per-shell table; `with_z` adds the angular norms (n >= 2).
    pub fn table(&self, u: &SpaceTimeField, with_z: bool) -> Result<DyadicNormTable> {
        let spec = self.spectrum(u)?;
        let mut buf = self.scratch();
        let mut rows = Vec::new();
        let mut shells = Vec::new();
        for li in 0..self.lambdas.len() {
            let (r, s) = self.shell_pieces(&spec, &mut buf, li, with_z)?;
            rows.extend(r);
            shells.push(s);
        }
        Ok(DyadicNormTable { grid: self.grid.clone(), rows, shells })
    }

    /// `(sum_lambda lambda^{2s} F_lambda^2)^{1/2}`.
    pub fn fs_norm(&self, u: &SpaceTimeField, s: f64) -> Result<f64> {
        let t = self.table(u, false)?;
        Ok(t.shells.iter().map(|sh| (sh.lambda.powf(s) * sh.f).powi(2)).sum::<f64>().sqrt())
    }

    /// `sum_lambda lambda^s G_lambda`.
    pub fn gs_norm(&self, u: &SpaceTimeField, s: f64) -> Result<f64> {
        let t = self.table(u, true)?;
        Ok(t.shells.iter().map(|sh| sh.lambda.powf(s) * sh.g.expect("z computed")).sum())
    }

    fn spatial_energies(&self, f: &SpatialField) -> Result<Vec<f64>> {
        if !f.matches(&self.grid) {
            return Err(Error::Contract("spatial field does not match the grid".into()));
        }
        let f = f.to_rep(SpatialRep::Fourier);
        let lo = self.spatial[0].exponent();
        let mut e = vec![0.0; self.spatial.len()];
        for (s, c) in f.data().iter().enumerate() {
            let r2 = self.lattice.norm2(s);
            if r2 == 0.0 {
                continue;
            }
            let k = dyadic_exponent_sq(r2) - lo;
            if k >= 0 && (k as usize) < e.len() {
                e[k as usize] += c.norm_sqr();
            }
        }
        let vol = self.grid.cell_volume();
        Ok(e.into_iter().map(|v| (v * vol).sqrt()).collect())
    }

    /// `||P_mu f||_{L^2}` for each spatial shell `mu`.
    pub fn spatial_shell_norms(&self, f: &SpatialField) -> Result<Vec<(f64, f64)>> {
        let e = self.spatial_energies(f)?;
        Ok(self.spatial.iter().map(|m| m.value()).zip(e).collect())
    }

    /// `sum_lambda lambda^s ||P_lambda f|| + lambda^{s-1} ||P_lambda g||`.
    pub fn besov_data_norm(&self, f: &SpatialField, g: &SpatialField, s: f64) -> Result<f64> {
        let ef = self.spatial_energies(f)?;
        let eg = self.spatial_energies(g)?;
        Ok(self
            .spatial
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let l = l.value();
                l.powf(s) * ef[k] + l.powf(s - 1.0) * eg[k]
            })
            .sum())
    }

    /// `sum_lambda lambda^s ||P_lambda f||`.
    pub fn besov_norm(&self, f: &SpatialField, s: f64) -> Result<f64> {
        let e = self.spatial_energies(f)?;
        Ok(self.spatial.iter().zip(e).map(|(l, v)| l.value().powf(s) * v).sum())
    }

    /// `(sum_lambda lambda^{2s} ||P_lambda f||^2)^{1/2}`.
    pub fn sobolev_shell_norm(&self, f: &SpatialField, s: f64) -> Result<f64> {
        let e = self.spatial_energies(f)?;
        Ok(self.spatial.iter().zip(e).map(|(l, v)| (l.value().powf(s) * v).powi(2)).sum::<f64>().sqrt())
    }
}

/// Homogeneous Sobolev norm `|| |xi|^s f^ ||_{L^2}` (the zero mode is dropped).
pub fn sobolev_norm(f: &SpatialField, s: f64) -> f64 {
    let lat = SpatialLattice::new(f.dim(), f.nx(), f.length());
    let f = f.to_rep(SpatialRep::Fourier);
    let sum: f64 = f
        .data()
        .iter()
        .enumerate()
        .filter(|(k, _)| lat.norm2(*k) > 0.0)
        .map(|(k, c)| lat.norm(k).powf(2.0 * s) * c.norm_sqr())
        .sum();
    (sum * f.cell_volume()).sqrt()
}
